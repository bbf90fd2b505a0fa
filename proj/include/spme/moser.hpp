// Exact arithmetic for the iteration that bootstraps L_p bounds to L_infty:
// the exponent ladder p_{n+1} = m_tilde + gbar * p_n, its admissibility
// constants, and the smoothing exponent theta_tilde.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <vector>

namespace spme {

using Rational = boost::multiprecision::cpp_rational;

struct MoserLadder {
  int dim = 1;
  Rational m_tilde;
  std::optional<Rational> mu;  // nullopt = infinity
  Rational alpha;

  Rational mu_prime;      // conjugate exponent (1 when mu = infinity)
  Rational gamma;         // 1 + 2/d
  Rational gamma_bar;     // gamma / mu'
  Rational delta;         // m_tilde * gbar / (gbar - 1)
  Rational kappa;         // sup over ladder members >= 2 of max{2p/(p-1), 4p/(p-2)}
  Rational theta_tilde;   // (alpha mu'/delta) / (gbar - 1)
  int n0 = 0;             // minimal n with p_n >= 2 mu' and alpha mu'/(delta gbar^n) < 1

  // p_n = m_tilde (gbar^{n+1} - 1)/(gbar - 1), exact.
  Rational p(int n) const;
  // ladder members of the index set: p_n / mu'
  Rational member(int n) const { return p(n) / mu_prime; }
  // the exponent eta_n = alpha mu' / (delta gbar^n)
  Rational eta(int n) const;
};

MoserLadder ladder(int dim, const Rational& m_tilde, std::optional<Rational> mu,
                   const Rational& alpha);

// Convenience overload; mu = infinity is encoded as +inf.
MoserLadder ladder(int dim, double m_tilde, double mu, double alpha);

struct IterationConstants {
  std::vector<int> n;
  std::vector<double> c_n;
  std::vector<double> partial_products;
  std::vector<double> lambda_n;
  std::vector<double> partial_sums;
};

// c_n = N^{1/gbar^n} (delta gbar^n/(mu' alpha))^{eta_n} / (1 - eta_n)
//       * (N p_n^kappa / mu'^kappa)^{eta_n}, evaluated with N = n_free.
IterationConstants iteration_constants(const MoserLadder& lad, double n_free, int n_max);

double smoothing_exponent(const MoserLadder& lad);

}  // namespace spme
