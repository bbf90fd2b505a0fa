#include "spme/moser.hpp"

#include <cmath>
#include <stdexcept>

namespace spme {

namespace {

Rational pow_rational(const Rational& base, int e) {
  Rational r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

double to_double(const Rational& r) { return static_cast<double>(r); }

}  // namespace

Rational MoserLadder::p(int n) const {
  if (n < 0) throw std::invalid_argument("ladder index must be >= 0");
  // m_tilde (1 + gbar + ... + gbar^n)
  return m_tilde * (pow_rational(gamma_bar, n + 1) - 1) / (gamma_bar - 1);
}

Rational MoserLadder::eta(int n) const {
  return alpha * mu_prime / (delta * pow_rational(gamma_bar, n));
}

MoserLadder ladder(int dim, const Rational& m_tilde, std::optional<Rational> mu,
                   const Rational& alpha) {
  if (dim < 1) throw std::domain_error("ladder: dim must be >= 1");
  if (!(m_tilde > 0)) throw std::domain_error("ladder: m_tilde must be positive");
  if (!(alpha > 0)) throw std::domain_error("ladder: alpha must be positive");
  const Rational lo(dim + 2, 2);
  if (mu && (*mu < 2 || *mu <= lo))
    throw std::domain_error("ladder: mu outside [2,inf] intersect ((d+2)/2, inf]");

  MoserLadder lad;
  lad.dim = dim;
  lad.m_tilde = m_tilde;
  lad.mu = mu;
  lad.alpha = alpha;
  lad.mu_prime = mu ? *mu / (*mu - 1) : Rational(1);
  lad.gamma = 1 + Rational(2, dim);
  lad.gamma_bar = lad.gamma / lad.mu_prime;
  if (!(lad.gamma_bar > 1))
    throw std::domain_error("ladder: gamma_bar <= 1, iteration does not close");
  lad.delta = m_tilde * lad.gamma_bar / (lad.gamma_bar - 1);

  // kappa: both branches decrease in p for p > 2, so the supremum over ladder
  // members >= 2 is attained at the smallest such member.
  Rational kappa = 0;
  bool found = false;
  for (int n = 0; n < 256 && !found; ++n) {
    const Rational pm = lad.member(n);
    if (pm < 2) continue;
    Rational v = 2 * pm / (pm - 1);
    if (pm != 2) {
      const Rational v2 = 4 * pm / (pm - 2);
      if (v2 > v) v = v2;
    }
    kappa = v;
    found = true;
  }
  if (!found) throw std::domain_error("ladder: no ladder member >= 2");
  lad.kappa = kappa;

  // n0: minimal positive n with p_n >= 2 mu' and eta_n < 1.
  int n0 = -1;
  for (int n = 1; n < 4096; ++n) {
    if (lad.p(n) >= 2 * lad.mu_prime && lad.eta(n) < 1) {
      n0 = n;
      break;
    }
  }
  if (n0 < 0) throw std::domain_error("ladder: n0 not found");
  lad.n0 = n0;

  lad.theta_tilde = (alpha * lad.mu_prime / lad.delta) / (lad.gamma_bar - 1);
  return lad;
}

namespace {

Rational rational_from_double(double v) {
  // exact binary-to-rational conversion keeps user inputs like 1.5 exact
  if (!std::isfinite(v)) throw std::domain_error("ladder: non-finite parameter");
  return Rational(v);
}

}  // namespace

MoserLadder ladder(int dim, double m_tilde, double mu, double alpha) {
  std::optional<Rational> mu_r;
  if (!std::isinf(mu)) mu_r = rational_from_double(mu);
  return ladder(dim, rational_from_double(m_tilde), mu_r, rational_from_double(alpha));
}

IterationConstants iteration_constants(const MoserLadder& lad, double n_free, int n_max) {
  if (!(n_free > 0)) throw std::domain_error("iteration_constants: N_free must be positive");
  IterationConstants out;
  const int n_start = std::max(lad.n0, 1);
  double prod = 1.0, sum = 0.0;
  const double kappa = to_double(lad.kappa);
  const double mu_prime = to_double(lad.mu_prime);
  const double delta = to_double(lad.delta);
  const double alpha = to_double(lad.alpha);
  const double gbar = to_double(lad.gamma_bar);
  for (int n = n_start; n <= n_max; ++n) {
    const double gbar_n = std::pow(gbar, n);
    const double eta = alpha * mu_prime / (delta * gbar_n);
    if (eta >= 1.0)
      throw std::domain_error("iteration_constants: eta_n >= 1 at n = " + std::to_string(n));
    const double pn = to_double(lad.p(n));
    const double cn = std::pow(n_free, 1.0 / gbar_n) *
                      std::pow(delta * gbar_n / (mu_prime * alpha), eta) / (1.0 - eta) *
                      std::pow(n_free * std::pow(pn, kappa) / std::pow(mu_prime, kappa), eta);
    const double lam = std::pow(pn / mu_prime, -alpha * pn / (delta * gbar_n));
    prod *= cn;
    sum += lam;
    out.n.push_back(n);
    out.c_n.push_back(cn);
    out.partial_products.push_back(prod);
    out.lambda_n.push_back(lam);
    out.partial_sums.push_back(sum);
  }
  return out;
}

double smoothing_exponent(const MoserLadder& lad) { return to_double(lad.theta_tilde); }

}  // namespace spme
