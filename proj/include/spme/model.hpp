// Problem instances for the stochastic porous medium equation with transport
// and multiplicative noise: nonlinearity Phi, coefficient registry, noise
// structure, data, and sampling-based checks of the structural assumptions.
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spme {

// ---------------------------------------------------------------------------
// Coefficient registry: named closed-form (t,x) functions, no code injection.
// ---------------------------------------------------------------------------
struct CoeffFn {
  // "zero", "const", "poly", "sine", "bump"
  std::string kind = "zero";
  std::vector<double> params;

  double eval(double t, const std::array<double, 2>& x, int dim) const;
  // Partial derivative in x[axis]; analytic for poly/sine/const, central
  // difference for bump.
  double deriv(double t, const std::array<double, 2>& x, int dim, int axis) const;
  bool is_zero() const { return kind == "zero" || (kind == "const" && !params.empty() && params[0] == 0.0); }
};

// ---------------------------------------------------------------------------
// Nonlinearity Phi
// ---------------------------------------------------------------------------
struct PhiSpec {
  enum class Kind { PowerLaw, Tabulated };
  Kind kind = Kind::PowerLaw;
  double m = 2.0;  // PowerLaw exponent; for Tabulated, the reference exponent
  // Lipschitz cap on Phi' (infinity = untruncated).
  double cap = std::numeric_limits<double>::infinity();
  // Tabulated: monotone piecewise-linear samples, must bracket 0.
  std::vector<double> r_samples;
  std::vector<double> phi_samples;
};

double phi_eval(const PhiSpec& phi, double r);
double phi_prime(const PhiSpec& phi, double r);

// Phi_n with derivative min{Phi', n}; Lipschitz with constant n.
PhiSpec phi_truncate(const PhiSpec& phi, double n);

// ---------------------------------------------------------------------------
// Coefficients and the problem spec
// ---------------------------------------------------------------------------
struct CoefficientSet {
  std::array<CoeffFn, 2> b;   // drift, must vanish on the boundary
  CoeffFn c;
  double sigma = 0.0;         // transport noise amplitude (constant in t)
  std::vector<CoeffFn> nu;    // multiplicative noise coefficients
  CoeffFn f;                  // drift free term
  std::vector<CoeffFn> g;     // additive noise free terms
  int k_noise = 0;            // truncation level of the k-sum
};

struct InitialCondition {
  enum class Kind { Function, RandomSigns };
  Kind kind = Kind::Function;
  CoeffFn fn;             // Function: evaluated at t = 0
  double l2_norm = 1.0;   // RandomSigns: target discrete L2 norm
};

struct ProblemSpec {
  int dim = 1;
  std::array<double, 2> box_a{0.0, 0.0};
  std::array<double, 2> box_b{1.0, 1.0};
  double horizon = 1.0;
  PhiSpec phi;
  CoefficientSet coeffs;
  double epsilon = 0.0;
  InitialCondition xi;
  double mu = std::numeric_limits<double>::infinity();
  double alpha = 2.0;
  // sigma^2/2 Laplacian bookkeeping: 0 while the transport noise is read in
  // Stratonovich form, sigma^2/2 once converted to Ito form.
  bool ito_form = false;
};

struct ConditionRecord {
  std::string id;
  bool pass = true;
  double witness_t = 0.0;
  std::array<double, 2> witness_x{0.0, 0.0};
  double witness_r = 0.0;
  double margin = 0.0;
};

struct AssumptionReport {
  std::vector<ConditionRecord> conditions;
  // l2 tail of (nu, g) over the last channels, reported for sizing k_noise.
  double noise_l2_tail = 0.0;
  double empirical_k = 0.0;
  bool pass() const;
  const ConditionRecord* first_failure() const;
};

AssumptionReport validate_assumptions(const ProblemSpec& spec, int sample_budget);

ProblemSpec stratonovich_to_ito(const ProblemSpec& spec);

// Ito drift Laplacian correction currently carried by the spec.
inline double ito_correction(const ProblemSpec& spec) {
  return spec.ito_form ? 0.5 * spec.coeffs.sigma * spec.coeffs.sigma : 0.0;
}

// The non-degenerate coefficient bundle of the viscous equation, in the form
// a(r) = Phi'(r) + eps + sigma^2/2, F^i = b^i r, F = (c - div b) r + f, etc.
struct NondegenerateBundle {
  ProblemSpec spec;  // converted to Ito form
  double theta = 0.0;
  double c_bar = 0.0;
  double m_tilde = 0.0;

  double a(double r) const;
  double drift_flux(int i, double t, const std::array<double, 2>& x, double r) const;   // F^i
  double drift_zero_order(double t, const std::array<double, 2>& x, double r) const;    // F
  double g_transport(int i, int k, double r) const;                                     // g^{ik}
  double g_additive(int k, double t, const std::array<double, 2>& x, double r) const;   // G^k, k over k_noise
  double v1(double t, const std::array<double, 2>& x) const;
  double v2(double t, const std::array<double, 2>& x) const;
};

NondegenerateBundle as_nondegenerate(const ProblemSpec& spec);

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace spme
