// Monte Carlo moment estimation over simulated paths: sup-norm moments,
// common-random-number sweeps in epsilon and in the window left endpoint rho,
// discrete Ito-identity residuals, and the monotonicity / viscosity checks.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spme/model.hpp"
#include "spme/solver.hpp"

namespace spme {

struct Statistic {
  enum class Kind { SupLp, SupInf, SupInfWindow, HminusOne };
  Kind kind = Kind::SupInf;
  double p = 2.0;    // SupLp
  double rho = 0.0;  // SupInfWindow

  static Statistic sup_lp(double p);
  static Statistic sup_inf();
  static Statistic sup_inf_window(double rho);
  static Statistic hminus_one();
  std::string id() const;
};

struct McEstimate {
  std::string id;
  int m = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> per_path;  // statistic^alpha per path, indexed by path
};

// Runs `threads` workers over path indices; per-path results must be stored
// by index so reductions are order-independent. threads <= 0 picks the
// hardware concurrency. The first exception thrown by any path is rethrown.
void parallel_for_paths(int n_paths, int threads,
                        const std::function<void(int)>& body);

// E[stat(u)^alpha] over M independent paths; alpha from spec.alpha.
McEstimate mc_moment(const ProblemSpec& spec, const SolverConfig& cfg, int m,
                     const Statistic& stat, int threads = 0);

struct SweepResult {
  std::vector<double> eps;
  std::vector<McEstimate> estimates;
  double max_min_ratio = 0.0;
};

// E||u^eps||_inf^2 per epsilon with common random numbers across epsilons.
SweepResult epsilon_sweep(const ProblemSpec& spec, const SolverConfig& cfg, int m,
                          const std::vector<double>& eps_list, int threads = 0);

struct RateFit {
  std::vector<double> rho;
  std::vector<double> estimate;  // E||u||^2_{L_inf((rho,T) x Q)}
  double slope = 0.0;
  double slope_ci = 0.0;   // 95% half-width from the OLS fit
  double theta_tilde = 0.0;
  bool blow_up = false;    // non-finite estimate at the smallest rho
  bool windows_monotone = true;  // path-wise non-increasing in rho, exact
};

RateFit smoothing_rate_fit(const ProblemSpec& spec, const SolverConfig& cfg, int m,
                           const std::vector<double>& rho_list, int threads = 0);

struct ItoResidual {
  std::vector<double> per_step;
  double cumulative = 0.0;
};

// Residual of the discrete L_p Ito identity along one recorded trajectory;
// the trajectory must have been run with track_ito and matching p.
ItoResidual ito_identity_residual(const Trajectory& traj, double p);

struct GronwallResult {
  double lhs = 0.0;       // E sup_t ||u_t||_p^alpha
  double rhs = 0.0;       // E||xi||_p^alpha + (int |f|^p + |g|_{l2}^p)^{alpha/p}
  double fitted_n = 0.0;  // lhs / rhs
  bool consistent = true; // false iff rhs = 0 with lhs > 0
};

GronwallResult gronwall_check(const ProblemSpec& spec, const SolverConfig& cfg,
                              int m, double p, double alpha, int threads = 0);

struct MonotonicityResult {
  double phi_term_max = 0.0;  // max over pairs of -(Phi(phi)-Phi(psi), phi-psi)_h
  double fitted_n = 0.0;      // max over pairs of lhs / ||phi-psi||^2_{H^-1}
};

// Random smooth field pairs are sine series with seed-determined coefficients,
// so the same (seed, pair) denotes the same continuum pair on every grid.
MonotonicityResult monotonicity_check(const ProblemSpec& spec, const Grid& g,
                                      int n_pairs, std::uint64_t seed = 0);

// Cauchy differences D_j = E int_0^T ||u^{eps_j} - u^{eps_{j+1}}||^2_{H^-1} dt
// with common noise per path.
std::vector<double> viscosity_convergence(const ProblemSpec& spec,
                                          const SolverConfig& cfg, int m,
                                          const std::vector<double>& eps_list,
                                          int threads = 0);

}  // namespace spme
