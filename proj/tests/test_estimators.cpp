#include <doctest.h>

#include <cmath>

#include "spme/estimators.hpp"
#include "spme/noise.hpp"

using namespace spme;

namespace {

ProblemSpec linear_additive_spec(double amp, double horizon) {
  ProblemSpec spec;
  spec.dim = 1;
  spec.phi.m = 1.0;  // Phi(r) = r
  spec.epsilon = 0.0;
  spec.horizon = horizon;
  spec.coeffs.k_noise = 1;
  spec.coeffs.nu.push_back(CoeffFn{});
  spec.coeffs.g.push_back(CoeffFn{"sine", {amp, 1.0, 0.0}});
  return spec;
}

ProblemSpec pme_noisy_spec() {
  ProblemSpec spec;
  spec.dim = 1;
  spec.phi.m = 2.0;
  spec.epsilon = 0.01;
  spec.horizon = 0.2;
  spec.xi.fn.kind = "sine";
  spec.xi.fn.params = {1.0, 1.0, 0.0};
  spec.coeffs.k_noise = 1;
  spec.coeffs.nu.push_back(CoeffFn{"const", {0.3}});
  spec.coeffs.g.push_back(CoeffFn{"sine", {0.2, 1.0, 0.0}});
  return spec;
}

}  // namespace

TEST_CASE("mc_moment on zero data") {
  ProblemSpec spec;
  spec.dim = 1;
  spec.phi.m = 2.0;
  spec.horizon = 0.05;
  SolverConfig cfg;
  cfg.n_interior = 15;
  cfg.dt = 5e-3;
  const McEstimate est = mc_moment(spec, cfg, 4, Statistic::sup_inf());
  CHECK(est.mean == 0.0);
  CHECK(est.stderr_ == 0.0);
  CHECK(est.m == 4);
  CHECK_THROWS_AS(mc_moment(spec, cfg, 1, Statistic::sup_inf()), std::invalid_argument);
  CHECK_THROWS_AS(mc_moment(spec, cfg, 4, Statistic::sup_inf_window(1.0)),
                  std::invalid_argument);
}

TEST_CASE("linear additive noise matches the discrete OU oracle") {
  const double amp = 0.5;
  const ProblemSpec spec = linear_additive_spec(amp, 0.2);
  SolverConfig cfg;
  cfg.n_interior = 31;
  cfg.dt = 2e-3;
  cfg.seed = 17;
  const Grid g = grid_for(spec, cfg);
  const double lam = sine_eigenvalue(g, 1);
  const Field mode = sine_mode(g, 1);
  const double mode_l2 = norm_lp(g, mode, 2.0);

  // implicit Euler mode recursion: Var_{j+1} = (Var_j + amp^2 dt)/(1+lam dt)^2
  const int n_steps = 100;
  double var = 0.0;
  for (int j = 0; j < n_steps; ++j)
    var = (var + amp * amp * cfg.dt) / std::pow(1.0 + lam * cfg.dt, 2);
  const double oracle = var * mode_l2 * mode_l2;

  const int m = 500;
  std::vector<double> vals(m);
  parallel_for_paths(m, 0, [&](int path) {
    const Trajectory t = solve_path(spec, cfg, path);
    const double l2 = t.records.back().lp[1];
    vals[static_cast<std::size_t>(path)] = l2 * l2;
  });
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= m;
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  const double stderr_ = std::sqrt(ss / (m - 1) / m);
  CHECK(std::abs(mean - oracle) <= 3.0 * stderr_);
}

TEST_CASE("doubling M roughly halves the standard error") {
  const ProblemSpec spec = pme_noisy_spec();
  SolverConfig cfg;
  cfg.n_interior = 15;
  cfg.dt = 5e-3;
  cfg.seed = 5;
  const McEstimate e1 = mc_moment(spec, cfg, 100, Statistic::sup_inf());
  const McEstimate e2 = mc_moment(spec, cfg, 200, Statistic::sup_inf());
  const double expected = e1.stderr_ / std::sqrt(2.0);
  CHECK(e2.stderr_ > expected * 0.7);
  CHECK(e2.stderr_ < expected * 1.3);
}

TEST_CASE("epsilon sweep with common noise") {
  const ProblemSpec spec = pme_noisy_spec();
  SolverConfig cfg;
  cfg.n_interior = 15;
  cfg.dt = 5e-3;
  cfg.seed = 9;
  CHECK_THROWS_AS(epsilon_sweep(spec, cfg, 8, {1e-2, 1e-1}), std::invalid_argument);

  const SweepResult sweep = epsilon_sweep(spec, cfg, 8, {1e-1, 1e-2, 1e-3});
  REQUIRE(sweep.estimates.size() == 3);
  CHECK(sweep.max_min_ratio >= 1.0);
  // reruns are bit-identical (CRN + deterministic reduction)
  const SweepResult again = epsilon_sweep(spec, cfg, 8, {1e-1, 1e-2, 1e-3});
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(sweep.estimates[i].mean == again.estimates[i].mean);
  // more viscosity dissipates more: estimates non-increasing in eps within CI slack
  CHECK(sweep.estimates[0].mean <=
        sweep.estimates[2].mean + 2.0 * sweep.estimates[2].stderr_ + 1e-12);
}

TEST_CASE("window statistic is monotone in rho path-wise") {
  const ProblemSpec spec = pme_noisy_spec();
  SolverConfig cfg;
  cfg.n_interior = 15;
  cfg.dt = 5e-3;
  cfg.seed = 3;
  const RateFit fit = smoothing_rate_fit(spec, cfg, 8, {0.02, 0.05, 0.08});
  CHECK(fit.windows_monotone);
  CHECK(fit.estimate[0] >= fit.estimate[1]);
  CHECK(fit.estimate[1] >= fit.estimate[2]);
  CHECK(fit.slope <= 1e-12);
  CHECK(fit.theta_tilde == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(smoothing_rate_fit(spec, cfg, 8, {0.05, 0.02}), std::invalid_argument);
}

TEST_CASE("Ito identity residual") {
  // zero path: all residuals vanish
  ProblemSpec zero;
  zero.dim = 1;
  zero.phi.m = 2.0;
  zero.horizon = 0.05;
  SolverConfig cfg;
  cfg.n_interior = 15;
  cfg.dt = 5e-3;
  cfg.track_ito = true;
  const Trajectory tz = solve_path(zero, cfg, 0);
  const ItoResidual rz = ito_identity_residual(tz, 2.0);
  for (double r : rz.per_step) CHECK(std::abs(r) < 1e-15);
  CHECK_THROWS_AS(ito_identity_residual(tz, 1.5), std::domain_error);

  // deterministic linear heat, p = 2: residual_n = -||u_{n+1} - u_n||_2^2
  ProblemSpec heat;
  heat.dim = 1;
  heat.phi.m = 1.0;
  heat.horizon = 0.05;
  heat.xi.fn.kind = "sine";
  heat.xi.fn.params = {1.0, 1.0, 0.0};
  SolverConfig hcfg;
  hcfg.n_interior = 31;
  hcfg.dt = 5e-3;
  hcfg.track_ito = true;
  hcfg.record_fields = true;
  const Trajectory th = solve_path(heat, hcfg, 0);
  const ItoResidual rh = ito_identity_residual(th, 2.0);
  const Grid g = grid_for(heat, hcfg);
  for (std::size_t n = 0; n < rh.per_step.size(); ++n) {
    const Field diff = th.fields[n + 1] - th.fields[n];
    const double expect = -inner(g, diff, diff);
    CHECK(rh.per_step[n] == doctest::Approx(expect).epsilon(1e-10));
  }

  // cumulative residual decays with order >= 0.9 in dt
  std::vector<double> cum;
  for (double dt : {5e-3, 2.5e-3}) {
    SolverConfig c = hcfg;
    c.dt = dt;
    c.record_fields = false;
    cum.push_back(std::abs(ito_identity_residual(solve_path(heat, c, 0), 2.0).cumulative));
  }
  const double order = std::log2(cum[0] / cum[1]);
  CHECK(order >= 0.9);
}

TEST_CASE("stochastic Gronwall fitted constant") {
  ProblemSpec zero;
  zero.dim = 1;
  zero.phi.m = 2.0;
  zero.horizon = 0.05;
  SolverConfig cfg;
  cfg.n_interior = 15;
  cfg.dt = 5e-3;
  const GronwallResult z = gronwall_check(zero, cfg, 4, 2.0, 2.0);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  CHECK(z.consistent);

  // homogeneous linear case: scaling xi by 2 scales lhs by 2^alpha
  ProblemSpec lin;
  lin.dim = 1;
  lin.phi.m = 1.0;
  lin.horizon = 0.1;
  lin.xi.fn.kind = "sine";
  lin.xi.fn.params = {1.0, 1.0, 0.0};
  lin.coeffs.k_noise = 1;
  lin.coeffs.nu.push_back(CoeffFn{"const", {0.4}});
  lin.coeffs.g.push_back(CoeffFn{});
  SolverConfig lcfg;
  lcfg.n_interior = 15;
  lcfg.dt = 5e-3;
  lcfg.seed = 23;
  const GronwallResult g1 = gronwall_check(lin, lcfg, 50, 2.0, 2.0);
  ProblemSpec lin2 = lin;
  lin2.xi.fn.params[0] = 2.0;
  const GronwallResult g2 = gronwall_check(lin2, lcfg, 50, 2.0, 2.0);
  CHECK(g2.lhs == doctest::Approx(4.0 * g1.lhs).epsilon(1e-9));
  CHECK(g1.fitted_n > 0.0);
  CHECK(std::isfinite(g1.fitted_n));
}

TEST_CASE("monotonicity of the Phi pairing") {
  ProblemSpec spec;
  spec.dim = 1;
  spec.phi.m = 2.0;
  spec.epsilon = 0.0;
  const Grid g = make_grid_1d(0.0, 1.0, 31);
  const MonotonicityResult r = monotonicity_check(spec, g, 100, 77);
  CHECK(r.phi_term_max <= 1e-12);

  // identical pair contributes nothing: build an equal pair by hand
  // (covered implicitly: phi_term_max stays <= 0 and fitted N is finite)
  ProblemSpec drift = spec;
  drift.coeffs.b[0] = CoeffFn{"poly", {0.0, 1.0, -1.0}};
  drift.coeffs.c = CoeffFn{"const", {-0.5}};
  const MonotonicityResult rd = monotonicity_check(drift, g, 100, 77);
  CHECK(std::isfinite(rd.fitted_n));
}

TEST_CASE("viscosity Cauchy differences") {
  ProblemSpec spec;
  spec.dim = 1;
  spec.phi.m = 2.0;
  spec.horizon = 0.1;
  spec.xi.fn.kind = "sine";
  spec.xi.fn.params = {1.0, 1.0, 0.0};
  SolverConfig cfg;
  cfg.n_interior = 15;
  cfg.dt = 5e-3;

  // identical epsilons in both slots -> difference exactly 0
  const std::vector<double> same = viscosity_convergence(spec, cfg, 1, {0.1, 0.1});
  CHECK(same[0] == 0.0);

  const std::vector<double> d =
      viscosity_convergence(spec, cfg, 1, {0.1, 0.05, 0.025, 0.0125});
  REQUIRE(d.size() == 3);
  CHECK(d[0] > d[1]);
  CHECK(d[1] > d[2]);
}

TEST_CASE("path failures abort with the failing index") {
  ProblemSpec spec = pme_noisy_spec();
  spec.coeffs.f = CoeffFn{"const", {std::numeric_limits<double>::quiet_NaN()}};
  SolverConfig cfg;
  cfg.n_interior = 15;
  cfg.dt = 5e-3;
  CHECK_THROWS_WITH_AS(mc_moment(spec, cfg, 2, Statistic::sup_inf()),
                       doctest::Contains("path 0"), std::runtime_error);
}
