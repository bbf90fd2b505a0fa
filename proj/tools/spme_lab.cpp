// spme-lab: experiment driver for the stochastic porous medium solver.
// Subcommands wrap the estimator operations; every run directory gets a
// manifest.json first, then CSV tables.
#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "spme/config.hpp"
#include "spme/estimators.hpp"
#include "spme/moser.hpp"
#include "spme/runio.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct GlobalOpts {
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string out;
};

spme::ExperimentConfig load(const std::string& path, const GlobalOpts& g) {
  spme::ExperimentConfig cfg = spme::load_config(path);
  if (g.seed_set) cfg.solver.seed = g.seed;
  return cfg;
}

std::string run_dir_for(const GlobalOpts& g, const std::string& command) {
  return spme::resolve_output_root(g.out) + "/" + command;
}

std::vector<std::vector<std::string>> estimate_rows(
    const std::vector<spme::McEstimate>& ests, const std::vector<double>& param,
    const std::string&) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < ests.size(); ++i) {
    const auto& e = ests[i];
    rows.push_back({param.empty() ? e.id : spme::format_double(param[i]),
                    std::to_string(e.m), spme::format_double(e.mean),
                    spme::format_double(e.stderr_), spme::format_double(e.ci_lo),
                    spme::format_double(e.ci_hi)});
  }
  return rows;
}

void write_paths_csv(spme::RunDir& run, const std::vector<spme::McEstimate>& ests) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : ests)
    for (std::size_t p = 0; p < e.per_path.size(); ++p)
      rows.push_back({e.id, std::to_string(p), spme::format_double(e.per_path[p])});
  run.write_csv("paths.csv", {"statistic", "path", "value"}, rows);
}

int cmd_validate(const std::string& config_path, const GlobalOpts& g) {
  const spme::ExperimentConfig cfg = load(config_path, g);
  const spme::AssumptionReport report = spme::validate_assumptions(cfg.spec, 512);
  for (const auto& c : report.conditions) {
    std::printf("%-16s %s  margin=%.6g  at r=%.4g x=(%.4g,%.4g)\n", c.id.c_str(),
                c.pass ? "PASS" : "FAIL", c.margin, c.witness_r, c.witness_x[0],
                c.witness_x[1]);
  }
  std::printf("noise l2 tail    %.6g\n", report.noise_l2_tail);
  std::printf("empirical K      %.6g\n", report.empirical_k);
  if (!report.pass()) {
    const auto* f = report.first_failure();
    std::printf("FAIL: %s\n", f ? f->id.c_str() : "unknown");
    if (f && f->id == "mu.admissible")
      std::printf("mu must lie in Gamma_d = [2, inf] intersect ((d+2)/2, inf]\n");
    return kExitCheckFailed;
  }
  std::printf("all assumptions hold\n");
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, int paths_override, const GlobalOpts& g) {
  spme::ExperimentConfig cfg = load(config_path, g);
  if (paths_override > 0) cfg.paths = paths_override;
  spme::Statistic stat = spme::Statistic::sup_inf();
  if (cfg.statistic == "sup_inf") {
    stat = spme::Statistic::sup_inf();
  } else if (cfg.statistic == "sup_lp") {
    stat = spme::Statistic::sup_lp(cfg.p);
  } else if (cfg.statistic == "hminus1") {
    stat = spme::Statistic::hminus_one();
  } else {
    std::fprintf(stderr, "unknown statistic '%s'\n", cfg.statistic.c_str());
    return kExitUsage;
  }
  spme::RunDir run(run_dir_for(g, "simulate"));
  run.write_manifest("simulate", cfg.raw, cfg.solver.seed,
                     {"estimates.csv", "paths.csv"});
  const spme::McEstimate est = spme::mc_moment(cfg.spec, cfg.solver,
                                               std::max(cfg.paths, 2), stat, g.threads);
  run.write_csv("estimates.csv", {"statistic", "M", "mean", "stderr", "ci_lo", "ci_hi"},
                estimate_rows({est}, {}, ""));
  write_paths_csv(run, {est});
  std::printf("%-24s M=%d  mean=%.8g  stderr=%.3g  CI=[%.8g, %.8g]\n", est.id.c_str(),
              est.m, est.mean, est.stderr_, est.ci_lo, est.ci_hi);
  std::printf("run directory: %s\n", run.dir().c_str());
  return kExitOk;
}

int cmd_sweep_epsilon(const std::string& config_path, int paths_override,
                      const GlobalOpts& g) {
  spme::ExperimentConfig cfg = load(config_path, g);
  if (paths_override > 0) cfg.paths = paths_override;
  if (cfg.eps_list.empty()) {
    std::fprintf(stderr, "config has no experiment.eps_list\n");
    return kExitUsage;
  }
  spme::RunDir run(run_dir_for(g, "sweep-epsilon"));
  run.write_manifest("sweep-epsilon", cfg.raw, cfg.solver.seed,
                     {"estimates.csv", "paths.csv"});
  const spme::SweepResult sweep =
      spme::epsilon_sweep(cfg.spec, cfg.solver, std::max(cfg.paths, 2), cfg.eps_list,
                          g.threads);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < sweep.estimates.size(); ++i) {
    const auto& e = sweep.estimates[i];
    rows.push_back({spme::format_double(sweep.eps[i]), std::to_string(e.m),
                    spme::format_double(e.mean), spme::format_double(e.stderr_),
                    spme::format_double(sweep.max_min_ratio)});
    std::printf("eps=%-10g E||u||_inf^2 = %.8g  (stderr %.3g)\n", sweep.eps[i], e.mean,
                e.stderr_);
  }
  run.write_csv("estimates.csv", {"epsilon", "M", "mean", "stderr", "max_min_ratio"},
                rows);
  write_paths_csv(run, sweep.estimates);
  std::printf("max/min ratio: %.4g\n", sweep.max_min_ratio);
  return kExitOk;
}

int cmd_smoothing(const std::string& config_path, int paths_override, const GlobalOpts& g) {
  spme::ExperimentConfig cfg = load(config_path, g);
  if (paths_override > 0) cfg.paths = paths_override;
  if (cfg.rho_list.empty()) {
    std::fprintf(stderr, "config has no experiment.rho_list\n");
    return kExitUsage;
  }
  spme::RunDir run(run_dir_for(g, "smoothing"));
  run.write_manifest("smoothing", cfg.raw, cfg.solver.seed,
                     {"estimates.csv", "ratefit.csv"});
  const spme::RateFit fit = spme::smoothing_rate_fit(
      cfg.spec, cfg.solver, std::max(cfg.paths, 2), cfg.rho_list, g.threads);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < fit.rho.size(); ++i) {
    rows.push_back({spme::format_double(fit.rho[i]), spme::format_double(fit.estimate[i])});
    std::printf("rho=%-8g E||u||^2_inf((rho,T)xQ) = %.8g\n", fit.rho[i], fit.estimate[i]);
  }
  run.write_csv("estimates.csv", {"rho", "mean"}, rows);
  run.write_csv("ratefit.csv", {"slope", "slope_ci", "theta_tilde", "blow_up"},
                {{spme::format_double(fit.slope), spme::format_double(fit.slope_ci),
                  spme::format_double(fit.theta_tilde), fit.blow_up ? "1" : "0"}});
  std::printf("fitted slope %.5g (reference -theta_tilde = %.5g)\n", fit.slope,
              -fit.theta_tilde);
  if (!fit.windows_monotone) {
    std::printf("FAIL: window statistic not monotone path-wise\n");
    return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_moser_ladder(int d, double mtilde, const std::string& mu_str, double alpha,
                     double nfree, int nmax) {
  double mu = std::numeric_limits<double>::infinity();
  if (mu_str != "inf") mu = std::stod(mu_str);
  const spme::MoserLadder lad = spme::ladder(d, mtilde, mu, alpha);
  std::printf("mu'        = %s\n", lad.mu_prime.str().c_str());
  std::printf("gamma_bar  = %s\n", lad.gamma_bar.str().c_str());
  std::printf("delta      = %s\n", lad.delta.str().c_str());
  std::printf("kappa      = %s\n", lad.kappa.str().c_str());
  std::printf("n0         = %d\n", lad.n0);
  std::printf("theta~     = %s (= %.6g)\n", lad.theta_tilde.str().c_str(),
              spme::smoothing_exponent(lad));
  for (int n = 1; n <= 3; ++n)
    std::printf("p_%d        = %s\n", n, lad.p(n).str().c_str());
  const spme::IterationConstants ic = spme::iteration_constants(lad, nfree, nmax);
  std::printf("%4s %14s %18s %14s %14s\n", "n", "c_n", "prod c_k", "lambda_n",
              "sum lambda");
  for (std::size_t i = 0; i < ic.n.size(); ++i)
    std::printf("%4d %14.6g %18.10g %14.6g %14.10g\n", ic.n[i], ic.c_n[i],
                ic.partial_products[i], ic.lambda_n[i], ic.partial_sums[i]);
  return kExitOk;
}

int cmd_gn_check(int d, double lambda, int n_trajectories, std::uint64_t seed) {
  // Fixed fixture: the stationary sine trajectory over the unit box.
  const spme::Grid g = d == 1 ? spme::make_grid_1d(0.0, 1.0, 255)
                              : spme::make_grid_2d(0.0, 1.0, 63, 0.0, 1.0, 63);
  const int steps = 16;
  std::vector<spme::Field> traj(steps, spme::sine_mode(g, 1, d == 2 ? 1 : 0));
  const spme::GnResult sine = spme::gn_check(g, traj, 1.0 / steps, lambda);
  std::printf("sine fixture: lhs = %.6g  rhs = %.6g  q = %g  %s\n", sine.lhs, sine.rhs,
              sine.q, sine.pass ? "PASS" : "FAIL");
  int violations = sine.pass ? 0 : 1;
  for (int tr = 0; tr < n_trajectories; ++tr) {
    std::vector<spme::Field> rt;
    spme::Field v = spme::Field::Zero(g.size());
    for (int k = 1; k <= 6; ++k) {
      const double a = spme::counter_gaussian(seed, static_cast<std::uint32_t>(tr), 0,
                                              static_cast<std::uint32_t>(k)) /
                       (k * k);
      v += a * spme::sine_mode(g, k, d == 2 ? k : 0);
    }
    for (int s = 0; s < steps; ++s)
      rt.push_back(std::cos(0.3 * s) * v);  // smooth in time, fixed profile
    if (!spme::gn_check(g, rt, 1.0 / steps, lambda).pass) ++violations;
  }
  if (n_trajectories > 0)
    std::printf("random corpus: %d trajectories, %d violations\n", n_trajectories,
                violations);
  return violations == 0 ? kExitOk : kExitCheckFailed;
}

int cmd_ito_check(const std::string& config_path, int paths_override, const GlobalOpts& g) {
  spme::ExperimentConfig cfg = load(config_path, g);
  const int m = std::max(paths_override > 0 ? paths_override : cfg.paths, 2);
  spme::SolverConfig base = cfg.solver;
  base.track_ito = true;
  base.ito_p = cfg.p;
  double mean[2] = {0.0, 0.0};
  for (int level = 0; level < 2; ++level) {
    spme::SolverConfig c = base;
    c.dt = base.dt / (level == 0 ? 1.0 : 2.0);
    std::vector<double> vals(static_cast<std::size_t>(m), 0.0);
    spme::parallel_for_paths(m, g.threads, [&](int path) {
      const spme::Trajectory traj = spme::solve_path(cfg.spec, c, path);
      vals[static_cast<std::size_t>(path)] =
          spme::ito_identity_residual(traj, cfg.p).cumulative;
    });
    for (double v : vals) mean[level] += v;
    mean[level] /= m;
    std::printf("dt=%-10g mean cumulative residual = %.8g\n", c.dt, mean[level]);
  }
  const double ratio = std::abs(mean[0]) / std::abs(mean[1]);
  std::printf("halving ratio |r(dt)|/|r(dt/2)| = %.4g\n", ratio);
  return kExitOk;
}

int cmd_monotonicity(const std::string& config_path, int n_pairs, const GlobalOpts& g) {
  spme::ExperimentConfig cfg = load(config_path, g);
  const spme::Grid grid = spme::grid_for(cfg.spec, cfg.solver);
  const spme::MonotonicityResult res =
      spme::monotonicity_check(cfg.spec, grid, n_pairs, cfg.solver.seed);
  std::printf("Phi-term max = %.6g\n", res.phi_term_max);
  std::printf("fitted N     = %.6g\n", res.fitted_n);
  return res.phi_term_max <= 1e-12 ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic porous medium equation lab"};
  app.require_subcommand(1);
  GlobalOpts g;
  app.add_option("--seed", g.seed, "override the config seed")
      ->each([&](const std::string&) { g.seed_set = true; });
  app.add_option("--threads", g.threads, "worker cap (0 = all cores)");
  app.add_option("--out", g.out, "output root (default $SPME_LAB_OUT or ./runs)");

  std::string config_path;
  int paths = 0, pairs = 500;
  int gn_d = 1, gn_traj = 0;
  double gn_lambda = 2.0;
  int lad_d = 1, lad_nmax = 20;
  double lad_mtilde = 1.0, lad_alpha = 2.0, lad_nfree = 10.0;
  std::string lad_mu = "inf";

  auto* validate = app.add_subcommand("validate", "check the structural assumptions");
  validate->add_option("config", config_path)->required();

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo moment estimate");
  simulate->add_option("config", config_path)->required();
  simulate->add_option("--paths", paths, "number of sample paths");

  auto* sweep = app.add_subcommand("sweep-epsilon", "uniform-in-epsilon bound check");
  sweep->add_option("config", config_path)->required();
  sweep->add_option("--paths", paths);

  auto* smoothing = app.add_subcommand("smoothing", "rho-window smoothing rate fit");
  smoothing->add_option("config", config_path)->required();
  smoothing->add_option("--paths", paths);

  auto* moser = app.add_subcommand("moser-ladder", "exact iteration arithmetic");
  moser->add_option("--d", lad_d);
  moser->add_option("--mtilde", lad_mtilde);
  moser->add_option("--mu", lad_mu, "number or 'inf'");
  moser->add_option("--alpha", lad_alpha);
  moser->add_option("--nfree", lad_nfree);
  moser->add_option("--nmax", lad_nmax);

  auto* gn = app.add_subcommand("gn-check", "interpolation inequality check");
  gn->add_option("--d", gn_d);
  gn->add_option("--lambda", gn_lambda);
  gn->add_option("--trajectories", gn_traj);

  auto* ito = app.add_subcommand("ito-check", "discrete L_p identity residual");
  ito->add_option("config", config_path)->required();
  ito->add_option("--paths", paths);

  auto* mono = app.add_subcommand("monotonicity-check", "operator monotonicity bound");
  mono->add_option("config", config_path)->required();
  mono->add_option("--pairs", pairs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(config_path, g);
    if (simulate->parsed()) return cmd_simulate(config_path, paths, g);
    if (sweep->parsed()) return cmd_sweep_epsilon(config_path, paths, g);
    if (smoothing->parsed()) return cmd_smoothing(config_path, paths, g);
    if (moser->parsed())
      return cmd_moser_ladder(lad_d, lad_mtilde, lad_mu, lad_alpha, lad_nfree, lad_nmax);
    if (gn->parsed()) return cmd_gn_check(gn_d, gn_lambda, gn_traj, g.seed);
    if (ito->parsed()) return cmd_ito_check(config_path, paths, g);
    if (mono->parsed()) return cmd_monotonicity(config_path, pairs, g);
  } catch (const spme::ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const spme::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitCheckFailed;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
