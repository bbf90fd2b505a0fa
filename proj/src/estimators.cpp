#include "spme/estimators.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "spme/moser.hpp"

namespace spme {

Statistic Statistic::sup_lp(double p) {
  Statistic s;
  s.kind = Kind::SupLp;
  s.p = p;
  return s;
}
Statistic Statistic::sup_inf() {
  Statistic s;
  s.kind = Kind::SupInf;
  return s;
}
Statistic Statistic::sup_inf_window(double rho) {
  Statistic s;
  s.kind = Kind::SupInfWindow;
  s.rho = rho;
  return s;
}
Statistic Statistic::hminus_one() {
  Statistic s;
  s.kind = Kind::HminusOne;
  return s;
}

std::string Statistic::id() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::SupLp:
      os << "sup_lp(" << p << ")";
      break;
    case Kind::SupInf:
      os << "sup_inf";
      break;
    case Kind::SupInfWindow:
      os << "sup_inf_window(" << rho << ")";
      break;
    case Kind::HminusOne:
      os << "hminus1";
      break;
  }
  return os.str();
}

void parallel_for_paths(int n_paths, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = std::min(threads, n_paths);
  if (threads <= 1) {
    for (int i = 0; i < n_paths; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_paths) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        next.store(n_paths);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

double window_sup(const Trajectory& traj, double rho) {
  double s = 0.0;
  for (std::size_t i = 0; i < traj.step_times.size(); ++i)
    if (traj.step_times[i] >= rho) s = std::max(s, traj.step_inf[i]);
  return s;
}

double path_statistic(const Trajectory& traj, const Statistic& stat) {
  switch (stat.kind) {
    case Statistic::Kind::SupInf:
      return traj.sup_inf;
    case Statistic::Kind::SupInfWindow:
      return window_sup(traj, stat.rho);
    case Statistic::Kind::SupLp: {
      double s = 0.0;
      for (const auto& rec : traj.records) s = std::max(s, rec.lp.empty() ? 0.0 : rec.lp[0]);
      return s;
    }
    case Statistic::Kind::HminusOne: {
      double s = 0.0;
      for (const auto& rec : traj.records) s = std::max(s, rec.hm1);
      return s;
    }
  }
  return 0.0;
}

McEstimate summarize(const std::string& id, std::uint64_t seed,
                     std::vector<double> per_path) {
  McEstimate est;
  est.id = id;
  est.seed = seed;
  est.m = static_cast<int>(per_path.size());
  double sum = 0.0;
  for (double v : per_path) sum += v;
  est.mean = sum / est.m;
  double ss = 0.0;
  for (double v : per_path) ss += (v - est.mean) * (v - est.mean);
  est.stderr_ = est.m > 1 ? std::sqrt(ss / (est.m - 1) / est.m) : 0.0;
  est.ci_lo = est.mean - 1.96 * est.stderr_;
  est.ci_hi = est.mean + 1.96 * est.stderr_;
  est.per_path = std::move(per_path);
  return est;
}

SolverConfig cfg_for_statistic(const SolverConfig& cfg, const Statistic& stat) {
  SolverConfig c = cfg;
  c.record_every = 1;  // thinning biases sup statistics downward
  c.track_ito = false;
  c.record_fields = false;
  switch (stat.kind) {
    case Statistic::Kind::SupLp:
      c.p_list = {stat.p};
      c.track_hminus1 = false;
      break;
    case Statistic::Kind::HminusOne:
      c.p_list = {2.0};
      c.track_hminus1 = true;
      break;
    default:
      c.p_list = {2.0};
      c.track_hminus1 = false;
      break;
  }
  return c;
}

std::runtime_error path_failure(int path, const std::exception& e) {
  return std::runtime_error("path " + std::to_string(path) + " failed: " + e.what());
}

}  // namespace

McEstimate mc_moment(const ProblemSpec& spec, const SolverConfig& cfg, int m,
                     const Statistic& stat, int threads) {
  if (m < 2) throw std::invalid_argument("mc_moment: M must be >= 2");
  if (stat.kind == Statistic::Kind::SupInfWindow &&
      !(stat.rho > 0.0 && stat.rho < spec.horizon))
    throw std::invalid_argument("mc_moment: window rho must lie in (0, T)");
  const SolverConfig run_cfg = cfg_for_statistic(cfg, stat);
  std::vector<double> vals(static_cast<std::size_t>(m), 0.0);
  parallel_for_paths(m, threads, [&](int path) {
    try {
      const Trajectory traj = solve_path(spec, run_cfg, path);
      vals[static_cast<std::size_t>(path)] =
          std::pow(path_statistic(traj, stat), spec.alpha);
    } catch (const StepError& e) {
      throw path_failure(path, e);
    }
  });
  return summarize(stat.id(), cfg.seed, std::move(vals));
}

SweepResult epsilon_sweep(const ProblemSpec& spec, const SolverConfig& cfg, int m,
                          const std::vector<double>& eps_list, int threads) {
  if (eps_list.empty()) throw std::invalid_argument("epsilon_sweep: empty eps_list");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0) || (i > 0 && !(eps_list[i] < eps_list[i - 1])))
      throw std::invalid_argument("epsilon_sweep: eps_list must be positive decreasing");
  }
  SweepResult out;
  out.eps = eps_list;
  for (double eps : eps_list) {
    ProblemSpec s = spec;
    s.epsilon = eps;
    s.alpha = 2.0;
    McEstimate est = mc_moment(s, cfg, m, Statistic::sup_inf(), threads);
    est.id = "sup_inf_sq(eps=" + std::to_string(eps) + ")";
    out.estimates.push_back(std::move(est));
  }
  double lo = out.estimates[0].mean, hi = out.estimates[0].mean;
  for (const auto& e : out.estimates) {
    lo = std::min(lo, e.mean);
    hi = std::max(hi, e.mean);
  }
  out.max_min_ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return out;
}

RateFit smoothing_rate_fit(const ProblemSpec& spec, const SolverConfig& cfg, int m,
                           const std::vector<double>& rho_list, int threads) {
  if (m < 2) throw std::invalid_argument("smoothing_rate_fit: M must be >= 2");
  for (std::size_t i = 0; i < rho_list.size(); ++i) {
    if (!(rho_list[i] > 0.0 && rho_list[i] < 0.5 * spec.horizon) ||
        (i > 0 && !(rho_list[i] > rho_list[i - 1])))
      throw std::invalid_argument(
          "smoothing_rate_fit: rho_list must be increasing, inside (0, T/2)");
  }
  SolverConfig run_cfg = cfg_for_statistic(cfg, Statistic::sup_inf());
  const std::size_t nr = rho_list.size();
  std::vector<std::vector<double>> vals(nr, std::vector<double>(static_cast<std::size_t>(m)));
  std::atomic<bool> monotone{true};
  parallel_for_paths(m, threads, [&](int path) {
    try {
      const Trajectory traj = solve_path(spec, run_cfg, path);
      double prev = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < nr; ++j) {
        const double w = window_sup(traj, rho_list[j]);
        if (w > prev) monotone.store(false);  // nested windows, exact per path
        prev = w;
        vals[j][static_cast<std::size_t>(path)] = w * w;
      }
    } catch (const StepError& e) {
      throw path_failure(path, e);
    }
  });

  RateFit fit;
  fit.rho = rho_list;
  fit.windows_monotone = monotone.load();
  for (std::size_t j = 0; j < nr; ++j) {
    double s = 0.0;
    for (double v : vals[j]) s += v;
    fit.estimate.push_back(s / m);
  }
  if (!std::isfinite(fit.estimate.front())) fit.blow_up = true;

  // OLS of log estimate against log rho over the finite entries
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < nr; ++j) {
    if (std::isfinite(fit.estimate[j]) && fit.estimate[j] > 0.0) {
      xs.push_back(std::log(rho_list[j]));
      ys.push_back(std::log(fit.estimate[j]));
    }
  }
  if (xs.size() >= 2) {
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      mx += xs[j];
      my += ys[j];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      sxx += (xs[j] - mx) * (xs[j] - mx);
      sxy += (xs[j] - mx) * (ys[j] - my);
    }
    fit.slope = sxy / sxx;
    if (xs.size() > 2) {
      double sse = 0.0;
      for (std::size_t j = 0; j < xs.size(); ++j) {
        const double r = ys[j] - my - fit.slope * (xs[j] - mx);
        sse += r * r;
      }
      fit.slope_ci = 1.96 * std::sqrt(sse / (n - 2.0) / sxx);
    }
  }
  double m_tilde = 1.0;
  if (spec.phi.kind == PhiSpec::Kind::PowerLaw) m_tilde = spec.phi.m - 1.0;
  try {
    fit.theta_tilde = smoothing_exponent(ladder(spec.dim, m_tilde, spec.mu, 2.0));
  } catch (const std::domain_error&) {
    fit.theta_tilde = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

ItoResidual ito_identity_residual(const Trajectory& traj, double p) {
  if (p < 2.0) throw std::domain_error("ito_identity_residual: p must be >= 2");
  if (traj.ito.empty() || traj.ito_p != p)
    throw std::invalid_argument(
        "ito_identity_residual: trajectory lacks Ito records for this p");
  ItoResidual out;
  out.per_step.reserve(traj.ito.size());
  for (std::size_t n = 0; n < traj.ito.size(); ++n) {
    const double next_pow =
        n + 1 < traj.ito.size() ? traj.ito[n + 1].lp_pow : traj.final_lp_pow;
    const double r = next_pow - traj.ito[n].lp_pow - traj.ito[n].drift * traj.dt -
                     traj.ito[n].mart;
    out.per_step.push_back(r);
    out.cumulative += r;
  }
  return out;
}

GronwallResult gronwall_check(const ProblemSpec& spec, const SolverConfig& cfg, int m,
                              double p, double alpha, int threads) {
  ProblemSpec s = spec;
  s.alpha = alpha;
  GronwallResult out;
  out.lhs = mc_moment(s, cfg, m, Statistic::sup_lp(p), threads).mean;

  const Grid g = grid_for(spec, cfg);
  // E||xi||_p^alpha, averaged over the same path initial conditions
  double xi_moment = 0.0;
  for (int path = 0; path < m; ++path) {
    const Field u0 = initial_field(spec, cfg, g, path);
    xi_moment += std::pow(norm_lp(g, u0, p), alpha);
  }
  xi_moment /= m;
  // int_Q |f|^p + |g|_{l2}^p, time-independent registry so the time integral
  // is a factor of T
  double space_int = 0.0;
  for (int k = 0; k < g.size(); ++k) {
    std::array<double, 2> x{0.0, 0.0};
    if (g.dim == 1) {
      x[0] = g.coord(0, k);
    } else {
      x[0] = g.coord(0, k / g.n[1]);
      x[1] = g.coord(1, k % g.n[1]);
    }
    const double fv = std::abs(spec.coeffs.f.eval(0.0, x, spec.dim));
    double g2 = 0.0;
    for (const auto& gk : spec.coeffs.g) {
      const double v = gk.eval(0.0, x, spec.dim);
      g2 += v * v;
    }
    space_int += (std::pow(fv, p) + std::pow(g2, 0.5 * p)) * g.cell_measure();
  }
  const double data_term = std::pow(space_int * spec.horizon, alpha / p);
  out.rhs = xi_moment + data_term;
  if (out.rhs == 0.0) {
    out.consistent = out.lhs == 0.0;
    out.fitted_n = 0.0;
  } else {
    out.fitted_n = out.lhs / out.rhs;
  }
  return out;
}

namespace {

// Random smooth field: sum_{k<=8} a_k sin(k pi (x-a)/(b-a)) with a_k drawn
// from the counter generator, decaying like 1/k^2 (tensor product in 2d).
Field smooth_random_field(const Grid& g, std::uint64_t seed, std::uint32_t pair,
                          std::uint32_t slot) {
  constexpr int kModes = 8;
  Field out = Field::Zero(g.size());
  if (g.dim == 1) {
    for (int k = 1; k <= kModes; ++k) {
      const double a =
          counter_gaussian(seed, pair, slot, static_cast<std::uint32_t>(k)) /
          (static_cast<double>(k) * k);
      out += a * sine_mode(g, k);
    }
  } else {
    for (int k1 = 1; k1 <= kModes; ++k1)
      for (int k2 = 1; k2 <= kModes; ++k2) {
        const double a = counter_gaussian(
                             seed, pair, slot,
                             static_cast<std::uint32_t>(k1 * (kModes + 1) + k2)) /
                         (static_cast<double>(k1) * k1 * k2 * k2);
        out += a * sine_mode(g, k1, k2);
      }
  }
  return out;
}

}  // namespace

MonotonicityResult monotonicity_check(const ProblemSpec& spec_in, const Grid& g,
                                      int n_pairs, std::uint64_t seed) {
  const ProblemSpec spec = stratonovich_to_ito(spec_in);
  const double lin = spec.epsilon + ito_correction(spec);
  MonotonicityResult out;
  out.phi_term_max = -std::numeric_limits<double>::infinity();
  out.fitted_n = -std::numeric_limits<double>::infinity();
  for (int pair = 0; pair < n_pairs; ++pair) {
    const auto pid = static_cast<std::uint32_t>(pair);
    const Field phi = smooth_random_field(g, seed, pid, 0);
    const Field psi = smooth_random_field(g, seed, pid, 1);
    const Field e = phi - psi;
    const double e_hm1_sq = inner(g, e, solve_poisson(g, e));
    if (e_hm1_sq == 0.0) continue;

    Field dphi(g.size()), dpsi(g.size());
    for (int i = 0; i < g.size(); ++i) {
      dphi[i] = phi_eval(spec.phi, phi[i]);
      dpsi[i] = phi_eval(spec.phi, psi[i]);
    }
    const double phi_term = -inner(g, dphi - dpsi, e);
    out.phi_term_max = std::max(out.phi_term_max, phi_term);

    // 2<A(phi)-A(psi), e>_{H^-1}: the Laplacian part pairs to -(Psi diff, e)_h,
    // the lower-order drift goes through the inverse Laplacian.
    double lhs = 2.0 * (phi_term - lin * inner(g, e, e));
    Field drift = Field::Zero(g.size());
    bool has_drift = false;
    for (int ax = 0; ax < g.dim; ++ax) {
      if (spec.coeffs.b[static_cast<std::size_t>(ax)].is_zero()) continue;
      has_drift = true;
      const Field ge = gradient_centered(g, e, ax);
      for (int i = 0; i < g.size(); ++i) {
        std::array<double, 2> x{0.0, 0.0};
        if (g.dim == 1) {
          x[0] = g.coord(0, i);
        } else {
          x[0] = g.coord(0, i / g.n[1]);
          x[1] = g.coord(1, i % g.n[1]);
        }
        drift[i] += spec.coeffs.b[static_cast<std::size_t>(ax)].eval(0.0, x, spec.dim) * ge[i];
      }
    }
    if (!spec.coeffs.c.is_zero()) {
      has_drift = true;
      for (int i = 0; i < g.size(); ++i) {
        std::array<double, 2> x{0.0, 0.0};
        if (g.dim == 1) {
          x[0] = g.coord(0, i);
        } else {
          x[0] = g.coord(0, i / g.n[1]);
          x[1] = g.coord(1, i % g.n[1]);
        }
        drift[i] += spec.coeffs.c.eval(0.0, x, spec.dim) * e[i];
      }
    }
    if (has_drift) lhs += 2.0 * inner(g, solve_poisson(g, drift), e);

    // noise differences in H^-1
    if (spec.coeffs.sigma != 0.0) {
      for (int ax = 0; ax < g.dim; ++ax) {
        const Field me = spec.coeffs.sigma * gradient_centered(g, e, ax);
        const double v = norm_hminus1(g, me);
        lhs += v * v;
      }
    }
    for (int kk = 0; kk < spec.coeffs.k_noise; ++kk) {
      if (kk >= static_cast<int>(spec.coeffs.nu.size()) ||
          spec.coeffs.nu[static_cast<std::size_t>(kk)].is_zero())
        continue;
      Field me(g.size());
      for (int i = 0; i < g.size(); ++i) {
        std::array<double, 2> x{0.0, 0.0};
        if (g.dim == 1) {
          x[0] = g.coord(0, i);
        } else {
          x[0] = g.coord(0, i / g.n[1]);
          x[1] = g.coord(1, i % g.n[1]);
        }
        me[i] = spec.coeffs.nu[static_cast<std::size_t>(kk)].eval(0.0, x, spec.dim) * e[i];
      }
      const double v = norm_hminus1(g, me);
      lhs += v * v;
    }
    out.fitted_n = std::max(out.fitted_n, lhs / e_hm1_sq);
  }
  return out;
}

std::vector<double> viscosity_convergence(const ProblemSpec& spec,
                                          const SolverConfig& cfg, int m,
                                          const std::vector<double>& eps_list,
                                          int threads) {
  if (eps_list.size() < 2)
    throw std::invalid_argument("viscosity_convergence: need at least two epsilons");
  SolverConfig run_cfg = cfg;
  run_cfg.record_every = 1;
  run_cfg.record_fields = true;
  run_cfg.track_ito = false;
  const std::size_t nd = eps_list.size() - 1;
  std::vector<std::vector<double>> contrib(nd, std::vector<double>(static_cast<std::size_t>(m), 0.0));
  const Grid g = grid_for(spec, cfg);
  parallel_for_paths(m, threads, [&](int path) {
    try {
      ProblemSpec s = spec;
      s.epsilon = eps_list[0];
      std::vector<Field> prev = solve_path(s, run_cfg, path).fields;
      for (std::size_t j = 1; j < eps_list.size(); ++j) {
        s.epsilon = eps_list[j];
        std::vector<Field> cur = solve_path(s, run_cfg, path).fields;
        double acc = 0.0;
        for (std::size_t t = 0; t < cur.size(); ++t) {
          const double d = norm_hminus1(g, cur[t] - prev[t]);
          acc += d * d * run_cfg.dt;
        }
        contrib[j - 1][static_cast<std::size_t>(path)] = acc;
        prev = std::move(cur);
      }
    } catch (const StepError& e) {
      throw path_failure(path, e);
    }
  });
  std::vector<double> out(nd, 0.0);
  for (std::size_t j = 0; j < nd; ++j) {
    for (double v : contrib[j]) out[j] += v;
    out[j] /= m;
  }
  return out;
}

}  // namespace spme
