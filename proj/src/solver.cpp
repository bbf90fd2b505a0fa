#include "spme/solver.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace spme {

namespace {

struct CoeffCache {
  Field b0, b1, c, f;
  std::vector<Field> nu, g;
  bool has_b = false, has_c = false, has_f = false;
};

CoeffCache build_cache(const ProblemSpec& spec, const Grid& g) {
  CoeffCache cc;
  const int n = g.size();
  cc.b0 = Field::Zero(n);
  cc.b1 = Field::Zero(n);
  cc.c = Field::Zero(n);
  cc.f = Field::Zero(n);
  auto node_x = [&](int k) {
    std::array<double, 2> x{0.0, 0.0};
    if (g.dim == 1) {
      x[0] = g.coord(0, k);
    } else {
      x[0] = g.coord(0, k / g.n[1]);
      x[1] = g.coord(1, k % g.n[1]);
    }
    return x;
  };
  cc.has_b = !spec.coeffs.b[0].is_zero() || (g.dim == 2 && !spec.coeffs.b[1].is_zero());
  cc.has_c = !spec.coeffs.c.is_zero();
  cc.has_f = !spec.coeffs.f.is_zero();
  for (int k = 0; k < n; ++k) {
    const auto x = node_x(k);
    if (cc.has_b) {
      cc.b0[k] = spec.coeffs.b[0].eval(0.0, x, spec.dim);
      if (g.dim == 2) cc.b1[k] = spec.coeffs.b[1].eval(0.0, x, spec.dim);
    }
    if (cc.has_c) cc.c[k] = spec.coeffs.c.eval(0.0, x, spec.dim);
    if (cc.has_f) cc.f[k] = spec.coeffs.f.eval(0.0, x, spec.dim);
  }
  cc.nu.resize(static_cast<std::size_t>(spec.coeffs.k_noise));
  cc.g.resize(static_cast<std::size_t>(spec.coeffs.k_noise));
  for (int kk = 0; kk < spec.coeffs.k_noise; ++kk) {
    Field nv = Field::Zero(n), gv = Field::Zero(n);
    const bool have_nu = kk < static_cast<int>(spec.coeffs.nu.size());
    const bool have_g = kk < static_cast<int>(spec.coeffs.g.size());
    for (int k = 0; k < n; ++k) {
      const auto x = node_x(k);
      if (have_nu) nv[k] = spec.coeffs.nu[static_cast<std::size_t>(kk)].eval(0.0, x, spec.dim);
      if (have_g) gv[k] = spec.coeffs.g[static_cast<std::size_t>(kk)].eval(0.0, x, spec.dim);
    }
    cc.nu[static_cast<std::size_t>(kk)] = std::move(nv);
    cc.g[static_cast<std::size_t>(kk)] = std::move(gv);
  }
  return cc;
}

// Tridiagonal solve for the 1d Newton system J dx = r with
// J = I + dt (-Lap_h) diag(dvals).
Field tridiag_jacobian_solve(const Grid& g, const Field& dvals, double dt, const Field& r) {
  const int n = g.n[0];
  const double ih2 = 1.0 / (g.h[0] * g.h[0]);
  Eigen::VectorXd diag(n), lower(n), upper(n);
  for (int i = 0; i < n; ++i) {
    diag[i] = 1.0 + 2.0 * dt * dvals[i] * ih2;
    lower[i] = i > 0 ? -dt * dvals[i - 1] * ih2 : 0.0;
    upper[i] = i < n - 1 ? -dt * dvals[i + 1] * ih2 : 0.0;
  }
  Eigen::VectorXd c(n), d(n);
  c[0] = upper[0] / diag[0];
  d[0] = r[0] / diag[0];
  for (int i = 1; i < n; ++i) {
    const double denom = diag[i] - lower[i] * c[i - 1];
    c[i] = upper[i] / denom;
    d[i] = (r[i] - lower[i] * d[i - 1]) / denom;
  }
  Field x(n);
  x[n - 1] = d[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

// 2d Newton system via the symmetrized form
// (I + dt D^{1/2} (-Lap_h) D^{1/2}) z = D^{1/2} r, dx = D^{-1/2} z.
Field cg_jacobian_solve(const Grid& g, const Field& dvals, double dt, const Field& r) {
  const Field s = dvals.cwiseSqrt();
  auto apply = [&](const Field& z) -> Field {
    Field w = s.cwiseProduct(z);
    w = -apply_laplacian(g, w);
    return z + dt * s.cwiseProduct(w);
  };
  const Field rhs = s.cwiseProduct(r);
  Field z = Field::Zero(r.size());
  Field res = rhs;
  Field p = res;
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return z;
  double rr = res.squaredNorm();
  const int max_iter = 10 * static_cast<int>(r.size());
  for (int it = 0; it < max_iter && std::sqrt(rr) > 1e-13 * rhs_norm; ++it) {
    const Field ap = apply(p);
    const double alpha = rr / p.dot(ap);
    z += alpha * p;
    res -= alpha * ap;
    const double rr_new = res.squaredNorm();
    p = res + (rr_new / rr) * p;
    rr = rr_new;
  }
  return z.cwiseQuotient(s);
}

}  // namespace

Field newton_solve(const Grid& g, const std::function<double(double)>& psi,
                   const std::function<double(double)>& psi_prime, double dt,
                   const Field& rhs, const SolverConfig& cfg, int* iters_out) {
  const int n = static_cast<int>(rhs.size());
  auto residual = [&](const Field& u) -> Field {
    Field pu(n);
    for (int i = 0; i < n; ++i) pu[i] = psi(u[i]);
    return u - dt * apply_laplacian(g, pu) - rhs;
  };
  Field u = rhs;
  Field r = residual(u);
  double rn = r.norm();
  const double target = cfg.newton_tol * (1.0 + rhs.norm());
  int it = 0;
  for (; it < cfg.newton_max_iter && rn > target; ++it) {
    Field dvals(n);
    for (int i = 0; i < n; ++i) dvals[i] = std::max(psi_prime(u[i]), cfg.jacobian_floor);
    const Field dx = g.dim == 1 ? tridiag_jacobian_solve(g, dvals, dt, r)
                                : cg_jacobian_solve(g, dvals, dt, r);
    // damped update: halve the step while the residual increases
    double step = 1.0;
    Field u_try, r_try;
    double rn_try = rn;
    for (int halving = 0; halving < 40; ++halving) {
      u_try = u - step * dx;
      r_try = residual(u_try);
      rn_try = r_try.norm();
      if (rn_try < rn || rn_try <= target) break;
      step *= 0.5;
    }
    if (rn_try >= rn && rn_try > target)
      throw StepError("newton: damping stalled, residual " + std::to_string(rn), 0.0, rn);
    u = u_try;
    r = r_try;
    rn = rn_try;
  }
  if (iters_out) *iters_out = it;
  if (rn > target)
    throw StepError("newton: max iterations exceeded, residual " + std::to_string(rn), 0.0, rn);
  return u;
}

namespace {

// Dense Newton for the spectrally projected system (1d only).
Field galerkin_step(const Grid& g, const std::function<double(double)>& psi,
                    const std::function<double(double)>& psi_prime, double dt,
                    const Field& rhs, const SolverConfig& cfg, int* iters_out) {
  if (g.dim != 1)
    throw std::invalid_argument("GalerkinSpectral scheme is implemented for d = 1");
  const int n = g.n[0];
  const int nm = cfg.n_modes > 0 ? cfg.n_modes : n;
  if (nm < 1 || nm > n) throw std::domain_error("galerkin: n_modes out of range");

  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  const double ih2 = 1.0 / (g.h[0] * g.h[0]);
  for (int i = 0; i < n; ++i) {
    lap(i, i) = -2.0 * ih2;
    if (i > 0) lap(i, i - 1) = ih2;
    if (i < n - 1) lap(i, i + 1) = ih2;
  }
  Eigen::MatrixXd modes(n, nm);
  for (int k = 0; k < nm; ++k) {
    Field m = sine_mode(g, k + 1);
    modes.col(k) = m / std::sqrt(inner(g, m, m));
  }
  const Eigen::MatrixXd proj = modes * modes.transpose() * g.cell_measure();

  const Field prhs = proj * rhs;
  auto residual = [&](const Field& u) -> Field {
    Field pu(n);
    for (int i = 0; i < n; ++i) pu[i] = psi(u[i]);
    return u - dt * (proj * (lap * pu)) - prhs;
  };
  Field u = prhs;
  Field r = residual(u);
  double rn = r.norm();
  const double target = cfg.newton_tol * (1.0 + rhs.norm());
  int it = 0;
  for (; it < cfg.newton_max_iter && rn > target; ++it) {
    Eigen::VectorXd dvals(n);
    for (int i = 0; i < n; ++i) dvals[i] = std::max(psi_prime(u[i]), cfg.jacobian_floor);
    const Eigen::MatrixXd jac =
        Eigen::MatrixXd::Identity(n, n) - dt * (proj * lap * dvals.asDiagonal());
    const Field dx = jac.partialPivLu().solve(r);
    double step = 1.0;
    Field u_try, r_try;
    double rn_try = rn;
    for (int halving = 0; halving < 40; ++halving) {
      u_try = u - step * dx;
      r_try = residual(u_try);
      rn_try = r_try.norm();
      if (rn_try < rn || rn_try <= target) break;
      step *= 0.5;
    }
    u = u_try;
    r = r_try;
    rn = rn_try;
  }
  if (iters_out) *iters_out = it;
  if (rn > target)
    throw StepError("galerkin newton: max iterations exceeded", 0.0, rn);
  return u;
}

Field explicit_rhs(const Field& u, const ProblemSpec& spec, const SolverConfig& cfg,
                   const Grid& g, const CoeffCache& cc, const NoiseIncrements& dw) {
  Field rhs = u;
  std::vector<Field> grads;
  const bool need_grad = cc.has_b || spec.coeffs.sigma != 0.0;
  if (need_grad)
    for (int ax = 0; ax < g.dim; ++ax) grads.push_back(gradient_centered(g, u, ax));
  if (cc.has_b) {
    rhs += cfg.dt * cc.b0.cwiseProduct(grads[0]);
    if (g.dim == 2) rhs += cfg.dt * cc.b1.cwiseProduct(grads[1]);
  }
  if (cc.has_c) rhs += cfg.dt * cc.c.cwiseProduct(u);
  if (cc.has_f) rhs += cfg.dt * cc.f;
  if (spec.coeffs.sigma != 0.0) {
    for (int ax = 0; ax < g.dim; ++ax)
      rhs += spec.coeffs.sigma * dw.beta[ax] * grads[static_cast<std::size_t>(ax)];
  }
  for (int kk = 0; kk < spec.coeffs.k_noise; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    rhs += dw.w[kk] * (cc.nu[k].cwiseProduct(u) + cc.g[k]);
  }
  return rhs;
}

Field do_step(const Field& u, double t, const ProblemSpec& spec, const SolverConfig& cfg,
              const Grid& g, const CoeffCache& cc, const NoiseIncrements& dw,
              int* newton_iters) {
  (void)t;
  const Field rhs = explicit_rhs(u, spec, cfg, g, cc, dw);
  if (!rhs.allFinite()) throw StepError("step: non-finite right-hand side", t, 0.0);
  const double lin = spec.epsilon + ito_correction(spec);
  auto psi = [&](double r) { return phi_eval(spec.phi, r) + lin * r; };
  auto psi_prime = [&](double r) { return phi_prime(spec.phi, r) + lin; };
  try {
    if (cfg.scheme == Scheme::GalerkinSpectral)
      return galerkin_step(g, psi, psi_prime, cfg.dt, rhs, cfg, newton_iters);
    return newton_solve(g, psi, psi_prime, cfg.dt, rhs, cfg, newton_iters);
  } catch (const StepError& e) {
    throw StepError(std::string(e.what()) + " at t = " + std::to_string(t), t, e.residual);
  }
}

}  // namespace

Field semi_implicit_step(const Field& state, double t, const ProblemSpec& spec,
                         const SolverConfig& cfg, const Grid& g,
                         const NoiseIncrements& dw, int* newton_iters) {
  if (!spec.ito_form && spec.coeffs.sigma != 0.0)
    throw std::invalid_argument("semi_implicit_step: spec must be in Ito form");
  const CoeffCache cc = build_cache(spec, g);
  return do_step(state, t, spec, cfg, g, cc, dw, newton_iters);
}

Grid grid_for(const ProblemSpec& spec, const SolverConfig& cfg) {
  if (spec.dim == 1) return make_grid_1d(spec.box_a[0], spec.box_b[0], cfg.n_interior);
  return make_grid_2d(spec.box_a[0], spec.box_b[0], cfg.n_interior, spec.box_a[1],
                      spec.box_b[1], cfg.n_interior);
}

Field initial_field(const ProblemSpec& spec, const SolverConfig& cfg, const Grid& g,
                    int path_index) {
  Field u(g.size());
  if (spec.xi.kind == InitialCondition::Kind::Function) {
    for (int k = 0; k < g.size(); ++k) {
      std::array<double, 2> x{0.0, 0.0};
      if (g.dim == 1) {
        x[0] = g.coord(0, k);
      } else {
        x[0] = g.coord(0, k / g.n[1]);
        x[1] = g.coord(1, k % g.n[1]);
      }
      u[k] = spec.xi.fn.eval(0.0, x, spec.dim);
    }
    return u;
  }
  // i.i.d. node signs scaled to the requested discrete L2 norm
  for (int k = 0; k < g.size(); ++k) {
    const double v = counter_uniform(cfg.seed, static_cast<std::uint32_t>(path_index),
                                     kInitialConditionStep, static_cast<std::uint32_t>(k));
    u[k] = v < 0.5 ? -1.0 : 1.0;
  }
  const double l2 = norm_lp(g, u, 2.0);
  if (l2 > 0.0) u *= spec.xi.l2_norm / l2;
  return u;
}

namespace {

struct ItoTerms {
  double lp_pow;
  double drift;
  double mart;
};

// Discrete shadow of the L_p Ito identity terms over one step.
ItoTerms ito_terms(const Field& u, const Field& u_next, const ProblemSpec& spec,
                   const SolverConfig& cfg, const Grid& g, const CoeffCache& cc,
                   const NoiseIncrements& dw) {
  const double p = cfg.ito_p;
  const double meas = g.cell_measure();
  const int n = g.size();
  const double lin = spec.epsilon + ito_correction(spec);

  ItoTerms out{0.0, 0.0, 0.0};
  Field absu_pm2(n), absu_next_pm2(n);
  for (int i = 0; i < n; ++i) {
    out.lp_pow += std::pow(std::abs(u[i]), p);
    absu_pm2[i] = p == 2.0 ? 1.0 : std::pow(std::abs(u[i]), p - 2.0);
    absu_next_pm2[i] = p == 2.0 ? 1.0 : std::pow(std::abs(u_next[i]), p - 2.0);
  }
  out.lp_pow *= meas;

  // implicit drift pairing: p (Lap_h Psi(u+), u+|u+|^{p-2})_h
  Field pu(n);
  for (int i = 0; i < n; ++i) pu[i] = phi_eval(spec.phi, u_next[i]) + lin * u_next[i];
  const Field lap_pu = apply_laplacian(g, pu);
  for (int i = 0; i < n; ++i) out.drift += p * lap_pu[i] * u_next[i] * absu_next_pm2[i] * meas;

  std::vector<Field> grads;
  const bool need_grad = cc.has_b || spec.coeffs.sigma != 0.0;
  if (need_grad)
    for (int ax = 0; ax < g.dim; ++ax) grads.push_back(gradient_centered(g, u, ax));

  for (int i = 0; i < n; ++i) {
    const double w = u[i] * absu_pm2[i] * meas;
    // explicit drift pairing
    double drift_i = 0.0;
    if (cc.has_b) {
      drift_i += cc.b0[i] * grads[0][i];
      if (g.dim == 2) drift_i += cc.b1[i] * grads[1][i];
    }
    if (cc.has_c) drift_i += cc.c[i] * u[i];
    if (cc.has_f) drift_i += cc.f[i];
    out.drift += p * drift_i * w;
    // quadratic variation: |d_i(g^i) + G|_{l2}^2 |u|^{p-2}
    double qv = 0.0;
    if (spec.coeffs.sigma != 0.0)
      for (int ax = 0; ax < g.dim; ++ax)
        qv += spec.coeffs.sigma * spec.coeffs.sigma * grads[static_cast<std::size_t>(ax)][i] *
              grads[static_cast<std::size_t>(ax)][i];
    for (int kk = 0; kk < spec.coeffs.k_noise; ++kk) {
      const auto k = static_cast<std::size_t>(kk);
      const double mk = cc.nu[k][i] * u[i] + cc.g[k][i];
      qv += mk * mk;
    }
    out.drift += 0.5 * p * (p - 1.0) * qv * absu_pm2[i] * meas;
  }

  // martingale increment
  if (spec.coeffs.sigma != 0.0) {
    for (int ax = 0; ax < g.dim; ++ax) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        s += p * (1.0 - p) * spec.coeffs.sigma * u[i] * absu_pm2[i] *
             grads[static_cast<std::size_t>(ax)][i] * meas;
      out.mart += s * dw.beta[ax];
    }
  }
  for (int kk = 0; kk < spec.coeffs.k_noise; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += p * (cc.nu[k][i] * u[i] + cc.g[k][i]) * u[i] * absu_pm2[i] * meas;
    out.mart += s * dw.w[kk];
  }
  return out;
}

}  // namespace

Trajectory solve_path(const ProblemSpec& spec_in, const SolverConfig& cfg, int path_index) {
  const ProblemSpec spec = stratonovich_to_ito(spec_in);
  const Grid g = grid_for(spec, cfg);
  const CoeffCache cc = build_cache(spec, g);

  const double steps_exact = spec.horizon / cfg.dt;
  const int n_steps = static_cast<int>(std::lround(steps_exact));
  if (n_steps < 1 || std::abs(n_steps * cfg.dt - spec.horizon) > 1e-9 * spec.horizon)
    throw std::invalid_argument("solve_path: dt must divide the horizon");

  NoiseModel nm;
  nm.d_transport = spec.dim;
  nm.k_noise = spec.coeffs.k_noise;
  nm.seed = cfg.seed;
  nm.dt = cfg.dt;
  nm.n_steps = n_steps;
  const NoiseStream stream = make_stream(nm, path_index);

  Trajectory traj;
  traj.dt = cfg.dt;
  traj.ito_p = cfg.track_ito ? cfg.ito_p : 0.0;

  Field u = initial_field(spec, cfg, g, path_index);
  auto record = [&](double t, int iters) {
    NormRecord rec;
    rec.t = t;
    for (double p : cfg.p_list) rec.lp.push_back(norm_lp(g, u, p));
    rec.inf = norm_lp(g, u, std::numeric_limits<double>::infinity());
    if (cfg.track_hminus1) rec.hm1 = norm_hminus1(g, u);
    rec.newton_iters = iters;
    traj.records.push_back(std::move(rec));
    traj.times.push_back(t);
    if (cfg.record_fields) traj.fields.push_back(u);
  };

  auto note_step = [&](double t) {
    const double inf = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
    traj.step_times.push_back(t);
    traj.step_inf.push_back(inf);
    traj.sup_inf = std::max(traj.sup_inf, inf);
  };

  note_step(0.0);
  record(0.0, 0);
  for (int s = 0; s < n_steps; ++s) {
    const double t = s * cfg.dt;
    const NoiseIncrements dw = stream.increments(s);
    int iters = 0;
    Field u_next = do_step(u, t, spec, cfg, g, cc, dw, &iters);
    if (cfg.track_ito) {
      ItoTerms terms = ito_terms(u, u_next, spec, cfg, g, cc, dw);
      traj.ito.push_back({terms.lp_pow, terms.drift, terms.mart});
    }
    u = std::move(u_next);
    const double t_next = (s + 1) * cfg.dt;
    note_step(t_next);
    if ((s + 1) % cfg.record_every == 0 || s + 1 == n_steps) record(t_next, iters);
  }
  if (cfg.track_ito) {
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i) s += std::pow(std::abs(u[i]), cfg.ito_p);
    traj.final_lp_pow = s * g.cell_measure();
  }
  return traj;
}

Field galerkin_project(const Grid& g, const Field& v, int n_modes) {
  if (v.size() != g.size()) throw std::invalid_argument("galerkin_project: size mismatch");
  const int total = g.size();
  if (n_modes < 1 || n_modes > total) throw std::domain_error("galerkin_project: n_modes out of range");
  struct ModeId {
    double lam;
    int k1, k2;
  };
  std::vector<ModeId> ids;
  if (g.dim == 1) {
    for (int k = 1; k <= g.n[0]; ++k) ids.push_back({sine_eigenvalue(g, k), k, 0});
  } else {
    for (int k1 = 1; k1 <= g.n[0]; ++k1)
      for (int k2 = 1; k2 <= g.n[1]; ++k2) ids.push_back({sine_eigenvalue(g, k1, k2), k1, k2});
  }
  std::sort(ids.begin(), ids.end(), [](const ModeId& a, const ModeId& b) {
    if (a.lam != b.lam) return a.lam < b.lam;
    if (a.k1 != b.k1) return a.k1 < b.k1;
    return a.k2 < b.k2;
  });
  Field out = Field::Zero(total);
  for (int m = 0; m < n_modes; ++m) {
    const Field mode = sine_mode(g, ids[static_cast<std::size_t>(m)].k1,
                                 ids[static_cast<std::size_t>(m)].k2);
    const double coef = inner(g, v, mode) / inner(g, mode, mode);
    out += coef * mode;
  }
  return out;
}

}  // namespace spme
