#include "spme/model.hpp"

#include <algorithm>
#include <cmath>

namespace spme {

// ---------------------------------------------------------------------------
// Coefficient registry
// ---------------------------------------------------------------------------
namespace {

double poly_eval(const std::vector<double>& p, double x) {
  double v = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * x + *it;
  return v;
}

double poly_deriv(const std::vector<double>& p, double x) {
  double v = 0.0;
  for (std::size_t i = p.size(); i-- > 1;) v = v * x + p[i] * static_cast<double>(i);
  return v;
}

double bump_1d(double x, double c, double w) {
  const double y = (x - c) / w;
  if (std::abs(y) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - y * y));
}

}  // namespace

double CoeffFn::eval(double t, const std::array<double, 2>& x, int dim) const {
  (void)t;  // registry functions are time-independent
  if (kind == "zero") return 0.0;
  if (kind == "const") {
    return params.empty() ? 0.0 : params[0];
  }
  if (kind == "poly") {
    double v = poly_eval(params, x[0]);
    if (dim == 2) v *= poly_eval(params, x[1]);
    return v;
  }
  if (kind == "sine") {
    // [amp, freq0, phase0, (freq1, phase1)]: amp * prod sin(freq*pi*x + phase)
    const double amp = params.size() > 0 ? params[0] : 1.0;
    const double f0 = params.size() > 1 ? params[1] : 1.0;
    const double p0 = params.size() > 2 ? params[2] : 0.0;
    double v = amp * std::sin(f0 * M_PI * x[0] + p0);
    if (dim == 2) {
      const double f1 = params.size() > 3 ? params[3] : f0;
      const double p1 = params.size() > 4 ? params[4] : p0;
      v *= std::sin(f1 * M_PI * x[1] + p1);
    }
    return v;
  }
  if (kind == "bump") {
    // [amp, c0, w0, (c1, w1)]
    const double amp = params.size() > 0 ? params[0] : 1.0;
    const double c0 = params.size() > 1 ? params[1] : 0.5;
    const double w0 = params.size() > 2 ? params[2] : 0.25;
    double v = amp * bump_1d(x[0], c0, w0);
    if (dim == 2) {
      const double c1 = params.size() > 3 ? params[3] : c0;
      const double w1 = params.size() > 4 ? params[4] : w0;
      v *= bump_1d(x[1], c1, w1);
    }
    return v;
  }
  throw ValidationError("unknown coefficient kind: " + kind);
}

double CoeffFn::deriv(double t, const std::array<double, 2>& x, int dim, int axis) const {
  if (kind == "zero" || kind == "const") return 0.0;
  if (kind == "poly") {
    if (dim == 1) return poly_deriv(params, x[0]);
    return axis == 0 ? poly_deriv(params, x[0]) * poly_eval(params, x[1])
                     : poly_eval(params, x[0]) * poly_deriv(params, x[1]);
  }
  if (kind == "sine") {
    const double amp = params.size() > 0 ? params[0] : 1.0;
    const double f0 = params.size() > 1 ? params[1] : 1.0;
    const double p0 = params.size() > 2 ? params[2] : 0.0;
    if (dim == 1) return amp * f0 * M_PI * std::cos(f0 * M_PI * x[0] + p0);
    const double f1 = params.size() > 3 ? params[3] : f0;
    const double p1 = params.size() > 4 ? params[4] : p0;
    if (axis == 0)
      return amp * f0 * M_PI * std::cos(f0 * M_PI * x[0] + p0) * std::sin(f1 * M_PI * x[1] + p1);
    return amp * std::sin(f0 * M_PI * x[0] + p0) * f1 * M_PI * std::cos(f1 * M_PI * x[1] + p1);
  }
  // central difference fallback (bump)
  const double dx = 1e-6;
  std::array<double, 2> xp = x, xm = x;
  xp[axis] += dx;
  xm[axis] -= dx;
  return (eval(t, xp, dim) - eval(t, xm, dim)) / (2.0 * dx);
}

// ---------------------------------------------------------------------------
// Phi
// ---------------------------------------------------------------------------
namespace {

// Tabulated lookup: piecewise linear, end-slope extrapolation outside range.
double tab_eval(const PhiSpec& phi, double r) {
  const auto& rs = phi.r_samples;
  const auto& ps = phi.phi_samples;
  const std::size_t n = rs.size();
  if (r <= rs.front())
    return ps.front() + (r - rs.front()) * (ps[1] - ps[0]) / (rs[1] - rs[0]);
  if (r >= rs.back())
    return ps.back() + (r - rs.back()) * (ps[n - 1] - ps[n - 2]) / (rs[n - 1] - rs[n - 2]);
  const auto it = std::upper_bound(rs.begin(), rs.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - rs.begin());
  const double w = (r - rs[i - 1]) / (rs[i] - rs[i - 1]);
  return ps[i - 1] + w * (ps[i] - ps[i - 1]);
}

double tab_prime(const PhiSpec& phi, double r) {
  const auto& rs = phi.r_samples;
  const auto& ps = phi.phi_samples;
  const std::size_t n = rs.size();
  std::size_t i;
  if (r <= rs.front())
    i = 1;
  else if (r >= rs.back())
    i = n - 1;
  else
    i = static_cast<std::size_t>(std::upper_bound(rs.begin(), rs.end(), r) - rs.begin());
  return (ps[i] - ps[i - 1]) / (rs[i] - rs[i - 1]);
}

void require_table(const PhiSpec& phi) {
  if (phi.r_samples.size() < 2 || phi.r_samples.size() != phi.phi_samples.size())
    throw ValidationError("tabulated Phi needs >= 2 matched samples");
  if (!std::is_sorted(phi.r_samples.begin(), phi.r_samples.end()))
    throw ValidationError("tabulated Phi samples must be sorted in r");
}

}  // namespace

double phi_eval(const PhiSpec& phi, double r) {
  if (phi.kind == PhiSpec::Kind::Tabulated) {
    require_table(phi);
    return tab_eval(phi, r) - tab_eval(phi, 0.0);
  }
  const double m = phi.m;
  const double ar = std::abs(r);
  if (!std::isfinite(phi.cap)) return std::copysign(std::pow(ar, m), r);
  if (m <= 1.0) {
    return std::min(m, phi.cap) * r;
  }
  const double rstar = std::pow(phi.cap / m, 1.0 / (m - 1.0));
  if (ar <= rstar) return std::copysign(std::pow(ar, m), r);
  return std::copysign(std::pow(rstar, m) + phi.cap * (ar - rstar), r);
}

double phi_prime(const PhiSpec& phi, double r) {
  if (phi.kind == PhiSpec::Kind::Tabulated) {
    require_table(phi);
    return tab_prime(phi, r);
  }
  const double m = phi.m;
  if (m <= 1.0) return std::min(m, phi.cap);
  return std::min(m * std::pow(std::abs(r), m - 1.0), phi.cap);
}

PhiSpec phi_truncate(const PhiSpec& phi, double n) {
  if (!(n > 0.0)) throw std::domain_error("phi_truncate: n must be positive");
  PhiSpec out = phi;
  if (phi.kind == PhiSpec::Kind::PowerLaw) {
    out.cap = std::min(phi.cap, n);
    return out;
  }
  require_table(phi);
  // Rebuild the table with segment slopes capped at n, anchored so that
  // Phi_n(0) = 0. Insert r = 0 as a breakpoint if missing.
  std::vector<double> rs = phi.r_samples;
  std::vector<double> ps = phi.phi_samples;
  auto it = std::lower_bound(rs.begin(), rs.end(), 0.0);
  std::size_t zi = static_cast<std::size_t>(it - rs.begin());
  if (it == rs.end() || *it != 0.0) {
    PhiSpec tmp = phi;
    const double v0 = tab_eval(tmp, 0.0);
    rs.insert(it, 0.0);
    ps.insert(ps.begin() + static_cast<std::ptrdiff_t>(zi), v0);
  }
  std::vector<double> np(rs.size(), 0.0);
  for (std::size_t i = zi + 1; i < rs.size(); ++i) {
    const double slope = (ps[i] - ps[i - 1]) / (rs[i] - rs[i - 1]);
    np[i] = np[i - 1] + std::min(slope, n) * (rs[i] - rs[i - 1]);
  }
  for (std::size_t i = zi; i-- > 0;) {
    const double slope = (ps[i + 1] - ps[i]) / (rs[i + 1] - rs[i]);
    np[i] = np[i + 1] - std::min(slope, n) * (rs[i + 1] - rs[i]);
  }
  out.r_samples = std::move(rs);
  out.phi_samples = std::move(np);
  out.cap = std::min(phi.cap, n);
  return out;
}

// ---------------------------------------------------------------------------
// Ito conversion and the non-degenerate bundle
// ---------------------------------------------------------------------------
ProblemSpec stratonovich_to_ito(const ProblemSpec& spec) {
  ProblemSpec out = spec;
  out.ito_form = true;
  return out;
}

double NondegenerateBundle::a(double r) const {
  return phi_prime(spec.phi, r) + spec.epsilon + ito_correction(spec);
}

double NondegenerateBundle::drift_flux(int i, double t, const std::array<double, 2>& x,
                                       double r) const {
  return spec.coeffs.b[static_cast<std::size_t>(i)].eval(t, x, spec.dim) * r;
}

double NondegenerateBundle::drift_zero_order(double t, const std::array<double, 2>& x,
                                             double r) const {
  double div_b = 0.0;
  for (int i = 0; i < spec.dim; ++i)
    div_b += spec.coeffs.b[static_cast<std::size_t>(i)].deriv(t, x, spec.dim, i);
  return (spec.coeffs.c.eval(t, x, spec.dim) - div_b) * r + spec.coeffs.f.eval(t, x, spec.dim);
}

double NondegenerateBundle::g_transport(int i, int k, double r) const {
  return (i == k && k < spec.dim) ? spec.coeffs.sigma * r : 0.0;
}

double NondegenerateBundle::g_additive(int k, double t, const std::array<double, 2>& x,
                                       double r) const {
  const auto& cs = spec.coeffs;
  const double nu = k < static_cast<int>(cs.nu.size())
                        ? cs.nu[static_cast<std::size_t>(k)].eval(t, x, spec.dim)
                        : 0.0;
  const double ga = k < static_cast<int>(cs.g.size())
                        ? cs.g[static_cast<std::size_t>(k)].eval(t, x, spec.dim)
                        : 0.0;
  return nu * r + ga;
}

double NondegenerateBundle::v1(double t, const std::array<double, 2>& x) const {
  return std::abs(spec.coeffs.f.eval(t, x, spec.dim));
}

double NondegenerateBundle::v2(double t, const std::array<double, 2>& x) const {
  double s = 0.0;
  for (const auto& gk : spec.coeffs.g) {
    const double v = gk.eval(t, x, spec.dim);
    s += v * v;
  }
  return std::sqrt(s);
}

NondegenerateBundle as_nondegenerate(const ProblemSpec& spec) {
  if (!(spec.epsilon > 0.0))
    throw ValidationError("as_nondegenerate: epsilon = 0 is degenerate; add viscosity first");
  NondegenerateBundle b;
  b.spec = stratonovich_to_ito(spec);
  b.theta = spec.epsilon;
  b.m_tilde = spec.phi.m - 1.0;
  if (spec.phi.kind == PhiSpec::Kind::PowerLaw) {
    b.c_bar = spec.phi.m;
  } else {
    // empirical lower slope over the table
    double cbar = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < spec.phi.r_samples.size(); ++i) {
      const double rm = 0.5 * (spec.phi.r_samples[i] + spec.phi.r_samples[i - 1]);
      const double denom = std::pow(std::abs(rm), b.m_tilde);
      if (denom > 1e-12) cbar = std::min(cbar, tab_prime(spec.phi, rm) / denom);
    }
    b.c_bar = std::isfinite(cbar) ? std::max(cbar, 0.0) : 0.0;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Assumption validation
// ---------------------------------------------------------------------------
namespace {

double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  int i = index;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

double xi_sup_estimate(const ProblemSpec& spec) {
  if (spec.xi.kind == InitialCondition::Kind::RandomSigns) {
    double measure = spec.box_b[0] - spec.box_a[0];
    if (spec.dim == 2) measure *= spec.box_b[1] - spec.box_a[1];
    return spec.xi.l2_norm / std::sqrt(measure);
  }
  double sup = 0.0;
  for (int i = 0; i < 128; ++i) {
    std::array<double, 2> x{
        spec.box_a[0] + halton(i + 1, 2) * (spec.box_b[0] - spec.box_a[0]),
        spec.box_a[1] + halton(i + 1, 3) * (spec.box_b[1] - spec.box_a[1])};
    sup = std::max(sup, std::abs(spec.xi.fn.eval(0.0, x, spec.dim)));
  }
  return sup;
}

}  // namespace

bool AssumptionReport::pass() const {
  for (const auto& c : conditions)
    if (!c.pass) return false;
  return true;
}

const ConditionRecord* AssumptionReport::first_failure() const {
  for (const auto& c : conditions)
    if (!c.pass) return &c;
  return nullptr;
}

AssumptionReport validate_assumptions(const ProblemSpec& spec, int sample_budget) {
  if (sample_budget < 1) throw std::invalid_argument("validate_assumptions: sample_budget >= 1");
  AssumptionReport rep;
  const int ns = std::max(sample_budget, 16);
  const double big_r = 10.0 * (1.0 + xi_sup_estimate(spec));

  // r sample grid: sign-symmetric, includes 0 and +-1
  std::vector<double> rgrid;
  for (int j = 0; j < ns; ++j) {
    const double r = big_r * (2.0 * halton(j + 1, 7) - 1.0);
    rgrid.push_back(r);
    rgrid.push_back(-r);
  }
  rgrid.push_back(0.0);
  rgrid.push_back(1.0);
  rgrid.push_back(-1.0);
  std::sort(rgrid.begin(), rgrid.end());

  // phi.zero
  {
    ConditionRecord c{.id = "phi.zero"};
    c.margin = -std::abs(phi_eval(spec.phi, 0.0));
    c.pass = std::abs(c.margin) <= 1e-12;
    rep.conditions.push_back(c);
  }
  // phi.monotone: divided differences on the symmetric grid
  {
    ConditionRecord c{.id = "phi.monotone"};
    c.margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rgrid.size(); ++i) {
      if (rgrid[i] - rgrid[i - 1] < 1e-12) continue;
      const double slope =
          (phi_eval(spec.phi, rgrid[i]) - phi_eval(spec.phi, rgrid[i - 1])) /
          (rgrid[i] - rgrid[i - 1]);
      if (slope < c.margin) {
        c.margin = slope;
        c.witness_r = rgrid[i];
      }
    }
    c.pass = c.margin >= -1e-12;
    rep.conditions.push_back(c);
  }
  // phi.lower: Phi'(r) >= c_bar |r|^{m-1}
  {
    ConditionRecord c{.id = "phi.lower"};
    const double m = spec.phi.m;
    const double cbar = spec.phi.kind == PhiSpec::Kind::PowerLaw ? m : 0.0;
    c.margin = std::numeric_limits<double>::infinity();
    for (double r : rgrid) {
      const double v = phi_prime(spec.phi, r) - cbar * std::pow(std::abs(r), m - 1.0);
      if (v < c.margin) {
        c.margin = v;
        c.witness_r = r;
      }
    }
    c.pass = c.margin >= -1e-9;
    rep.conditions.push_back(c);
  }
  // phi.coercive: empirical lambda in r*Phi(r) >= lambda |r|^{m+1} - 1
  {
    ConditionRecord c{.id = "phi.coercive"};
    c.margin = std::numeric_limits<double>::infinity();
    for (double r : rgrid) {
      if (std::abs(r) < 0.1) continue;
      const double lam = (r * phi_eval(spec.phi, r) + 1.0) / std::pow(std::abs(r), spec.phi.m + 1.0);
      if (lam < c.margin) {
        c.margin = lam;
        c.witness_r = r;
      }
    }
    c.pass = c.margin > 0.0;
    rep.conditions.push_back(c);
  }
  // mu.admissible: mu in [2, inf] intersect ((d+2)/2, inf]
  {
    ConditionRecord c{.id = "mu.admissible"};
    const double lo = std::max(2.0, (spec.dim + 2.0) / 2.0);
    if (std::isinf(spec.mu)) {
      c.margin = std::numeric_limits<double>::infinity();
      c.pass = true;
    } else {
      c.margin = spec.mu - lo;
      c.pass = spec.mu >= 2.0 && spec.mu > (spec.dim + 2.0) / 2.0;
    }
    rep.conditions.push_back(c);
  }
  // b.boundary: drift vanishes on the boundary
  {
    ConditionRecord c{.id = "b.boundary"};
    double worst = 0.0;
    for (int s = 0; s < ns; ++s) {
      const double t = spec.horizon * halton(s + 1, 2);
      const double u = halton(s + 1, 3);
      for (int axis = 0; axis < spec.dim; ++axis) {
        for (double side : {spec.box_a[axis], spec.box_b[axis]}) {
          std::array<double, 2> x{0.0, 0.0};
          x[axis] = side;
          const int other = 1 - axis;
          x[other] = spec.box_a[other] + u * (spec.box_b[other] - spec.box_a[other]);
          if (spec.dim == 1) x[1] = 0.0;
          for (int i = 0; i < spec.dim; ++i) {
            const double v = std::abs(spec.coeffs.b[static_cast<std::size_t>(i)].eval(t, x, spec.dim));
            if (v > worst) {
              worst = v;
              c.witness_t = t;
              c.witness_x = x;
            }
          }
        }
      }
    }
    c.margin = -worst;
    c.pass = worst <= 1e-9;
    rep.conditions.push_back(c);
  }
  // ellipticity: a(r) - sigma^2/2 - c_bar|r|^{m-1} - theta >= 0 (theta = eps)
  {
    ConditionRecord c{.id = "ellipticity"};
    const double m = spec.phi.m;
    const double cbar = spec.phi.kind == PhiSpec::Kind::PowerLaw ? m : 0.0;
    c.margin = std::numeric_limits<double>::infinity();
    for (double r : rgrid) {
      // after the sigma^2/2 cancellation the coefficient is Phi'(r) + eps
      const double v = phi_prime(spec.phi, r) - cbar * std::pow(std::abs(r), m - 1.0);
      if (v < c.margin) {
        c.margin = v;
        c.witness_r = r;
      }
    }
    c.pass = c.margin >= -1e-9;
    rep.conditions.push_back(c);
  }
  // coeff.bounded: empirical K over quasi-random (t,x) samples
  {
    ConditionRecord c{.id = "coeff.bounded"};
    double k_emp = std::abs(spec.coeffs.sigma);
    double v_sup = 0.0;
    for (int s = 0; s < ns; ++s) {
      const double t = spec.horizon * halton(s + 1, 2);
      std::array<double, 2> x{
          spec.box_a[0] + halton(s + 1, 3) * (spec.box_b[0] - spec.box_a[0]),
          spec.box_a[1] + halton(s + 1, 5) * (spec.box_b[1] - spec.box_a[1])};
      if (spec.dim == 1) x[1] = 0.0;
      double nu2 = 0.0, dnu2 = 0.0;
      for (const auto& nu : spec.coeffs.nu) {
        const double v = nu.eval(t, x, spec.dim);
        nu2 += v * v;
        for (int ax = 0; ax < spec.dim; ++ax) {
          const double dv = nu.deriv(t, x, spec.dim, ax);
          dnu2 += dv * dv;
        }
      }
      double local = std::abs(spec.coeffs.sigma) + std::sqrt(nu2) + std::sqrt(dnu2) +
                     std::abs(spec.coeffs.c.eval(t, x, spec.dim));
      for (int i = 0; i < spec.dim; ++i) {
        local += std::abs(spec.coeffs.b[static_cast<std::size_t>(i)].eval(t, x, spec.dim));
        for (int ax = 0; ax < spec.dim; ++ax)
          local += std::abs(spec.coeffs.b[static_cast<std::size_t>(i)].deriv(t, x, spec.dim, ax));
        local += std::abs(spec.coeffs.c.deriv(t, x, spec.dim, i));
      }
      k_emp = std::max(k_emp, local);
      double g2 = 0.0;
      for (const auto& gk : spec.coeffs.g) {
        const double v = gk.eval(t, x, spec.dim);
        g2 += v * v;
      }
      v_sup = std::max(v_sup, std::abs(spec.coeffs.f.eval(t, x, spec.dim)) + std::sqrt(g2));
    }
    rep.empirical_k = k_emp;
    c.margin = k_emp;
    c.pass = std::isfinite(k_emp) && std::isfinite(v_sup);
    rep.conditions.push_back(c);

    ConditionRecord cv{.id = "growth.V"};
    cv.margin = v_sup;
    cv.pass = std::isfinite(v_sup);
    rep.conditions.push_back(cv);
  }
  // noise.l2tail: informational, for sizing k_noise
  {
    ConditionRecord c{.id = "noise.l2tail"};
    const int k = spec.coeffs.k_noise;
    const int tail_from = k - std::max(1, k / 4);
    double tail = 0.0;
    for (int s = 0; s < std::min(ns, 64); ++s) {
      const double t = spec.horizon * halton(s + 1, 2);
      std::array<double, 2> x{
          spec.box_a[0] + halton(s + 1, 3) * (spec.box_b[0] - spec.box_a[0]),
          spec.box_a[1] + halton(s + 1, 5) * (spec.box_b[1] - spec.box_a[1])};
      if (spec.dim == 1) x[1] = 0.0;
      double tl = 0.0;
      for (int kk = std::max(tail_from, 0); kk < k; ++kk) {
        const double nv = kk < static_cast<int>(spec.coeffs.nu.size())
                              ? spec.coeffs.nu[static_cast<std::size_t>(kk)].eval(t, x, spec.dim)
                              : 0.0;
        const double gv = kk < static_cast<int>(spec.coeffs.g.size())
                              ? spec.coeffs.g[static_cast<std::size_t>(kk)].eval(t, x, spec.dim)
                              : 0.0;
        tl += nv * nv + gv * gv;
      }
      tail = std::max(tail, std::sqrt(tl));
    }
    rep.noise_l2_tail = tail;
    c.margin = tail;
    c.pass = true;
    rep.conditions.push_back(c);
  }
  return rep;
}

}  // namespace spme
