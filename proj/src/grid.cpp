#include "spme/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace spme {

Grid make_grid_1d(double a, double b, int n_interior) {
  if (n_interior < 3) throw std::invalid_argument("grid: need at least 3 interior nodes");
  if (!(b > a)) throw std::invalid_argument("grid: empty interval");
  Grid g;
  g.dim = 1;
  g.n = {n_interior, 1};
  g.a = {a, 0.0};
  g.b = {b, 1.0};
  g.h = {(b - a) / (n_interior + 1), 1.0};
  return g;
}

Grid make_grid_2d(double ax, double bx, int nx, double ay, double by, int ny) {
  if (nx < 3 || ny < 3) throw std::invalid_argument("grid: need at least 3 interior nodes");
  if (!(bx > ax) || !(by > ay)) throw std::invalid_argument("grid: empty box");
  Grid g;
  g.dim = 2;
  g.n = {nx, ny};
  g.a = {ax, ay};
  g.b = {bx, by};
  g.h = {(bx - ax) / (nx + 1), (by - ay) / (ny + 1)};
  return g;
}

static void check_size(const Grid& g, const Field& v) {
  if (v.size() != g.size()) throw std::invalid_argument("field/grid size mismatch");
}

double inner(const Grid& g, const Field& u, const Field& v) {
  check_size(g, u);
  check_size(g, v);
  return u.dot(v) * g.cell_measure();
}

Field apply_laplacian(const Grid& g, const Field& v) {
  check_size(g, v);
  Field out = Field::Zero(v.size());
  const double ihx2 = 1.0 / (g.h[0] * g.h[0]);
  if (g.dim == 1) {
    const int n = g.n[0];
    for (int i = 0; i < n; ++i) {
      const double left = i > 0 ? v[i - 1] : 0.0;
      const double right = i < n - 1 ? v[i + 1] : 0.0;
      out[i] = (left + right - 2.0 * v[i]) * ihx2;
    }
  } else {
    const double ihy2 = 1.0 / (g.h[1] * g.h[1]);
    const int nx = g.n[0], ny = g.n[1];
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const int k = g.index(i, j);
        const double xl = i > 0 ? v[k - ny] : 0.0;
        const double xr = i < nx - 1 ? v[k + ny] : 0.0;
        const double yl = j > 0 ? v[k - 1] : 0.0;
        const double yr = j < ny - 1 ? v[k + 1] : 0.0;
        out[k] = (xl + xr - 2.0 * v[k]) * ihx2 + (yl + yr - 2.0 * v[k]) * ihy2;
      }
    }
  }
  return out;
}

Field gradient_centered(const Grid& g, const Field& v, int axis) {
  check_size(g, v);
  if (axis < 0 || axis >= g.dim) throw std::invalid_argument("gradient: bad axis");
  Field out = Field::Zero(v.size());
  if (g.dim == 1) {
    const int n = g.n[0];
    const double i2h = 1.0 / (2.0 * g.h[0]);
    for (int i = 0; i < n; ++i) {
      const double left = i > 0 ? v[i - 1] : 0.0;
      const double right = i < n - 1 ? v[i + 1] : 0.0;
      out[i] = (right - left) * i2h;
    }
  } else {
    const int nx = g.n[0], ny = g.n[1];
    const double i2h = 1.0 / (2.0 * g.h[axis]);
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const int k = g.index(i, j);
        double left = 0.0, right = 0.0;
        if (axis == 0) {
          left = i > 0 ? v[k - ny] : 0.0;
          right = i < nx - 1 ? v[k + ny] : 0.0;
        } else {
          left = j > 0 ? v[k - 1] : 0.0;
          right = j < ny - 1 ? v[k + 1] : 0.0;
        }
        out[k] = (right - left) * i2h;
      }
    }
  }
  return out;
}

// Thomas algorithm for -Laplacian_h w = rhs in 1d. The matrix is
// tridiag(-1, 2, -1)/h^2, symmetric positive definite.
static Field poisson_1d(const Grid& g, const Field& rhs) {
  const int n = g.n[0];
  const double h2 = g.h[0] * g.h[0];
  Eigen::VectorXd c(n), d(n);
  double diag = 2.0 / h2;
  const double off = -1.0 / h2;
  c[0] = off / diag;
  d[0] = rhs[0] / diag;
  for (int i = 1; i < n; ++i) {
    const double denom = diag - off * c[i - 1];
    c[i] = off / denom;
    d[i] = (rhs[i] - off * d[i - 1]) / denom;
  }
  Field w(n);
  w[n - 1] = d[n - 1];
  for (int i = n - 2; i >= 0; --i) w[i] = d[i] - c[i] * w[i + 1];
  return w;
}

static Field poisson_2d_cg(const Grid& g, const Field& rhs, double tol) {
  const int n = g.size();
  Field x = Field::Zero(n);
  Field r = rhs;
  Field p = r;
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return x;
  double rr = r.squaredNorm();
  const int max_iter = 10 * n;
  for (int it = 0; it < max_iter; ++it) {
    if (std::sqrt(rr) <= tol * rhs_norm) return x;
    Field ap = -apply_laplacian(g, p);
    const double alpha = rr / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  if (std::sqrt(rr) <= tol * rhs_norm) return x;
  throw std::runtime_error("poisson: CG did not converge, residual " +
                           std::to_string(std::sqrt(rr) / rhs_norm));
}

Field solve_poisson(const Grid& g, const Field& rhs, double tol) {
  check_size(g, rhs);
  if (!(tol > 0.0)) throw std::invalid_argument("poisson: tol must be positive");
  return g.dim == 1 ? poisson_1d(g, rhs) : poisson_2d_cg(g, rhs, tol);
}

double norm_lp(const Grid& g, const Field& v, double p) {
  check_size(g, v);
  if (std::isinf(p)) return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
  if (p < 1.0) throw std::domain_error("norm_lp: p must be >= 1");
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]), p);
  return std::pow(s * g.cell_measure(), 1.0 / p);
}

double norm_h10(const Grid& g, const Field& v) {
  check_size(g, v);
  // Forward differences including the boundary cell: makes
  // (v, -Laplacian_h v)_h = ||grad_h v||^2 an exact identity.
  double s = 0.0;
  const double meas = g.cell_measure();
  if (g.dim == 1) {
    const int n = g.n[0];
    const double ih2 = 1.0 / (g.h[0] * g.h[0]);
    for (int i = 0; i <= n; ++i) {
      const double lo = i > 0 ? v[i - 1] : 0.0;
      const double hi = i < n ? v[i] : 0.0;
      s += (hi - lo) * (hi - lo) * ih2;
    }
  } else {
    const int nx = g.n[0], ny = g.n[1];
    const double ihx2 = 1.0 / (g.h[0] * g.h[0]);
    const double ihy2 = 1.0 / (g.h[1] * g.h[1]);
    for (int i = 0; i <= nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const double lo = i > 0 ? v[g.index(i - 1, j)] : 0.0;
        const double hi = i < nx ? v[g.index(i, j)] : 0.0;
        s += (hi - lo) * (hi - lo) * ihx2;
      }
    }
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j <= ny; ++j) {
        const double lo = j > 0 ? v[g.index(i, j - 1)] : 0.0;
        const double hi = j < ny ? v[g.index(i, j)] : 0.0;
        s += (hi - lo) * (hi - lo) * ihy2;
      }
    }
  }
  return std::sqrt(s * meas);
}

double norm_hminus1(const Grid& g, const Field& v) {
  check_size(g, v);
  if (v.size() == 0 || v.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const Field w = solve_poisson(g, v);
  return std::sqrt(std::max(0.0, inner(g, v, w)));
}

Field sine_mode(const Grid& g, int k1, int k2) {
  if (k1 < 1 || k1 > g.n[0]) throw std::invalid_argument("sine_mode: k1 out of range");
  Field v(g.size());
  const double L0 = g.b[0] - g.a[0];
  if (g.dim == 1) {
    for (int i = 0; i < g.n[0]; ++i)
      v[i] = std::sin(k1 * M_PI * (g.coord(0, i) - g.a[0]) / L0);
  } else {
    if (k2 < 1 || k2 > g.n[1]) throw std::invalid_argument("sine_mode: k2 out of range");
    const double L1 = g.b[1] - g.a[1];
    for (int i = 0; i < g.n[0]; ++i)
      for (int j = 0; j < g.n[1]; ++j)
        v[g.index(i, j)] = std::sin(k1 * M_PI * (g.coord(0, i) - g.a[0]) / L0) *
                           std::sin(k2 * M_PI * (g.coord(1, j) - g.a[1]) / L1);
  }
  return v;
}

double sine_eigenvalue(const Grid& g, int k1, int k2) {
  const double L0 = g.b[0] - g.a[0];
  double lam = 4.0 / (g.h[0] * g.h[0]) *
               std::pow(std::sin(k1 * M_PI * g.h[0] / (2.0 * L0)), 2);
  if (g.dim == 2) {
    const double L1 = g.b[1] - g.a[1];
    lam += 4.0 / (g.h[1] * g.h[1]) *
           std::pow(std::sin(k2 * M_PI * g.h[1] / (2.0 * L1)), 2);
  }
  return lam;
}

GnResult gn_check(const Grid& g, const std::vector<Field>& trajectory, double dt,
                  double lambda, double eta) {
  if (lambda < 1.0 || lambda > 2.0) throw std::domain_error("gn_check: lambda must be in [1,2]");
  if (trajectory.empty()) throw std::invalid_argument("gn_check: empty trajectory");
  const double d = g.dim;
  const double q = 2.0 * (d + lambda) / d;
  // Constant from the Ladyzhenskaya-type interpolation, per dimension.
  double base;
  if (g.dim == 1) {
    base = (1.0 + lambda) / lambda;
  } else {
    base = std::max(q * (d - 1.0) / d, (lambda + 2.0) / 2.0);
  }
  const double n_lambda = std::pow(base, 2.0 / q);

  double lhs = 0.0, grad2 = 0.0, sup_lam = 0.0;
  for (const Field& v : trajectory) {
    lhs += std::pow(norm_lp(g, v, q), q) * dt;
    const double gn = norm_h10(g, v);
    grad2 += gn * gn * dt;
    sup_lam = std::max(sup_lam, std::pow(norm_lp(g, v, lambda), lambda));
  }
  GnResult r;
  r.lhs = lhs;
  r.q = q;
  r.n_lambda = n_lambda;
  r.rhs = std::pow(n_lambda, q) * grad2 * std::pow(sup_lam, 2.0 / d);
  r.pass = lhs <= r.rhs * (1.0 + eta) + 1e-300;
  return r;
}

}  // namespace spme
