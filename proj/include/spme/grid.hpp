// Discrete spatial calculus on a uniform Dirichlet grid in d = 1 or 2:
// second-order Laplacian stencil, Poisson solve, L_p / H^1_0 / H^-1 norms,
// discrete sine eigenmodes, and the Gagliardo-Nirenberg trajectory check.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace spme {

using Field = Eigen::VectorXd;

struct Grid {
  int dim = 1;                   // 1 or 2
  std::array<int, 2> n{0, 1};    // interior node counts per axis (n[1]=1 if dim==1)
  std::array<double, 2> a{0.0, 0.0};
  std::array<double, 2> b{1.0, 1.0};
  std::array<double, 2> h{0.0, 0.0};

  int size() const { return n[0] * n[1]; }
  double cell_measure() const { return dim == 1 ? h[0] : h[0] * h[1]; }
  int index(int i, int j = 0) const { return i * n[1] + j; }
  double coord(int axis, int i) const { return a[axis] + (i + 1) * h[axis]; }
};

Grid make_grid_1d(double a, double b, int n_interior);
Grid make_grid_2d(double ax, double bx, int nx, double ay, double by, int ny);

// h^d-weighted inner product over interior nodes.
double inner(const Grid& g, const Field& u, const Field& v);

// Five/three-point Dirichlet stencil; boundary neighbors read as zero.
Field apply_laplacian(const Grid& g, const Field& v);

// Centered difference along `axis` with zero boundary values.
Field gradient_centered(const Grid& g, const Field& v, int axis);

// Solves -Laplacian_h w = rhs. d=1: exact tridiagonal solve (tol ignored);
// d=2: conjugate gradients to relative residual `tol`.
Field solve_poisson(const Grid& g, const Field& rhs, double tol = 1e-10);

double norm_lp(const Grid& g, const Field& v, double p);
double norm_h10(const Grid& g, const Field& v);
double norm_hminus1(const Grid& g, const Field& v);

// Discrete sine mode sin(k*pi*(x-a)/(b-a)) (tensor product in 2d) and its
// exact -Laplacian_h eigenvalue.
Field sine_mode(const Grid& g, int k1, int k2 = 0);
double sine_eigenvalue(const Grid& g, int k1, int k2 = 0);

struct GnResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double q = 0.0;
  double n_lambda = 0.0;
  bool pass = false;
};

// Space-time Gagliardo-Nirenberg check along a trajectory:
//   sum_t ||v_t||_q^q dt <= N(lambda)^q (sum_t ||grad v_t||_2^2 dt)
//                           (max_t ||v_t||_lambda^lambda)^(2/d) (1+eta)
// with q = 2(d+lambda)/d.
GnResult gn_check(const Grid& g, const std::vector<Field>& trajectory, double dt,
                  double lambda, double eta = 0.05);

}  // namespace spme
