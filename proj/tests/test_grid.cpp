#include <doctest.h>

#include <cmath>

#include "spme/grid.hpp"
#include "spme/noise.hpp"

using namespace spme;

namespace {

Field random_field(const Grid& g, std::uint32_t tag) {
  Field v(g.size());
  for (int i = 0; i < g.size(); ++i)
    v[i] = counter_gaussian(99, tag, 0, static_cast<std::uint32_t>(i));
  return v;
}

}  // namespace

TEST_CASE("laplacian stencil") {
  const Grid g = make_grid_1d(0.0, 1.0, 3);  // h = 1/4
  CHECK(apply_laplacian(g, Field::Zero(3)).norm() == 0.0);

  Field v(3);
  v << 1.0, 0.0, 0.0;
  const Field lv = apply_laplacian(g, v);
  CHECK(lv[0] == doctest::Approx(-32.0));
  CHECK(lv[1] == doctest::Approx(16.0));
  CHECK(lv[2] == doctest::Approx(0.0));
}

TEST_CASE("discrete sine is an exact eigenvector") {
  const Grid g = make_grid_1d(0.0, 1.0, 63);
  const Field v = sine_mode(g, 1);
  const double lam = sine_eigenvalue(g, 1);
  const Field lv = apply_laplacian(g, v);
  CHECK((lv + lam * v).cwiseAbs().maxCoeff() < 1e-10 * lam);

  const Grid g2 = make_grid_2d(0.0, 1.0, 15, 0.0, 1.0, 15);
  const Field v2 = sine_mode(g2, 2, 3);
  const double lam2 = sine_eigenvalue(g2, 2, 3);
  CHECK((apply_laplacian(g2, v2) + lam2 * v2).cwiseAbs().maxCoeff() < 1e-10 * lam2);
}

TEST_CASE("poisson solve") {
  const Grid g = make_grid_1d(0.0, 1.0, 15);
  CHECK(solve_poisson(g, Field::Zero(15)).norm() == 0.0);

  // eigenvector identity
  const Field m3 = sine_mode(g, 3);
  const Field w = solve_poisson(g, m3);
  CHECK((w - m3 / sine_eigenvalue(g, 3)).cwiseAbs().maxCoeff() < 1e-10);

  // rhs = 1: the solution x(1-x)/2 is quadratic, so the stencil is exact
  const Field one = Field::Ones(15);
  const Field u = solve_poisson(g, one);
  CHECK(u[7] == doctest::Approx(0.125).epsilon(1e-12));  // node x = 0.5

  // d=2 CG against the sine eigenmode
  const Grid g2 = make_grid_2d(0.0, 1.0, 15, 0.0, 1.0, 15);
  const Field m = sine_mode(g2, 1, 2);
  const Field w2 = solve_poisson(g2, m);
  CHECK((w2 - m / sine_eigenvalue(g2, 1, 2)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("Lp norms") {
  const Grid g = make_grid_1d(0.0, 1.0, 63);
  CHECK(norm_lp(g, Field::Ones(63), 2.0) ==
        doctest::Approx(std::sqrt(63.0 * g.h[0])).epsilon(1e-12));
  CHECK(norm_lp(g, sine_mode(g, 1), 2.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));

  const Grid small = make_grid_1d(0.0, 1.0, 3);
  Field v(3);
  v << -3.0, 2.0, 0.0;
  CHECK(norm_lp(small, v, std::numeric_limits<double>::infinity()) == 3.0);
  CHECK_THROWS_AS(norm_lp(small, v, 0.5), std::domain_error);
}

TEST_CASE("H1_0 norm") {
  const Grid g = make_grid_1d(0.0, 1.0, 127);
  CHECK(norm_h10(g, Field::Zero(127)) == 0.0);
  CHECK(norm_h10(g, sine_mode(g, 1)) ==
        doctest::Approx(M_PI / std::sqrt(2.0)).epsilon(1e-3));
  const Field v = random_field(g, 1);
  CHECK(norm_h10(g, 3.0 * v) == doctest::Approx(3.0 * norm_h10(g, v)).epsilon(1e-13));
}

TEST_CASE("energy identity (v, -Lap v) = |grad v|^2 is exact") {
  for (int tag = 0; tag < 5; ++tag) {
    const Grid g = make_grid_1d(0.0, 1.0, 31);
    const Field v = random_field(g, static_cast<std::uint32_t>(tag));
    const double lhs = inner(g, v, -apply_laplacian(g, v));
    const double rhs = norm_h10(g, v) * norm_h10(g, v);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
  const Grid g2 = make_grid_2d(0.0, 1.0, 9, 0.0, 1.0, 9);
  const Field v2 = random_field(g2, 77);
  CHECK(inner(g2, v2, -apply_laplacian(g2, v2)) ==
        doctest::Approx(norm_h10(g2, v2) * norm_h10(g2, v2)).epsilon(1e-12));
}

TEST_CASE("H^-1 norm") {
  const Grid g = make_grid_1d(0.0, 1.0, 255);
  CHECK(norm_hminus1(g, Field::Zero(255)) == 0.0);
  // eigenfunction: ||sin(pi x)||_{H^-1} = ||sin||_{L2} / pi = 1/(pi sqrt 2)
  CHECK(norm_hminus1(g, sine_mode(g, 1)) ==
        doctest::Approx(1.0 / (M_PI * std::sqrt(2.0))).epsilon(0.01));

  for (int tag = 0; tag < 5; ++tag) {
    const Grid gg = make_grid_1d(0.0, 1.0, 31);
    const Field v = random_field(gg, static_cast<std::uint32_t>(100 + tag));
    const double l2 = norm_lp(gg, v, 2.0);
    const double hm1 = norm_hminus1(gg, v);
    // duality and the grid Poincare inequality
    CHECK(l2 * l2 <= norm_h10(gg, v) * hm1 * (1.0 + 1e-10));
    CHECK(hm1 <= l2 / std::sqrt(sine_eigenvalue(gg, 1)) * (1.0 + 1e-10));
  }
}

TEST_CASE("interpolation inequality check") {
  const Grid g = make_grid_1d(0.0, 1.0, 255);
  CHECK_THROWS_AS(gn_check(g, {Field::Zero(255)}, 0.1, 0.5), std::domain_error);
  CHECK_THROWS_AS(gn_check(g, {Field::Zero(255)}, 0.1, 2.5), std::domain_error);

  const GnResult zero = gn_check(g, {Field::Zero(255)}, 0.1, 2.0);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.pass);

  // stationary sine trajectory on (0,1): lhs -> 5/16, rhs -> 9 pi^2/32
  const int steps = 32;
  std::vector<Field> traj(steps, sine_mode(g, 1));
  const GnResult sine = gn_check(g, traj, 1.0 / steps, 2.0);
  CHECK(sine.q == doctest::Approx(6.0));
  CHECK(sine.lhs == doctest::Approx(5.0 / 16.0).epsilon(1e-3));
  CHECK(sine.rhs == doctest::Approx(9.0 * M_PI * M_PI / 32.0).epsilon(1e-3));
  CHECK(sine.pass);

  const Grid g2 = make_grid_2d(0.0, 1.0, 7, 0.0, 1.0, 7);
  CHECK(gn_check(g2, {Field::Zero(49)}, 0.1, 1.0).q == doctest::Approx(3.0));

  // small random smooth corpus in both dimensions
  for (double lambda : {1.0, 1.5, 2.0}) {
    for (int tr = 0; tr < 25; ++tr) {
      const Grid gg = make_grid_1d(0.0, 1.0, 127);
      std::vector<Field> rt;
      Field v = Field::Zero(gg.size());
      for (int k = 1; k <= 6; ++k)
        v += counter_gaussian(5, static_cast<std::uint32_t>(tr), 0,
                              static_cast<std::uint32_t>(k)) /
             (k * k) * sine_mode(gg, k);
      for (int s = 0; s < 8; ++s) rt.push_back(std::cos(0.4 * s) * v);
      CHECK(gn_check(gg, rt, 0.125, lambda).pass);
    }
  }
}
