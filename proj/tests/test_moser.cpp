#include <doctest.h>

#include <cmath>

#include "spme/moser.hpp"

using namespace spme;

TEST_CASE("reference ladder d=1, m~=1, mu=inf, alpha=2") {
  const MoserLadder lad = ladder(1, Rational(1), std::nullopt, Rational(2));
  CHECK(lad.mu_prime == Rational(1));
  CHECK(lad.gamma == Rational(3));
  CHECK(lad.gamma_bar == Rational(3));
  CHECK(lad.delta == Rational(3, 2));
  CHECK(lad.p(1) == Rational(4));
  CHECK(lad.p(2) == Rational(13));
  CHECK(lad.p(3) == Rational(40));
  CHECK(lad.n0 == 1);
  CHECK(lad.kappa == Rational(8));
  CHECK(lad.theta_tilde == Rational(2, 3));
  CHECK(smoothing_exponent(lad) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("ladder d=2 and admissibility") {
  const MoserLadder lad = ladder(2, Rational(1), std::nullopt, Rational(2));
  CHECK(lad.gamma == Rational(2));
  CHECK(lad.gamma_bar == Rational(2));
  CHECK(lad.delta == Rational(2));
  CHECK(lad.p(1) == Rational(3));
  CHECK(lad.p(2) == Rational(7));
  CHECK(lad.p(3) == Rational(15));
  CHECK(lad.theta_tilde == Rational(1));

  CHECK_THROWS_AS(ladder(3, Rational(1), Rational(2), Rational(2)), std::domain_error);
  CHECK_THROWS_AS(ladder(1, Rational(-1), std::nullopt, Rational(2)), std::domain_error);
}

TEST_CASE("exact ladder identities") {
  const MoserLadder lad = ladder(1, Rational(1), Rational(4), Rational(2));
  // p_{n+1} = m~ + gbar p_n, exact in rational arithmetic
  for (int n = 0; n < 20; ++n)
    CHECK(lad.p(n + 1) == lad.m_tilde + lad.gamma_bar * lad.p(n));
  // p_n / gbar^n strictly increasing with limit delta
  Rational prev(0);
  Rational pow_g(1);
  for (int n = 0; n <= 60; ++n) {
    const Rational ratio = lad.p(n) / pow_g;
    CHECK(ratio > prev);
    CHECK(ratio < lad.delta);
    prev = ratio;
    pow_g *= lad.gamma_bar;
  }
}

TEST_CASE("alpha linearity of the smoothing exponent") {
  const MoserLadder a2 = ladder(1, 1.0, std::numeric_limits<double>::infinity(), 2.0);
  const MoserLadder a4 = ladder(1, 1.0, std::numeric_limits<double>::infinity(), 4.0);
  CHECK(a4.theta_tilde == 2 * a2.theta_tilde);
}

TEST_CASE("iteration constants converge") {
  const MoserLadder lad = ladder(1, 1.0, std::numeric_limits<double>::infinity(), 2.0);
  const IterationConstants ic = iteration_constants(lad, 10.0, 40);
  REQUIRE(ic.n.front() == 1);
  REQUIRE(ic.n.back() == 40);
  const double prod20 = ic.partial_products[19];
  const double prod40 = ic.partial_products[39];
  CHECK(std::abs(prod40 - prod20) / prod20 < 1e-6);
  const double sum20 = ic.partial_sums[19];
  const double sum40 = ic.partial_sums[39];
  CHECK(sum40 - sum20 < 1e-8);
  CHECK(sum40 >= sum20);

  // N_free = 1 kills the N^{1/gbar^n} factor
  const IterationConstants unit = iteration_constants(lad, 1.0, 5);
  const double eta1 = static_cast<double>(lad.eta(1));
  const double p1 = static_cast<double>(lad.p(1));
  const double expect = std::pow(1.5 * 3.0 / 2.0, eta1) / (1.0 - eta1) *
                        std::pow(std::pow(p1, 8.0), eta1);
  CHECK(unit.c_n[0] == doctest::Approx(expect).epsilon(1e-12));

  CHECK_THROWS_AS(iteration_constants(lad, -1.0, 10), std::domain_error);
}
