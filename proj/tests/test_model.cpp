#include <doctest.h>

#include <cmath>

#include "spme/model.hpp"

using namespace spme;

namespace {

ProblemSpec pme_spec(double m, double eps) {
  ProblemSpec spec;
  spec.dim = 1;
  spec.phi.kind = PhiSpec::Kind::PowerLaw;
  spec.phi.m = m;
  spec.epsilon = eps;
  spec.xi.fn.kind = "sine";
  spec.xi.fn.params = {1.0, 1.0, 0.0};
  return spec;
}

}  // namespace

TEST_CASE("power-law Phi") {
  PhiSpec phi;
  phi.m = 2.0;
  CHECK(phi_eval(phi, 0.0) == 0.0);
  CHECK(phi_eval(phi, 1.5) == doctest::Approx(2.25));
  CHECK(phi_eval(phi, -1.5) == doctest::Approx(-2.25));
  CHECK(phi_prime(phi, -3.0) == doctest::Approx(6.0));
}

TEST_CASE("phi_truncate caps the derivative") {
  PhiSpec phi;
  phi.m = 2.0;
  CHECK_THROWS_AS(phi_truncate(phi, 0.0), std::domain_error);
  const PhiSpec phi2 = phi_truncate(phi, 2.0);
  // Phi_2(r) = r^2 sign r for |r| <= 1, sign(r)(2|r| - 1) beyond
  CHECK(phi_eval(phi2, 0.0) == 0.0);
  CHECK(phi_eval(phi2, 0.5) == doctest::Approx(0.25));
  CHECK(phi_eval(phi2, 2.0) == doctest::Approx(3.0));
  CHECK(phi_eval(phi2, -2.0) == doctest::Approx(-3.0));
  CHECK(phi_prime(phi2, 5.0) == doctest::Approx(2.0));
  // Lipschitz constant <= n by divided differences
  for (double r = -3.0; r < 3.0; r += 0.17) {
    const double dd = (phi_eval(phi2, r + 0.05) - phi_eval(phi2, r)) / 0.05;
    CHECK(dd <= 2.0 + 1e-9);
    CHECK(dd >= -1e-12);
  }
  // once n exceeds sup Phi' on a bounded set the truncation is the identity
  const PhiSpec phi_big = phi_truncate(phi, 100.0);
  CHECK(phi_eval(phi_big, 3.0) == doctest::Approx(phi_eval(phi, 3.0)));
}

TEST_CASE("tabulated Phi is monotone piecewise linear") {
  PhiSpec phi;
  phi.kind = PhiSpec::Kind::Tabulated;
  phi.m = 2.0;
  phi.r_samples = {-2.0, -1.0, 0.0, 1.0, 2.0};
  phi.phi_samples = {-4.0, -1.0, 0.0, 1.0, 4.0};
  CHECK(phi_eval(phi, 0.0) == 0.0);
  CHECK(phi_eval(phi, 0.5) == doctest::Approx(0.5));
  CHECK(phi_eval(phi, 1.5) == doctest::Approx(2.5));
  CHECK(phi_prime(phi, 1.5) == doctest::Approx(3.0));
  const PhiSpec trunc = phi_truncate(phi, 2.0);
  CHECK(phi_eval(trunc, 0.0) == 0.0);
  CHECK(phi_eval(trunc, 2.0) == doctest::Approx(3.0));  // last slope capped at 2
}

TEST_CASE("Stratonovich to Ito bookkeeping") {
  ProblemSpec spec = pme_spec(2.0, 0.0);
  CHECK(ito_correction(spec) == 0.0);
  spec.coeffs.sigma = 1.0;
  const ProblemSpec ito = stratonovich_to_ito(spec);
  CHECK(ito_correction(ito) == doctest::Approx(0.5));
  const ProblemSpec twice = stratonovich_to_ito(ito);
  CHECK(ito_correction(twice) == doctest::Approx(0.5));

  ProblemSpec no_transport = pme_spec(2.0, 0.0);
  const ProblemSpec conv = stratonovich_to_ito(no_transport);
  CHECK(ito_correction(conv) == 0.0);
}

TEST_CASE("nondegenerate bundle coefficients") {
  ProblemSpec spec = pme_spec(2.0, 0.1);
  CHECK_THROWS_AS(as_nondegenerate(pme_spec(2.0, 0.0)), ValidationError);

  const NondegenerateBundle b = as_nondegenerate(spec);
  CHECK(b.theta == doctest::Approx(0.1));
  CHECK(b.c_bar == doctest::Approx(2.0));
  CHECK(b.m_tilde == doctest::Approx(1.0));
  CHECK(b.a(1.5) == doctest::Approx(2.0 * 1.5 + 0.1));
  CHECK(b.a(0.0) == doctest::Approx(0.1));  // eps + sigma^2/2 with sigma = 0
  CHECK(b.g_transport(0, 0, 2.0) == 0.0);

  // F = (c - div b) r + f for b = x(1 - x)
  ProblemSpec drift = pme_spec(2.0, 0.1);
  drift.coeffs.b[0].kind = "poly";
  drift.coeffs.b[0].params = {0.0, 1.0, -1.0};
  const NondegenerateBundle db = as_nondegenerate(drift);
  const std::array<double, 2> x{0.3, 0.0};
  CHECK(db.drift_zero_order(0.0, x, 2.0) == doctest::Approx(-(1.0 - 2.0 * 0.3) * 2.0));
  CHECK(db.drift_flux(0, 0.0, x, 2.0) == doctest::Approx(0.3 * 0.7 * 2.0));

  // sigma enters a(r) only after the Ito conversion
  ProblemSpec st = pme_spec(2.0, 0.1);
  st.coeffs.sigma = 0.5;
  const NondegenerateBundle sb = as_nondegenerate(st);
  CHECK(sb.a(0.0) == doctest::Approx(0.1 + 0.125));
}

TEST_CASE("assumption validation") {
  ProblemSpec good = pme_spec(2.0, 0.01);
  good.coeffs.sigma = 0.5;
  const AssumptionReport rep = validate_assumptions(good, 256);
  CHECK(rep.pass());
  for (const auto& c : rep.conditions) {
    if (c.id == "ellipticity") CHECK(c.margin >= -1e-9);
  }

  // decreasing Phi must fail with a concrete witness
  ProblemSpec bad = pme_spec(2.0, 0.01);
  bad.phi.kind = PhiSpec::Kind::Tabulated;
  bad.phi.r_samples = {-1.0, 0.0, 1.0};
  bad.phi.phi_samples = {1.0, 0.0, -1.0};
  const AssumptionReport brep = validate_assumptions(bad, 64);
  CHECK_FALSE(brep.pass());
  REQUIRE(brep.first_failure() != nullptr);
  CHECK(brep.first_failure()->id == "phi.monotone");
  CHECK(brep.first_failure()->margin < 0.0);

  // mu on the wrong side of Gamma_d
  ProblemSpec mu_bad = pme_spec(2.0, 0.01);
  mu_bad.dim = 2;
  mu_bad.mu = 2.0;  // needs mu > (d+2)/2 = 2
  const AssumptionReport mrep = validate_assumptions(mu_bad, 64);
  CHECK_FALSE(mrep.pass());
  CHECK(mrep.first_failure()->id == "mu.admissible");

  // drift not vanishing on the boundary
  ProblemSpec b_bad = pme_spec(2.0, 0.01);
  b_bad.coeffs.b[0].kind = "const";
  b_bad.coeffs.b[0].params = {1.0};
  const AssumptionReport bb = validate_assumptions(b_bad, 64);
  CHECK_FALSE(bb.pass());
  CHECK(bb.first_failure()->id == "b.boundary");

  CHECK_THROWS(validate_assumptions(good, 0));
}
