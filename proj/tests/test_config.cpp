#include <doctest.h>

#include "spme/config.hpp"
#include "spme/runio.hpp"

using namespace spme;

namespace {

const char* kFixture = R"(# porous medium benchmark
[domain]
d = 1
a = 0.0
b = 1.0
T = 0.5

[phi]
kind = "powerlaw"
m = 2.0

[coefficients]
sigma = 0.25
b1_kind = "poly"
b1_params = [0.0, 1.0, -1.0]
c_kind = "const"
c_params = [-0.1]
f_kind = "const"
f_params = [0.05]

[noise]
K = 2
seed = 42
nu1_kind = "const"
nu1_params = [0.2]
g1_kind = "sine"
g1_params = [0.1, 1.0, 0.0]

[data]
xi_kind = "fn"
xi_fn_kind = "sine"
xi_fn_params = [1.0, 1.0, 0.0]

[experiment]
epsilon = 0.01
mu = "inf"
alpha = 2.0
dt = 0.005
n = 31
paths = 16
eps_list = [0.1, 0.01, 0.001]
rho_list = [0.02, 0.05, 0.1]
)";

}  // namespace

TEST_CASE("toml subset parser") {
  const ConfigTable t = parse_toml("x = 1\n[s]\ny = \"hi\"\nz = [1, 2.5, inf]\n");
  CHECK(t.at("x").number("x") == 1.0);
  CHECK(t.at("s.y").str == "hi");
  REQUIRE(t.at("s.z").nums.size() == 3);
  CHECK(t.at("s.z").nums[1] == 2.5);
  CHECK(std::isinf(t.at("s.z").nums[2]));

  CHECK_THROWS_AS(parse_toml("bad line\n"), ParseError);
  CHECK_THROWS_AS(parse_toml("[unclosed\n"), ParseError);
  CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ParseError);
  CHECK_THROWS_AS(parse_toml("a = \"unterminated\n"), ParseError);
  try {
    parse_toml("ok = 1\nbroken\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("config mapping") {
  const ExperimentConfig cfg = parse_config(kFixture);
  CHECK(cfg.spec.dim == 1);
  CHECK(cfg.spec.horizon == 0.5);
  CHECK(cfg.spec.phi.kind == PhiSpec::Kind::PowerLaw);
  CHECK(cfg.spec.phi.m == 2.0);
  CHECK(cfg.spec.coeffs.sigma == 0.25);
  CHECK(cfg.spec.coeffs.b[0].kind == "poly");
  CHECK(cfg.spec.coeffs.k_noise == 2);
  REQUIRE(cfg.spec.coeffs.nu.size() == 2);
  CHECK(cfg.spec.coeffs.nu[0].params[0] == 0.2);
  CHECK(cfg.spec.coeffs.nu[1].kind == "zero");  // unspecified channels default to 0
  CHECK(cfg.spec.epsilon == 0.01);
  CHECK(std::isinf(cfg.spec.mu));
  CHECK(cfg.solver.dt == 0.005);
  CHECK(cfg.solver.n_interior == 31);
  CHECK(cfg.solver.seed == 42);
  CHECK(cfg.paths == 16);
  REQUIRE(cfg.eps_list.size() == 3);
  CHECK(cfg.rho_list[2] == 0.1);
  CHECK(cfg.raw == kFixture);

  CHECK_THROWS(parse_config("[domain]\nd = 5\n"));
  CHECK_THROWS(parse_config("[phi]\nkind = \"weird\"\n"));
}

TEST_CASE("fixed float formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-17, 123456.789, -2.5e300}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("fnv hash is stable") {
  CHECK(fnv1a_hash("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a_hash("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a_hash("abc") != fnv1a_hash("acb"));
}
