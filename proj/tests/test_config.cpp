#include <doctest.h>

#include <string>

#include "testing.hpp"
#include "tsdyn/config.hpp"
#include "tsdyn/error.hpp"

using tsdyn::Error;
using tsdyn::ErrorCode;
using tsdyn::parse_config;
using testing::code_of;

namespace {

std::string config_error(const char* text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

constexpr const char* kEmden = R"(# singular Emden-Fowler problem
[scale]
kind = "uniform"
a = 0
end = 1
n = 65

[f.1]
family = "emden_fowler"
gamma = [-0.5]

[problem]
mode = zero_dirichlet

[solver]
strategy = "newton-oracle"
tol_residual = 1e-9
)";

}  // namespace

TEST_CASE("full config") {
  const auto cfg = parse_config(kEmden);
  CHECK(cfg.scale.kind == tsdyn::ScaleKind::Uniform);
  CHECK(cfg.scale.n == 65);
  REQUIRE(cfg.f.size() == 1);
  CHECK(cfg.f[0].emden_fowler);
  CHECK(cfg.f[0].gamma == std::vector<double>{-0.5});
  CHECK(cfg.mode == tsdyn::ProblemMode::ZeroDirichlet);
  CHECK(cfg.A == std::vector<double>{0.0});
  CHECK(cfg.solver.strategy == tsdyn::Strategy::NewtonOracle);
  CHECK(cfg.solver.tol_residual == 1e-9);
  CHECK(cfg.bounds == tsdyn::BoundsMethod::Auto);
  CHECK(cfg.seed == tsdyn::kDefaultSeed);
  CHECK(cfg.resolved.at("scale.n") == "65");
  CHECK(cfg.resolved.at("solver.strategy") == "NEWTON_ORACLE");
  CHECK(cfg.resolved.at("problem.mode") == "zero_dirichlet");

  const auto p = tsdyn::build_problem(cfg);
  CHECK(p.scale().size() == 65);
  CHECK(p.f(0).exponents()->boundary);
  CHECK(tsdyn::build_family(cfg).size() == 6);
}

TEST_CASE("flat dotted keys and expressions") {
  const auto cfg = parse_config(R"(
scale.kind = quantum
scale.q = 3
scale.K = 6
f.1.expr = "t^-1 * x1^-0.5 * x2^-0.25"
f.1.lambda = [-0.6, -0.3]
f.1.mu = [0.5, -0.2]
f.2.expr = "x1^-0.25 * x2^-0.5"
f.2.lambda = [-0.3, -0.5]
f.2.mu = [-0.3, -0.5]
f.2.singular = [1, true]
f.2.floor = 1e-9
criteria.family = [4, 8, 16, 32]
)");
  const auto ts = tsdyn::build_scale(cfg);
  CHECK(ts.kind() == tsdyn::ScaleKind::Quantum);
  CHECK(ts.size() == 8);
  const auto p = tsdyn::build_problem(cfg);
  CHECK(p.dims() == 2);
  CHECK(p.f(0).exponent_shape_ok());
  CHECK_FALSE(p.f(0).exponents()->boundary);
  CHECK(p.f(1).exponents()->boundary);
  CHECK(p.f(1).domain_floor() == 1e-9);
  const auto fam = tsdyn::build_family(cfg);
  REQUIRE(fam.size() == 4);
  CHECK(fam.back().size() == 34);
}

TEST_CASE("explicit scales") {
  const auto cfg = parse_config("scale.kind = explicit\nscale.points = [0, 0.1, 0.5, 0.7, 1]\nf.1.expr = \"1\"\n");
  CHECK(tsdyn::build_scale(cfg).size() == 5);
  CHECK(code_of([&] { tsdyn::build_family(cfg); }) == ErrorCode::ConfigError);
  CHECK(config_error("scale.kind = explicit\nf.1.expr = \"1\"\n").find("scale.points") != std::string::npos);
  const auto bad = parse_config("scale.kind = explicit\nscale.points = [0, 1, 0.5, 2]\nf.1.expr = \"1\"\n");
  CHECK(code_of([&] { tsdyn::build_scale(bad); }) == ErrorCode::ConfigError);
}

TEST_CASE("errors name the key and line") {
  const auto unknown = config_error("scale.n = 9\nsolver.tolerance = 1\n");
  CHECK(unknown.find("solver.tolerance") != std::string::npos);
  CHECK(unknown.find("line 2") != std::string::npos);

  const auto dup = config_error("scale.n = 9\n[scale]\nn = 10\n");
  CHECK(dup.find("scale.n") != std::string::npos);
  CHECK(dup.find("line 3") != std::string::npos);

  const auto syntax = config_error("[f.1]\nexpr = \"x1 +\"\n");
  CHECK(syntax.find("f.1.expr") != std::string::npos);
  CHECK(syntax.find("line 2") != std::string::npos);
  CHECK(syntax.find("position 5") != std::string::npos);

  CHECK(config_error("scale.n = nine\n").find("scale.n") != std::string::npos);
  CHECK(config_error("f.1.expr = \"x3\"\n").find("f.1.expr") != std::string::npos);
  CHECK(config_error("f.1.expr = \"x1\"\nsolver.strategy = bisect\n").find("solver.strategy") !=
        std::string::npos);
  CHECK(config_error("f.1.expr = \"x1\"\nsolver.damping = 2\n").find("damping") != std::string::npos);
  CHECK(config_error("f.1.expr = \"x1\"\nbc.A = [1, 2]\n").find("bc.A") != std::string::npos);
  CHECK(config_error("f.1.expr = \"x1\"\nf.1.lambda = [-1]\n").find("mu") != std::string::npos);
  CHECK(config_error("f.1.expr = \"x1\"\nf.1.family = emden_fowler\nf.1.gamma = [1]\n")
            .find("f.1") != std::string::npos);
  CHECK(config_error("f.1.expr = \"x1\"\nbounds.method = constants\n").find("bounds.m") !=
        std::string::npos);
  CHECK(config_error("[scale\nn = 3\n").find("line 1") != std::string::npos);
  CHECK(config_error("f.1.expr = \"x1\"\nf.3.expr = \"x1\"\n").find("f.") != std::string::npos);
  CHECK(code_of([] { tsdyn::load_config("/nonexistent/tsdyn.toml"); }) == ErrorCode::ConfigError);
}

TEST_CASE("problem-level errors become config errors") {
  const auto cfg = parse_config("problem.mode = zero_dirichlet\nbc.A = [1]\nf.1.expr = \"1\"\n");
  CHECK(code_of([&] { tsdyn::build_problem(cfg); }) == ErrorCode::ConfigError);
  const auto empty = parse_config("quadrature.expr = \"t\"\n");
  CHECK(empty.f.empty());
  CHECK(code_of([&] { tsdyn::build_problem(empty); }) == ErrorCode::ConfigError);
}

TEST_CASE("comments and whitespace") {
  const auto cfg = parse_config("  # leading comment\n\nscale.n = 17   # trailing\nf.1.expr = \"x1\" # f\n");
  CHECK(cfg.scale.n == 17);
  CHECK(cfg.f[0].expr == "x1");
  // A '#' inside quotes is part of the value.
  CHECK(config_error("f.1.expr = \"x1 # 2\"\n").find("position 4") != std::string::npos);
}
