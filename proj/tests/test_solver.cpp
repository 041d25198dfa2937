#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "testing.hpp"
#include "tsdyn/calculus.hpp"
#include "tsdyn/criteria.hpp"
#include "tsdyn/green.hpp"
#include "tsdyn/problem.hpp"
#include "tsdyn/solver.hpp"

using tsdyn::Band;
using tsdyn::DirichletProblem;
using tsdyn::ErrorCode;
using tsdyn::GridFunction;
using tsdyn::Nonlinearity;
using tsdyn::SolveConfig;
using tsdyn::SolveStatus;
using tsdyn::Strategy;
using tsdyn::TimeScale;
using testing::code_of;

namespace {

// Regular in x: no domain floor on the state variables.
Nonlinearity expr(const char* src, std::size_t arity = 1, std::size_t i = 0) {
  Nonlinearity f(arity, i, tsdyn::parse_expression(src));
  f.set_singular(std::vector<bool>(arity, false));
  return f;
}

DirichletProblem scalar_problem(const TimeScale& ts, const char* src, double A, double B) {
  return DirichletProblem(ts, {expr(src)}, {A}, {B});
}

GridFunction constant(const TimeScale& ts, double v) {
  return GridFunction::sample_scalar(ts, 1, [v](double) { return v; });
}

// -x^ΔΔ = 1 + x/2 with zero data: α = 0 is a lower solution and
// β = t(1-t) an upper solution (-β^ΔΔ = 2 >= 1 + 1/8).
DirichletProblem increasing_problem(const TimeScale& ts) {
  return scalar_problem(ts, "1 + 0.5 * x1", 0.0, 0.0);
}

Band increasing_band(const TimeScale& ts) {
  return {constant(ts, 0.0), GridFunction::sample_scalar(ts, 1, [](double t) { return t * (1.0 - t); })};
}

DirichletProblem singular_problem(const TimeScale& ts) {
  return DirichletProblem::zero_dirichlet(ts, {tsdyn::emden_fowler(1.0, 0.0, {-0.5}, 0)});
}

double max_diff(const GridFunction& u, const GridFunction& v) { return (u - v).max_abs(); }

}  // namespace

TEST_CASE("strategy names") {
  CHECK(tsdyn::parse_strategy("picard") == Strategy::Picard);
  CHECK(tsdyn::parse_strategy("monotone-up") == Strategy::MonotoneUp);
  CHECK(tsdyn::parse_strategy("MONOTONE_DOWN") == Strategy::MonotoneDown);
  CHECK(tsdyn::parse_strategy("Newton_Oracle") == Strategy::NewtonOracle);
  CHECK(tsdyn::parse_strategy("truncated-nest") == Strategy::TruncatedNest);
  CHECK(code_of([] { tsdyn::parse_strategy("gauss"); }) == ErrorCode::ConfigError);
  SolveConfig cfg;
  cfg.damping = 0.0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::ConfigError);
  cfg.damping = 1.0;
  cfg.tol_residual = -1.0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::ConfigError);
}

TEST_CASE("truncation map") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 5);
  const auto alpha = constant(ts, 1.0);
  const auto beta = constant(ts, 2.0);
  CHECK(tsdyn::truncate_d(alpha, beta, 1, std::vector<double>{1.5}) == std::vector<double>{1.5});
  CHECK(tsdyn::truncate_d(alpha, beta, 1, std::vector<double>{0.2}) == std::vector<double>{1.0});
  CHECK(tsdyn::truncate_d(alpha, beta, 1, std::vector<double>{7.0}) == std::vector<double>{2.0});
  for (double x : {-3.0, 1.0, 9.0}) {
    CHECK(tsdyn::truncate_d(alpha, alpha, 2, std::vector<double>{x}) == std::vector<double>{1.0});
  }
  // The band is read at σ(t).
  const auto ramp = GridFunction::sample_scalar(ts, 1, [](double t) { return t; });
  CHECK(tsdyn::truncate_d(ramp, beta, 0, std::vector<double>{0.0})[0] == 0.25);
  CHECK(code_of([&] { tsdyn::truncate_d(beta, alpha, 0, std::vector<double>{1.5}); }) ==
        ErrorCode::BracketViolation);
}

TEST_CASE("modified right-hand side") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 5);
  const auto alpha = constant(ts, 1.0);
  const auto beta = constant(ts, 2.0);
  const auto f = expr("x1^2");
  CHECK(tsdyn::modified_rhs(f, alpha, beta, 1, std::vector<double>{1.5}) == 2.25);
  const auto zero = expr("0 * x1");
  CHECK(tsdyn::modified_rhs(zero, alpha, beta, 1, std::vector<double>{0.0}) == doctest::Approx(0.5));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-100.0, 100.0);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x{dist(rng)};
    const double d = tsdyn::truncate_d(alpha, beta, 2, x)[0];
    const double gap = tsdyn::modified_rhs(f, alpha, beta, 2, x) - d * d;
    CHECK(std::abs(gap) < 1.0);
  }
}

TEST_CASE("operator N") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 17);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  std::vector<double> v(ts.size());
  for (double& x : v) x = dist(rng);
  const GridFunction u(ts, 1, 0, ts.last(), v);

  const auto p0 = scalar_problem(ts, "0 * x1", 1.0, 3.0);
  const auto Nu = tsdyn::apply_N(p0, std::nullopt, u);
  CHECK(max_diff(Nu, tsdyn::phi(ts, std::vector<double>{1.0}, std::vector<double>{3.0})) < 1e-15);
  CHECK(Nu(0, 0) == 1.0);
  CHECK(Nu(ts.last(), 0) == 3.0);

  const auto p1 = scalar_problem(ts, "1 + 0 * x1", 0.0, 0.0);
  const Band wide{constant(ts, -10.0), constant(ts, 10.0)};
  const auto N1 = tsdyn::apply_N(p1, wide, u);
  for (std::size_t k = 0; k <= ts.last(); ++k) {
    const double t = ts[k];
    CHECK(N1(k, 0) == doctest::Approx(t * (1.0 - t) / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("Newton solution is a fixed point of N") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 65);
  const auto p = singular_problem(ts);
  const auto bounds = tsdyn::construct_bounds(p, tsdyn::uniform_family(0.0, 1.0));
  SolveConfig cfg;
  cfg.strategy = Strategy::NewtonOracle;
  const auto r = tsdyn::solve(p, bounds.band(), cfg);
  REQUIRE(r.status == SolveStatus::Converged);
  const auto Nu = tsdyn::apply_N(p, bounds.band(), r.solution);
  CHECK(max_diff(Nu, r.solution) <= 1e-10 * r.solution.max_abs());
}

TEST_CASE("solve: affine and quadratic exact solutions") {
  const auto ts5 = TimeScale::uniform(0.0, 1.0, 5);
  const auto p0 = scalar_problem(ts5, "0 * x1", 1.0, 3.0);
  const auto r0 = tsdyn::solve(p0, std::nullopt, SolveConfig{});
  CHECK(r0.status == SolveStatus::Converged);
  CHECK(r0.iterations == 1);
  CHECK(r0.solution.value(2, 0) == doctest::Approx(2.0).epsilon(1e-15));

  const auto ts = TimeScale::uniform(0.0, 1.0, 65);
  const auto p1 = scalar_problem(ts, "1 + 0 * x1", 0.0, 0.0);
  for (Strategy s : {Strategy::Picard, Strategy::NewtonOracle}) {
    SolveConfig cfg;
    cfg.strategy = s;
    const auto r = tsdyn::solve(p1, std::nullopt, cfg);
    CHECK(r.status == SolveStatus::Converged);
    CHECK(r.solution.value(32, 0) == doctest::Approx(0.125).epsilon(1e-12));
    for (std::size_t k = 0; k <= ts.last(); ++k) {
      const double t = ts[k];
      CHECK(std::abs(r.solution(k, 0) - t * (1.0 - t) / 2.0) <= 1e-12);
    }
  }
}

TEST_CASE("solve: singular Emden-Fowler problem, Picard against Newton") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 65);
  const auto p = singular_problem(ts);
  const auto bounds = tsdyn::construct_bounds(p, tsdyn::uniform_family(0.0, 1.0));
  const Band band = bounds.band();

  SolveConfig picard;
  const auto rp = tsdyn::solve(p, band, picard);
  SolveConfig newton;
  newton.strategy = Strategy::NewtonOracle;
  const auto rn = tsdyn::solve(p, band, newton);
  REQUIRE(rp.status == SolveStatus::Converged);
  REQUIRE(rn.status == SolveStatus::Converged);
  CHECK(rp.bracket_respected);
  CHECK(rn.bracket_respected);
  CHECK(max_diff(rp.solution, rn.solution) <= 1e-8);
  CHECK(max_diff(rp.solution, rn.solution) <= 100 * picard.tol_residual);
  CHECK(rp.final_residual <= picard.tol_residual);
  CHECK(tsdyn::residual(p, rp.solution) == doctest::Approx(rp.final_residual));
  CHECK(rp.solution(0, 0) == 0.0);
  CHECK(rp.solution(ts.last(), 0) == 0.0);
}

TEST_CASE("solve: truncated nest") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 65);
  const auto p = singular_problem(ts);
  const auto bounds = tsdyn::construct_bounds(p, tsdyn::uniform_family(0.0, 1.0));
  SolveConfig cfg;
  cfg.strategy = Strategy::TruncatedNest;
  const auto r = tsdyn::solve(p, bounds.band(), cfg);
  CHECK(r.status == SolveStatus::Converged);
  CHECK(r.bracket_respected);
  REQUIRE(r.nest_trail.size() >= 2);
  CHECK(r.nest_trail.back() <= r.nest_trail.front());

  SolveConfig newton;
  newton.strategy = Strategy::NewtonOracle;
  const auto rn = tsdyn::solve(p, bounds.band(), newton);
  CHECK(max_diff(r.solution, rn.solution) <= 1e-8);

  CHECK(code_of([&] { tsdyn::solve(p, std::nullopt, cfg); }) == ErrorCode::BracketViolation);
}

TEST_CASE("solve: monotone iterations are ordered") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 33);
  const auto p = increasing_problem(ts);
  const Band band = increasing_band(ts);
  REQUIRE(tsdyn::verify_lower(p, band.alpha).pass);
  REQUIRE(tsdyn::verify_upper(p, band.beta).pass);

  for (Strategy s : {Strategy::MonotoneUp, Strategy::MonotoneDown}) {
    SolveConfig cfg;
    cfg.strategy = s;
    std::optional<GridFunction> prev;
    bool ordered = true;
    cfg.observer = [&](std::size_t, const GridFunction& u) {
      if (prev) {
        for (std::size_t k = 0; k <= ts.last(); ++k) {
          const double step = u(k, 0) - (*prev)(k, 0);
          const double tol = 1e-13 * std::max(1.0, std::abs(u(k, 0)));
          if (s == Strategy::MonotoneUp ? step < -tol : step > tol) ordered = false;
        }
      }
      prev = u;
    };
    const auto r = tsdyn::solve(p, band, cfg);
    CHECK(r.status == SolveStatus::Converged);
    CHECK(r.monotone);
    CHECK(ordered);
    CHECK(r.bracket_respected);
  }
}

TEST_CASE("N is order preserving and keeps iterates in the band") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 33);
  const auto p = increasing_problem(ts);
  const Band band = increasing_band(ts);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> in(0.0, 1.0);
  std::uniform_real_distribution<double> wild(-3.0, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> lo(ts.size()), hi(ts.size()), any(ts.size());
    for (std::size_t k = 0; k <= ts.last(); ++k) {
      const double span = band.beta(k, 0) - band.alpha(k, 0);
      const double x = in(rng), y = in(rng);
      lo[k] = band.alpha(k, 0) + std::min(x, y) * span;
      hi[k] = band.alpha(k, 0) + std::max(x, y) * span;
      any[k] = wild(rng);
    }
    const auto Nlo = tsdyn::apply_N(p, band, GridFunction(ts, 1, 0, ts.last(), lo));
    const auto Nhi = tsdyn::apply_N(p, band, GridFunction(ts, 1, 0, ts.last(), hi));
    for (std::size_t k = 0; k <= ts.last(); ++k) CHECK(Nlo(k, 0) <= Nhi(k, 0) + 1e-15);
    const auto Nany = tsdyn::apply_N(p, band, GridFunction(ts, 1, 0, ts.last(), any));
    CHECK(tsdyn::within_band(band, Nany));
  }
}

TEST_CASE("solve: failure statuses") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 33);

  SolveConfig short_run;
  short_run.max_iters = 1;
  const auto p = singular_problem(ts);
  const auto bounds = tsdyn::construct_bounds(p, tsdyn::uniform_family(0.0, 1.0));
  const auto r1 = tsdyn::solve(p, bounds.band(), short_run);
  CHECK(r1.status == SolveStatus::MaxIters);
  CHECK(r1.iterations == 1);

  // λ = 50 lies above the first eigenvalue (about π²), so the iteration blows up.
  const auto resonant = scalar_problem(ts, "50 * x1", 1.0, 1.0);
  const auto r2 = tsdyn::solve(resonant, std::nullopt, SolveConfig{});
  CHECK(r2.status == SolveStatus::Diverged);
  CHECK(r2.final_damping < 1.0);

  const auto singular_t = scalar_problem(ts, "t^-1 * x1", 1.0, 1.0);
  const auto r3 = tsdyn::solve(singular_t, std::nullopt, SolveConfig{});
  CHECK(r3.status == SolveStatus::DomainError);

  SolveConfig mono;
  mono.strategy = Strategy::MonotoneUp;
  CHECK(code_of([&] { tsdyn::solve(p, std::nullopt, mono); }) == ErrorCode::BracketViolation);
  const Band crossed{bounds.beta.value(), bounds.alpha};
  CHECK(code_of([&] { tsdyn::solve(p, crossed, SolveConfig{}); }) == ErrorCode::BracketViolation);
}

TEST_CASE("parallel right-hand side sampling matches the serial reference") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 513);
  const DirichletProblem p(ts, {expr("x1^2 + t * x2", 2, 0), expr("x1 - x2^3", 2, 1)}, {0.0, 1.0},
                           {1.0, 0.0});
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<double> v(ts.size() * 2);
  for (double& x : v) x = dist(rng);
  const GridFunction u(ts, 2, 0, ts.last(), v);
  const auto par = tsdyn::rhs_samples(p, u);
  const auto ser = tsdyn::rhs_samples_serial(p, u);
  REQUIRE(par.values().size() == ser.values().size());
  CHECK(std::memcmp(par.values().data(), ser.values().data(), par.values().size() * sizeof(double)) == 0);
}

TEST_CASE("residual of the exact discrete solution of a random linear problem") {
  // -u^ΔΔ = g(t) has the tridiagonal oracle as its exact discrete solution.
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> gap(0.02, 0.2);
  std::vector<double> p(40, 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) p[i] = p[i - 1] + gap(rng);
  const auto ts = TimeScale::from_points(p);
  std::vector<double> h(ts.equation_count());
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = ts[k] * ts[k];
  const auto ref = oracle::thomas_dirichlet(p, h);
  const auto prob = scalar_problem(ts, "t^2 + 0 * x1", 0.0, 0.0);
  const GridFunction u(ts, 1, 0, ts.last(), ref);
  CHECK(tsdyn::residual(prob, u) < 1e-9);
  SolveConfig cfg;
  const auto r = tsdyn::solve(prob, std::nullopt, cfg);
  CHECK(r.status == SolveStatus::Converged);
  CHECK(max_diff(r.solution, u) <= 1e-12 * std::max(1.0, u.max_abs()));
}
