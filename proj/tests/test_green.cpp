#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "testing.hpp"
#include "tsdyn/calculus.hpp"
#include "tsdyn/green.hpp"
#include "tsdyn/timescale.hpp"

using tsdyn::ErrorCode;
using tsdyn::GridFunction;
using tsdyn::TimeScale;
using testing::code_of;

namespace {

GridFunction random_rhs(const TimeScale& ts, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(ts.equation_count() * n);
  for (double& x : v) x = dist(rng);
  return GridFunction(ts, n, 0, ts.last() - 2, std::move(v));
}

std::vector<TimeScale> scales() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> gap(0.05, 1.0);
  std::vector<double> p(23, 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) p[i] = p[i - 1] + gap(rng);
  return {TimeScale::uniform(0.0, 1.0, 5), TimeScale::uniform(-1.0, 2.0, 33),
          TimeScale::quantum(2.0, 8), TimeScale::quantum(1.5, 12),
          TimeScale::from_points(std::move(p))};
}

}  // namespace

TEST_CASE("green value examples") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 5);
  CHECK(tsdyn::green_value(ts, 1, 2) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(tsdyn::green_value(ts, 3, 1) == doctest::Approx(0.125).epsilon(1e-15));
  for (std::size_t s = 0; s < ts.last(); ++s) {
    CHECK(tsdyn::green_value(ts, 0, s) == 0.0);
    CHECK(tsdyn::green_value(ts, ts.last(), s) == 0.0);
  }
  CHECK(code_of([&] { tsdyn::green_value(ts, 5, 0); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { tsdyn::green_value(ts, 0, 4); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("phi and e weight") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 5);
  const std::vector<double> A{1.0}, B{3.0};
  const auto p = tsdyn::phi(ts, A, B);
  CHECK(p.value(2, 0) == doctest::Approx(2.0));
  const auto flat = tsdyn::phi(ts, std::vector<double>{4.0}, std::vector<double>{4.0});
  for (std::size_t k = 0; k <= 4; ++k) CHECK(flat(k, 0) == doctest::Approx(4.0));
  for (const auto& s : scales()) {
    const auto d2 = delta_second(tsdyn::phi(s, A, B));
    CHECK(d2.max_abs() < 1e-9);
  }
  CHECK(code_of([&] { tsdyn::phi(ts, A, std::vector<double>{1.0, 2.0}); }) ==
        ErrorCode::DimensionMismatch);

  const auto e = tsdyn::e_weight(ts);
  CHECK(e.value(2, 0) == doctest::Approx(0.25));
  CHECK(e.value(0, 0) == 0.0);
  CHECK(e.value(4, 0) == 0.0);
  const auto q = TimeScale::quantum(2.0, 3);
  CHECK(tsdyn::e_weight(q).value(*q.index_of(0.5), 0) == doctest::Approx(0.25));
}

TEST_CASE("green function positivity, envelope and branch agreement") {
  for (const auto& ts : scales()) {
    const std::size_t N = ts.last();
    const double a = ts.a();
    const double s2 = ts.sigma2_b();
    const auto e = tsdyn::e_weight(ts);
    for (std::size_t s = 0; s < N; ++s) {
      const double ss = ts[s + 1];
      const double cap = (ss - a) * (s2 - ss) / (s2 - a);
      for (std::size_t t = 0; t <= N; ++t) {
        const double g = tsdyn::green_value(ts, t, s);
        if (t == 0 || t == N) {
          CHECK(g == 0.0);
        } else if (ss < s2) {
          CHECK(g > 0.0);
        }
        CHECK(g <= e(t, 0) * (1 + 1e-14));
        CHECK(g <= cap * (1 + 1e-14) + 1e-300);
      }
      // At t = σ(s) both branch formulas must agree.
      const double t = ss;
      const double first = (t - a) * (s2 - ss) / (s2 - a);
      const double second = (ss - a) * (s2 - t) / (s2 - a);
      CHECK(std::abs(first - second) <= 1e-14 * std::max(std::abs(first), 1e-300));
      CHECK(tsdyn::green_value(ts, s + 1, s) == first);
    }
  }
}

TEST_CASE("green apply of the constant right-hand side") {
  for (std::size_t n : {5u, 33u, 129u}) {
    const auto ts = TimeScale::uniform(0.0, 1.0, n);
    const auto h = GridFunction::sample_scalar(ts, 1, [](double) { return 1.0; }).restricted(0, n - 3);
    const auto u = tsdyn::green_apply(ts, h);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = ts[k];
      CHECK(u(k, 0) == doctest::Approx(t * (1.0 - t) / 2.0).epsilon(1e-12));
    }
    CHECK(tsdyn::green_identity_defect(u, h) < 1e-10);
  }
  const auto ts = TimeScale::uniform(0.0, 1.0, 9);
  const auto zero = GridFunction::zeros(ts, 2, 0, 7);
  CHECK(tsdyn::green_apply(ts, zero).max_abs() == 0.0);
}

TEST_CASE("green apply matches the tridiagonal oracle") {
  std::mt19937_64 rng(17);
  for (const auto& ts : scales()) {
    const auto h = random_rhs(ts, 1, rng);
    const auto u = tsdyn::green_apply(ts, h);
    const std::vector<double> p(ts.points().begin(), ts.points().end());
    const std::vector<double> hv(h.values().begin(), h.values().end());
    const auto ref = oracle::thomas_dirichlet(p, hv);
    double scale = 0.0, diff = 0.0;
    for (std::size_t k = 0; k <= ts.last(); ++k) {
      scale = std::max(scale, std::abs(ref[k]));
      diff = std::max(diff, std::abs(u(k, 0) - ref[k]));
    }
    CHECK(diff <= 1e-12 * scale);
    CHECK(u(0, 0) == 0.0);
    CHECK(u(ts.last(), 0) == 0.0);
  }
  const auto ts = TimeScale::uniform(0.0, 1.0, 100);
  const auto h = random_rhs(ts, 1, rng);
  const auto u = tsdyn::green_apply(ts, h);
  const auto ref = oracle::thomas_dirichlet(oracle::linspace(0.0, 1.0, 100),
                                            std::vector<double>(h.values().begin(), h.values().end()));
  for (std::size_t k = 1; k < 99; ++k) CHECK(u(k, 0) == doctest::Approx(ref[k]).epsilon(1e-11));
}

TEST_CASE("green identity and linearity") {
  std::mt19937_64 rng(23);
  for (const auto& ts : scales()) {
    const auto h1 = random_rhs(ts, 3, rng);
    const auto h2 = random_rhs(ts, 3, rng);
    const auto u1 = tsdyn::green_apply(ts, h1);
    CHECK(tsdyn::green_identity_defect(u1, h1) <= 1e-10 * h1.max_abs());
    const auto u2 = tsdyn::green_apply(ts, h2);
    const auto lhs = tsdyn::green_apply(ts, 2.0 * h1 + (-3.0) * h2);
    const auto rhs = 2.0 * u1 + (-3.0) * u2;
    CHECK((lhs - rhs).max_abs() <= 1e-12 * std::max(1.0, rhs.max_abs()));
  }
}

TEST_CASE("parallel green apply is bit-identical to the serial reference") {
  std::mt19937_64 rng(29);
  for (std::size_t n : {17u, 257u, 1025u}) {
    const auto ts = TimeScale::uniform(0.0, 1.0, n);
    const auto h = random_rhs(ts, 2, rng);
    const auto par = tsdyn::green_apply(ts, h);
    const auto ser = tsdyn::green_apply_serial(ts, h);
    REQUIRE(par.values().size() == ser.values().size());
    CHECK(std::memcmp(par.values().data(), ser.values().data(),
                      par.values().size() * sizeof(double)) == 0);
  }
}

TEST_CASE("green apply rejects mismatched right-hand sides") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 9);
  CHECK(code_of([&] { tsdyn::green_apply(ts, GridFunction::zeros(ts, 1, 0, 5)); }) ==
        ErrorCode::SupportMismatch);
  const auto other = TimeScale::uniform(0.0, 2.0, 9);
  CHECK(code_of([&] { tsdyn::green_apply(ts, GridFunction::zeros(other, 1, 0, 7)); }) ==
        ErrorCode::ScaleMismatch);
}
