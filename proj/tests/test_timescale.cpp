#include <doctest.h>

#include <cmath>

#include "tsdyn/error.hpp"
#include "tsdyn/timescale.hpp"
#include "testing.hpp"

using tsdyn::Error;
using tsdyn::ErrorCode;
using tsdyn::TimeScale;

using testing::code_of;

TEST_CASE("uniform scale boundary points") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 5);
  CHECK(ts.last() == 4);
  CHECK(ts.a() == 0.0);
  CHECK(ts.b() == doctest::Approx(0.5));
  CHECK(ts.sigma_b() == doctest::Approx(0.75));
  CHECK(ts.sigma2_b() == 1.0);
  CHECK(ts.equation_count() == 3);
  CHECK(ts.graininess(0) == doctest::Approx(0.25));
  CHECK(ts.graininess(4) == 0.0);
  CHECK(ts.sigma(4) == 4);
  CHECK(ts.rho(0) == 0);
  CHECK(ts.sigma(1) == 2);
  CHECK(ts.rho(2) == 1);
}

TEST_CASE("quantum scale points") {
  const auto ts = TimeScale::quantum(2.0, 4);
  REQUIRE(ts.size() == 6);
  CHECK(ts[0] == 0.0);
  CHECK(ts[1] == 1.0 / 16.0);
  CHECK(ts[5] == 1.0);
  CHECK(ts.sigma2_b() == 1.0);
  CHECK(ts.sigma_b() == 0.5);
  CHECK(ts.b() == 0.25);
  CHECK(ts.graininess(1) == 1.0 / 16.0);
  CHECK(ts.graininess(4) == 0.5);
}

TEST_CASE("construction errors") {
  CHECK(code_of([] { TimeScale::from_points({0.0, 1.0, 2.0}); }) == ErrorCode::TooFewPoints);
  CHECK(code_of([] { TimeScale::from_points({0.0, 2.0, 1.0, 3.0}); }) ==
        ErrorCode::NonMonotonePoints);
  CHECK(code_of([] { TimeScale::from_points({0.0, 1.0, 1.0, 3.0}); }) ==
        ErrorCode::NonMonotonePoints);
  CHECK(code_of([] { TimeScale::quantum(1.0, 5); }) == ErrorCode::InvalidBase);
  CHECK(code_of([] { TimeScale::quantum(0.5, 5); }) == ErrorCode::InvalidBase);
  CHECK(code_of([] { TimeScale::uniform(1.0, 1.0, 5); }) == ErrorCode::DegenerateInterval);
  const auto ts = TimeScale::uniform(0.0, 1.0, 5);
  CHECK(code_of([&] { (void)ts.point(5); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("error where carries the offending index") {
  try {
    TimeScale::from_points({0.0, 1.0, 0.5, 2.0});
    FAIL("no throw");
  } catch (const Error& e) {
    REQUIRE(e.where().has_value());
    CHECK(*e.where() == 2);
  }
}

TEST_CASE("index_of and subrange") {
  const auto ts = TimeScale::uniform(0.0, 1.0, 9);
  CHECK(ts.index_of(0.5) == std::optional<std::size_t>(4));
  CHECK_FALSE(ts.index_of(0.51).has_value());
  const auto sub = ts.subrange(2, 6);
  CHECK(sub.size() == 5);
  CHECK(sub.a() == ts[2]);
  CHECK(sub.sigma2_b() == ts[6]);
  CHECK(sub.kind() == tsdyn::ScaleKind::Explicit);
}

TEST_CASE("copies share points and compare equal") {
  const auto ts = TimeScale::uniform(0.0, 2.0, 7);
  const TimeScale copy = ts;
  CHECK(copy.same_as(ts));
  CHECK(TimeScale::from_points(std::vector<double>(ts.points().begin(), ts.points().end()))
            .same_as(ts));
  CHECK_FALSE(TimeScale::uniform(0.0, 2.0, 9).same_as(ts));
}

TEST_CASE("graininess sums to the length") {
  for (const auto& ts : {TimeScale::uniform(-1.0, 3.0, 33), TimeScale::quantum(3.0, 12),
                         TimeScale::from_points({0.0, 0.1, 0.5, 0.55, 2.0})}) {
    double s = 0.0;
    for (std::size_t k = 0; k < ts.last(); ++k) s += ts.graininess(k);
    CHECK(s == doctest::Approx(ts.sigma2_b() - ts.a()).epsilon(1e-14));
  }
}
