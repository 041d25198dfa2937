#include "tsdyn/timescale.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsdyn/error.hpp"

namespace tsdyn {

namespace {

constexpr std::size_t kMinPoints = 4;
constexpr double kLookupTolerance = 1e-12;

void require_index(const TimeScale& ts, std::size_t k) {
  if (k > ts.last()) {
    throw Error(ErrorCode::IndexOutOfRange,
                "index " + std::to_string(k) + " outside [0, " +
                    std::to_string(ts.last()) + "]",
                k);
  }
}

}  // namespace

std::string_view to_string(ScaleKind kind) {
  switch (kind) {
    case ScaleKind::Uniform: return "uniform";
    case ScaleKind::Quantum: return "quantum";
    case ScaleKind::Explicit: return "explicit";
  }
  return "unknown";
}

TimeScale TimeScale::from_points(std::vector<double> points) {
  if (points.size() < kMinPoints) {
    throw Error(ErrorCode::TooFewPoints,
                "need at least 4 points, got " + std::to_string(points.size()));
  }
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!std::isfinite(points[k])) {
      throw Error(ErrorCode::NonMonotonePoints, "non-finite point", k);
    }
    if (k > 0 && !(points[k] > points[k - 1])) {
      throw Error(ErrorCode::NonMonotonePoints,
                  "points must be strictly increasing (index " +
                      std::to_string(k) + ")",
                  k);
    }
  }
  return TimeScale(std::make_shared<const std::vector<double>>(std::move(points)),
                   ScaleKind::Explicit);
}

TimeScale TimeScale::uniform(double a, double end, std::size_t n) {
  if (!(end > a)) {
    throw Error(ErrorCode::DegenerateInterval, "uniform scale needs end > a");
  }
  if (n < kMinPoints) {
    throw Error(ErrorCode::TooFewPoints,
                "need at least 4 points, got " + std::to_string(n));
  }
  std::vector<double> points(n);
  const double width = end - a;
  const auto intervals = static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    points[k] = a + static_cast<double>(k) * width / intervals;
  }
  points.back() = end;
  return TimeScale(std::make_shared<const std::vector<double>>(std::move(points)),
                   ScaleKind::Uniform);
}

TimeScale TimeScale::quantum(double q, std::size_t K) {
  if (!(q > 1.0) || !std::isfinite(q)) {
    throw Error(ErrorCode::InvalidBase, "quantum scale needs q > 1");
  }
  if (K < 3) {
    throw Error(ErrorCode::TooFewPoints, "quantum scale needs K >= 3");
  }
  std::vector<double> points;
  points.reserve(K + 2);
  points.push_back(0.0);
  for (std::size_t k = K + 1; k-- > 0;) {
    points.push_back(std::pow(q, -static_cast<double>(k)));
  }
  for (std::size_t k = 1; k < points.size(); ++k) {
    if (!(points[k] > points[k - 1])) {
      throw Error(ErrorCode::NonMonotonePoints,
                  "q^-K underflows for this K", k);
    }
  }
  return TimeScale(std::make_shared<const std::vector<double>>(std::move(points)),
                   ScaleKind::Quantum);
}

double TimeScale::point(std::size_t k) const {
  require_index(*this, k);
  return (*points_)[k];
}

std::size_t TimeScale::sigma(std::size_t k) const {
  require_index(*this, k);
  return std::min(k + 1, last());
}

std::size_t TimeScale::rho(std::size_t k) const {
  require_index(*this, k);
  return k == 0 ? 0 : k - 1;
}

double TimeScale::graininess(std::size_t k) const {
  require_index(*this, k);
  return k == last() ? 0.0 : (*points_)[k + 1] - (*points_)[k];
}

std::optional<std::size_t> TimeScale::index_of(double t) const {
  const auto& p = *points_;
  auto it = std::lower_bound(p.begin(), p.end(), t - kLookupTolerance);
  if (it != p.end() && std::abs(*it - t) <= kLookupTolerance) {
    return static_cast<std::size_t>(it - p.begin());
  }
  return std::nullopt;
}

TimeScale TimeScale::subrange(std::size_t lo, std::size_t hi) const {
  require_index(*this, hi);
  if (lo > hi) {
    throw Error(ErrorCode::BadRange, "subrange lo > hi", lo);
  }
  return from_points(std::vector<double>(points_->begin() + static_cast<std::ptrdiff_t>(lo),
                                         points_->begin() + static_cast<std::ptrdiff_t>(hi) + 1));
}

bool TimeScale::same_as(const TimeScale& other) const noexcept {
  return points_ == other.points_ || *points_ == *other.points_;
}

}  // namespace tsdyn
