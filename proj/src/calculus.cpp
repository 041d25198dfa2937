#include "tsdyn/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsdyn/error.hpp"

namespace tsdyn {

namespace {

void require_finite(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::NonFiniteResult, "grid function value is not finite", i);
    }
  }
}

}  // namespace

GridFunction::GridFunction(TimeScale scale, std::size_t components,
                           std::size_t lo, std::size_t hi,
                           std::vector<double> values)
    : scale_(std::move(scale)),
      components_(components),
      lo_(lo),
      hi_(hi),
      values_(std::move(values)) {
  if (components_ == 0) {
    throw Error(ErrorCode::DimensionMismatch, "grid function needs >= 1 component");
  }
  if (lo_ > hi_ || hi_ > scale_.last()) {
    throw Error(ErrorCode::BadRange,
                "support [" + std::to_string(lo_) + ", " + std::to_string(hi_) +
                    "] not inside the scale");
  }
  if (values_.size() != point_count() * components_) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(point_count() * components_) +
                    " values, got " + std::to_string(values_.size()));
  }
  require_finite(values_);
}

GridFunction GridFunction::zeros(TimeScale scale, std::size_t components,
                                 std::size_t lo, std::size_t hi) {
  const std::size_t count = hi >= lo ? (hi - lo + 1) * components : 0;
  return GridFunction(std::move(scale), components, lo, hi,
                      std::vector<double>(count, 0.0));
}

GridFunction GridFunction::zeros(TimeScale scale, std::size_t components) {
  const std::size_t last = scale.last();
  return zeros(std::move(scale), components, 0, last);
}

GridFunction GridFunction::sample(
    TimeScale scale, std::size_t components, std::size_t lo, std::size_t hi,
    const std::function<void(double, std::span<double>)>& fn) {
  if (lo > hi || hi > scale.last()) {
    throw Error(ErrorCode::BadRange, "sample range outside the scale");
  }
  std::vector<double> values((hi - lo + 1) * components);
  for (std::size_t k = lo; k <= hi; ++k) {
    fn(scale[k], std::span<double>(values).subspan((k - lo) * components, components));
  }
  return GridFunction(std::move(scale), components, lo, hi, std::move(values));
}

GridFunction GridFunction::sample_scalar(TimeScale scale, std::size_t components,
                                         const std::function<double(double)>& fn) {
  const std::size_t last = scale.last();
  return sample(std::move(scale), components, 0, last,
                [&](double t, std::span<double> out) {
                  std::fill(out.begin(), out.end(), fn(t));
                });
}

std::span<const double> GridFunction::at(std::size_t k) const {
  if (k < lo_ || k > hi_) {
    throw Error(ErrorCode::IndexOutOfRange,
                "point " + std::to_string(k) + " outside support [" +
                    std::to_string(lo_) + ", " + std::to_string(hi_) + "]",
                k);
  }
  return std::span<const double>(values_).subspan((k - lo_) * components_, components_);
}

std::span<double> GridFunction::at(std::size_t k) {
  if (k < lo_ || k > hi_) {
    throw Error(ErrorCode::IndexOutOfRange,
                "point " + std::to_string(k) + " outside support [" +
                    std::to_string(lo_) + ", " + std::to_string(hi_) + "]",
                k);
  }
  return std::span<double>(values_).subspan((k - lo_) * components_, components_);
}

double GridFunction::value(std::size_t k, std::size_t c) const {
  if (c >= components_) {
    throw Error(ErrorCode::IndexOutOfRange, "component out of range", c);
  }
  return at(k)[c];
}

GridFunction GridFunction::restricted(std::size_t lo, std::size_t hi) const {
  if (lo > hi || !covers(lo, hi)) {
    throw Error(ErrorCode::BadRange, "restriction outside the support");
  }
  const auto first = values_.begin() + static_cast<std::ptrdiff_t>((lo - lo_) * components_);
  const auto last = first + static_cast<std::ptrdiff_t>((hi - lo + 1) * components_);
  return GridFunction(scale_, components_, lo, hi, std::vector<double>(first, last));
}

GridFunction GridFunction::component(std::size_t c) const {
  if (c >= components_) {
    throw Error(ErrorCode::IndexOutOfRange, "component out of range", c);
  }
  std::vector<double> out(point_count());
  for (std::size_t k = lo_; k <= hi_; ++k) out[k - lo_] = (*this)(k, c);
  return GridFunction(scale_, 1, lo_, hi_, std::move(out));
}

double GridFunction::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

void require_same_scale(const GridFunction& u, const GridFunction& v) {
  if (!u.scale().same_as(v.scale())) {
    throw Error(ErrorCode::ScaleMismatch, "grid functions live on different scales");
  }
  if (u.components() != v.components()) {
    throw Error(ErrorCode::DimensionMismatch, "component counts differ");
  }
}

namespace {

template <class Op>
GridFunction combine(const GridFunction& u, const GridFunction& v, Op op) {
  require_same_scale(u, v);
  const std::size_t lo = std::max(u.lo(), v.lo());
  const std::size_t hi = std::min(u.hi(), v.hi());
  if (lo > hi) {
    throw Error(ErrorCode::SupportMismatch, "supports do not overlap");
  }
  const std::size_t n = u.components();
  std::vector<double> out((hi - lo + 1) * n);
  for (std::size_t k = lo; k <= hi; ++k) {
    for (std::size_t c = 0; c < n; ++c) out[(k - lo) * n + c] = op(u(k, c), v(k, c));
  }
  return GridFunction(u.scale(), n, lo, hi, std::move(out));
}

void require_points(const GridFunction& u, std::size_t needed) {
  if (u.point_count() < needed) {
    throw Error(ErrorCode::EmptySupport,
                "operation needs at least " + std::to_string(needed) +
                    " support points, got " + std::to_string(u.point_count()));
  }
}

}  // namespace

GridFunction operator+(const GridFunction& u, const GridFunction& v) {
  return combine(u, v, [](double x, double y) { return x + y; });
}

GridFunction operator-(const GridFunction& u, const GridFunction& v) {
  return combine(u, v, [](double x, double y) { return x - y; });
}

GridFunction operator*(double s, const GridFunction& u) {
  std::vector<double> out(u.values().begin(), u.values().end());
  for (double& x : out) x *= s;
  return GridFunction(u.scale(), u.components(), u.lo(), u.hi(), std::move(out));
}

GridFunction delta_derivative(const GridFunction& u) {
  require_points(u, 2);
  const TimeScale& ts = u.scale();
  const std::size_t n = u.components();
  const std::size_t lo = u.lo();
  const std::size_t hi = u.hi() - 1;
  std::vector<double> out((hi - lo + 1) * n);
  for (std::size_t k = lo; k <= hi; ++k) {
    const double mu = ts[k + 1] - ts[k];
    for (std::size_t c = 0; c < n; ++c) {
      out[(k - lo) * n + c] = (u(k + 1, c) - u(k, c)) / mu;
    }
  }
  return GridFunction(ts, n, lo, hi, std::move(out));
}

GridFunction delta_second(const GridFunction& u) {
  require_points(u, 3);
  return delta_derivative(delta_derivative(u));
}

GridFunction sigma_shift(const GridFunction& u) {
  require_points(u, 2);
  const auto vals = u.values();
  const std::size_t n = u.components();
  return GridFunction(u.scale(), n, u.lo(), u.hi() - 1,
                      std::vector<double>(vals.begin() + static_cast<std::ptrdiff_t>(n), vals.end()));
}

std::vector<double> delta_integral(const GridFunction& g, std::size_t lo,
                                   std::size_t hi) {
  const TimeScale& ts = g.scale();
  // The point hi itself is excluded, so hi may sit one past the support.
  if (lo > hi || lo < g.lo() || hi > ts.last() || (hi > lo && hi - 1 > g.hi())) {
    throw Error(ErrorCode::BadRange,
                "integration range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                    ") not covered by support [" + std::to_string(g.lo()) + ", " +
                    std::to_string(g.hi()) + "]");
  }
  std::vector<double> sum(g.components(), 0.0);
  for (std::size_t k = lo; k < hi; ++k) {
    const double mu = ts[k + 1] - ts[k];
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += mu * g(k, c);
  }
  return sum;
}

}  // namespace tsdyn
