#include "tsdyn/green.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>
#include <vector>

#include "tsdyn/error.hpp"

namespace tsdyn {

namespace {

constexpr std::size_t kSelfCheckMaxIndex = 64;

// One output row: left-to-right sum over the equation points.
inline void green_row(std::span<const double> p, std::size_t j,
                      const GridFunction& h, std::size_t n, double* out) {
  const std::size_t last = p.size() - 1;
  const double a = p[0];
  const double end = p[last];
  const double width = end - a;
  const double t = p[j];
  for (std::size_t c = 0; c < n; ++c) out[c] = 0.0;
  for (std::size_t k = 0; k + 1 < last; ++k) {
    const double sig = p[k + 1];
    const double mu = sig - p[k];
    // t <= σ(s) takes the first branch; at t = σ(s) both coincide.
    const double g = j <= k + 1 ? (t - a) * (end - sig) / width
                                : (sig - a) * (end - t) / width;
    const double w = mu * g;
    for (std::size_t c = 0; c < n; ++c) out[c] += w * h(k, c);
  }
}

void require_rhs(const TimeScale& ts, const GridFunction& h) {
  if (!h.scale().same_as(ts)) {
    throw Error(ErrorCode::ScaleMismatch, "right-hand side lives on another scale");
  }
  if (h.lo() != 0 || h.hi() + 2 < ts.last()) {
    throw Error(ErrorCode::SupportMismatch,
                "right-hand side must cover equation points 0.." +
                    std::to_string(ts.last() - 2));
  }
}

void self_check([[maybe_unused]] const GridFunction& u,
                [[maybe_unused]] const GridFunction& h) {
#ifndef NDEBUG
  if (u.scale().last() <= kSelfCheckMaxIndex) {
    const double tol = 1e-8 * std::max(1.0, h.max_abs());
    assert(green_identity_defect(u, h) <= tol);
  }
#endif
}

}  // namespace

double green_value(const TimeScale& ts, std::size_t t_idx, std::size_t s_idx) {
  if (t_idx > ts.last()) {
    throw Error(ErrorCode::IndexOutOfRange, "t index out of range", t_idx);
  }
  if (s_idx + 1 > ts.last()) {
    throw Error(ErrorCode::IndexOutOfRange, "s index out of range", s_idx);
  }
  const double a = ts.a();
  const double end = ts.sigma2_b();
  const double t = ts[t_idx];
  const double sig = ts[s_idx + 1];
  if (t_idx <= s_idx + 1) return (t - a) * (end - sig) / (end - a);
  return (sig - a) * (end - t) / (end - a);
}

GridFunction phi(const TimeScale& ts, std::span<const double> A,
                 std::span<const double> B) {
  if (A.size() != B.size() || A.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "boundary vectors A and B differ in size");
  }
  const double a = ts.a();
  const double width = ts.sigma2_b() - a;
  return GridFunction::sample(ts, A.size(), 0, ts.last(),
                              [&](double t, std::span<double> out) {
                                for (std::size_t c = 0; c < out.size(); ++c) {
                                  out[c] = A[c] + (B[c] - A[c]) * (t - a) / width;
                                }
                              });
}

GridFunction e_weight(const TimeScale& ts) {
  const double a = ts.a();
  const double end = ts.sigma2_b();
  return GridFunction::sample_scalar(
      ts, 1, [&](double t) { return (t - a) * (end - t) / (end - a); });
}

GridFunction green_apply(const TimeScale& ts, const GridFunction& h) {
  require_rhs(ts, h);
  const std::size_t n = h.components();
  const std::size_t rows = ts.size();
  std::vector<double> out(rows * n);
  const std::span<const double> p = ts.points();
  const auto count = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    green_row(p, static_cast<std::size_t>(j), h, n,
              out.data() + static_cast<std::size_t>(j) * n);
  }
  GridFunction u(ts, n, 0, ts.last(), std::move(out));
  self_check(u, h);
  return u;
}

GridFunction green_apply_serial(const TimeScale& ts, const GridFunction& h) {
  require_rhs(ts, h);
  const std::size_t n = h.components();
  const std::size_t rows = ts.size();
  std::vector<double> out(rows * n);
  const std::span<const double> p = ts.points();
  for (std::size_t j = 0; j < rows; ++j) green_row(p, j, h, n, out.data() + j * n);
  return GridFunction(ts, n, 0, ts.last(), std::move(out));
}

double green_identity_defect(const GridFunction& u, const GridFunction& h) {
  const GridFunction d2 = delta_second(u);
  double worst = 0.0;
  const std::size_t hi = std::min(d2.hi(), h.hi());
  for (std::size_t k = std::max(d2.lo(), h.lo()); k <= hi; ++k) {
    for (std::size_t c = 0; c < u.components(); ++c) {
      worst = std::max(worst, std::abs(d2(k, c) + h(k, c)));
    }
  }
  return worst;
}

}  // namespace tsdyn
