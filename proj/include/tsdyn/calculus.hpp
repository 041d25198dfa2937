#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tsdyn/timescale.hpp"

namespace tsdyn {

/// n-component real function sampled on the points lo..hi of a TimeScale.
///
/// Values are stored point-major: the n-vector at point k occupies
/// values()[(k - lo) * n, (k - lo) * n + n).
class GridFunction {
 public:
  GridFunction(TimeScale scale, std::size_t components, std::size_t lo,
               std::size_t hi, std::vector<double> values);

  static GridFunction zeros(TimeScale scale, std::size_t components,
                            std::size_t lo, std::size_t hi);
  static GridFunction zeros(TimeScale scale, std::size_t components);
  /// Samples fn(t, out) at every point of [lo, hi]; fn fills the n-vector `out`.
  static GridFunction sample(
      TimeScale scale, std::size_t components, std::size_t lo, std::size_t hi,
      const std::function<void(double, std::span<double>)>& fn);
  /// Scalar convenience: every component equal to fn(t), full support.
  static GridFunction sample_scalar(TimeScale scale, std::size_t components,
                                    const std::function<double(double)>& fn);

  const TimeScale& scale() const noexcept { return scale_; }
  std::size_t components() const noexcept { return components_; }
  std::size_t lo() const noexcept { return lo_; }
  std::size_t hi() const noexcept { return hi_; }
  std::size_t point_count() const noexcept { return hi_ - lo_ + 1; }
  bool covers(std::size_t lo, std::size_t hi) const noexcept {
    return lo >= lo_ && hi <= hi_;
  }

  /// Checked access to the n-vector at point k.
  std::span<const double> at(std::size_t k) const;
  std::span<double> at(std::size_t k);
  /// Checked access to component c at point k.
  double value(std::size_t k, std::size_t c) const;

  /// Unchecked access; k must lie in [lo, hi].
  double operator()(std::size_t k, std::size_t c) const noexcept {
    return values_[(k - lo_) * components_ + c];
  }
  double& operator()(std::size_t k, std::size_t c) noexcept {
    return values_[(k - lo_) * components_ + c];
  }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Copy restricted to [lo, hi] (must be inside the current support).
  GridFunction restricted(std::size_t lo, std::size_t hi) const;
  /// Single component as a scalar grid function.
  GridFunction component(std::size_t c) const;

  double max_abs() const noexcept;

 private:
  TimeScale scale_;
  std::size_t components_;
  std::size_t lo_;
  std::size_t hi_;
  std::vector<double> values_;
};

void require_same_scale(const GridFunction& u, const GridFunction& v);

GridFunction operator+(const GridFunction& u, const GridFunction& v);
GridFunction operator-(const GridFunction& u, const GridFunction& v);
GridFunction operator*(double s, const GridFunction& u);

/// (u^Δ)_k = (v_{k+1} - v_k) / μ(p_k); support loses its top point.
GridFunction delta_derivative(const GridFunction& u);
/// u^ΔΔ at k uses v_k, v_{k+1}, v_{k+2}; support loses two top points.
GridFunction delta_second(const GridFunction& u);
/// (u^σ)_k = v_{k+1}; support loses its top point.
GridFunction sigma_shift(const GridFunction& u);
/// Σ_{k=lo}^{hi-1} μ(p_k) g_k, i.e. the delta integral over [p_lo, p_hi).
std::vector<double> delta_integral(const GridFunction& g, std::size_t lo,
                                   std::size_t hi);

}  // namespace tsdyn
