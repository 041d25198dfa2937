#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace tsdyn {

enum class ScaleKind { Uniform, Quantum, Explicit };

std::string_view to_string(ScaleKind kind);

/// Finite realization of a time scale: points p_0 < p_1 < ... < p_N, N >= 3.
///
/// The boundary points of the Dirichlet problem are read off the tail of the
/// point set: a = p_0, b = p_{N-2}, sigma(b) = p_{N-1}, sigma^2(b) = p_N.
/// Equation points of the second-order problem are the indices 0..N-2.
///
/// Copies share the immutable point storage, so passing a TimeScale by value
/// is cheap.
class TimeScale {
 public:
  static TimeScale from_points(std::vector<double> points);
  static TimeScale uniform(double a, double end, std::size_t n);
  /// {0} together with q^{-K}, ..., q^{-1}, 1.
  static TimeScale quantum(double q, std::size_t K);

  ScaleKind kind() const noexcept { return kind_; }

  /// Index of the last point, N.
  std::size_t last() const noexcept { return points_->size() - 1; }
  std::size_t size() const noexcept { return points_->size(); }
  std::span<const double> points() const noexcept { return *points_; }
  double point(std::size_t k) const;
  double operator[](std::size_t k) const noexcept { return (*points_)[k]; }

  std::size_t sigma(std::size_t k) const;
  std::size_t rho(std::size_t k) const;
  double graininess(std::size_t k) const;

  double a() const noexcept { return points_->front(); }
  double b() const noexcept { return (*points_)[last() - 2]; }
  double sigma_b() const noexcept { return (*points_)[last() - 1]; }
  double sigma2_b() const noexcept { return points_->back(); }

  /// Number of equation points (indices 0..N-2).
  std::size_t equation_count() const noexcept { return last() - 1; }

  /// Diagnostic only: whether a is right-dense in the scale this realization
  /// approximates (continuum refinements and the quantum accumulation point).
  bool models_right_dense_start() const noexcept { return kind_ != ScaleKind::Explicit; }

  /// Index of the point equal to t within 1e-12, if any.
  std::optional<std::size_t> index_of(double t) const;

  /// Explicit scale on points lo..hi (inclusive).
  TimeScale subrange(std::size_t lo, std::size_t hi) const;

  /// Shared storage or identical point sets.
  bool same_as(const TimeScale& other) const noexcept;

 private:
  TimeScale(std::shared_ptr<const std::vector<double>> points, ScaleKind kind)
      : points_(std::move(points)), kind_(kind) {}

  std::shared_ptr<const std::vector<double>> points_;
  ScaleKind kind_;
};

}  // namespace tsdyn
