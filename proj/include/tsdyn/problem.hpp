#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "tsdyn/nonlinearity.hpp"
#include "tsdyn/timescale.hpp"

namespace tsdyn {

/// General: x(a) = A, x(σ²(b)) = B, lower/upper boundary conditions are
/// inequalities. ZeroDirichlet: A = B = 0, f >= 0, boundary conditions of
/// lower/upper solutions are equalities.
enum class ProblemMode { General, ZeroDirichlet };

std::string_view to_string(ProblemMode mode);

/// -x_i^ΔΔ(t) = f_i(t, x^σ(t)) at the equation points, with Dirichlet data.
/// The sign convention is fixed; every report states it.
class DirichletProblem {
 public:
  static constexpr std::string_view kSignConvention = "-x^DD(t) = f(t, x^sigma(t))";

  DirichletProblem(TimeScale scale, std::vector<Nonlinearity> f,
                   std::vector<double> A, std::vector<double> B,
                   ProblemMode mode = ProblemMode::General);

  static DirichletProblem zero_dirichlet(TimeScale scale, std::vector<Nonlinearity> f);

  const TimeScale& scale() const noexcept { return scale_; }
  std::size_t dims() const noexcept { return f_.size(); }
  const Nonlinearity& f(std::size_t i) const { return f_.at(i); }
  const std::vector<Nonlinearity>& nonlinearities() const noexcept { return f_; }
  std::span<const double> A() const noexcept { return A_; }
  std::span<const double> B() const noexcept { return B_; }
  ProblemMode mode() const noexcept { return mode_; }

  /// f_i(p_k, x).
  double rhs(std::size_t i, std::size_t k, std::span<const double> x) const {
    return f_[i].evaluate(scale_[k], x);
  }

  /// Same nonlinearities and boundary data on another realization.
  DirichletProblem with_scale(TimeScale scale) const;

 private:
  TimeScale scale_;
  std::vector<Nonlinearity> f_;
  std::vector<double> A_;
  std::vector<double> B_;
  ProblemMode mode_;
};

}  // namespace tsdyn
