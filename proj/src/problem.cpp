#include "tsdyn/problem.hpp"

#include <algorithm>
#include <string>

#include "tsdyn/error.hpp"

namespace tsdyn {

namespace {

constexpr std::size_t kSpotChecks = 32;

// Sampled check that f_i >= 0 at the equation points with x = (1, ..., 1).
// Points where f is singular are skipped; only a finite negative value fails.
void spot_check_nonnegative(const TimeScale& ts, const std::vector<Nonlinearity>& f) {
  const std::size_t eqs = ts.equation_count();
  const std::size_t stride = std::max<std::size_t>(1, eqs / kSpotChecks);
  for (const Nonlinearity& fi : f) {
    std::vector<double> x(fi.arity(), 1.0);
    for (std::size_t k = 0; k < eqs; k += stride) {
      double v = 0.0;
      try {
        v = fi.evaluate(ts[k], x);
      } catch (const Error&) {
        continue;
      }
      if (v < 0.0) {
        throw Error(ErrorCode::DomainViolation,
                    "f" + std::to_string(fi.component() + 1) +
                        " is negative at t = " + std::to_string(ts[k]),
                    k);
      }
    }
  }
}

}  // namespace

std::string_view to_string(ProblemMode mode) {
  return mode == ProblemMode::General ? "general" : "zero-dirichlet";
}

DirichletProblem::DirichletProblem(TimeScale scale, std::vector<Nonlinearity> f,
                                   std::vector<double> A, std::vector<double> B,
                                   ProblemMode mode)
    : scale_(std::move(scale)), f_(std::move(f)), A_(std::move(A)), B_(std::move(B)), mode_(mode) {
  const std::size_t n = f_.size();
  if (n == 0 || A_.size() != n || B_.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "need one nonlinearity and one A, B entry per component");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (f_[i].arity() != n) {
      throw Error(ErrorCode::DimensionMismatch,
                  "f" + std::to_string(i + 1) + " has arity " + std::to_string(f_[i].arity()), i);
    }
    if (f_[i].component() != i) {
      throw Error(ErrorCode::DimensionMismatch,
                  "nonlinearity for component " + std::to_string(f_[i].component() + 1) +
                      " given in slot " + std::to_string(i + 1),
                  i);
    }
  }
  if (mode_ == ProblemMode::ZeroDirichlet) {
    if (std::any_of(A_.begin(), A_.end(), [](double v) { return v != 0.0; }) ||
        std::any_of(B_.begin(), B_.end(), [](double v) { return v != 0.0; })) {
      throw Error(ErrorCode::DomainViolation, "zero-Dirichlet problems need A = B = 0");
    }
    spot_check_nonnegative(scale_, f_);
    for (Nonlinearity& fi : f_) fi.require_nonnegative(true);
  }
}

DirichletProblem DirichletProblem::zero_dirichlet(TimeScale scale, std::vector<Nonlinearity> f) {
  const std::size_t n = f.size();
  return DirichletProblem(std::move(scale), std::move(f), std::vector<double>(n, 0.0),
                          std::vector<double>(n, 0.0), ProblemMode::ZeroDirichlet);
}

DirichletProblem DirichletProblem::with_scale(TimeScale scale) const {
  DirichletProblem copy = *this;
  copy.scale_ = std::move(scale);
  return copy;
}

}  // namespace tsdyn
