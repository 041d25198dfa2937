#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tsdyn/calculus.hpp"
#include "tsdyn/nonlinearity.hpp"
#include "tsdyn/problem.hpp"

namespace tsdyn {

/// Lower/upper pair α <= β on the full scale.
struct Band {
  GridFunction alpha;
  GridFunction beta;
};

enum class Strategy { Picard, MonotoneUp, MonotoneDown, NewtonOracle, TruncatedNest };
enum class SolveStatus { Converged, MaxIters, Diverged, DomainError };

std::string_view to_string(Strategy s);
std::string_view to_string(SolveStatus s);
Strategy parse_strategy(std::string_view name);

struct SolveConfig {
  double tol_residual = 1e-10;
  double tol_step = 1e-12;
  std::size_t max_iters = 10'000;
  double damping = 1.0;
  Strategy strategy = Strategy::Picard;
  /// Called with (iteration, iterate) after every update; iteration 0 is the
  /// starting iterate.
  std::function<void(std::size_t, const GridFunction&)> observer;

  void validate() const;
};

struct SolveReport {
  explicit SolveReport(GridFunction u) : solution(std::move(u)) {}

  GridFunction solution;
  std::size_t iterations = 0;
  double final_residual = 0.0;
  bool bracket_respected = true;
  /// Monotone strategies: every iterate was ordered against its predecessor.
  bool monotone = true;
  /// (I_i1, I_i2) per component, filled by criteria::compute_envelope.
  std::optional<std::vector<std::pair<double, double>>> envelope;
  /// TRUNCATED_NEST: max difference of successive nest members on the
  /// innermost subinterval.
  std::vector<double> nest_trail;
  double final_damping = 1.0;
  SolveStatus status = SolveStatus::MaxIters;
  std::string message;
};

/// Componentwise clamp of x into [α^σ(t), β^σ(t)] at t = p_{t_idx}.
std::vector<double> truncate_d(const GridFunction& alpha, const GridFunction& beta,
                               std::size_t t_idx, std::span<const double> x);

/// f_i(t, d(t,x)) + (d_i - x_i) / (1 + |d_i - x_i|).
double modified_rhs(const Nonlinearity& f, const GridFunction& alpha,
                    const GridFunction& beta, std::size_t t_idx,
                    std::span<const double> x);

/// Nu = φ + ∫ G(·,s) f*(s, u^σ(s)) Δs. Without a band the plain f is used.
GridFunction apply_N(const DirichletProblem& problem, const std::optional<Band>& band,
                     const GridFunction& u);

/// Right-hand side samples f_i(p_k, u(p_{k+1})) on the equation points; the
/// serial variant is the reference for the OpenMP kernel.
GridFunction rhs_samples(const DirichletProblem& problem, const GridFunction& u);
GridFunction rhs_samples_serial(const DirichletProblem& problem, const GridFunction& u);

/// max over equation points of |-u^ΔΔ(p_k) - f(p_k, u(p_{k+1}))|; +inf when f
/// cannot be evaluated at u^σ.
double residual(const DirichletProblem& problem, const GridFunction& u);

/// Pointwise α <= u <= β up to roundoff.
bool within_band(const Band& band, const GridFunction& u);

SolveReport solve(const DirichletProblem& problem, const std::optional<Band>& band,
                  const SolveConfig& cfg);

}  // namespace tsdyn
