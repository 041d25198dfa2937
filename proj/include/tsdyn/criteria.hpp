#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "tsdyn/calculus.hpp"
#include "tsdyn/nonlinearity.hpp"
#include "tsdyn/problem.hpp"
#include "tsdyn/solver.hpp"
#include "tsdyn/timescale.hpp"

namespace tsdyn {

enum class Verdict { Convergent, Divergent, Inconclusive };

std::string_view to_string(Verdict v);

/// Judgment on a sequence of partial integrals over a refinement family.
struct ConvergenceVerdict {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<double> partial_values;
  /// |I_{m+1} - I_m| / |I_m - I_{m-1}|.
  std::vector<double> ratio_trail;
  /// Iterated Aitken extrapolation; meaningful only when CONVERGENT.
  double limit_estimate = 0.0;
  double cauchy_tail = 0.0;
  /// Some partial sum >= 1e-300 and no negative integrand sample seen.
  bool positive = false;
};

inline constexpr double kRatioThreshold = 0.9;
inline constexpr double kTailThreshold = 1e-3;
inline constexpr double kGrowthFactor = 1.5;
inline constexpr double kDivergenceThreshold = 1e12;
inline constexpr std::uint64_t kDefaultSeed = 0xD1E5;

ConvergenceVerdict classify_sequence(std::vector<double> partials);

std::vector<TimeScale> uniform_family(double a, double end,
                                      std::vector<std::size_t> sizes = {17, 33, 65, 129, 257, 513});
std::vector<TimeScale> quantum_family(double q, std::vector<std::size_t> depths = {5, 10, 20, 40, 80});

/// Class-E test: Σ μ(s)(σ(s)-a)(σ²(b)-s) g(s) over the open range s > a.
ConvergenceVerdict check_H2_domination(const std::function<double(double)>& g,
                                       const std::vector<TimeScale>& family);

struct Witness {
  double t = 0.0;
  std::vector<double> x;
  double c = 1.0;
  std::size_t j = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct Htilde2Report {
  bool pass = true;
  bool shape_ok = false;
  bool boundary = false;
  /// Largest relative excess of one side over the other; 0 when passing.
  double worst_violation = 0.0;
  std::optional<Witness> witness;
};

/// Samples the two-sided scaling inequalities for c in [1e-4, 1] and the
/// reversed pair for c in [1, 1e4], at interior points of `scale`.
Htilde2Report check_Htilde2(const Nonlinearity& f, const TimeScale& scale,
                            std::size_t samples = 2000, std::uint64_t seed = kDefaultSeed);

struct MonotoneReport {
  bool pass = true;
  double worst_violation = 0.0;
  std::optional<Witness> witness;
  std::size_t skipped = 0;
};

/// f(t, α^σ) <= f(t, x) <= f(t, β^σ) and f(t, x) <= f(t, y) for x <= y, with
/// x, y sampled between α^σ(t) and β^σ(t) at each equation point.
MonotoneReport check_H3_monotone(const Nonlinearity& f, const Band& band,
                                 std::size_t samples = 2000, std::uint64_t seed = kDefaultSeed);

struct LipschitzReport {
  bool pass = false;
  double M_estimate = 0.0;
  std::size_t skipped = 0;
};

/// Largest |f(x) - f(y)| / |x - y|_inf over sampled ordered pairs x >= y
/// in the band (read at σ(t)); the lower edge of the band is always sampled.
LipschitzReport check_H3bar_lipschitz(const Nonlinearity& f, const Band& band,
                                      std::size_t samples = 2000,
                                      std::uint64_t seed = kDefaultSeed);

/// Σ μ f_i(s, E^σ(s)) over each family member, E = (e, ..., e).
std::vector<ConvergenceVerdict> criterion_sufficient(const DirichletProblem& problem,
                                                     const std::vector<TimeScale>& family);

/// Σ μ (σ(s)-a)(σ(b)-σ(s)) f_i(s, [v]) with v = σ²(b) of each member or
/// the override.
std::vector<ConvergenceVerdict> criterion_necessary(const DirichletProblem& problem,
                                                    const std::vector<TimeScale>& family,
                                                    std::optional<double> eval_point = std::nullopt);

struct Violation {
  std::size_t index = 0;
  std::size_t component = 0;
  /// lhs - rhs of the violated inequality; +inf when f could not be evaluated.
  double slack = 0.0;
};

struct InequalityReport {
  bool pass = true;
  bool boundary_ok = true;
  std::vector<Violation> violations;
  double worst_slack = 0.0;
};

/// -α^ΔΔ <= f(t, α^σ) at every equation point; α(a) <= A, α(σ²(b)) <= B, or
/// equalities for zero-Dirichlet problems.
InequalityReport verify_lower(const DirichletProblem& problem, const GridFunction& alpha);
InequalityReport verify_upper(const DirichletProblem& problem, const GridFunction& beta);

struct BoundsConstants {
  std::vector<double> I1;
  std::vector<double> I2;
  std::vector<double> k1;
  std::vector<double> k2;
  std::vector<double> L1;
  std::optional<double> C;
  std::optional<double> C2;
  std::optional<double> eval_point;
};

struct BoundsPair {
  GridFunction alpha;
  std::optional<GridFunction> beta;
  BoundsConstants constants;
  InequalityReport lower_report;
  std::optional<InequalityReport> upper_report;

  Band band() const;
};

/// α = k1 y, β = k2 y with y_i = G f_i(·, E^σ).
BoundsPair construct_bounds(const DirichletProblem& problem, const std::vector<TimeScale>& family);

enum class LowerMode { WithMuII, Without };

std::string_view to_string(LowerMode m);

/// α_i = k_i1 g_i with g_i = G (w^η f_i(·, [v])); η = μ_ii or 1.
BoundsPair construct_lower(const DirichletProblem& problem, const std::vector<TimeScale>& family,
                           LowerMode mode = LowerMode::WithMuII,
                           std::optional<double> eval_point = std::nullopt);

/// α_i = m_i G1 + φ_i, β_i = M_i G1 + φ_i.
BoundsPair bounds_from_constants(const DirichletProblem& problem, std::span<const double> m,
                                 std::span<const double> M);

/// (I_i1, I_i2) for a solution x, with I_i1 e <= x_i <= I_i2 e asserted.
std::vector<std::pair<double, double>> compute_envelope(const DirichletProblem& problem,
                                                        const GridFunction& x);

struct Type1Report {
  std::vector<double> left_slope_trail;
  std::vector<double> right_slope_trail;
  ConvergenceVerdict left;
  ConvergenceVerdict right;
  bool bounded = false;
};

/// x^Δ of one component at the first and last equation points across
/// refinements.
Type1Report type1_limits(const std::vector<GridFunction>& solutions, std::size_t component = 0);

}  // namespace tsdyn
