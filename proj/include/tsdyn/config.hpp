#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsdyn/criteria.hpp"
#include "tsdyn/problem.hpp"
#include "tsdyn/solver.hpp"
#include "tsdyn/timescale.hpp"

namespace tsdyn {

struct ScaleSpec {
  ScaleKind kind = ScaleKind::Uniform;
  double a = 0.0;
  double end = 1.0;
  std::size_t n = 65;
  double q = 2.0;
  std::size_t K = 10;
  std::vector<double> points;
};

struct ComponentSpec {
  std::optional<std::string> expr;
  /// family = emden_fowler: c t^p prod x_j^gamma_j.
  bool emden_fowler = false;
  double c = 1.0;
  double p = 0.0;
  std::vector<double> gamma;
  std::optional<std::vector<double>> lambda;
  std::optional<std::vector<double>> mu;
  std::optional<std::vector<double>> singular;
  std::optional<double> floor;
};

enum class BoundsMethod { Auto, Construct, Lower, Constants, None };

struct RunConfig {
  ScaleSpec scale;
  std::vector<ComponentSpec> f;
  std::vector<double> A;
  std::vector<double> B;
  ProblemMode mode = ProblemMode::General;

  SolveConfig solver;

  BoundsMethod bounds = BoundsMethod::Auto;
  std::vector<double> m;
  std::vector<double> M;
  LowerMode lower_mode = LowerMode::WithMuII;

  std::optional<std::vector<std::size_t>> family;
  std::optional<double> eval_point;
  std::size_t samples = 2000;
  std::uint64_t seed = kDefaultSeed;

  std::optional<std::string> quadrature_expr;
  std::string quadrature_weight = "none";

  /// Every key that was read, with its normalized value, in key order.
  std::map<std::string, std::string> resolved;
};

/// Parses the flat key = value format. Lines may carry `# comments`;
/// `[section]` headers prefix the following keys with "section.".
/// Values are numbers, quoted strings, bare words, or [a, b, ...] arrays.
/// Errors are ConfigError naming the key and line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

TimeScale build_scale(const RunConfig& cfg);
DirichletProblem build_problem(const RunConfig& cfg);
/// Refinement family of the configured scale kind (uniform sizes or quantum
/// depths); explicit scales have none.
std::vector<TimeScale> build_family(const RunConfig& cfg);

std::string_view to_string(BoundsMethod m);

}  // namespace tsdyn
