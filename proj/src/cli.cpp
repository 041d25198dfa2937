#include "tsdyn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tsdyn/config.hpp"
#include "tsdyn/criteria.hpp"
#include "tsdyn/error.hpp"
#include "tsdyn/expression.hpp"
#include "tsdyn/green.hpp"
#include "tsdyn/solver.hpp"

namespace tsdyn {

namespace {

using nlohmann::json;

void configure_logging() {
  auto logger = spdlog::get("tsdyn");
  if (!logger) {
    logger = spdlog::stderr_color_mt("tsdyn");
    spdlog::set_default_logger(logger);
  }
  const char* env = std::getenv("TSDYN_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

int worse(int a, int b) {
  // Failure outranks inconclusive, which outranks success.
  const auto rank = [](int c) { return c == kExitFailed ? 2 : c == kExitInconclusive ? 1 : 0; };
  return rank(a) >= rank(b) ? a : b;
}

int exit_for(Verdict v) {
  switch (v) {
    case Verdict::Convergent: return kExitOk;
    case Verdict::Divergent: return kExitFailed;
    case Verdict::Inconclusive: return kExitInconclusive;
  }
  return kExitFailed;
}

int exit_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return kExitOk;
    case SolveStatus::MaxIters: return kExitInconclusive;
    case SolveStatus::Diverged:
    case SolveStatus::DomainError: return kExitFailed;
  }
  return kExitFailed;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const std::vector<double>& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(finite_or_null(x));
  return arr;
}

json to_json(const ConvergenceVerdict& v) {
  return json{{"verdict", to_string(v.verdict)},
              {"partial_values", to_json(v.partial_values)},
              {"ratio_trail", to_json(v.ratio_trail)},
              {"limit_estimate", finite_or_null(v.limit_estimate)},
              {"cauchy_tail", finite_or_null(v.cauchy_tail)},
              {"positive", v.positive}};
}

json to_json(const Witness& w) {
  return json{{"t", w.t}, {"x", to_json(w.x)}, {"c", w.c}, {"j", w.j + 1},
              {"lhs", finite_or_null(w.lhs)}, {"rhs", finite_or_null(w.rhs)}};
}

// Destination for one run: the --out file or stdout.
class Output {
 public:
  explicit Output(const std::optional<std::string>& path) {
    if (path) {
      file_.open(*path, std::ios::binary | std::ios::trunc);
      if (!file_) throw Error(ErrorCode::ConfigError, "cannot write '" + *path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

void header(std::ostream& os, const std::string& command, const RunConfig& cfg) {
  os << "# " << kVersion << '\n';
  os << "# command: " << command << '\n';
  os << "# sign convention: " << DirichletProblem::kSignConvention << '\n';
  os << "# config:\n";
  for (const auto& [k, v] : cfg.resolved) os << "#   " << k << " = " << v << '\n';
}

void summary_row(std::ostream& os, const std::string& key, const std::vector<double>& values) {
  os << "# " << key;
  for (double v : values) os << ',' << format_number(v);
  os << '\n';
}

void summary_row(std::ostream& os, const std::string& key, const std::string& value) {
  os << "# " << key << ',' << value << '\n';
}

void constants_rows(std::ostream& os, const BoundsConstants& K) {
  if (!K.I1.empty()) summary_row(os, "I1", K.I1);
  if (!K.I2.empty()) summary_row(os, "I2", K.I2);
  if (!K.k1.empty()) summary_row(os, "k1", K.k1);
  if (!K.k2.empty()) summary_row(os, "k2", K.k2);
  if (!K.L1.empty()) summary_row(os, "L1", K.L1);
  if (K.C) summary_row(os, "C", std::vector<double>{*K.C});
  if (K.C2) summary_row(os, "C2", std::vector<double>{*K.C2});
  if (K.eval_point) summary_row(os, "eval_point", std::vector<double>{*K.eval_point});
}

bool has_exponents(const DirichletProblem& problem) {
  return std::all_of(problem.nonlinearities().begin(), problem.nonlinearities().end(),
                     [](const Nonlinearity& f) { return f.exponents().has_value(); });
}

bool zero_data(const DirichletProblem& problem) {
  const auto zero = [](double v) { return v == 0.0; };
  return std::all_of(problem.A().begin(), problem.A().end(), zero) &&
         std::all_of(problem.B().begin(), problem.B().end(), zero);
}

struct BoundsOutcome {
  std::optional<BoundsPair> pair;
  int exit = kExitOk;
  std::string message;
};

// Runs the criterion that guards a construction so that an INCONCLUSIVE
// verdict maps to its own exit code, then builds the pair.
BoundsOutcome make_bounds(const RunConfig& cfg, const DirichletProblem& problem,
                          BoundsMethod method) {
  BoundsOutcome out;
  if (method == BoundsMethod::Constants) {
    out.pair = bounds_from_constants(problem, cfg.m, cfg.M);
    return out;
  }
  const std::vector<TimeScale> family = build_family(cfg);
  const auto verdicts = method == BoundsMethod::Construct
                            ? criterion_sufficient(problem, family)
                            : criterion_necessary(problem, family, cfg.eval_point);
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const int code = verdicts[i].positive ? exit_for(verdicts[i].verdict) : kExitFailed;
    if (code != kExitOk) {
      out.exit = worse(out.exit, code);
      out.message = "criterion for component " + std::to_string(i + 1) + " is " +
                    std::string(to_string(verdicts[i].verdict));
    }
  }
  if (out.exit != kExitOk) return out;
  out.pair = method == BoundsMethod::Construct
                 ? construct_bounds(problem, family)
                 : construct_lower(problem, family, cfg.lower_mode, cfg.eval_point);
  return out;
}

BoundsMethod resolve_method(const RunConfig& cfg, const DirichletProblem& problem) {
  if (cfg.bounds != BoundsMethod::Auto) return cfg.bounds;
  if (problem.mode() == ProblemMode::ZeroDirichlet && has_exponents(problem) &&
      zero_data(problem) && cfg.scale.kind != ScaleKind::Explicit) {
    return BoundsMethod::Construct;
  }
  return BoundsMethod::None;
}

int cmd_check(const RunConfig& cfg, std::ostream& os) {
  const DirichletProblem problem = build_problem(cfg);
  const std::vector<TimeScale> family = build_family(cfg);
  int code = kExitOk;
  for (std::size_t i = 0; i < problem.dims(); ++i) {
    const Nonlinearity& f = problem.f(i);
    if (!f.exponents()) continue;
    json line{{"kind", "htilde2"}, {"component", i + 1}};
    try {
      const Htilde2Report r = check_Htilde2(f, problem.scale(), cfg.samples, cfg.seed);
      line["pass"] = r.pass;
      line["shape_ok"] = r.shape_ok;
      line["boundary"] = r.boundary;
      line["worst_violation"] = r.worst_violation;
      if (r.witness) line["witness"] = to_json(*r.witness);
      if (!r.pass) code = worse(code, kExitFailed);
    } catch (const Error& e) {
      line["error"] = e.what();
      code = worse(code, kExitFailed);
    }
    os << line.dump() << '\n';
  }
  const auto emit = [&](const char* kind, auto&& compute) {
    try {
      const std::vector<ConvergenceVerdict> verdicts = compute();
      for (std::size_t i = 0; i < verdicts.size(); ++i) {
        json line = to_json(verdicts[i]);
        line["kind"] = kind;
        line["component"] = i + 1;
        os << line.dump() << '\n';
        code = worse(code, verdicts[i].positive ? exit_for(verdicts[i].verdict) : kExitFailed);
        spdlog::info("{} f{}: {}", kind, i + 1, to_string(verdicts[i].verdict));
      }
    } catch (const Error& e) {
      os << json{{"kind", kind}, {"error", e.what()}}.dump() << '\n';
      code = worse(code, kExitFailed);
    }
  };
  emit("criterion_sufficient", [&] { return criterion_sufficient(problem, family); });
  emit("criterion_necessary", [&] { return criterion_necessary(problem, family, cfg.eval_point); });
  os << json{{"kind", "summary"},
             {"version", kVersion},
             {"sign_convention", DirichletProblem::kSignConvention},
             {"exit_code", code}}
            .dump()
     << '\n';
  return code;
}

int cmd_solve(const RunConfig& cfg, std::ostream& os) {
  const DirichletProblem problem = build_problem(cfg);
  const BoundsMethod method = resolve_method(cfg, problem);
  if (method == BoundsMethod::Lower) {
    throw Error(ErrorCode::ConfigError,
                "bounds.method: solve needs an upper solution; use construct or constants");
  }
  std::optional<BoundsPair> pair;
  if (method != BoundsMethod::None) {
    BoundsOutcome b = make_bounds(cfg, problem, method);
    if (!b.pair) {
      spdlog::error("bounds: {}", b.message);
      header(os, "solve", cfg);
      summary_row(os, "status", "NO_BOUNDS");
      summary_row(os, "message", b.message);
      return b.exit;
    }
    pair = std::move(b.pair);
  }
  std::optional<Band> band;
  if (pair) band = pair->band();
  const SolveReport report = solve(problem, band, cfg.solver);

  std::optional<std::vector<std::pair<double, double>>> envelope;
  std::string envelope_note;
  if (problem.mode() == ProblemMode::ZeroDirichlet && report.status == SolveStatus::Converged) {
    try {
      envelope = compute_envelope(problem, report.solution);
    } catch (const Error& e) {
      envelope_note = e.what();
      spdlog::warn("envelope: {}", e.what());
    }
  }

  const TimeScale& ts = problem.scale();
  const std::size_t n = problem.dims();
  header(os, "solve", cfg);
  os << 't';
  for (std::size_t i = 0; i < n; ++i) os << ",x" << i + 1;
  os << ",residual\n";
  const GridFunction lap = delta_second(report.solution);
  for (std::size_t k = 0; k <= ts.last(); ++k) {
    os << format_number(ts[k]);
    for (std::size_t i = 0; i < n; ++i) os << ',' << format_number(report.solution(k, i));
    os << ',';
    if (k < ts.equation_count()) {
      try {
        double r = 0.0;
        const auto x = report.solution.at(k + 1);
        for (std::size_t i = 0; i < n; ++i) {
          r = std::max(r, std::abs(-lap(k, i) - problem.rhs(i, k, x)));
        }
        os << format_number(r);
      } catch (const Error&) {
        os << "inf";
      }
    }
    os << '\n';
  }
  summary_row(os, "status", std::string(to_string(report.status)));
  summary_row(os, "strategy", std::string(to_string(cfg.solver.strategy)));
  summary_row(os, "iterations", std::to_string(report.iterations));
  summary_row(os, "final_residual", std::vector<double>{report.final_residual});
  summary_row(os, "bracket_respected", report.bracket_respected ? "true" : "false");
  summary_row(os, "bounds_method", std::string(to_string(method)));
  if (pair) constants_rows(os, pair->constants);
  if (cfg.solver.strategy == Strategy::MonotoneUp || cfg.solver.strategy == Strategy::MonotoneDown) {
    summary_row(os, "monotone", report.monotone ? "true" : "false");
  }
  if (!report.nest_trail.empty()) summary_row(os, "nest_trail", report.nest_trail);
  if (envelope) {
    std::vector<double> lo, hi;
    for (const auto& [a, b] : *envelope) {
      lo.push_back(a);
      hi.push_back(b);
    }
    summary_row(os, "envelope_I1", lo);
    summary_row(os, "envelope_I2", hi);
  } else if (!envelope_note.empty()) {
    summary_row(os, "envelope_violation", envelope_note);
  }
  if (!report.message.empty()) summary_row(os, "message", report.message);
  spdlog::info("solve: {} after {} iterations, residual {}", to_string(report.status),
               report.iterations, format_number(report.final_residual));
  return exit_for(report.status);
}

int cmd_bounds(const RunConfig& cfg, std::ostream& os) {
  const DirichletProblem problem = build_problem(cfg);
  BoundsMethod method = resolve_method(cfg, problem);
  if (method == BoundsMethod::None) {
    throw Error(ErrorCode::ConfigError,
                "bounds.method: nothing to construct; set construct, lower or constants");
  }
  BoundsOutcome b = make_bounds(cfg, problem, method);
  header(os, "bounds", cfg);
  if (!b.pair) {
    spdlog::error("bounds: {}", b.message);
    summary_row(os, "status", "NO_BOUNDS");
    summary_row(os, "message", b.message);
    return b.exit;
  }
  const BoundsPair& pair = *b.pair;
  const TimeScale& ts = problem.scale();
  const std::size_t n = problem.dims();
  os << 't';
  for (std::size_t i = 0; i < n; ++i) os << ",alpha" << i + 1;
  if (pair.beta) {
    for (std::size_t i = 0; i < n; ++i) os << ",beta" << i + 1;
  }
  os << '\n';
  for (std::size_t k = 0; k <= ts.last(); ++k) {
    os << format_number(ts[k]);
    for (std::size_t i = 0; i < n; ++i) os << ',' << format_number(pair.alpha(k, i));
    if (pair.beta) {
      for (std::size_t i = 0; i < n; ++i) os << ',' << format_number((*pair.beta)(k, i));
    }
    os << '\n';
  }
  summary_row(os, "bounds_method", std::string(to_string(method)));
  if (method == BoundsMethod::Lower) {
    summary_row(os, "lower_mode", std::string(to_string(cfg.lower_mode)));
  }
  constants_rows(os, pair.constants);
  summary_row(os, "lower_verified", pair.lower_report.pass ? "true" : "false");
  summary_row(os, "lower_violations", std::to_string(pair.lower_report.violations.size()));
  bool ok = pair.lower_report.pass;
  if (pair.upper_report) {
    summary_row(os, "upper_verified", pair.upper_report->pass ? "true" : "false");
    summary_row(os, "upper_violations", std::to_string(pair.upper_report->violations.size()));
    ok = ok && pair.upper_report->pass;
  }
  spdlog::info("bounds ({}): {}", to_string(method), ok ? "verified" : "verification failed");
  return ok ? kExitOk : kExitFailed;
}

int cmd_quadrature(const RunConfig& cfg, std::ostream& os) {
  if (!cfg.quadrature_expr) throw Error(ErrorCode::ConfigError, "quadrature.expr is required");
  const Expression g = parse_expression(*cfg.quadrature_expr, 0);
  const std::vector<TimeScale> family = build_family(cfg);
  const auto eval = [&g](double t) { return g.evaluate(t, {}); };
  int code = kExitOk;
  try {
    ConvergenceVerdict v;
    if (cfg.quadrature_weight == "class_e") {
      v = check_H2_domination(eval, family);
    } else {
      std::vector<double> partials;
      for (const TimeScale& ts : family) {
        double sum = 0.0;
        for (std::size_t k = 1; k + 1 < ts.last(); ++k) sum += ts.graininess(k) * eval(ts[k]);
        partials.push_back(sum);
      }
      v = classify_sequence(std::move(partials));
    }
    for (std::size_t m = 0; m < family.size(); ++m) {
      os << json{{"kind", "member"},
                 {"points", family[m].size()},
                 {"partial", finite_or_null(v.partial_values[m])}}
                .dump()
         << '\n';
    }
    json line = to_json(v);
    line["kind"] = "quadrature";
    line["weight"] = cfg.quadrature_weight;
    line["expr"] = g.to_string();
    os << line.dump() << '\n';
    code = exit_for(v.verdict);
  } catch (const Error& e) {
    os << json{{"kind", "quadrature"}, {"error", e.what()}}.dump() << '\n';
    code = kExitFailed;
  }
  return code;
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int run(const CliOptions& options) {
  configure_logging();
  RunConfig cfg;
  try {
    cfg = load_config(options.config_path);
    if (options.seed) {
      cfg.seed = *options.seed;
      cfg.resolved["criteria.seed"] = std::to_string(*options.seed);
    }
    if (options.strategy) {
      cfg.solver.strategy = parse_strategy(*options.strategy);
      cfg.resolved["solver.strategy"] = std::string(to_string(cfg.solver.strategy));
    }
    if (options.family) {
      cfg.family = options.family;
      std::string s = "[";
      for (std::size_t i = 0; i < options.family->size(); ++i) {
        s += (i ? ", " : "") + std::to_string((*options.family)[i]);
      }
      cfg.resolved["criteria.family"] = s + "]";
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  }

  try {
    Output out(options.out);
    std::ostream& os = out.stream();
    if (options.command == "check") return cmd_check(cfg, os);
    if (options.command == "solve") return cmd_solve(cfg, os);
    if (options.command == "bounds") return cmd_bounds(cfg, os);
    if (options.command == "quadrature") return cmd_quadrature(cfg, os);
    spdlog::error("unknown command '{}'", options.command);
    return kExitConfig;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitFailed;
  }
}

}  // namespace tsdyn
