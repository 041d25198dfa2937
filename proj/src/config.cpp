#include "tsdyn/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "tsdyn/error.hpp"
#include "tsdyn/expression.hpp"

namespace tsdyn {

namespace {

struct Entry {
  std::string raw;
  std::size_t line = 0;
};

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool known_key(const std::string& key) {
  static const std::set<std::string> fixed = {
      "scale.kind", "scale.a", "scale.end", "scale.n", "scale.q", "scale.K", "scale.points",
      "bc.A", "bc.B", "problem.mode",
      "solver.strategy", "solver.tol_residual", "solver.tol_step", "solver.max_iters",
      "solver.damping",
      "bounds.method", "bounds.m", "bounds.M", "bounds.lower_mode",
      "criteria.family", "criteria.eval_point", "criteria.samples", "criteria.seed",
      "quadrature.expr", "quadrature.weight"};
  static const std::set<std::string> fields = {"expr", "lambda", "mu", "singular", "floor",
                                               "family", "c", "p", "gamma"};
  if (fixed.contains(key)) return true;
  if (key.rfind("f.", 0) != 0) return false;
  const std::size_t dot = key.find('.', 2);
  if (dot == std::string::npos || dot == 2) return false;
  const std::string idx = key.substr(2, dot - 2);
  if (!std::all_of(idx.begin(), idx.end(), [](unsigned char c) { return std::isdigit(c); }) ||
      idx[0] == '0') {
    return false;
  }
  return fields.contains(key.substr(dot + 1));
}

class Table {
 public:
  explicit Table(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string body = trim(strip_comment(line));
      if (body.empty()) continue;
      if (body.front() == '[' && body.find('=') == std::string::npos) {
        if (body.back() != ']' || body.size() < 3) fail("section header", lineno, "malformed");
        section = trim(body.substr(1, body.size() - 2)) + ".";
        continue;
      }
      const std::size_t eq = body.find('=');
      if (eq == std::string::npos) fail(body, lineno, "expected 'key = value'");
      const std::string key = section + trim(body.substr(0, eq));
      const std::string value = trim(body.substr(eq + 1));
      if (!known_key(key)) fail(key, lineno, "unknown key");
      if (value.empty()) fail(key, lineno, "missing value");
      if (entries_.contains(key)) fail(key, lineno, "duplicate key");
      entries_[key] = Entry{value, lineno};
    }
  }

  [[noreturn]] static void fail(const std::string& key, std::size_t line, const std::string& what) {
    throw Error(ErrorCode::ConfigError, key + " (line " + std::to_string(line) + "): " + what, line);
  }

  bool has(const std::string& key) const { return entries_.contains(key); }
  const Entry& entry(const std::string& key) const { return entries_.at(key); }

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, e] : entries_) {
      if (k.rfind(prefix, 0) == 0) out.push_back(k);
    }
    return out;
  }

  double number(const std::string& key, double fallback) const {
    return has(key) ? parse_number(key, entry(key).raw) : fallback;
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const double v = number(key, 0.0);
    if (v < 0.0 || v != std::floor(v) || v > 1e15) fail(key, entry(key).line, "expected a count");
    return static_cast<std::size_t>(v);
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const std::string& raw = entry(key).raw;
    if (raw.front() == '"') {
      if (raw.size() < 2 || raw.back() != '"') fail(key, entry(key).line, "unterminated string");
      return raw.substr(1, raw.size() - 2);
    }
    return raw;
  }

  std::vector<double> array(const std::string& key) const {
    const Entry& e = entry(key);
    const std::string& raw = e.raw;
    if (raw.front() != '[' || raw.back() != ']') fail(key, e.line, "expected [a, b, ...]");
    std::vector<double> out;
    const std::string inner = trim(raw.substr(1, raw.size() - 2));
    if (inner.empty()) return out;
    std::istringstream in(inner);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_number(key, trim(item)));
    return out;
  }

  std::optional<std::vector<double>> maybe_array(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return array(key);
  }

 private:
  double parse_number(const std::string& key, const std::string& raw) const {
    const std::size_t line = has(key) ? entry(key).line : 0;
    std::string s = lower(raw);
    if (s == "true") return 1.0;
    if (s == "false") return 0.0;
    if (!s.empty() && s.front() == '+') s.erase(0, 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
      fail(key, line, "expected a number, got '" + raw + "'");
    }
    return v;
  }

  std::map<std::string, Entry> entries_;
};

ScaleKind parse_kind(const Table& t) {
  const std::string kind = lower(t.text("scale.kind", "uniform"));
  if (kind == "uniform") return ScaleKind::Uniform;
  if (kind == "quantum") return ScaleKind::Quantum;
  if (kind == "explicit") return ScaleKind::Explicit;
  Table::fail("scale.kind", t.entry("scale.kind").line, "expected uniform, quantum or explicit");
}

void resolve(RunConfig& cfg) {
  auto& r = cfg.resolved;
  r["scale.kind"] = lower(std::string(to_string(cfg.scale.kind)));
  switch (cfg.scale.kind) {
    case ScaleKind::Uniform:
      r["scale.a"] = fmt(cfg.scale.a);
      r["scale.end"] = fmt(cfg.scale.end);
      r["scale.n"] = std::to_string(cfg.scale.n);
      break;
    case ScaleKind::Quantum:
      r["scale.q"] = fmt(cfg.scale.q);
      r["scale.K"] = std::to_string(cfg.scale.K);
      break;
    case ScaleKind::Explicit:
      r["scale.points"] = fmt(cfg.scale.points);
      break;
  }
  for (std::size_t i = 0; i < cfg.f.size(); ++i) {
    const ComponentSpec& c = cfg.f[i];
    const std::string p = "f." + std::to_string(i + 1) + ".";
    if (c.expr) r[p + "expr"] = "\"" + *c.expr + "\"";
    if (c.emden_fowler) {
      r[p + "family"] = "emden_fowler";
      r[p + "c"] = fmt(c.c);
      r[p + "p"] = fmt(c.p);
      r[p + "gamma"] = fmt(c.gamma);
    }
    if (c.lambda) r[p + "lambda"] = fmt(*c.lambda);
    if (c.mu) r[p + "mu"] = fmt(*c.mu);
    if (c.singular) r[p + "singular"] = fmt(*c.singular);
    if (c.floor) r[p + "floor"] = fmt(*c.floor);
  }
  r["bc.A"] = fmt(cfg.A);
  r["bc.B"] = fmt(cfg.B);
  r["problem.mode"] = cfg.mode == ProblemMode::General ? "general" : "zero_dirichlet";
  r["solver.strategy"] = std::string(to_string(cfg.solver.strategy));
  r["solver.tol_residual"] = fmt(cfg.solver.tol_residual);
  r["solver.tol_step"] = fmt(cfg.solver.tol_step);
  r["solver.max_iters"] = std::to_string(cfg.solver.max_iters);
  r["solver.damping"] = fmt(cfg.solver.damping);
  r["bounds.method"] = std::string(to_string(cfg.bounds));
  if (!cfg.m.empty()) r["bounds.m"] = fmt(cfg.m);
  if (!cfg.M.empty()) r["bounds.M"] = fmt(cfg.M);
  r["bounds.lower_mode"] = lower(std::string(to_string(cfg.lower_mode)));
  if (cfg.family) {
    std::vector<double> fam(cfg.family->begin(), cfg.family->end());
    r["criteria.family"] = fmt(fam);
  }
  if (cfg.eval_point) r["criteria.eval_point"] = fmt(*cfg.eval_point);
  r["criteria.samples"] = std::to_string(cfg.samples);
  r["criteria.seed"] = std::to_string(cfg.seed);
  if (cfg.quadrature_expr) {
    r["quadrature.expr"] = "\"" + *cfg.quadrature_expr + "\"";
    r["quadrature.weight"] = cfg.quadrature_weight;
  }
}

}  // namespace

std::string_view to_string(BoundsMethod m) {
  switch (m) {
    case BoundsMethod::Auto: return "auto";
    case BoundsMethod::Construct: return "construct";
    case BoundsMethod::Lower: return "lower";
    case BoundsMethod::Constants: return "constants";
    case BoundsMethod::None: return "none";
  }
  return "?";
}

RunConfig parse_config(std::string_view text) {
  const Table t(text);
  RunConfig cfg;

  cfg.scale.kind = parse_kind(t);
  cfg.scale.a = t.number("scale.a", 0.0);
  cfg.scale.end = t.number("scale.end", 1.0);
  cfg.scale.n = t.count("scale.n", 65);
  cfg.scale.q = t.number("scale.q", 2.0);
  cfg.scale.K = t.count("scale.K", 10);
  if (cfg.scale.kind == ScaleKind::Explicit) {
    if (!t.has("scale.points")) Table::fail("scale.points", 0, "required for explicit scales");
    cfg.scale.points = t.array("scale.points");
  }

  std::set<std::size_t> indices;
  for (const std::string& key : t.keys_with_prefix("f.")) {
    indices.insert(std::stoul(key.substr(2, key.find('.', 2) - 2)));
  }
  if (!indices.empty() && *indices.rbegin() != indices.size()) {
    Table::fail("f." + std::to_string(*indices.rbegin()), 0,
                "components must be numbered 1.." + std::to_string(indices.size()));
  }
  const std::size_t n = indices.size();
  for (std::size_t i = 1; i <= n; ++i) {
    const std::string p = "f." + std::to_string(i) + ".";
    ComponentSpec c;
    if (t.has(p + "expr")) c.expr = t.text(p + "expr", "");
    if (t.has(p + "family")) {
      const std::string fam = lower(t.text(p + "family", ""));
      if (fam != "emden_fowler") Table::fail(p + "family", t.entry(p + "family").line,
                                             "only emden_fowler is supported");
      c.emden_fowler = true;
      c.c = t.number(p + "c", 1.0);
      c.p = t.number(p + "p", 0.0);
      if (!t.has(p + "gamma")) Table::fail(p + "gamma", t.entry(p + "family").line, "required");
      c.gamma = t.array(p + "gamma");
      if (c.gamma.size() != n) {
        Table::fail(p + "gamma", t.entry(p + "gamma").line,
                    "needs " + std::to_string(n) + " exponents");
      }
    }
    if (c.expr.has_value() == c.emden_fowler) {
      Table::fail(p + "expr", 0, "give exactly one of expr or family");
    }
    c.lambda = t.maybe_array(p + "lambda");
    c.mu = t.maybe_array(p + "mu");
    c.singular = t.maybe_array(p + "singular");
    if (t.has(p + "floor")) c.floor = t.number(p + "floor", 0.0);
    for (const auto& [field, v] : {std::pair{"lambda", &c.lambda}, std::pair{"mu", &c.mu},
                                   std::pair{"singular", &c.singular}}) {
      if (*v && (*v)->size() != n) {
        Table::fail(p + field, t.entry(p + field).line,
                    "needs " + std::to_string(n) + " entries");
      }
    }
    if (c.lambda.has_value() != c.mu.has_value()) {
      Table::fail(p + (c.lambda ? "mu" : "lambda"), 0, "lambda and mu go together");
    }
    cfg.f.push_back(std::move(c));
  }

  const std::string mode = lower(t.text("problem.mode", "general"));
  if (mode == "general") {
    cfg.mode = ProblemMode::General;
  } else if (mode == "zero_dirichlet" || mode == "zero-dirichlet") {
    cfg.mode = ProblemMode::ZeroDirichlet;
  } else {
    Table::fail("problem.mode", t.entry("problem.mode").line, "expected general or zero_dirichlet");
  }
  cfg.A = t.has("bc.A") ? t.array("bc.A") : std::vector<double>(n, 0.0);
  cfg.B = t.has("bc.B") ? t.array("bc.B") : std::vector<double>(n, 0.0);
  for (const char* key : {"bc.A", "bc.B"}) {
    const auto& v = std::string_view(key) == "bc.A" ? cfg.A : cfg.B;
    if (v.size() != n) {
      Table::fail(key, t.has(key) ? t.entry(key).line : 0,
                  "needs " + std::to_string(n) + " entries");
    }
  }

  try {
    cfg.solver.strategy = parse_strategy(t.text("solver.strategy", "PICARD"));
  } catch (const Error& e) {
    Table::fail("solver.strategy", t.entry("solver.strategy").line, e.what());
  }
  cfg.solver.tol_residual = t.number("solver.tol_residual", cfg.solver.tol_residual);
  cfg.solver.tol_step = t.number("solver.tol_step", cfg.solver.tol_step);
  cfg.solver.max_iters = t.count("solver.max_iters", cfg.solver.max_iters);
  cfg.solver.damping = t.number("solver.damping", cfg.solver.damping);
  try {
    cfg.solver.validate();
  } catch (const Error& e) {
    Table::fail("solver", 0, e.what());
  }

  const std::string method = lower(t.text("bounds.method", "auto"));
  bool matched = false;
  for (BoundsMethod m : {BoundsMethod::Auto, BoundsMethod::Construct, BoundsMethod::Lower,
                         BoundsMethod::Constants, BoundsMethod::None}) {
    if (to_string(m) == method) {
      cfg.bounds = m;
      matched = true;
    }
  }
  if (!matched) {
    Table::fail("bounds.method", t.entry("bounds.method").line,
                "expected auto, construct, lower, constants or none");
  }
  if (t.has("bounds.m")) cfg.m = t.array("bounds.m");
  if (t.has("bounds.M")) cfg.M = t.array("bounds.M");
  if (cfg.bounds == BoundsMethod::Constants && (cfg.m.size() != n || cfg.M.size() != n)) {
    Table::fail("bounds.m", t.entry("bounds.method").line,
                "constants method needs bounds.m and bounds.M with " + std::to_string(n) +
                    " entries");
  }
  const std::string lm = lower(t.text("bounds.lower_mode", "with_mu_ii"));
  if (lm == "with_mu_ii") {
    cfg.lower_mode = LowerMode::WithMuII;
  } else if (lm == "without") {
    cfg.lower_mode = LowerMode::Without;
  } else {
    Table::fail("bounds.lower_mode", t.entry("bounds.lower_mode").line,
                "expected with_mu_ii or without");
  }

  if (t.has("criteria.family")) {
    std::vector<std::size_t> fam;
    for (double v : t.array("criteria.family")) {
      if (v < 1.0 || v != std::floor(v)) {
        Table::fail("criteria.family", t.entry("criteria.family").line, "expected counts");
      }
      fam.push_back(static_cast<std::size_t>(v));
    }
    cfg.family = std::move(fam);
  }
  if (t.has("criteria.eval_point")) cfg.eval_point = t.number("criteria.eval_point", 0.0);
  cfg.samples = t.count("criteria.samples", cfg.samples);
  cfg.seed = t.count("criteria.seed", cfg.seed);

  if (t.has("quadrature.expr")) cfg.quadrature_expr = t.text("quadrature.expr", "");
  cfg.quadrature_weight = lower(t.text("quadrature.weight", "none"));
  if (cfg.quadrature_weight != "none" && cfg.quadrature_weight != "class_e") {
    Table::fail("quadrature.weight", t.entry("quadrature.weight").line,
                "expected none or class_e");
  }

  // Expressions are parsed here so that syntax errors surface as config errors.
  for (std::size_t i = 0; i < n; ++i) {
    if (!cfg.f[i].expr) continue;
    const std::string key = "f." + std::to_string(i + 1) + ".expr";
    try {
      (void)parse_expression(*cfg.f[i].expr, n);
    } catch (const Error& e) {
      Table::fail(key, t.entry(key).line, e.what());
    }
  }
  if (cfg.quadrature_expr) {
    try {
      (void)parse_expression(*cfg.quadrature_expr, 0);
    } catch (const Error& e) {
      Table::fail("quadrature.expr", t.entry("quadrature.expr").line, e.what());
    }
  }
  resolve(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

TimeScale build_scale(const RunConfig& cfg) {
  try {
    switch (cfg.scale.kind) {
      case ScaleKind::Uniform: return TimeScale::uniform(cfg.scale.a, cfg.scale.end, cfg.scale.n);
      case ScaleKind::Quantum: return TimeScale::quantum(cfg.scale.q, cfg.scale.K);
      case ScaleKind::Explicit: return TimeScale::from_points(cfg.scale.points);
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("scale: ") + e.what());
  }
  throw Error(ErrorCode::ConfigError, "scale: unknown kind");
}

DirichletProblem build_problem(const RunConfig& cfg) {
  const std::size_t n = cfg.f.size();
  if (n == 0) throw Error(ErrorCode::ConfigError, "f.1: no nonlinearity given");
  std::vector<Nonlinearity> fs;
  for (std::size_t i = 0; i < n; ++i) {
    const ComponentSpec& c = cfg.f[i];
    const std::string key = "f." + std::to_string(i + 1);
    try {
      Nonlinearity f = c.emden_fowler ? emden_fowler(c.c, c.p, c.gamma, i)
                                      : Nonlinearity(n, i, parse_expression(*c.expr, n));
      if (c.lambda) {
        const bool boundary = *c.lambda == *c.mu;
        f.declare_exponents({*c.lambda, *c.mu, boundary});
      }
      if (c.singular) {
        std::vector<bool> flags;
        for (double v : *c.singular) flags.push_back(v != 0.0);
        f.set_singular(std::move(flags));
      }
      if (c.floor) f.set_domain_floor(*c.floor);
      fs.push_back(std::move(f));
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, key + ": " + e.what());
    }
  }
  try {
    return DirichletProblem(build_scale(cfg), std::move(fs), cfg.A, cfg.B, cfg.mode);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, std::string("problem: ") + e.what());
  }
}

std::vector<TimeScale> build_family(const RunConfig& cfg) {
  try {
    switch (cfg.scale.kind) {
      case ScaleKind::Uniform:
        return cfg.family ? uniform_family(cfg.scale.a, cfg.scale.end, *cfg.family)
                          : uniform_family(cfg.scale.a, cfg.scale.end);
      case ScaleKind::Quantum:
        return cfg.family ? quantum_family(cfg.scale.q, *cfg.family) : quantum_family(cfg.scale.q);
      case ScaleKind::Explicit:
        break;
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("criteria.family: ") + e.what());
  }
  throw Error(ErrorCode::ConfigError, "explicit scales have no refinement family");
}

}  // namespace tsdyn
