#include "tsdyn/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "tsdyn/error.hpp"
#include "tsdyn/green.hpp"

namespace tsdyn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPositiveFloor = 1e-300;
constexpr double kSampleTol = 1e-12;
constexpr double kVerifyTol = 1e-9;
constexpr std::size_t kMinFamily = 4;

struct MemberSums {
  std::vector<double> sums;
  bool negative = false;
};

// Evaluates fn on every family member; members are independent and run in
// parallel. Results keep the family order.
template <class Fn>
std::vector<MemberSums> over_family(const std::vector<TimeScale>& family, Fn fn) {
  if (family.size() < kMinFamily) {
    throw Error(ErrorCode::FamilyTooShort,
                "refinement family needs at least 4 members, got " + std::to_string(family.size()));
  }
  std::vector<MemberSums> out(family.size());
  std::vector<std::exception_ptr> errors(family.size());
  const auto count = static_cast<std::ptrdiff_t>(family.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t m = 0; m < count; ++m) {
    const auto idx = static_cast<std::size_t>(m);
    try {
      out[idx] = fn(family[idx]);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<ConvergenceVerdict> verdicts_per_component(const std::vector<MemberSums>& members,
                                                       std::size_t n) {
  std::vector<ConvergenceVerdict> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> partials;
    bool negative = false;
    for (const MemberSums& m : members) {
      partials.push_back(m.sums[i]);
      negative = negative || m.negative;
    }
    ConvergenceVerdict v = classify_sequence(std::move(partials));
    v.positive = v.positive && !negative;
    out.push_back(std::move(v));
  }
  return out;
}

double e_at(const TimeScale& ts, std::size_t k) {
  const double a = ts.a();
  const double end = ts.sigma2_b();
  return (ts[k] - a) * (end - ts[k]) / (end - a);
}

std::vector<double> aitken_row(const std::vector<double>& x) {
  std::vector<double> next;
  for (std::size_t m = 0; m + 2 < x.size(); ++m) {
    const double d1 = x[m + 1] - x[m];
    const double d2 = x[m + 2] - x[m + 1];
    const double den = d2 - d1;
    const double scale = std::max({std::abs(x[m]), std::abs(x[m + 1]), std::abs(x[m + 2])});
    if (den == 0.0 || std::abs(den) <= 1e-14 * scale) {
      next.push_back(x[m + 2]);
    } else {
      next.push_back(x[m + 2] - d2 * d2 / den);
    }
  }
  return next;
}

const ExponentDeclaration& declared(const Nonlinearity& f) {
  const auto& decl = f.exponents();
  if (!decl) {
    throw Error(ErrorCode::ShapeViolation,
                "f" + std::to_string(f.component() + 1) + " has no exponent declaration");
  }
  return *decl;
}

void require_zero_data(const DirichletProblem& problem) {
  for (std::size_t i = 0; i < problem.dims(); ++i) {
    if (problem.A()[i] != 0.0 || problem.B()[i] != 0.0) {
      throw Error(ErrorCode::DomainViolation, "construction needs zero boundary data", i);
    }
  }
}

void require_convergent(const std::vector<ConvergenceVerdict>& verdicts, std::string_view name) {
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i].verdict != Verdict::Convergent || !verdicts[i].positive) {
      throw Error(ErrorCode::CriterionNotSatisfied,
                  std::string(name) + " is " + std::string(to_string(verdicts[i].verdict)) +
                      " for component " + std::to_string(i + 1),
                  i);
    }
  }
}

void require_grid(const DirichletProblem& problem, const GridFunction& u) {
  if (!u.scale().same_as(problem.scale())) {
    throw Error(ErrorCode::ScaleMismatch, "function lives on another scale");
  }
  if (u.components() != problem.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "function has the wrong number of components");
  }
  if (!u.covers(0, problem.scale().last())) {
    throw Error(ErrorCode::SupportMismatch, "function must cover the whole scale");
  }
}

InequalityReport verify(const DirichletProblem& problem, const GridFunction& u, bool lower) {
  require_grid(problem, u);
  const TimeScale& ts = problem.scale();
  const std::size_t n = problem.dims();
  const GridFunction lap = delta_second(u);
  InequalityReport report;
  report.worst_slack = -kInf;
  for (std::size_t k = 0; k < ts.equation_count(); ++k) {
    const auto x = u.at(k + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double lhs = -lap(k, i);
      double excess = kInf;
      double tol = 0.0;
      try {
        const double rhs = problem.rhs(i, k, x);
        excess = lower ? lhs - rhs : rhs - lhs;
        tol = kVerifyTol * (1.0 + std::abs(lhs) + std::abs(rhs));
      } catch (const Error&) {
      }
      report.worst_slack = std::max(report.worst_slack, excess);
      if (excess > tol) report.violations.push_back({k, i, excess});
    }
  }
  const std::size_t N = ts.last();
  const bool equality = problem.mode() == ProblemMode::ZeroDirichlet;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [k, target] : {std::pair{std::size_t{0}, problem.A()[i]},
                                   std::pair{N, problem.B()[i]}}) {
      const double v = u(k, i);
      const double tol = kVerifyTol * (1.0 + std::abs(target));
      const bool ok = equality ? std::abs(v - target) <= tol
                               : (lower ? v <= target + tol : v >= target - tol);
      if (!ok) report.boundary_ok = false;
    }
  }
  report.pass = report.violations.empty() && report.boundary_ok;
  return report;
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(std::log(lo), std::log(hi));
  return std::exp(dist(rng));
}

double relative_excess(double low, double mid, double high) {
  const double scale = std::max({std::abs(low), std::abs(mid), std::abs(high), kPositiveFloor});
  return std::max(low - mid, mid - high) / scale;
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Convergent: return "CONVERGENT";
    case Verdict::Divergent: return "DIVERGENT";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

std::string_view to_string(LowerMode m) {
  return m == LowerMode::WithMuII ? "WITH_MU_II" : "WITHOUT";
}

ConvergenceVerdict classify_sequence(std::vector<double> partials) {
  if (partials.size() < kMinFamily) {
    throw Error(ErrorCode::FamilyTooShort, "need at least 4 partial values");
  }
  ConvergenceVerdict v;
  const std::size_t n = partials.size();
  v.positive = std::any_of(partials.begin(), partials.end(),
                           [](double x) { return x >= kPositiveFloor; });
  for (std::size_t m = 0; m + 2 < n; ++m) {
    const double prev = std::abs(partials[m + 1] - partials[m]);
    const double next = std::abs(partials[m + 2] - partials[m + 1]);
    if (prev == 0.0) {
      v.ratio_trail.push_back(next == 0.0 ? 0.0 : kInf);
    } else {
      v.ratio_trail.push_back(next / prev);
    }
  }
  v.partial_values = std::move(partials);
  const auto& I = v.partial_values;

  if (std::any_of(I.begin(), I.end(), [](double x) {
        return !std::isfinite(x) || std::abs(x) > kDivergenceThreshold;
      })) {
    v.verdict = Verdict::Divergent;
    v.limit_estimate = I.back();
    v.cauchy_tail = kInf;
    return v;
  }

  std::vector<double> row = I;
  std::vector<double> prev_row;
  while (row.size() >= 3) {
    prev_row = row;
    row = aitken_row(row);
  }
  v.limit_estimate = row.back();
  v.cauchy_tail = row.size() >= 2 ? std::abs(row.back() - row[row.size() - 2])
                                  : std::abs(row.back() - prev_row.back());

  const std::size_t tail_len = std::min<std::size_t>(3, v.ratio_trail.size());
  const bool ratios_small = std::all_of(v.ratio_trail.end() - static_cast<std::ptrdiff_t>(tail_len),
                                        v.ratio_trail.end(),
                                        [](double r) { return r < kRatioThreshold; });
  if (ratios_small && v.cauchy_tail <= kTailThreshold * std::abs(v.limit_estimate)) {
    v.verdict = Verdict::Convergent;
    return v;
  }

  bool growing = true;
  for (std::size_t m = n - 3; m < n; ++m) growing = growing && std::abs(I[m]) > std::abs(I[m - 1]);
  if (growing && std::abs(I[n - 1]) > kGrowthFactor * std::abs(I[n - 4])) {
    v.verdict = Verdict::Divergent;
    return v;
  }
  v.verdict = Verdict::Inconclusive;
  return v;
}

std::vector<TimeScale> uniform_family(double a, double end, std::vector<std::size_t> sizes) {
  std::vector<TimeScale> family;
  for (std::size_t n : sizes) family.push_back(TimeScale::uniform(a, end, n));
  return family;
}

std::vector<TimeScale> quantum_family(double q, std::vector<std::size_t> depths) {
  std::vector<TimeScale> family;
  for (std::size_t K : depths) family.push_back(TimeScale::quantum(q, K));
  return family;
}

ConvergenceVerdict check_H2_domination(const std::function<double(double)>& g,
                                       const std::vector<TimeScale>& family) {
  const auto members = over_family(family, [&](const TimeScale& ts) {
    MemberSums out{{0.0}};
    const double a = ts.a();
    const double end = ts.sigma2_b();
    for (std::size_t k = 1; k + 1 < ts.last(); ++k) {
      const double s = ts[k];
      const double sig = ts[k + 1];
      const double gv = g(s);
      if (!std::isfinite(gv)) {
        throw Error(ErrorCode::NonFiniteResult, "bound g is not finite", k);
      }
      if (gv < 0.0) out.negative = true;
      out.sums[0] += ts.graininess(k) * (sig - a) * (end - s) * gv;
    }
    return out;
  });
  return verdicts_per_component(members, 1).front();
}

Htilde2Report check_Htilde2(const Nonlinearity& f, const TimeScale& scale, std::size_t samples,
                            std::uint64_t seed) {
  const ExponentDeclaration& decl = declared(f);
  Htilde2Report report;
  report.shape_ok = f.exponent_shape_ok();
  report.boundary = decl.boundary;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_t(1, scale.last() - 1);
  std::uniform_int_distribution<std::size_t> pick_j(0, f.arity() - 1);
  const double floor = f.domain_floor();
  std::vector<double> x(f.arity());
  for (std::size_t s = 0; s < samples; ++s) {
    const double t = scale[pick_t(rng)];
    for (double& xj : x) xj = log_uniform(rng, 10.0 * floor, 1e3);
    const std::size_t j = pick_j(rng);
    const bool small = s % 2 == 0;
    double c = small ? log_uniform(rng, 1e-4, 1.0) : log_uniform(rng, 1.0, 1e4);
    if (small) c = std::max(c, 2.0 * floor / x[j]);
    const double base = f.evaluate(t, x);
    std::vector<double> y = x;
    y[j] *= c;
    const double scaled = f.evaluate(t, y);
    const double cl = std::pow(c, decl.lambda[j]);
    const double cm = std::pow(c, decl.mu[j]);
    const double low = (small ? cm : cl) * base;
    const double high = (small ? cl : cm) * base;
    const double excess = relative_excess(low, scaled, high);
    if (excess > kSampleTol) {
      report.pass = false;
      if (excess > report.worst_violation) {
        report.worst_violation = excess;
        // lhs > rhs is the violated side.
        report.witness = scaled > high ? Witness{t, x, c, j, scaled, high}
                                       : Witness{t, x, c, j, low, scaled};
      }
    }
  }
  return report;
}

MonotoneReport check_H3_monotone(const Nonlinearity& f, const Band& band, std::size_t samples,
                                 std::uint64_t seed) {
  const TimeScale& ts = band.alpha.scale();
  MonotoneReport report;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_k(0, ts.equation_count() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = f.arity();
  std::vector<double> x(n), y(n), lo(n), hi(n);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t k = pick_k(rng);
    const double t = ts[k];
    for (std::size_t j = 0; j < n; ++j) {
      lo[j] = band.alpha(k + 1, j);
      hi[j] = band.beta(k + 1, j);
      x[j] = lo[j] + unit(rng) * (hi[j] - lo[j]);
      y[j] = x[j] + unit(rng) * (hi[j] - x[j]);
    }
    double fa = 0.0, fb = 0.0, fx = 0.0, fy = 0.0;
    try {
      fa = f.evaluate(t, lo);
      fb = f.evaluate(t, hi);
      fx = f.evaluate(t, x);
      fy = f.evaluate(t, y);
    } catch (const Error&) {
      ++report.skipped;
      continue;
    }
    const double e1 = relative_excess(fa, fx, fb);
    const double e2 = (fx - fy) / std::max({std::abs(fx), std::abs(fy), kPositiveFloor});
    const double excess = std::max(e1, e2);
    if (excess > kSampleTol) {
      report.pass = false;
      if (excess > report.worst_violation) {
        report.worst_violation = excess;
        if (e1 < e2) {
          report.witness = Witness{t, y, 1.0, f.component(), fx, fy};
        } else {
          report.witness = fx > fb ? Witness{t, x, 1.0, f.component(), fx, fb}
                                   : Witness{t, x, 1.0, f.component(), fa, fx};
        }
      }
    }
  }
  if (report.skipped == samples) report.pass = false;
  return report;
}

LipschitzReport check_H3bar_lipschitz(const Nonlinearity& f, const Band& band, std::size_t samples,
                                      std::uint64_t seed) {
  const TimeScale& ts = band.alpha.scale();
  LipschitzReport report;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_k(0, ts.equation_count() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = f.arity();
  std::vector<double> x(n), y(n);
  std::size_t used = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t k = pick_k(rng);
    const double t = ts[k];
    const bool edge = s % 2 == 0;
    const double v = log_uniform(rng, 1e-6, 1.0);
    double dist = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double lo = band.alpha(k + 1, j);
      const double hi = band.beta(k + 1, j);
      y[j] = edge ? lo : lo + unit(rng) * (hi - lo);
      x[j] = y[j] + (hi - y[j]) * v;
      dist = std::max(dist, x[j] - y[j]);
    }
    if (dist <= 0.0) continue;
    try {
      const double slope = std::abs(f.evaluate(t, x) - f.evaluate(t, y)) / dist;
      report.M_estimate = std::max(report.M_estimate, slope);
      ++used;
    } catch (const Error&) {
      ++report.skipped;
    }
  }
  report.pass = used > 0 && std::isfinite(report.M_estimate);
  return report;
}

std::vector<ConvergenceVerdict> criterion_sufficient(const DirichletProblem& problem,
                                                     const std::vector<TimeScale>& family) {
  const std::size_t n = problem.dims();
  const auto members = over_family(family, [&](const TimeScale& ts) {
    const DirichletProblem p = problem.with_scale(ts);
    MemberSums out{std::vector<double>(n, 0.0)};
    for (std::size_t k = 1; k + 1 < ts.last(); ++k) {
      const std::vector<double> E(n, e_at(ts, k + 1));
      for (std::size_t i = 0; i < n; ++i) {
        const double v = p.rhs(i, k, E);
        if (v < 0.0) out.negative = true;
        out.sums[i] += ts.graininess(k) * v;
      }
    }
    return out;
  });
  return verdicts_per_component(members, n);
}

std::vector<ConvergenceVerdict> criterion_necessary(const DirichletProblem& problem,
                                                    const std::vector<TimeScale>& family,
                                                    std::optional<double> eval_point) {
  const std::size_t n = problem.dims();
  const auto members = over_family(family, [&](const TimeScale& ts) {
    const double v = eval_point.value_or(ts.sigma2_b());
    if (!(v > 0.0) || !(ts.sigma2_b() > 0.0)) {
      throw Error(ErrorCode::NonpositiveEndpoint, "sigma^2(b) must be positive");
    }
    const DirichletProblem p = problem.with_scale(ts);
    const std::vector<double> pinned(n, v);
    const double a = ts.a();
    const double sb = ts.sigma_b();
    MemberSums out{std::vector<double>(n, 0.0)};
    for (std::size_t k = 1; k + 1 < ts.last(); ++k) {
      const double sig = ts[k + 1];
      const double w = ts.graininess(k) * (sig - a) * (sb - sig);
      for (std::size_t i = 0; i < n; ++i) {
        const double fv = p.rhs(i, k, pinned);
        if (fv < 0.0) out.negative = true;
        out.sums[i] += w * fv;
      }
    }
    return out;
  });
  return verdicts_per_component(members, n);
}

InequalityReport verify_lower(const DirichletProblem& problem, const GridFunction& alpha) {
  return verify(problem, alpha, true);
}

InequalityReport verify_upper(const DirichletProblem& problem, const GridFunction& beta) {
  return verify(problem, beta, false);
}

Band BoundsPair::band() const {
  if (!beta) throw Error(ErrorCode::BracketViolation, "no upper solution in this pair");
  return Band{alpha, *beta};
}

BoundsPair construct_bounds(const DirichletProblem& problem, const std::vector<TimeScale>& family) {
  require_zero_data(problem);
  const std::size_t n = problem.dims();
  for (std::size_t i = 0; i < n; ++i) {
    const Nonlinearity& f = problem.f(i);
    const ExponentDeclaration& decl = declared(f);
    if (!f.exponent_shape_ok() && !decl.boundary) {
      throw Error(ErrorCode::ShapeViolation,
                  "exponents of f" + std::to_string(i + 1) + " violate the shape rules", i);
    }
    if (!(decl.mu[i] < 1.0)) {
      throw Error(ErrorCode::ShapeViolation, "mu_ii must be below 1", i);
    }
  }
  require_convergent(criterion_sufficient(problem, family), "sufficient criterion");

  const TimeScale& ts = problem.scale();
  const double a = ts.a();
  const double end = ts.sigma2_b();
  const double D = end - a;
  GridFunction h = GridFunction::zeros(ts, n, 0, ts.equation_count() - 1);
  for (std::size_t k = 0; k < ts.equation_count(); ++k) {
    const std::vector<double> E(n, e_at(ts, k + 1));
    for (std::size_t i = 0; i < n; ++i) h(k, i) = problem.rhs(i, k, E);
  }
  const GridFunction y = green_apply(ts, h);

  BoundsConstants K;
  K.I1.assign(n, 0.0);
  K.I2.assign(n, 0.0);
  for (std::size_t k = 0; k < ts.equation_count(); ++k) {
    const double mu = ts.graininess(k);
    const double inner = (ts[k] - a) * (end - ts[k + 1]) / D;
    for (std::size_t i = 0; i < n; ++i) {
      K.I1[i] += mu * inner * h(k, i) / D;
      K.I2[i] += mu * h(k, i);
    }
  }
  double C = 1.0;
  for (std::size_t i = 0; i < n; ++i) C = std::max({C, 1.0 / K.I1[i], K.I2[i]});
  K.C = C;
  for (std::size_t i = 0; i < n; ++i) {
    const ExponentDeclaration& decl = *problem.f(i).exponents();
    double spread = 0.0;
    double low = 1.0;
    double high = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      spread += decl.lambda[j] - decl.mu[j];
      low *= std::pow(K.I2[j], decl.lambda[j]);
      high *= std::pow(K.I1[j], decl.lambda[j]);
    }
    const double power = 1.0 / (1.0 - decl.mu[i]);
    K.k1.push_back(std::min(1.0, std::pow(std::pow(C, spread) * low, power)));
    K.k2.push_back(std::max(1.0, std::pow(std::pow(C, -spread) * high, power)));
  }

  GridFunction alpha = y;
  GridFunction beta = y;
  for (std::size_t k = 0; k <= ts.last(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      alpha(k, i) = K.k1[i] * y(k, i);
      beta(k, i) = K.k2[i] * y(k, i);
    }
  }
  InequalityReport lower = verify_lower(problem, alpha);
  InequalityReport upper = verify_upper(problem, beta);
  spdlog::debug("construct_bounds: C = {:.6g}, lower {}, upper {}", C, lower.pass ? "ok" : "FAILED",
               upper.pass ? "ok" : "FAILED");
  return BoundsPair{std::move(alpha), std::move(beta), std::move(K), std::move(lower),
                    std::move(upper)};
}

BoundsPair construct_lower(const DirichletProblem& problem, const std::vector<TimeScale>& family,
                           LowerMode mode, std::optional<double> eval_point) {
  require_zero_data(problem);
  const std::size_t n = problem.dims();
  for (std::size_t i = 0; i < n; ++i) {
    const ExponentDeclaration& decl = declared(problem.f(i));
    if (!(decl.mu[i] < 1.0)) throw Error(ErrorCode::ShapeViolation, "mu_ii must be below 1", i);
  }
  require_convergent(criterion_necessary(problem, family, eval_point), "necessary criterion");

  const TimeScale& ts = problem.scale();
  const double v = eval_point.value_or(ts.sigma2_b());
  if (!(v > 0.0)) throw Error(ErrorCode::NonpositiveEndpoint, "sigma^2(b) must be positive");
  const double a = ts.a();
  const double end = ts.sigma2_b();
  const double D = end - a;
  const std::vector<double> pinned(n, v);

  BoundsConstants K;
  K.eval_point = v;
  GridFunction h = GridFunction::zeros(ts, n, 0, ts.equation_count() - 1);
  K.L1.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu_ii = problem.f(i).exponents()->mu[i];
    const double eta = mode == LowerMode::WithMuII ? mu_ii : 1.0;
    for (std::size_t k = 0; k < ts.equation_count(); ++k) {
      const double sig = ts[k + 1];
      const double fv = problem.rhs(i, k, pinned);
      const double w = (sig - a) * (end - sig) / (D * D);
      h(k, i) = std::pow(w, eta) * fv;
      K.L1[i] += ts.graininess(k) * (sig - a) * std::pow(end - sig, 1.0 + mu_ii) /
                 std::pow(D, 2.0 * mu_ii) * fv / D;
    }
  }
  const GridFunction g = green_apply(ts, h);

  double C2 = kInf;
  for (std::size_t i = 0; i < n; ++i) C2 = std::min(C2, 1.0 / (v * std::max(K.L1[i], 1.0)));
  K.C2 = C2;
  for (std::size_t i = 0; i < n; ++i) {
    const ExponentDeclaration& decl = *problem.f(i).exponents();
    double prod = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      prod *= std::pow(K.L1[j], decl.mu[j]) * std::pow(1.0 / v, decl.lambda[j]) *
              std::pow(C2, decl.mu[j] - decl.lambda[j]);
    }
    K.k1.push_back(std::pow(std::min(1.0, prod), 1.0 / (1.0 - decl.mu[i])));
  }
  GridFunction alpha = g;
  for (std::size_t k = 0; k <= ts.last(); ++k) {
    for (std::size_t i = 0; i < n; ++i) alpha(k, i) = K.k1[i] * g(k, i);
  }
  InequalityReport lower = verify_lower(problem, alpha);
  spdlog::debug("construct_lower ({}): C2 = {:.6g}, lower {}", to_string(mode), C2,
               lower.pass ? "ok" : "FAILED");
  return BoundsPair{std::move(alpha), std::nullopt, std::move(K), std::move(lower), std::nullopt};
}

BoundsPair bounds_from_constants(const DirichletProblem& problem, std::span<const double> m,
                                 std::span<const double> M) {
  const std::size_t n = problem.dims();
  if (m.size() != n || M.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "need one m and one M per component");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (m[i] > M[i]) {
      throw Error(ErrorCode::BoundOrderViolation,
                  "m > M for component " + std::to_string(i + 1), i);
    }
  }
  const TimeScale& ts = problem.scale();
  const GridFunction ones =
      GridFunction::sample_scalar(ts, 1, [](double) { return 1.0; }).restricted(0, ts.equation_count() - 1);
  const GridFunction g1 = green_apply(ts, ones);
  const GridFunction base = phi(ts, problem.A(), problem.B());
  GridFunction alpha = base;
  GridFunction beta = base;
  for (std::size_t k = 0; k <= ts.last(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      alpha(k, i) += m[i] * g1(k, 0);
      beta(k, i) += M[i] * g1(k, 0);
    }
  }
  InequalityReport lower = verify_lower(problem, alpha);
  InequalityReport upper = verify_upper(problem, beta);
  return BoundsPair{std::move(alpha), std::move(beta), BoundsConstants{}, std::move(lower),
                    std::move(upper)};
}

std::vector<std::pair<double, double>> compute_envelope(const DirichletProblem& problem,
                                                        const GridFunction& x) {
  require_grid(problem, x);
  const TimeScale& ts = problem.scale();
  const std::size_t n = problem.dims();
  const double a = ts.a();
  const double end = ts.sigma2_b();
  const double D = end - a;
  const GridFunction h = rhs_samples(problem, x);
  std::vector<std::pair<double, double>> out(n, {0.0, 0.0});
  for (std::size_t k = 0; k < ts.equation_count(); ++k) {
    const double mu = ts.graininess(k);
    const double inner = (ts[k] - a) * (end - ts[k + 1]) / D;
    for (std::size_t i = 0; i < n; ++i) {
      out[i].first += mu * inner * h(k, i) / D;
      out[i].second += mu * h(k, i);
    }
  }
  const double tol = kVerifyTol * (1.0 + x.max_abs());
  for (std::size_t k = 0; k <= ts.last(); ++k) {
    const double e = e_at(ts, k);
    for (std::size_t i = 0; i < n; ++i) {
      const double below = out[i].first * e - x(k, i);
      const double above = x(k, i) - out[i].second * e;
      if (below > tol || above > tol) {
        throw Error(ErrorCode::EnvelopeViolation,
                    "component " + std::to_string(i + 1) + " leaves the envelope by " +
                        std::to_string(std::max(below, above)),
                    k);
      }
    }
  }
  return out;
}

Type1Report type1_limits(const std::vector<GridFunction>& solutions, std::size_t component) {
  if (solutions.size() < kMinFamily) {
    throw Error(ErrorCode::FamilyTooShort, "need at least 4 refinements");
  }
  Type1Report report;
  for (const GridFunction& x : solutions) {
    const TimeScale& ts = x.scale();
    if (!x.covers(0, ts.last()) || component >= x.components()) {
      throw Error(ErrorCode::SupportMismatch, "solution must cover the whole scale");
    }
    const std::size_t last_eq = ts.last() - 2;
    report.left_slope_trail.push_back((x(1, component) - x(0, component)) / ts.graininess(0));
    report.right_slope_trail.push_back((x(last_eq + 1, component) - x(last_eq, component)) /
                                       ts.graininess(last_eq));
  }
  report.left = classify_sequence(report.left_slope_trail);
  report.right = classify_sequence(report.right_slope_trail);
  report.bounded = report.left.verdict == Verdict::Convergent &&
                   report.right.verdict == Verdict::Convergent;
  return report;
}

}  // namespace tsdyn
