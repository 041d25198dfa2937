#include "tsdyn/solver.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <spdlog/spdlog.h>

#include "tsdyn/error.hpp"
#include "tsdyn/green.hpp"

namespace tsdyn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDivergenceBound = 1e12;
constexpr double kMinDamping = 1.0 / 64.0;
constexpr int kIncreasesBeforeHalving = 5;

double band_tol(double v) { return 1e-12 * std::max(1.0, std::abs(v)); }

void check_band(const DirichletProblem& problem, const Band& band) {
  const TimeScale& ts = problem.scale();
  for (const GridFunction* g : {&band.alpha, &band.beta}) {
    if (!g->scale().same_as(ts)) {
      throw Error(ErrorCode::ScaleMismatch, "bracket lives on another scale");
    }
    if (g->components() != problem.dims()) {
      throw Error(ErrorCode::DimensionMismatch, "bracket has the wrong number of components");
    }
    if (!g->covers(0, ts.last())) {
      throw Error(ErrorCode::SupportMismatch, "bracket must cover the whole scale");
    }
  }
  for (std::size_t k = 0; k <= ts.last(); ++k) {
    for (std::size_t c = 0; c < problem.dims(); ++c) {
      if (band.alpha(k, c) > band.beta(k, c) + band_tol(band.beta(k, c))) {
        throw Error(ErrorCode::BracketViolation,
                    "alpha > beta in component " + std::to_string(c + 1), k);
      }
    }
  }
}

// Fills a function on the equation points 0..N-2; fn(k, out) writes the
// n-vector at k. Points are independent, so they are spread across threads.
// The error raised at the smallest index is rethrown.
template <class Fn>
GridFunction fill_equation_points(const TimeScale& ts, std::size_t n, bool parallel, Fn fn) {
  const std::size_t eqs = ts.equation_count();
  GridFunction out = GridFunction::zeros(ts, n, 0, eqs - 1);
  std::vector<std::exception_ptr> errors(eqs);
  const auto body = [&](std::size_t k) {
    try {
      fn(k, out.at(k));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (parallel) {
    const auto count = static_cast<std::ptrdiff_t>(eqs);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < count; ++k) body(static_cast<std::size_t>(k));
  } else {
    for (std::size_t k = 0; k < eqs; ++k) body(k);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

GridFunction rhs_impl(const DirichletProblem& problem, const GridFunction& u, bool parallel) {
  const TimeScale& ts = problem.scale();
  const std::size_t n = problem.dims();
  return fill_equation_points(ts, n, parallel, [&](std::size_t k, std::span<double> out) {
    const auto x = u.at(k + 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = problem.rhs(i, k, x);
  });
}

double max_diff(const GridFunction& u, const GridFunction& v) {
  double m = 0.0;
  const auto a = u.values();
  const auto b = v.values();
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool runaway(const GridFunction& u) {
  for (double v : u.values()) {
    if (!std::isfinite(v) || std::abs(v) > kDivergenceBound) return true;
  }
  return false;
}

GridFunction midpoint(const Band& band) { return 0.5 * (band.alpha + band.beta); }

GridFunction start_iterate(const DirichletProblem& problem, const std::optional<Band>& band) {
  if (band) return midpoint(*band);
  return phi(problem.scale(), problem.A(), problem.B());
}

// Shared epilogue: residual, bracket and status.
void finish(const DirichletProblem& problem, const std::optional<Band>& band,
            const SolveConfig& cfg, SolveReport& report) {
  report.final_residual = residual(problem, report.solution);
  report.bracket_respected = !band || within_band(*band, report.solution);
  if (report.final_residual <= cfg.tol_residual) {
    if (report.bracket_respected) {
      report.status = SolveStatus::Converged;
    } else {
      report.status = SolveStatus::Diverged;
      report.message = "solution satisfies the equations but leaves the bracket";
    }
  }
}

SolveReport picard(const DirichletProblem& problem, const std::optional<Band>& band,
                   const SolveConfig& cfg, GridFunction u) {
  SolveReport report{u};
  double theta = cfg.damping;
  double prev_res = residual(problem, u);
  int increases = 0;
  if (cfg.observer) cfg.observer(0, u);
  report.status = SolveStatus::MaxIters;
  for (std::size_t it = 1; it <= cfg.max_iters && report.status == SolveStatus::MaxIters; ++it) {
    GridFunction Nu = apply_N(problem, band, u);
    const double step = max_diff(Nu, u);
    u = theta == 1.0 ? Nu : (1.0 - theta) * u + theta * Nu;
    report.iterations = it;
    if (cfg.observer) cfg.observer(it, u);
    if (runaway(u)) {
      report.status = SolveStatus::Diverged;
      report.message = "iterates grew without bound";
      break;
    }
    const double res = residual(problem, u);
    if (res <= cfg.tol_residual) {
      report.status = SolveStatus::Converged;
      break;
    }
    if (step <= cfg.tol_step) {
      report.message = "fixed-point step stagnated above the residual tolerance";
      break;
    }
    increases = res > prev_res ? increases + 1 : 0;
    if (increases >= kIncreasesBeforeHalving && theta > kMinDamping) {
      theta = std::max(kMinDamping, theta / 2.0);
      increases = 0;
      spdlog::debug("picard: damping reduced to {} at iteration {}", theta, it);
    }
    prev_res = res;
  }
  report.solution = std::move(u);
  report.final_damping = theta;
  if (report.status == SolveStatus::MaxIters && report.message.empty()) {
    report.message = "iteration limit reached";
  }
  return report;
}

SolveReport monotone(const DirichletProblem& problem, const Band& band,
                     const SolveConfig& cfg, bool up) {
  GridFunction u = up ? band.alpha : band.beta;
  SolveReport report{u};
  report.status = SolveStatus::MaxIters;
  if (cfg.observer) cfg.observer(0, u);
  const std::optional<Band> none;
  for (std::size_t it = 1; it <= cfg.max_iters && report.status == SolveStatus::MaxIters; ++it) {
    GridFunction Nu = apply_N(problem, none, u);
    if (cfg.damping != 1.0) Nu = (1.0 - cfg.damping) * u + cfg.damping * Nu;
    const auto prev = u.values();
    const auto next = Nu.values();
    for (std::size_t i = 0; i < prev.size(); ++i) {
      const double tol = 1e-13 * std::max(1.0, std::abs(prev[i]));
      const bool ordered = up ? next[i] >= prev[i] - tol : next[i] <= prev[i] + tol;
      if (!ordered) {
        if (report.monotone) {
          spdlog::warn("monotone iteration lost ordering at iteration {}", it);
        }
        report.monotone = false;
      }
    }
    const double step = max_diff(Nu, u);
    u = std::move(Nu);
    report.iterations = it;
    if (cfg.observer) cfg.observer(it, u);
    if (runaway(u)) {
      report.status = SolveStatus::Diverged;
      report.message = "iterates grew without bound";
      break;
    }
    if (residual(problem, u) <= cfg.tol_residual) {
      report.status = SolveStatus::Converged;
      break;
    }
    if (step <= cfg.tol_step) {
      report.message = "monotone sequence stagnated above the residual tolerance";
      break;
    }
  }
  report.solution = std::move(u);
  report.final_damping = cfg.damping;
  if (report.status == SolveStatus::MaxIters && report.message.empty()) {
    report.message = "iteration limit reached";
  }
  return report;
}

// F_k = μ_k (-u^ΔΔ(p_k) - f(p_k, u(p_{k+1}))), stacked point-major over
// k = 0..N-2. Returns +inf norm when f cannot be evaluated.
double newton_system(const DirichletProblem& problem, const GridFunction& u,
                     Eigen::VectorXd& F) {
  const TimeScale& ts = problem.scale();
  const std::size_t n = problem.dims();
  const std::size_t eqs = ts.equation_count();
  F.resize(static_cast<Eigen::Index>(eqs * n));
  GridFunction h = GridFunction::zeros(ts, n, 0, eqs - 1);
  try {
    h = rhs_samples(problem, u);
  } catch (const Error&) {
    return kInf;
  }
  double norm = 0.0;
  for (std::size_t k = 0; k < eqs; ++k) {
    const double m0 = ts.graininess(k);
    const double m1 = ts.graininess(k + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double lap = (u(k + 2, i) - u(k + 1, i)) / m1 - (u(k + 1, i) - u(k, i)) / m0;
      const double v = -lap - m0 * h(k, i);
      F[static_cast<Eigen::Index>(k * n + i)] = v;
      norm = std::max(norm, std::abs(v) / m0);
    }
  }
  return std::isfinite(norm) ? norm : kInf;
}

// ∂f_i/∂x_c at (p_k, x) by central differences; forward differences when
// the backward point would fall below the domain floor of a singular slot.
// Singular slots use a purely relative step: near zero an absolute 1e-6
// would be as large as the state itself.
double partial(const Nonlinearity& f, double t, std::vector<double>& x, std::size_t c) {
  const double x0 = x[c];
  const double scale = f.singular(c) && x0 > 0.0 ? std::abs(x0) : std::max(1.0, std::abs(x0));
  const double step = 1e-6 * scale;
  const bool forward = f.singular(c) && x0 - step < f.domain_floor();
  x[c] = x0 + step;
  const double up = f.evaluate(t, x);
  double down = 0.0;
  double width = 2.0 * step;
  if (forward) {
    x[c] = x0;
    down = f.evaluate(t, x);
    width = step;
  } else {
    x[c] = x0 - step;
    down = f.evaluate(t, x);
  }
  x[c] = x0;
  return (up - down) / width;
}

SolveReport newton(const DirichletProblem& problem, const std::optional<Band>& band,
                   const SolveConfig& cfg) {
  const TimeScale& ts = problem.scale();
  const std::size_t n = problem.dims();
  const std::size_t N = ts.last();
  const std::size_t eqs = ts.equation_count();
  const auto dim = static_cast<Eigen::Index>(eqs * n);

  GridFunction u = start_iterate(problem, band);
  for (std::size_t i = 0; i < n; ++i) {
    u(0, i) = problem.A()[i];
    u(N, i) = problem.B()[i];
  }
  SolveReport report{u};
  report.status = SolveStatus::MaxIters;
  if (cfg.observer) cfg.observer(0, u);

  Eigen::VectorXd F;
  double norm = newton_system(problem, u, F);
  if (!std::isfinite(norm)) {
    report.status = SolveStatus::DomainError;
    report.message = "nonlinearity cannot be evaluated at the starting iterate";
    return report;
  }
  // Unknown (j, c) for j = 1..N-1 sits at column (j-1)*n + c.
  const auto col = [n](std::size_t j, std::size_t c) {
    return static_cast<Eigen::Index>((j - 1) * n + c);
  };
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  std::vector<double> x(n);
  for (std::size_t it = 1; it <= cfg.max_iters && norm > cfg.tol_residual; ++it) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(dim) * (n + 2));
    try {
      for (std::size_t k = 0; k < eqs; ++k) {
        const double m0 = ts.graininess(k);
        const double m1 = ts.graininess(k + 1);
        const auto xs = u.at(k + 1);
        std::copy(xs.begin(), xs.end(), x.begin());
        for (std::size_t i = 0; i < n; ++i) {
          const auto row = static_cast<Eigen::Index>(k * n + i);
          if (k >= 1) entries.emplace_back(row, col(k, i), -1.0 / m0);
          if (k + 2 <= N - 1) entries.emplace_back(row, col(k + 2, i), -1.0 / m1);
          const double diag = 1.0 / m1 + 1.0 / m0;
          for (std::size_t c = 0; c < n; ++c) {
            double v = -m0 * partial(problem.f(i), ts[k], x, c);
            if (c == i) v += diag;
            entries.emplace_back(row, col(k + 1, c), v);
          }
        }
      }
    } catch (const Error& e) {
      report.status = SolveStatus::DomainError;
      report.message = std::string("jacobian: ") + e.what();
      break;
    }
    Eigen::SparseMatrix<double> J(dim, dim);
    J.setFromTriplets(entries.begin(), entries.end());
    lu.compute(J);
    if (lu.info() != Eigen::Success) {
      report.status = SolveStatus::Diverged;
      report.message = "singular Newton matrix";
      break;
    }
    const Eigen::VectorXd delta = lu.solve(-F);

    double lambda = 1.0;
    bool accepted = false;
    GridFunction trial = u;
    Eigen::VectorXd Ft;
    while (lambda >= 1e-10) {
      for (std::size_t j = 1; j < N; ++j) {
        for (std::size_t c = 0; c < n; ++c) {
          trial(j, c) = u(j, c) + lambda * delta[col(j, c)];
        }
      }
      const double tn = newton_system(problem, trial, Ft);
      if (tn < (1.0 - 1e-4 * lambda) * norm) {
        norm = tn;
        accepted = true;
        break;
      }
      lambda /= 2.0;
    }
    report.iterations = it;
    if (!accepted) {
      report.message = "line search failed";
      break;
    }
    u = std::move(trial);
    F = std::move(Ft);
    if (cfg.observer) cfg.observer(it, u);
  }
  report.solution = std::move(u);
  if (report.status == SolveStatus::MaxIters && report.message.empty() && norm > cfg.tol_residual) {
    report.message = "iteration limit reached";
  }
  return report;
}

// Copy of g on the points lo..hi, re-expressed on the subscale.
GridFunction restrict_to(const GridFunction& g, const TimeScale& sub, std::size_t lo) {
  GridFunction out = GridFunction::zeros(sub, g.components());
  for (std::size_t k = 0; k <= sub.last(); ++k) {
    for (std::size_t c = 0; c < g.components(); ++c) out(k, c) = g(k + lo, c);
  }
  return out;
}

SolveReport nest(const DirichletProblem& problem, const Band& band, const SolveConfig& cfg) {
  const TimeScale& ts = problem.scale();
  const std::size_t N = ts.last();
  const std::size_t n = problem.dims();
  std::vector<std::size_t> levels;
  for (std::size_t k = N / 4; k > 0; k /= 2) {
    if (N - 2 * k >= 3) levels.push_back(k);
  }
  levels.push_back(0);

  GridFunction mid = midpoint(band);
  GridFunction guess = mid;
  std::optional<GridFunction> previous;
  std::size_t prev_lo = 0;
  const std::size_t inner = levels.front();
  SolveReport report{mid};
  report.status = SolveStatus::MaxIters;
  for (std::size_t lo : levels) {
    const std::size_t hi = N - lo;
    const TimeScale sub = lo == 0 ? ts : ts.subrange(lo, hi);
    std::vector<double> A(n), B(n);
    for (std::size_t i = 0; i < n; ++i) {
      A[i] = lo == 0 ? problem.A()[i] : mid(lo, i);
      B[i] = lo == 0 ? problem.B()[i] : mid(hi, i);
    }
    const DirichletProblem sub_problem =
        lo == 0 ? problem
                : DirichletProblem(sub, problem.nonlinearities(), A, B, ProblemMode::General);
    Band sub_band{restrict_to(band.alpha, sub, lo), restrict_to(band.beta, sub, lo)};
    GridFunction start = restrict_to(guess, sub, lo);
    for (std::size_t i = 0; i < n; ++i) {
      start(0, i) = A[i];
      start(sub.last(), i) = B[i];
    }
    SolveConfig level_cfg = cfg;
    level_cfg.observer = nullptr;
    SolveReport level = picard(sub_problem, sub_band, level_cfg, std::move(start));
    report.iterations += level.iterations;
    spdlog::debug("nest level [{}, {}]: {} iterations", lo, hi, level.iterations);

    // Carry the level's solution into the warm start for the next level.
    for (std::size_t k = lo; k <= hi; ++k) {
      for (std::size_t i = 0; i < n; ++i) guess(k, i) = level.solution(k - lo, i);
    }
    if (previous) {
      double d = 0.0;
      for (std::size_t k = inner; k <= N - inner; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
          d = std::max(d, std::abs(level.solution(k - lo, i) - (*previous)(k - prev_lo, i)));
        }
      }
      report.nest_trail.push_back(d);
    }
    previous = level.solution;
    prev_lo = lo;
    if (cfg.observer) cfg.observer(report.nest_trail.size(), guess);
    if (level.status == SolveStatus::Diverged || level.status == SolveStatus::DomainError) {
      report.status = level.status;
      report.message = "nest level [" + std::to_string(lo) + ", " + std::to_string(hi) +
                       "]: " + level.message;
      report.solution = guess;
      return report;
    }
    report.status = level.status;
    report.message = level.message;
    report.final_damping = level.final_damping;
  }
  report.solution = std::move(guess);
  return report;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Picard: return "PICARD";
    case Strategy::MonotoneUp: return "MONOTONE_UP";
    case Strategy::MonotoneDown: return "MONOTONE_DOWN";
    case Strategy::NewtonOracle: return "NEWTON_ORACLE";
    case Strategy::TruncatedNest: return "TRUNCATED_NEST";
  }
  return "?";
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "CONVERGED";
    case SolveStatus::MaxIters: return "MAX_ITERS";
    case SolveStatus::Diverged: return "DIVERGED";
    case SolveStatus::DomainError: return "DOMAIN_ERROR";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char ch) {
    return ch == '-' ? '_' : static_cast<char>(std::toupper(ch));
  });
  for (Strategy s : {Strategy::Picard, Strategy::MonotoneUp, Strategy::MonotoneDown,
                     Strategy::NewtonOracle, Strategy::TruncatedNest}) {
    if (to_string(s) == upper) return s;
  }
  throw Error(ErrorCode::ConfigError, "unknown strategy '" + std::string(name) + "'");
}

void SolveConfig::validate() const {
  if (!(tol_residual > 0.0) || !(tol_step > 0.0)) {
    throw Error(ErrorCode::ConfigError, "tolerances must be positive");
  }
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "damping must lie in (0, 1]");
  }
}

std::vector<double> truncate_d(const GridFunction& alpha, const GridFunction& beta,
                               std::size_t t_idx, std::span<const double> x) {
  const std::size_t s = t_idx + 1;
  const auto lo = alpha.at(s);
  const auto hi = beta.at(s);
  if (x.size() != lo.size() || x.size() != hi.size()) {
    throw Error(ErrorCode::DimensionMismatch, "state and bracket sizes differ");
  }
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (lo[i] > hi[i]) {
      throw Error(ErrorCode::BracketViolation,
                  "alpha > beta in component " + std::to_string(i + 1), s);
    }
    d[i] = std::clamp(x[i], lo[i], hi[i]);
  }
  return d;
}

double modified_rhs(const Nonlinearity& f, const GridFunction& alpha,
                    const GridFunction& beta, std::size_t t_idx,
                    std::span<const double> x) {
  const std::vector<double> d = truncate_d(alpha, beta, t_idx, x);
  const std::size_t i = f.component();
  const double gap = d[i] - x[i];
  return f.evaluate(alpha.scale()[t_idx], d) + gap / (1.0 + std::abs(gap));
}

GridFunction rhs_samples(const DirichletProblem& problem, const GridFunction& u) {
  return rhs_impl(problem, u, true);
}

GridFunction rhs_samples_serial(const DirichletProblem& problem, const GridFunction& u) {
  return rhs_impl(problem, u, false);
}

GridFunction apply_N(const DirichletProblem& problem, const std::optional<Band>& band,
                     const GridFunction& u) {
  const TimeScale& ts = problem.scale();
  const std::size_t n = problem.dims();
  if (!u.scale().same_as(ts) || u.components() != n) {
    throw Error(ErrorCode::ScaleMismatch, "iterate does not match the problem");
  }
  if (!u.covers(0, ts.last())) {
    throw Error(ErrorCode::SupportMismatch, "iterate must cover the whole scale");
  }
  GridFunction h = band ? fill_equation_points(ts, n, true,
                                               [&](std::size_t k, std::span<double> out) {
                                                 const auto x = u.at(k + 1);
                                                 for (std::size_t i = 0; i < n; ++i) {
                                                   out[i] = modified_rhs(problem.f(i), band->alpha,
                                                                         band->beta, k, x);
                                                 }
                                               })
                        : rhs_samples(problem, u);
  GridFunction out = green_apply(ts, h);
  const GridFunction base = phi(ts, problem.A(), problem.B());
  auto v = out.values();
  const auto p = base.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += p[i];
  // Boundary values are exact: G vanishes at both ends.
  for (std::size_t i = 0; i < n; ++i) {
    out(0, i) = problem.A()[i];
    out(ts.last(), i) = problem.B()[i];
  }
  return out;
}

double residual(const DirichletProblem& problem, const GridFunction& u) {
  GridFunction h = GridFunction::zeros(problem.scale(), problem.dims(), 0,
                                       problem.scale().equation_count() - 1);
  try {
    h = rhs_samples(problem, u);
  } catch (const Error&) {
    return kInf;
  }
  return green_identity_defect(u, h);
}

bool within_band(const Band& band, const GridFunction& u) {
  const std::size_t N = u.scale().last();
  for (std::size_t k = 0; k <= N; ++k) {
    for (std::size_t c = 0; c < u.components(); ++c) {
      const double v = u(k, c);
      const double tol = 1e-9 * (1.0 + std::abs(v));
      if (v < band.alpha(k, c) - tol || v > band.beta(k, c) + tol) return false;
    }
  }
  return true;
}

SolveReport solve(const DirichletProblem& problem, const std::optional<Band>& band,
                  const SolveConfig& cfg) {
  cfg.validate();
  if (band) check_band(problem, *band);
  const bool needs_band = cfg.strategy == Strategy::MonotoneUp ||
                          cfg.strategy == Strategy::MonotoneDown ||
                          cfg.strategy == Strategy::TruncatedNest;
  if (needs_band && !band) {
    throw Error(ErrorCode::BracketViolation,
                std::string(to_string(cfg.strategy)) + " needs lower and upper solutions");
  }
  SolveReport report{GridFunction::zeros(problem.scale(), problem.dims())};
  try {
    switch (cfg.strategy) {
      case Strategy::Picard:
        report = picard(problem, band, cfg, start_iterate(problem, band));
        break;
      case Strategy::MonotoneUp:
        report = monotone(problem, *band, cfg, true);
        break;
      case Strategy::MonotoneDown:
        report = monotone(problem, *band, cfg, false);
        break;
      case Strategy::NewtonOracle:
        report = newton(problem, band, cfg);
        break;
      case Strategy::TruncatedNest:
        report = nest(problem, *band, cfg);
        break;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DomainViolation && e.code() != ErrorCode::NonFiniteResult) throw;
    report.status = SolveStatus::DomainError;
    report.message = e.what();
    report.final_residual = kInf;
    return report;
  }
  const SolveStatus before = report.status;
  if (before == SolveStatus::Diverged || before == SolveStatus::DomainError) {
    report.final_residual = residual(problem, report.solution);
    report.bracket_respected = !band || within_band(*band, report.solution);
    return report;
  }
  report.status = SolveStatus::MaxIters;
  finish(problem, band, cfg, report);
  if (report.status == SolveStatus::MaxIters && report.message.empty()) {
    report.message = "residual above tolerance";
  }
  spdlog::debug("solve {}: {} after {} iterations, residual {:.3e}", to_string(cfg.strategy),
               to_string(report.status), report.iterations, report.final_residual);
  return report;
}

}  // namespace tsdyn
