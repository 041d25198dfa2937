#include "tsdyn/nonlinearity.hpp"

#include <cmath>
#include <sstream>

#include "tsdyn/error.hpp"

namespace tsdyn {

namespace {

double checked_pow(double base, double exponent) {
  if (base == 0.0 && exponent < 0.0) {
    throw Error(ErrorCode::DomainViolation, "zero raised to a negative power");
  }
  if (base < 0.0 && std::floor(exponent) != exponent) {
    throw Error(ErrorCode::DomainViolation, "negative base with non-integer exponent");
  }
  return std::pow(base, exponent);
}

}  // namespace

Nonlinearity::Nonlinearity(std::size_t arity, std::size_t component, Expression body)
    : arity_(arity), component_(component), body_(std::move(body)), singular_(arity, true) {
  if (arity_ == 0 || component_ >= arity_) {
    throw Error(ErrorCode::DimensionMismatch, "component index must be below the arity");
  }
  const std::size_t used = std::get<Expression>(body_).max_state_index();
  if (used > arity_) {
    throw Error(ErrorCode::UnknownVariable,
                "expression uses x" + std::to_string(used) + " but arity is " +
                    std::to_string(arity_));
  }
}

Nonlinearity::Nonlinearity(std::size_t arity, std::size_t component, PowerLaw body)
    : arity_(arity), component_(component), body_(std::move(body)), singular_(arity, true) {
  if (arity_ == 0 || component_ >= arity_) {
    throw Error(ErrorCode::DimensionMismatch, "component index must be below the arity");
  }
  if (std::get<PowerLaw>(body_).gamma.size() != arity_) {
    throw Error(ErrorCode::DimensionMismatch, "power law needs one exponent per component");
  }
}

double Nonlinearity::evaluate(double t, std::span<const double> x) const {
  if (x.size() != arity_) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(arity_) + " state values");
  }
  for (std::size_t j = 0; j < arity_; ++j) {
    if (!std::isfinite(x[j])) {
      throw Error(ErrorCode::NonFiniteResult, "state value is not finite", j);
    }
    if (singular_[j] && x[j] < domain_floor_) {
      throw Error(ErrorCode::DomainViolation,
                  "x" + std::to_string(j + 1) + " below the domain floor", j);
    }
  }
  double value = 0.0;
  if (const auto* law = std::get_if<PowerLaw>(&body_)) {
    value = law->c * checked_pow(t, law->p);
    for (std::size_t j = 0; j < arity_; ++j) value *= checked_pow(x[j], law->gamma[j]);
    if (!std::isfinite(value)) throw Error(ErrorCode::NonFiniteResult, "power law overflow");
  } else {
    value = std::get<Expression>(body_).evaluate(t, x);
  }
  if (nonnegative_ && value < 0.0) {
    throw Error(ErrorCode::DomainViolation, "negative value where f >= 0 is required");
  }
  return value;
}

void Nonlinearity::declare_exponents(ExponentDeclaration decl) {
  if (decl.lambda.size() != arity_ || decl.mu.size() != arity_) {
    throw Error(ErrorCode::DimensionMismatch, "exponent rows must have one entry per component");
  }
  exponents_ = std::move(decl);
}

bool Nonlinearity::exponent_shape_ok() const {
  if (!exponents_) return false;
  const auto& lam = exponents_->lambda;
  const auto& mu = exponents_->mu;
  for (std::size_t j = 0; j < arity_; ++j) {
    if (!(lam[j] < mu[j] && mu[j] < 1.0)) return false;
    if (j == component_) {
      if (!(lam[j] < 0.0 && mu[j] > 0.0)) return false;
    } else if (!(mu[j] < 0.0)) {
      return false;
    }
  }
  return true;
}

void Nonlinearity::set_domain_floor(double floor) {
  if (!(floor > 0.0)) throw Error(ErrorCode::DomainViolation, "domain floor must be positive");
  domain_floor_ = floor;
}

void Nonlinearity::set_singular(std::vector<bool> flags) {
  if (flags.size() != arity_) {
    throw Error(ErrorCode::DimensionMismatch, "one singular flag per component");
  }
  singular_ = std::move(flags);
}

std::string Nonlinearity::describe() const {
  if (const auto* law = std::get_if<PowerLaw>(&body_)) {
    std::ostringstream os;
    os.precision(17);
    os << law->c << " * t^" << law->p;
    for (std::size_t j = 0; j < arity_; ++j) os << " * x" << j + 1 << '^' << law->gamma[j];
    return os.str();
  }
  return std::get<Expression>(body_).to_string();
}

Nonlinearity emden_fowler(double c, double p, std::vector<double> gamma, std::size_t i) {
  if (!(c > 0.0)) throw Error(ErrorCode::DomainViolation, "Emden-Fowler coefficient must be positive");
  std::vector<bool> singular(gamma.size());
  for (std::size_t j = 0; j < gamma.size(); ++j) singular[j] = gamma[j] < 0.0;
  ExponentDeclaration decl{gamma, gamma, true};
  const std::size_t n = gamma.size();
  Nonlinearity f(n, i, PowerLaw{c, p, std::move(gamma)});
  f.set_singular(std::move(singular));
  f.declare_exponents(std::move(decl));
  return f;
}

}  // namespace tsdyn
