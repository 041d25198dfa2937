#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tsdyn/expression.hpp"

namespace tsdyn {

/// f_i(t, x) = c * t^p * prod_j x_j^{gamma_j}.
struct PowerLaw {
  double c = 1.0;
  double p = 0.0;
  std::vector<double> gamma;
};

/// Scaling exponents (λ_i·, μ_i·) declared for one component f_i.
struct ExponentDeclaration {
  std::vector<double> lambda;
  std::vector<double> mu;
  /// Set when λ_ij = μ_ij is declared on purpose (pure power laws); the
  /// strict shape checks then fail by construction.
  bool boundary = false;
};

/// One component f_i(t, x) of the right-hand side of -x^ΔΔ = f(t, x^σ).
///
/// Components and state indices are 0-based in this API; expressions name
/// the state variables x1..xn.
class Nonlinearity {
 public:
  static constexpr double kDefaultDomainFloor = 1e-12;

  Nonlinearity(std::size_t arity, std::size_t component, Expression body);
  Nonlinearity(std::size_t arity, std::size_t component, PowerLaw body);

  std::size_t arity() const noexcept { return arity_; }
  std::size_t component() const noexcept { return component_; }

  /// Finite value of f_i(t, x). Throws DomainViolation when a singular
  /// component lies below the domain floor, when the body is evaluated at a
  /// singular point, or (when nonnegativity is required) on a negative value;
  /// NonFiniteResult on overflow.
  double evaluate(double t, std::span<const double> x) const;

  void declare_exponents(ExponentDeclaration decl);
  const std::optional<ExponentDeclaration>& exponents() const noexcept { return exponents_; }
  /// λ_ij < μ_ij < 1, λ_ii < 0 < μ_ii < 1, μ_ij < 0 for j != i.
  bool exponent_shape_ok() const;

  double domain_floor() const noexcept { return domain_floor_; }
  void set_domain_floor(double floor);
  bool singular(std::size_t j) const { return singular_.at(j); }
  void set_singular(std::vector<bool> flags);

  bool requires_nonnegative() const noexcept { return nonnegative_; }
  void require_nonnegative(bool on) noexcept { nonnegative_ = on; }

  std::string describe() const;

 private:
  std::size_t arity_;
  std::size_t component_;
  std::variant<Expression, PowerLaw> body_;
  std::optional<ExponentDeclaration> exponents_;
  double domain_floor_ = kDefaultDomainFloor;
  std::vector<bool> singular_;
  bool nonnegative_ = false;
};

/// f_i(t,x) = c t^p prod_j x_j^{gamma_j}, with λ = μ = gamma declared and the
/// boundary flag set. Components with gamma_j >= 0 are marked nonsingular.
Nonlinearity emden_fowler(double c, double p, std::vector<double> gamma,
                          std::size_t i);

}  // namespace tsdyn
