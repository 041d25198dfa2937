#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tsdyn {

/// Arithmetic expression in the variables t, x1..xn.
///
/// Grammar (whitespace ignored):
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | atom ('^' factor)?
///   atom   := number | 't' | 'x' digits | '(' expr ')'
///
/// Nodes are kept in a flat post-order vector; the root is the last node.
class Expression {
 public:
  enum class Op : std::uint8_t { Constant, Time, State, Add, Sub, Mul, Div, Pow, Neg };

  struct Node {
    Op op = Op::Constant;
    double value = 0.0;       // Constant
    std::size_t index = 0;    // State, 1-based
    std::int32_t lhs = -1;
    std::int32_t rhs = -1;
  };

  static Expression constant(double value);
  static Expression time();
  /// x_j with j 1-based.
  static Expression state(std::size_t j);

  friend Expression operator+(const Expression& l, const Expression& r);
  friend Expression operator-(const Expression& l, const Expression& r);
  friend Expression operator*(const Expression& l, const Expression& r);
  friend Expression operator/(const Expression& l, const Expression& r);
  friend Expression operator-(const Expression& e);
  friend Expression pow(const Expression& base, const Expression& exponent);

  /// Throws DomainViolation for division by zero, a zero base with a negative
  /// exponent, or a negative base with a non-integer exponent; NonFiniteResult
  /// on overflow.
  double evaluate(double t, std::span<const double> x) const;

  /// Canonical text with minimal parentheses; parses back to the same tree.
  std::string to_string() const;

  /// Largest j among the x_j occurring in the expression (0 if none).
  std::size_t max_state_index() const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }

 private:
  static Expression binary(Op op, const Expression& l, const Expression& r);

  double eval_node(std::int32_t id, double t, std::span<const double> x) const;
  void print_node(std::int32_t id, std::string& out) const;
  int precedence(std::int32_t id) const;

  std::vector<Node> nodes_;
};

/// Throws SyntaxError (1-based column in Error::where) or UnknownVariable.
/// With an arity, x_j for j > arity is rejected as unknown.
Expression parse_expression(std::string_view src,
                            std::optional<std::size_t> arity = std::nullopt);

}  // namespace tsdyn
