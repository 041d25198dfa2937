#include "tsdyn/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <system_error>

#include "tsdyn/error.hpp"

namespace tsdyn {

namespace {

constexpr int kPrecAdd = 1;
constexpr int kPrecMul = 2;
constexpr int kPrecNeg = 3;
constexpr int kPrecPow = 4;
constexpr int kPrecAtom = 5;

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, end);
}

class Parser {
 public:
  Parser(std::string_view src, std::optional<std::size_t> arity)
      : src_(src), arity_(arity) {}

  Expression run() {
    skip_space();
    if (pos_ == src_.size()) fail("empty expression");
    Expression e = expr();
    skip_space();
    if (pos_ != src_.size()) fail(std::string("unexpected '") + src_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::SyntaxError,
                what + " at position " + std::to_string(pos_ + 1), pos_ + 1);
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expression expr() {
    Expression lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + term();
      } else if (accept('-')) {
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  Expression term() {
    Expression lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * factor();
      } else if (accept('/')) {
        lhs = lhs / factor();
      } else {
        return lhs;
      }
    }
  }

  Expression factor() {
    if (accept('-')) return -factor();
    Expression base = atom();
    if (accept('^')) return pow(base, factor());
    return base;
  }

  Expression atom() {
    skip_space();
    if (pos_ == src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expression inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return variable();
    fail(std::string("unexpected '") + c + "'");
  }

  Expression number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) {
      pos_ = start;
      fail("malformed number");
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      const std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        pos_ = mark;
        fail("malformed exponent");
      }
    }
    double value = 0.0;
    const char* first = src_.data() + start;
    const char* last = src_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      pos_ = start;
      fail("malformed number");
    }
    return Expression::constant(value);
  }

  Expression variable() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "t") return Expression::time();
    if (name.size() >= 2 && name[0] == 'x') {
      std::size_t j = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), j);
      const bool all_digits = ec == std::errc() && ptr == name.data() + name.size();
      if (all_digits && j >= 1 && name[1] != '0' && (!arity_ || j <= *arity_)) {
        return Expression::state(j);
      }
    }
    throw Error(ErrorCode::UnknownVariable,
                "unknown variable '" + std::string(name) + "' at position " +
                    std::to_string(start + 1),
                start + 1);
  }

  std::string_view src_;
  std::optional<std::size_t> arity_;
  std::size_t pos_ = 0;
};

bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

}  // namespace

Expression Expression::constant(double value) {
  Expression e;
  e.nodes_.push_back(Node{Op::Constant, value, 0, -1, -1});
  return e;
}

Expression Expression::time() {
  Expression e;
  e.nodes_.push_back(Node{Op::Time, 0.0, 0, -1, -1});
  return e;
}

Expression Expression::state(std::size_t j) {
  if (j == 0) throw Error(ErrorCode::UnknownVariable, "state variables are 1-based");
  Expression e;
  e.nodes_.push_back(Node{Op::State, 0.0, j, -1, -1});
  return e;
}

Expression Expression::binary(Op op, const Expression& l, const Expression& r) {
  Expression e;
  e.nodes_.reserve(l.nodes_.size() + r.nodes_.size() + 1);
  e.nodes_ = l.nodes_;
  const auto offset = static_cast<std::int32_t>(l.nodes_.size());
  for (Node n : r.nodes_) {
    if (n.lhs >= 0) n.lhs += offset;
    if (n.rhs >= 0) n.rhs += offset;
    e.nodes_.push_back(n);
  }
  e.nodes_.push_back(Node{op, 0.0, 0, offset - 1,
                          static_cast<std::int32_t>(e.nodes_.size()) - 1});
  return e;
}

Expression operator+(const Expression& l, const Expression& r) {
  return Expression::binary(Expression::Op::Add, l, r);
}
Expression operator-(const Expression& l, const Expression& r) {
  return Expression::binary(Expression::Op::Sub, l, r);
}
Expression operator*(const Expression& l, const Expression& r) {
  return Expression::binary(Expression::Op::Mul, l, r);
}
Expression operator/(const Expression& l, const Expression& r) {
  return Expression::binary(Expression::Op::Div, l, r);
}
Expression pow(const Expression& base, const Expression& exponent) {
  return Expression::binary(Expression::Op::Pow, base, exponent);
}
Expression operator-(const Expression& e) {
  Expression out = e;
  out.nodes_.push_back(Expression::Node{Expression::Op::Neg, 0.0, 0,
                                        static_cast<std::int32_t>(e.nodes_.size()) - 1, -1});
  return out;
}

double Expression::evaluate(double t, std::span<const double> x) const {
  const double v = eval_node(static_cast<std::int32_t>(nodes_.size()) - 1, t, x);
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteResult, "expression value is not finite");
  return v;
}

double Expression::eval_node(std::int32_t id, double t, std::span<const double> x) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  switch (n.op) {
    case Op::Constant: return n.value;
    case Op::Time: return t;
    case Op::State:
      if (n.index > x.size()) {
        throw Error(ErrorCode::UnknownVariable,
                    "x" + std::to_string(n.index) + " not supplied");
      }
      return x[n.index - 1];
    case Op::Neg: return -eval_node(n.lhs, t, x);
    case Op::Add: return eval_node(n.lhs, t, x) + eval_node(n.rhs, t, x);
    case Op::Sub: return eval_node(n.lhs, t, x) - eval_node(n.rhs, t, x);
    case Op::Mul: return eval_node(n.lhs, t, x) * eval_node(n.rhs, t, x);
    case Op::Div: {
      const double num = eval_node(n.lhs, t, x);
      const double den = eval_node(n.rhs, t, x);
      if (den == 0.0) throw Error(ErrorCode::DomainViolation, "division by zero");
      return num / den;
    }
    case Op::Pow: {
      const double base = eval_node(n.lhs, t, x);
      const double exponent = eval_node(n.rhs, t, x);
      if (base == 0.0 && exponent < 0.0) {
        throw Error(ErrorCode::DomainViolation, "zero raised to a negative power");
      }
      if (base < 0.0 && !is_integer(exponent)) {
        throw Error(ErrorCode::DomainViolation, "negative base with non-integer exponent");
      }
      return std::pow(base, exponent);
    }
  }
  return 0.0;
}

int Expression::precedence(std::int32_t id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  switch (n.op) {
    case Op::Add:
    case Op::Sub: return kPrecAdd;
    case Op::Mul:
    case Op::Div: return kPrecMul;
    case Op::Neg: return kPrecNeg;
    case Op::Pow: return kPrecPow;
    case Op::Constant: return std::signbit(n.value) ? kPrecNeg : kPrecAtom;
    case Op::Time:
    case Op::State: return kPrecAtom;
  }
  return kPrecAtom;
}

void Expression::print_node(std::int32_t id, std::string& out) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  auto child = [&](std::int32_t c, bool parens) {
    if (parens) out += '(';
    print_node(c, out);
    if (parens) out += ')';
  };
  switch (n.op) {
    case Op::Constant: out += format_number(n.value); return;
    case Op::Time: out += 't'; return;
    case Op::State: out += 'x' + std::to_string(n.index); return;
    case Op::Neg:
      out += '-';
      child(n.lhs, precedence(n.lhs) < kPrecNeg);
      return;
    case Op::Pow:
      child(n.lhs, precedence(n.lhs) < kPrecAtom);
      out += '^';
      child(n.rhs, precedence(n.rhs) < kPrecNeg);
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const int p = precedence(id);
      const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - "
                      : n.op == Op::Mul ? " * " : " / ";
      child(n.lhs, precedence(n.lhs) < p);
      out += sym;
      child(n.rhs, precedence(n.rhs) <= p);
      return;
    }
  }
}

std::string Expression::to_string() const {
  std::string out;
  if (!nodes_.empty()) print_node(static_cast<std::int32_t>(nodes_.size()) - 1, out);
  return out;
}

std::size_t Expression::max_state_index() const {
  std::size_t m = 0;
  for (const Node& n : nodes_) {
    if (n.op == Op::State) m = std::max(m, n.index);
  }
  return m;
}

Expression parse_expression(std::string_view src, std::optional<std::size_t> arity) {
  return Parser(src, arity).run();
}

}  // namespace tsdyn
