#include "homlab/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "homlab/errors.hpp"

namespace homlab {

struct Expression::Node {
  enum class Op { number, var, neg, add, sub, mul, div, sin, cos } op = Op::number;
  double value = 0.0;
  int var = 0;  // 0..2 coordinate, 3 time
  std::shared_ptr<const Node> a, b;

  double eval(const Vec3& x, double t) const {
    switch (op) {
      case Op::number: return value;
      case Op::var: return var < 3 ? x[var] : t;
      case Op::neg: return -a->eval(x, t);
      case Op::add: return a->eval(x, t) + b->eval(x, t);
      case Op::sub: return a->eval(x, t) - b->eval(x, t);
      case Op::mul: return a->eval(x, t) * b->eval(x, t);
      case Op::div: return a->eval(x, t) / b->eval(x, t);
      case Op::sin: return std::sin(a->eval(x, t));
      case Op::cos: return std::cos(a->eval(x, t));
    }
    return 0.0;
  }
  bool uses_vars() const {
    if (op == Op::var) return true;
    return (a && a->uses_vars()) || (b && b->uses_vars());
  }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + s_ + "': " + what + " at position " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static NodePtr binary(Node::Op op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }
  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+')) n = binary(Node::Op::add, n, term());
      else if (eat('-')) n = binary(Node::Op::sub, n, term());
      else return n;
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) n = binary(Node::Op::mul, n, unary());
      else if (eat('/')) n = binary(Node::Op::div, n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (eat('-')) return binary(Node::Op::neg, unary(), nullptr);
    if (eat('+')) return unary();
    return primary();
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (eat('(')) {
      NodePtr n = expr();
      if (!eat(')')) fail("missing ')'");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      auto n = std::make_shared<Node>();
      if (name == "sin" || name == "cos") {
        if (!eat('(')) fail("expected '(' after " + name);
        n->op = name == "sin" ? Node::Op::sin : Node::Op::cos;
        n->a = expr();
        if (!eat(')')) fail("missing ')'");
        return n;
      }
      if (name == "pi") {
        n->value = std::numbers::pi;
        return n;
      }
      static const char* vars[] = {"x", "y", "z", "t"};
      for (int v = 0; v < 4; ++v)
        if (name == vars[v]) {
          n->op = Node::Op::var;
          n->var = v;
          return n;
        }
      pos_ = start;
      fail("unknown name '" + name + "'");
    }
    fail("unexpected character");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(const std::string& text) : text_(text) { root_ = Parser(text_).parse(); }

double Expression::operator()(const Vec3& x, double t) const { return root_ ? root_->eval(x, t) : 0.0; }

bool Expression::constant() const { return !root_ || !root_->uses_vars(); }

ForceFn make_force(const std::vector<std::string>& components) {
  if (components.size() > 3) throw ConfigError("force has more than three components");
  std::vector<Expression> ex;
  bool zero = true;
  for (const std::string& c : components) {
    ex.emplace_back(c);
    if (!(ex.back().constant() && ex.back()({0, 0, 0}, 0.0) == 0.0)) zero = false;
  }
  if (zero) return {};
  return [ex](const Vec3& x, double t) {
    Vec3 f{0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < ex.size(); ++a) f[a] = ex[a](x, t);
    return f;
  };
}

ScalarFn make_scalar(const std::string& text) {
  Expression e(text);
  return [e](const Vec3& x) { return e(x, 0.0); };
}

}  // namespace homlab
