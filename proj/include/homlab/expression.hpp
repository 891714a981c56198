#pragma once

#include <memory>
#include <string>

#include "homlab/fields.hpp"

namespace homlab {

/// Compiled scalar expression over x, y, z, t and pi. Grammar:
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := '-' unary | primary
///   primary:= number | name | ('sin' | 'cos') '(' expr ')' | '(' expr ')'
/// Throws ConfigError with the offending position on a parse error.
class Expression {
 public:
  Expression() = default;
  explicit Expression(const std::string& text);

  double operator()(const Vec3& x, double t) const;
  const std::string& text() const { return text_; }
  /// True when the expression does not mention x, y, z or t.
  bool constant() const;

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

/// Force field from one expression per component (missing components are 0).
ForceFn make_force(const std::vector<std::string>& components);
ScalarFn make_scalar(const std::string& text);

}  // namespace homlab
