#pragma once

#include <map>
#include <memory>
#include <string>

namespace aimlake {

/// Compiled closed-form scalar expression, e.g. "2 + sin(x) * exp(-y^2)".
///
/// Supports + - * / ^, unary minus, parentheses, numeric literals, the
/// constants `pi` and `e`, named variables bound at evaluation time, and the
/// functions sin cos tan exp log sqrt abs tanh sinh cosh atan pow min max.
/// Parsing happens once; evaluation is allocation-free and thread-safe.
class Expression {
 public:
  struct Node;

  Expression() = default;
  static Expression parse(const std::string& text);

  /// Evaluates with the given variable bindings; unknown variables throw ParseError.
  double operator()(const std::map<std::string, double>& vars) const;

  /// Fast path for the common (x, y, L) signature used by field sampling.
  double at(double x, double y, double side_length) const;

  const std::string& text() const { return text_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace aimlake
