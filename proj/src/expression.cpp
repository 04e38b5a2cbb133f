#include "aimlake/expression.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "aimlake/error.hpp"

namespace aimlake {

struct Expression::Node {
  enum class Kind { Number, Variable, Unary, Binary, Call };
  Kind kind = Kind::Number;
  double value = 0.0;
  std::string name;
  char op = 0;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  NodePtr parse() {
    NodePtr result = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return result;
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::ParseError,
                what + " at offset " + std::to_string(pos_) + " in '" + text_ + "'");
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr binary(char op, NodePtr lhs, NodePtr rhs) {
    auto node = std::make_shared<Node>();
    node->kind = Node::Kind::Binary;
    node->op = op;
    node->args = {std::move(lhs), std::move(rhs)};
    return node;
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    while (true) {
      if (accept('+')) {
        lhs = binary('+', lhs, parse_product());
      } else if (accept('-')) {
        lhs = binary('-', lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_product() {
    NodePtr lhs = parse_unary();
    while (true) {
      if (accept('*')) {
        lhs = binary('*', lhs, parse_unary());
      } else if (accept('/')) {
        lhs = binary('/', lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) {
      auto node = std::make_shared<Node>();
      node->kind = Node::Kind::Unary;
      node->op = '-';
      node->args = {parse_unary()};
      return node;
    }
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  // Right-associative; binds tighter than unary minus on its left operand.
  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return binary('^', base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr parse_number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    auto node = std::make_shared<Node>();
    node->kind = Node::Kind::Number;
    node->value = value;
    return node;
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    std::string name = text_.substr(start, pos_ - start);
    if (accept('(')) {
      auto node = std::make_shared<Node>();
      node->kind = Node::Kind::Call;
      node->name = name;
      std::vector<NodePtr> args;
      if (!accept(')')) {
        args.push_back(parse_sum());
        while (accept(',')) args.push_back(parse_sum());
        if (!accept(')')) fail("expected ')' after arguments");
      }
      const std::size_t arity = (name == "pow" || name == "min" || name == "max") ? 2 : 1;
      if (args.size() != arity) fail("wrong argument count for '" + name + "'");
      static const char* known[] = {"sin", "cos",  "tan",  "exp",  "log", "sqrt", "abs",
                                    "tanh", "sinh", "cosh", "atan", "pow", "min",  "max"};
      bool ok = false;
      for (const char* k : known) ok = ok || name == k;
      if (!ok) fail("unknown function '" + name + "'");
      node->args = std::move(args);
      return node;
    }
    auto node = std::make_shared<Node>();
    if (name == "pi") {
      node->kind = Node::Kind::Number;
      node->value = std::numbers::pi;
    } else if (name == "e") {
      node->kind = Node::Kind::Number;
      node->value = std::numbers::e;
    } else {
      node->kind = Node::Kind::Variable;
      node->name = std::move(name);
    }
    return node;
  }
};

template <typename Lookup>
double evaluate(const Node& node, const Lookup& lookup) {
  switch (node.kind) {
    case Node::Kind::Number:
      return node.value;
    case Node::Kind::Variable:
      return lookup(node.name);
    case Node::Kind::Unary:
      return -evaluate(*node.args[0], lookup);
    case Node::Kind::Binary: {
      const double a = evaluate(*node.args[0], lookup);
      const double b = evaluate(*node.args[1], lookup);
      switch (node.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        case '^': return std::pow(a, b);
      }
      break;
    }
    case Node::Kind::Call: {
      const double a = evaluate(*node.args[0], lookup);
      const std::string& f = node.name;
      if (f == "sin") return std::sin(a);
      if (f == "cos") return std::cos(a);
      if (f == "tan") return std::tan(a);
      if (f == "exp") return std::exp(a);
      if (f == "log") return std::log(a);
      if (f == "sqrt") return std::sqrt(a);
      if (f == "abs") return std::abs(a);
      if (f == "tanh") return std::tanh(a);
      if (f == "sinh") return std::sinh(a);
      if (f == "cosh") return std::cosh(a);
      if (f == "atan") return std::atan(a);
      const double b = evaluate(*node.args[1], lookup);
      if (f == "pow") return std::pow(a, b);
      if (f == "min") return std::min(a, b);
      if (f == "max") return std::max(a, b);
      break;
    }
  }
  throw Error(ErrorKind::ParseError, "corrupt expression tree");
}

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression expr;
  expr.root_ = Parser(text).parse();
  expr.text_ = text;
  return expr;
}

double Expression::operator()(const std::map<std::string, double>& vars) const {
  if (!root_) throw Error(ErrorKind::ParseError, "empty expression");
  return evaluate(*root_, [&](const std::string& name) {
    auto it = vars.find(name);
    if (it == vars.end()) throw Error(ErrorKind::ParseError, "unbound variable '" + name + "'");
    return it->second;
  });
}

double Expression::at(double x, double y, double side_length) const {
  if (!root_) throw Error(ErrorKind::ParseError, "empty expression");
  return evaluate(*root_, [&](const std::string& name) {
    if (name == "x") return x;
    if (name == "y") return y;
    if (name == "L") return side_length;
    throw Error(ErrorKind::ParseError, "unbound variable '" + name + "' (fields see x, y, L)");
  });
}

}  // namespace aimlake
