#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "streamline/jet.hpp"

namespace streamline {

using ParamMap = std::map<std::string, double>;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

enum class NodeKind { Constant, Variable, Parameter, Unary, Binary };
enum class UnaryOp { Neg, Sin, Cos, Exp, Log, Sqrt, Abs };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct Node {
  NodeKind kind = NodeKind::Constant;
  double constant = 0.0;
  int index = 0;  // variable slot or parameter slot
  UnaryOp unary = UnaryOp::Neg;
  BinaryOp binary = BinaryOp::Add;
  int lhs = -1;
  int rhs = -1;
};

// Immutable expression tree over named variables. Nodes live in a flat
// array; children always precede parents.
class Expression {
 public:
  Expression() = default;

  // Variables x, y, z resolve to x1, x2, x3 when those are declared.
  static Expression parse(std::string_view text, const std::vector<std::string>& variables,
                          const std::vector<std::string>& parameters = {});
  static Expression constant(double v, const std::vector<std::string>& variables);

  bool empty() const { return !nodes_ || nodes_->empty(); }
  const std::vector<std::string>& variables() const { return vars_; }
  const std::vector<std::string>& parameters() const { return params_; }
  const std::vector<Node>& nodes() const { return *nodes_; }
  int root() const { return static_cast<int>(nodes_->size()) - 1; }
  // Parameters still referenced by the tree.
  std::vector<std::string> unbound() const;

  // Replaces the named parameters by constants. Unknown names are ignored.
  Expression bind(const ParamMap& params) const;
  // Substitutes inner[i] for variable i; result is over inner's variables.
  Expression compose(const std::vector<Expression>& inner) const;

  // nullopt on a domain error. Throws std::invalid_argument when a
  // parameter is unbound or the point dimension is wrong.
  std::optional<double> eval(std::span<const double> point) const;
  // Also nullopt where the value exists but a derivative does not
  // (abs at 0, sqrt at 0, non-integer power of 0).
  std::optional<Jet2> eval_jet2(std::span<const double> point) const;

  std::string to_string() const;

 private:
  std::shared_ptr<const std::vector<Node>> nodes_;
  std::vector<std::string> vars_;
  std::vector<std::string> params_;
};

}  // namespace streamline
