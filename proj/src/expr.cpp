#include "streamline/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace streamline {

namespace {

struct FunctionName {
  const char* name;
  UnaryOp op;
};

constexpr FunctionName kFunctions[] = {
    {"sin", UnaryOp::Sin},   {"cos", UnaryOp::Cos},   {"exp", UnaryOp::Exp},
    {"log", UnaryOp::Log},   {"sqrt", UnaryOp::Sqrt}, {"abs", UnaryOp::Abs},
};

const char* unary_name(UnaryOp op) {
  for (const auto& f : kFunctions)
    if (f.op == op) return f.name;
  return "-";
}

char binary_symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return '+';
    case BinaryOp::Sub: return '-';
    case BinaryOp::Mul: return '*';
    case BinaryOp::Div: return '/';
    case BinaryOp::Pow: return '^';
  }
  return '?';
}

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& vars,
         const std::vector<std::string>& params)
      : text_(text), vars_(vars), params_(params) {}

  std::vector<Node> run() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
    parse_expr();
    skip_space();
    if (pos_ < text_.size()) {
      if (text_[pos_] == ')') throw ParseError("unbalanced parentheses", pos_);
      throw ParseError(std::string("unexpected character '") + text_[pos_] + "'", pos_);
    }
    return std::move(nodes_);
  }

 private:
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

  int push(Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary(BinaryOp op, int l, int r) {
    Node n;
    n.kind = NodeKind::Binary;
    n.binary = op;
    n.lhs = l;
    n.rhs = r;
    return push(n);
  }

  int unary(UnaryOp op, int arg) {
    Node n;
    n.kind = NodeKind::Unary;
    n.unary = op;
    n.lhs = arg;
    return push(n);
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        int rhs = parse_term();
        lhs = binary(BinaryOp::Add, lhs, rhs);
      } else if (accept('-')) {
        int rhs = parse_term();
        lhs = binary(BinaryOp::Sub, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        int rhs = parse_unary();
        lhs = binary(BinaryOp::Mul, lhs, rhs);
      } else if (accept('/')) {
        int rhs = parse_unary();
        lhs = binary(BinaryOp::Div, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    if (accept('-')) return unary(UnaryOp::Neg, parse_unary());
    return parse_power();
  }

  int parse_power() {
    int base = parse_primary();
    if (accept('^')) {
      int exponent = parse_unary();
      return binary(BinaryOp::Pow, base, exponent);
    }
    return base;
  }

  int parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("expected expression", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      const std::size_t open = pos_;
      ++pos_;
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == ')') throw ParseError("empty parentheses", pos_);
      int inner = parse_expr();
      if (!accept(')')) throw ParseError("unbalanced parentheses", open);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (c == ')') throw ParseError("unbalanced parentheses", pos_);
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  int parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t n = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) throw ParseError("malformed number", start);
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;
    }
    Node node;
    node.kind = NodeKind::Constant;
    node.constant = std::strtod(std::string(text_.substr(start, pos_ - start)).c_str(), nullptr);
    return push(node);
  }

  int parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name(text_.substr(start, pos_ - start));

    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      for (const auto& f : kFunctions) {
        if (name != f.name) continue;
        const std::size_t open = pos_;
        ++pos_;
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == ')') throw ParseError("empty argument", pos_);
        int arg = parse_expr();
        if (!accept(')')) throw ParseError("unbalanced parentheses", open);
        return unary(f.op, arg);
      }
      throw ParseError("unknown identifier '" + name + "'", start);
    }

    if (int slot = find(vars_, name); slot >= 0) return variable(slot);
    static const std::pair<const char*, const char*> aliases[] = {
        {"x", "x1"}, {"y", "x2"}, {"z", "x3"}};
    for (const auto& [alias, full] : aliases)
      if (name == alias)
        if (int slot = find(vars_, full); slot >= 0) return variable(slot);
    if (int slot = find(params_, name); slot >= 0) {
      Node node;
      node.kind = NodeKind::Parameter;
      node.index = slot;
      return push(node);
    }
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  int variable(int slot) {
    Node node;
    node.kind = NodeKind::Variable;
    node.index = slot;
    return push(node);
  }

  static int find(const std::vector<std::string>& names, const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  const std::vector<std::string>& params_;
  std::vector<Node> nodes_;
  std::size_t pos_ = 0;
};

bool is_integer(double c) { return std::isfinite(c) && c == std::nearbyint(c); }

std::optional<double> apply_unary(UnaryOp op, double u) {
  switch (op) {
    case UnaryOp::Neg: return -u;
    case UnaryOp::Sin: return std::sin(u);
    case UnaryOp::Cos: return std::cos(u);
    case UnaryOp::Exp: return std::exp(u);
    case UnaryOp::Log:
      if (!(u > 0.0)) return std::nullopt;
      return std::log(u);
    case UnaryOp::Sqrt:
      if (u < 0.0) return std::nullopt;
      return std::sqrt(u);
    case UnaryOp::Abs: return std::fabs(u);
  }
  return std::nullopt;
}

std::optional<double> apply_binary(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::Div:
      if (b == 0.0) return std::nullopt;
      return a / b;
    case BinaryOp::Pow:
      if (a < 0.0 && !is_integer(b)) return std::nullopt;
      if (a == 0.0 && b < 0.0) return std::nullopt;
      return std::pow(a, b);
  }
  return std::nullopt;
}

std::optional<Jet2> jet_unary(UnaryOp op, const Jet2& u) {
  const double x = u.value();
  switch (op) {
    case UnaryOp::Neg: return -u;
    case UnaryOp::Sin: return u.chain(std::sin(x), std::cos(x), -std::sin(x));
    case UnaryOp::Cos: return u.chain(std::cos(x), -std::sin(x), -std::cos(x));
    case UnaryOp::Exp: {
      const double e = std::exp(x);
      return u.chain(e, e, e);
    }
    case UnaryOp::Log:
      if (!(x > 0.0)) return std::nullopt;
      return u.chain(std::log(x), 1.0 / x, -1.0 / (x * x));
    case UnaryOp::Sqrt: {
      if (!(x > 0.0)) return std::nullopt;
      const double s = std::sqrt(x);
      return u.chain(s, 0.5 / s, -0.25 / (s * x));
    }
    case UnaryOp::Abs:
      if (x == 0.0) return std::nullopt;
      return u.chain(std::fabs(x), x > 0.0 ? 1.0 : -1.0, 0.0);
  }
  return std::nullopt;
}

bool jet_is_constant(const Jet2& j) {
  for (int i = 0; i < j.size(); ++i) {
    if (j.grad(i) != 0.0) return false;
    for (int k = i; k < j.size(); ++k)
      if (j.hess(i, k) != 0.0) return false;
  }
  return true;
}

std::optional<Jet2> jet_pow(const Jet2& u, const Jet2& v) {
  const double x = u.value();
  if (jet_is_constant(v)) {
    const double c = v.value();
    if (c == 0.0) return Jet2::constant(u.size(), 1.0);
    if (x < 0.0 && !is_integer(c)) return std::nullopt;
    if (x == 0.0 && c < 0.0) return std::nullopt;
    const double f0 = std::pow(x, c);
    const double f1 = c * std::pow(x, c - 1.0);
    const double f2 = (c == 1.0) ? 0.0 : c * (c - 1.0) * std::pow(x, c - 2.0);
    return u.chain(f0, f1, f2);
  }
  if (!(x > 0.0)) return std::nullopt;
  auto lg = jet_unary(UnaryOp::Log, u);
  return jet_unary(UnaryOp::Exp, v * *lg);
}

std::string format_constant(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", std::fabs(v));
  std::string s(buf);
  if (std::signbit(v)) return "(-" + s + ")";
  return s;
}

}  // namespace

Expression Expression::parse(std::string_view text, const std::vector<std::string>& variables,
                             const std::vector<std::string>& parameters) {
  Parser p(text, variables, parameters);
  Expression e;
  e.nodes_ = std::make_shared<const std::vector<Node>>(p.run());
  e.vars_ = variables;
  e.params_ = parameters;
  return e;
}

Expression Expression::constant(double v, const std::vector<std::string>& variables) {
  Node n;
  n.constant = v;
  Expression e;
  e.nodes_ = std::make_shared<const std::vector<Node>>(std::vector<Node>{n});
  e.vars_ = variables;
  return e;
}

std::vector<std::string> Expression::unbound() const {
  std::vector<std::string> out;
  if (empty()) return out;
  for (const Node& n : *nodes_)
    if (n.kind == NodeKind::Parameter &&
        std::find(out.begin(), out.end(), params_[n.index]) == out.end())
      out.push_back(params_[n.index]);
  return out;
}

Expression Expression::bind(const ParamMap& params) const {
  std::vector<Node> nodes = *nodes_;
  for (Node& n : nodes) {
    if (n.kind != NodeKind::Parameter) continue;
    auto it = params.find(params_[n.index]);
    if (it == params.end()) continue;
    n.kind = NodeKind::Constant;
    n.constant = it->second;
  }
  Expression e = *this;
  e.nodes_ = std::make_shared<const std::vector<Node>>(std::move(nodes));
  return e;
}

Expression Expression::compose(const std::vector<Expression>& inner) const {
  if (inner.size() != vars_.size())
    throw std::invalid_argument("compose: need one inner expression per variable");
  if (inner.empty()) return *this;
  Expression out;
  out.vars_ = inner.front().vars_;
  out.params_ = params_;
  auto param_slot = [&](const std::string& name) {
    auto it = std::find(out.params_.begin(), out.params_.end(), name);
    if (it != out.params_.end()) return static_cast<int>(it - out.params_.begin());
    out.params_.push_back(name);
    return static_cast<int>(out.params_.size()) - 1;
  };

  std::vector<Node> nodes;
  std::vector<int> roots;
  for (const Expression& e : inner) {
    if (e.vars_ != out.vars_) throw std::invalid_argument("compose: inner variable lists differ");
    const int offset = static_cast<int>(nodes.size());
    for (Node n : *e.nodes_) {
      if (n.lhs >= 0) n.lhs += offset;
      if (n.rhs >= 0) n.rhs += offset;
      if (n.kind == NodeKind::Parameter) n.index = param_slot(e.params_[n.index]);
      nodes.push_back(n);
    }
    roots.push_back(static_cast<int>(nodes.size()) - 1);
  }
  // Dead inner trees are harmless: evaluation walks every node but only the
  // root value is returned.
  std::vector<int> remap(nodes_->size());
  for (std::size_t i = 0; i < nodes_->size(); ++i) {
    Node n = (*nodes_)[i];
    if (n.kind == NodeKind::Variable) {
      remap[i] = roots[n.index];
      continue;
    }
    if (n.lhs >= 0) n.lhs = remap[n.lhs];
    if (n.rhs >= 0) n.rhs = remap[n.rhs];
    nodes.push_back(n);
    remap[i] = static_cast<int>(nodes.size()) - 1;
  }
  // A bare variable as root: copy its replacement so root() stays last.
  if (nodes_->back().kind == NodeKind::Variable) {
    const Node copy = nodes[roots[nodes_->back().index]];
    nodes.push_back(copy);
  }
  out.nodes_ = std::make_shared<const std::vector<Node>>(std::move(nodes));
  return out;
}

std::optional<double> Expression::eval(std::span<const double> point) const {
  if (point.size() != vars_.size()) throw std::invalid_argument("eval: point dimension mismatch");
  thread_local std::vector<double> values;
  const auto& nodes = *nodes_;
  values.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    std::optional<double> r;
    switch (n.kind) {
      case NodeKind::Constant: r = n.constant; break;
      case NodeKind::Variable: r = point[n.index]; break;
      case NodeKind::Parameter:
        throw std::invalid_argument("unbound parameter '" + params_[n.index] + "'");
      case NodeKind::Unary: r = apply_unary(n.unary, values[n.lhs]); break;
      case NodeKind::Binary: r = apply_binary(n.binary, values[n.lhs], values[n.rhs]); break;
    }
    if (!r || !std::isfinite(*r)) return std::nullopt;
    values[i] = *r;
  }
  return values.back();
}

std::optional<Jet2> Expression::eval_jet2(std::span<const double> point) const {
  if (point.size() != vars_.size()) throw std::invalid_argument("eval: point dimension mismatch");
  const int nv = static_cast<int>(vars_.size());
  if (nv > max_dim) throw std::invalid_argument("eval_jet2: more than four variables");
  thread_local std::vector<Jet2> values;
  const auto& nodes = *nodes_;
  values.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    std::optional<Jet2> r;
    switch (n.kind) {
      case NodeKind::Constant: r = Jet2::constant(nv, n.constant); break;
      case NodeKind::Variable: r = Jet2::variable(nv, n.index, point[n.index]); break;
      case NodeKind::Parameter:
        throw std::invalid_argument("unbound parameter '" + params_[n.index] + "'");
      case NodeKind::Unary: r = jet_unary(n.unary, values[n.lhs]); break;
      case NodeKind::Binary: {
        const Jet2& a = values[n.lhs];
        const Jet2& b = values[n.rhs];
        switch (n.binary) {
          case BinaryOp::Add: r = a + b; break;
          case BinaryOp::Sub: r = a - b; break;
          case BinaryOp::Mul: r = a * b; break;
          case BinaryOp::Div:
            if (b.value() != 0.0) r = a / b;
            break;
          case BinaryOp::Pow: r = jet_pow(a, b); break;
        }
        break;
      }
    }
    if (!r || !r->finite()) return std::nullopt;
    values[i] = *r;
  }
  return values.back();
}

std::string Expression::to_string() const {
  const auto& nodes = *nodes_;
  auto rec = [&](auto&& self, int i) -> std::string {
    const Node& n = nodes[i];
    switch (n.kind) {
      case NodeKind::Constant: return format_constant(n.constant);
      case NodeKind::Variable: return vars_[n.index];
      case NodeKind::Parameter: return params_[n.index];
      case NodeKind::Unary:
        if (n.unary == UnaryOp::Neg) return "(-" + self(self, n.lhs) + ")";
        return std::string(unary_name(n.unary)) + "(" + self(self, n.lhs) + ")";
      case NodeKind::Binary:
        return "(" + self(self, n.lhs) + " " + binary_symbol(n.binary) + " " + self(self, n.rhs) +
               ")";
    }
    return "";
  };
  return rec(rec, root());
}

}  // namespace streamline
