#include "penumbra/chart_expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

namespace penumbra {

std::string format_double(double x) {
  if (x == 0.0) return std::signbit(x) ? "-0" : "0";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), end);
}

namespace {

// ---------------------------------------------------------------- lexer

enum class Tok { kNumber, kIdent, kLParen, kRParen, kComma, kPlus, kMinus, kStar, kSlash, kCaret, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  double number = 0.0;
  SourceLocation loc;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
      if (src[i + j] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += k;
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    Token t;
    t.loc = {line, col};
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src.size() &&
                                                        std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      t.kind = Tok::kNumber;
      t.text = std::string(src.substr(i, j - i));
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
        throw ParseError("malformed number '" + t.text + "'", t.loc);
      }
      advance(j - i);
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::kIdent;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else {
      switch (c) {
        case '(': t.kind = Tok::kLParen; break;
        case ')': t.kind = Tok::kRParen; break;
        case ',': t.kind = Tok::kComma; break;
        case '+': t.kind = Tok::kPlus; break;
        case '-': t.kind = Tok::kMinus; break;
        case '*': t.kind = Tok::kStar; break;
        case '/': t.kind = Tok::kSlash; break;
        case '^': t.kind = Tok::kCaret; break;
        default:
          throw ParseError(std::string("unexpected character '") + c + "'", t.loc);
      }
      t.text = std::string(1, c);
      advance(1);
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::kEnd;
  end.loc = {line, col};
  out.push_back(end);
  return out;
}

// ---------------------------------------------------------------- parser

struct FunctionInfo {
  OpCode op;
  int arity;
};

std::optional<FunctionInfo> lookup_function(const std::string& name) {
  if (name == "sin") return FunctionInfo{OpCode::kSin, 1};
  if (name == "cos") return FunctionInfo{OpCode::kCos, 1};
  if (name == "tan") return FunctionInfo{OpCode::kTan, 1};
  if (name == "exp") return FunctionInfo{OpCode::kExp, 1};
  if (name == "log") return FunctionInfo{OpCode::kLog, 1};
  if (name == "sqrt") return FunctionInfo{OpCode::kSqrt, 1};
  if (name == "atan2") return FunctionInfo{OpCode::kAtan2, 2};
  if (name == "pow") return FunctionInfo{OpCode::kPow, 2};
  return std::nullopt;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, const std::vector<std::string>& params, const ConstantTable& constants)
      : toks_(std::move(tokens)), params_(params), constants_(constants) {}

  ChartExpr parse_top() {
    std::vector<int> roots;
    if (is_tuple()) {
      expect(Tok::kLParen, "'('");
      roots.push_back(parse_expr());
      while (peek().kind == Tok::kComma) {
        ++pos_;
        roots.push_back(parse_expr());
      }
      expect(Tok::kRParen, "')'");
    } else {
      roots.push_back(parse_expr());
    }
    if (peek().kind != Tok::kEnd) throw ParseError("unexpected '" + peek().text + "'", peek().loc);
    return ChartExpr::from_parts(params_, std::move(nodes_), std::move(roots));
  }

 private:
  // "(a, b, ...)" spanning the whole input with a comma at depth one.
  bool is_tuple() const {
    if (toks_.front().kind != Tok::kLParen) return false;
    int depth = 0;
    bool comma = false;
    for (std::size_t k = 0; k < toks_.size(); ++k) {
      const Tok kind = toks_[k].kind;
      if (kind == Tok::kLParen) ++depth;
      if (kind == Tok::kRParen) {
        --depth;
        if (depth == 0) return comma && toks_[k + 1].kind == Tok::kEnd;
      }
      if (kind == Tok::kComma && depth == 1) comma = true;
    }
    return false;
  }

  const Token& peek() const { return toks_[pos_]; }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) {
      const std::string got = peek().kind == Tok::kEnd ? "end of input" : "'" + peek().text + "'";
      throw ParseError(std::string("expected ") + what + ", got " + got, peek().loc);
    }
    return toks_[pos_++];
  }

  int add(ExprNode node) {
    if (node.lhs >= 0) node.parameter_free = node.parameter_free && nodes_[node.lhs].parameter_free;
    if (node.rhs >= 0) node.parameter_free = node.parameter_free && nodes_[node.rhs].parameter_free;
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary(OpCode op, int a, int b, SourceLocation loc) {
    ExprNode n;
    n.op = op;
    n.lhs = a;
    n.rhs = b;
    n.loc = loc;
    return add(std::move(n));
  }

  int parse_expr() {
    int lhs = parse_term();
    while (peek().kind == Tok::kPlus || peek().kind == Tok::kMinus) {
      const Token op = toks_[pos_++];
      const int rhs = parse_term();
      lhs = binary(op.kind == Tok::kPlus ? OpCode::kAdd : OpCode::kSub, lhs, rhs, op.loc);
    }
    return lhs;
  }

  int parse_term() {
    int lhs = parse_unary();
    while (peek().kind == Tok::kStar || peek().kind == Tok::kSlash) {
      const Token op = toks_[pos_++];
      const int rhs = parse_unary();
      lhs = binary(op.kind == Tok::kStar ? OpCode::kMul : OpCode::kDiv, lhs, rhs, op.loc);
    }
    return lhs;
  }

  int parse_unary() {
    if (peek().kind == Tok::kMinus) {
      const Token op = toks_[pos_++];
      ExprNode n;
      n.op = OpCode::kNeg;
      n.lhs = parse_unary();
      n.loc = op.loc;
      return add(std::move(n));
    }
    if (peek().kind == Tok::kPlus) {
      ++pos_;
      return parse_unary();
    }
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    if (peek().kind == Tok::kCaret) {
      const Token op = toks_[pos_++];
      const int exponent = parse_unary();
      return binary(OpCode::kPow, base, exponent, op.loc);
    }
    return base;
  }

  int parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::kNumber: {
        ++pos_;
        ExprNode n;
        n.op = OpCode::kConstant;
        n.value = t.number;
        n.loc = t.loc;
        return add(std::move(n));
      }
      case Tok::kLParen: {
        ++pos_;
        const int inner = parse_expr();
        if (peek().kind == Tok::kComma) throw ParseError("tuple not allowed inside an expression", peek().loc);
        expect(Tok::kRParen, "')'");
        return inner;
      }
      case Tok::kIdent:
        return parse_identifier();
      case Tok::kEnd:
        throw ParseError("unexpected end of input", t.loc);
      default:
        throw ParseError("unexpected '" + t.text + "'", t.loc);
    }
  }

  int parse_identifier() {
    const Token t = toks_[pos_++];
    if (peek().kind == Tok::kLParen) {
      const auto fn = lookup_function(t.text);
      if (!fn) throw ParseError("unknown function " + t.text, t.loc);
      ++pos_;
      std::vector<int> args;
      if (peek().kind != Tok::kRParen) {
        args.push_back(parse_expr());
        while (peek().kind == Tok::kComma) {
          ++pos_;
          args.push_back(parse_expr());
        }
      }
      expect(Tok::kRParen, "')'");
      if (static_cast<int>(args.size()) != fn->arity) {
        throw ParseError("arity mismatch: " + t.text + " expects " + std::to_string(fn->arity) +
                             " argument(s), got " + std::to_string(args.size()),
                         t.loc);
      }
      ExprNode n;
      n.op = fn->op;
      n.lhs = args[0];
      n.rhs = args.size() > 1 ? args[1] : -1;
      n.loc = t.loc;
      return add(std::move(n));
    }
    for (std::size_t k = 0; k < params_.size(); ++k) {
      if (params_[k] == t.text) {
        ExprNode n;
        n.op = OpCode::kParam;
        n.param = static_cast<int>(k);
        n.name = t.text;
        n.parameter_free = false;
        n.loc = t.loc;
        return add(std::move(n));
      }
    }
    double value = 0.0;
    if (auto it = constants_.find(t.text); it != constants_.end()) {
      value = it->second;
    } else if (t.text == "pi") {
      value = std::numbers::pi;
    } else if (lookup_function(t.text)) {
      throw ParseError("function " + t.text + " used without arguments", t.loc);
    } else {
      throw ParseError("unknown identifier " + t.text, t.loc);
    }
    ExprNode n;
    n.op = OpCode::kConstant;
    n.value = value;
    n.name = t.text;
    n.loc = t.loc;
    return add(std::move(n));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const std::vector<std::string>& params_;
  const ConstantTable& constants_;
  std::vector<ExprNode> nodes_;
};

// ---------------------------------------------------------------- jets

// Order 0: value only, 1: + gradient, 2: + Hessian (upper triangle stored).
template <int Order>
struct Dual {
  double v = 0.0;
  std::array<double, kMaxExprParams> g{};
  std::array<double, kMaxExprParams * kMaxExprParams> h{};
};

template <int Order>
class Evaluator {
 public:
  Evaluator(const ChartExpr& expr, const Vec& u) : expr_(expr), u_(u), n_(expr.arity()) {
    if (u.size() != n_) {
      throw Error("expression expects " + std::to_string(n_) + " parameter(s), got " + std::to_string(u.size()));
    }
  }

  std::vector<Dual<Order>> run() const {
    const auto& nodes = expr_.nodes();
    std::vector<Dual<Order>> vals(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) vals[k] = eval_node(nodes[k], vals);
    return vals;
  }

 private:
  using D = Dual<Order>;

  [[noreturn]] void fail(const ExprNode& node, const std::string& msg) const {
    throw DomainError(msg, node.loc);
  }

  D unary(const D& a, double f0, double f1, double f2) const {
    D r;
    r.v = f0;
    if constexpr (Order >= 1) {
      for (int i = 0; i < n_; ++i) r.g[i] = f1 * a.g[i];
    }
    if constexpr (Order >= 2) {
      for (int i = 0; i < n_; ++i) {
        for (int j = i; j < n_; ++j) {
          r.h[i * kMaxExprParams + j] = f2 * a.g[i] * a.g[j] + f1 * a.h[i * kMaxExprParams + j];
        }
      }
    }
    return r;
  }

  D binary(const D& a, const D& b, double f0, double fa, double fb, double faa, double fab, double fbb) const {
    D r;
    r.v = f0;
    if constexpr (Order >= 1) {
      for (int i = 0; i < n_; ++i) r.g[i] = fa * a.g[i] + fb * b.g[i];
    }
    if constexpr (Order >= 2) {
      for (int i = 0; i < n_; ++i) {
        for (int j = i; j < n_; ++j) {
          const int ij = i * kMaxExprParams + j;
          r.h[ij] = faa * a.g[i] * a.g[j] + fab * (a.g[i] * b.g[j] + a.g[j] * b.g[i]) + fbb * b.g[i] * b.g[j] +
                    fa * a.h[ij] + fb * b.h[ij];
        }
      }
    }
    return r;
  }

  D linear(const D& a, const D& b, double sb) const {
    D r;
    r.v = a.v + sb * b.v;
    if constexpr (Order >= 1) {
      for (int i = 0; i < n_; ++i) r.g[i] = a.g[i] + sb * b.g[i];
    }
    if constexpr (Order >= 2) {
      for (int i = 0; i < n_; ++i) {
        for (int j = i; j < n_; ++j) {
          const int ij = i * kMaxExprParams + j;
          r.h[ij] = a.h[ij] + sb * b.h[ij];
        }
      }
    }
    return r;
  }

  D power_const(const ExprNode& node, const D& a, double p) const {
    const bool integral = std::floor(p) == p;
    if (a.v < 0.0 && !integral) fail(node, "pow of negative base " + format_double(a.v) + " with non-integer exponent");
    if (a.v == 0.0) {
      if (p < 0.0) fail(node, "pow of zero base with negative exponent");
      if (!integral && Order > 0 && p < 2.0) fail(node, "pow at zero base has unbounded derivative");
    }
    const double f0 = std::pow(a.v, p);
    const double f1 = p == 0.0 ? 0.0 : p * std::pow(a.v, p - 1.0);
    const double f2 = (p == 0.0 || p == 1.0) ? 0.0 : p * (p - 1.0) * std::pow(a.v, p - 2.0);
    return unary(a, f0, f1, f2);
  }

  D eval_node(const ExprNode& node, const std::vector<D>& vals) const {
    switch (node.op) {
      case OpCode::kConstant: {
        D r;
        r.v = node.value;
        return r;
      }
      case OpCode::kParam: {
        D r;
        r.v = u_[node.param];
        if constexpr (Order >= 1) r.g[node.param] = 1.0;
        return r;
      }
      case OpCode::kAdd:
        return linear(vals[node.lhs], vals[node.rhs], 1.0);
      case OpCode::kSub:
        return linear(vals[node.lhs], vals[node.rhs], -1.0);
      case OpCode::kNeg:
        return unary(vals[node.lhs], -vals[node.lhs].v, -1.0, 0.0);
      case OpCode::kMul: {
        const D& a = vals[node.lhs];
        const D& b = vals[node.rhs];
        return binary(a, b, a.v * b.v, b.v, a.v, 0.0, 1.0, 0.0);
      }
      case OpCode::kDiv: {
        const D& a = vals[node.lhs];
        const D& b = vals[node.rhs];
        if (b.v == 0.0) fail(node, "division by zero");
        const double ib = 1.0 / b.v;
        return binary(a, b, a.v * ib, ib, -a.v * ib * ib, 0.0, -ib * ib, 2.0 * a.v * ib * ib * ib);
      }
      case OpCode::kPow: {
        const D& a = vals[node.lhs];
        const D& b = vals[node.rhs];
        if (expr_.nodes()[node.rhs].parameter_free) return power_const(node, a, b.v);
        if (a.v <= 0.0) fail(node, "pow with variable exponent needs a positive base, got " + format_double(a.v));
        const double la = std::log(a.v);
        const double f0 = std::pow(a.v, b.v);
        const double pm1 = std::pow(a.v, b.v - 1.0);
        return binary(a, b, f0, b.v * pm1, f0 * la, b.v * (b.v - 1.0) * std::pow(a.v, b.v - 2.0),
                      pm1 * (1.0 + b.v * la), f0 * la * la);
      }
      case OpCode::kSin: {
        const double s = std::sin(vals[node.lhs].v);
        const double c = std::cos(vals[node.lhs].v);
        return unary(vals[node.lhs], s, c, -s);
      }
      case OpCode::kCos: {
        const double s = std::sin(vals[node.lhs].v);
        const double c = std::cos(vals[node.lhs].v);
        return unary(vals[node.lhs], c, -s, -c);
      }
      case OpCode::kTan: {
        if (std::cos(vals[node.lhs].v) == 0.0) fail(node, "tan pole");
        const double t = std::tan(vals[node.lhs].v);
        return unary(vals[node.lhs], t, 1.0 + t * t, 2.0 * t * (1.0 + t * t));
      }
      case OpCode::kExp: {
        const double e = std::exp(vals[node.lhs].v);
        return unary(vals[node.lhs], e, e, e);
      }
      case OpCode::kLog: {
        const double a = vals[node.lhs].v;
        if (a <= 0.0) fail(node, "log of non-positive value " + format_double(a));
        return unary(vals[node.lhs], std::log(a), 1.0 / a, -1.0 / (a * a));
      }
      case OpCode::kSqrt: {
        const double a = vals[node.lhs].v;
        if (a < 0.0) fail(node, "sqrt of negative value " + format_double(a));
        if (a == 0.0) {
          if constexpr (Order == 0) {
            D r;
            return r;
          } else {
            fail(node, "sqrt at zero has unbounded derivative");
          }
        }
        const double s = std::sqrt(a);
        return unary(vals[node.lhs], s, 0.5 / s, -0.25 / (s * s * s));
      }
      case OpCode::kAtan2: {
        const double y = vals[node.lhs].v;
        const double x = vals[node.rhs].v;
        const double r2 = x * x + y * y;
        if (r2 == 0.0) fail(node, "atan2(0, 0) is undefined");
        const double r4 = r2 * r2;
        return binary(vals[node.lhs], vals[node.rhs], std::atan2(y, x), x / r2, -y / r2, -2.0 * x * y / r4,
                      (y * y - x * x) / r4, 2.0 * x * y / r4);
      }
    }
    fail(node, "unknown opcode");
  }

  const ChartExpr& expr_;
  const Vec& u_;
  int n_;
};

const char* binary_symbol(OpCode op) {
  switch (op) {
    case OpCode::kAdd: return " + ";
    case OpCode::kSub: return " - ";
    case OpCode::kMul: return " * ";
    case OpCode::kDiv: return " / ";
    case OpCode::kPow: return "^";
    default: return "?";
  }
}

const char* function_name(OpCode op) {
  switch (op) {
    case OpCode::kSin: return "sin";
    case OpCode::kCos: return "cos";
    case OpCode::kTan: return "tan";
    case OpCode::kExp: return "exp";
    case OpCode::kLog: return "log";
    case OpCode::kSqrt: return "sqrt";
    case OpCode::kAtan2: return "atan2";
    default: return "?";
  }
}

void print_node(const std::vector<ExprNode>& nodes, const std::vector<std::string>& params, int k,
                std::ostringstream& out) {
  const ExprNode& n = nodes[static_cast<std::size_t>(k)];
  switch (n.op) {
    case OpCode::kConstant:
      if (!n.name.empty()) {
        out << n.name;
      } else if (n.value < 0.0 || std::signbit(n.value)) {
        out << "(-" << format_double(-n.value) << ")";
      } else {
        out << format_double(n.value);
      }
      return;
    case OpCode::kParam:
      out << params[static_cast<std::size_t>(n.param)];
      return;
    case OpCode::kNeg:
      out << "(-";
      print_node(nodes, params, n.lhs, out);
      out << ")";
      return;
    case OpCode::kAdd:
    case OpCode::kSub:
    case OpCode::kMul:
    case OpCode::kDiv:
    case OpCode::kPow:
      out << "(";
      print_node(nodes, params, n.lhs, out);
      out << binary_symbol(n.op);
      print_node(nodes, params, n.rhs, out);
      out << ")";
      return;
    case OpCode::kAtan2:
      out << "atan2(";
      print_node(nodes, params, n.lhs, out);
      out << ", ";
      print_node(nodes, params, n.rhs, out);
      out << ")";
      return;
    default:
      out << function_name(n.op) << "(";
      print_node(nodes, params, n.lhs, out);
      out << ")";
      return;
  }
}

}  // namespace

ChartExpr ChartExpr::from_parts(std::vector<std::string> params, std::vector<ExprNode> nodes,
                                std::vector<int> roots) {
  if (params.size() > static_cast<std::size_t>(kMaxExprParams)) {
    throw Error("expression declares " + std::to_string(params.size()) + " parameters; at most " +
                std::to_string(kMaxExprParams) + " are supported");
  }
  if (roots.empty()) throw Error("expression has no outputs");
  ChartExpr e;
  e.params_ = std::move(params);
  e.nodes_ = std::move(nodes);
  e.roots_ = std::move(roots);
  return e;
}

Vec ChartExpr::eval(const Vec& u) const {
  const auto vals = Evaluator<0>(*this, u).run();
  Vec out(outputs());
  for (int k = 0; k < outputs(); ++k) out[k] = vals[static_cast<std::size_t>(roots_[k])].v;
  return out;
}

Jet1 ChartExpr::eval_first(const Vec& u) const {
  const auto vals = Evaluator<1>(*this, u).run();
  const int n = arity();
  Jet1 jet{Vec(outputs()), Mat(outputs(), n)};
  for (int k = 0; k < outputs(); ++k) {
    const auto& d = vals[static_cast<std::size_t>(roots_[k])];
    jet.value[k] = d.v;
    for (int i = 0; i < n; ++i) jet.jacobian(k, i) = d.g[i];
  }
  return jet;
}

Jet2 ChartExpr::eval_jet(const Vec& u) const {
  const auto vals = Evaluator<2>(*this, u).run();
  const int n = arity();
  Jet2 jet;
  jet.value.resize(outputs());
  jet.jacobian.resize(outputs(), n);
  jet.hessian.assign(static_cast<std::size_t>(outputs()), Mat(n, n));
  for (int k = 0; k < outputs(); ++k) {
    const auto& d = vals[static_cast<std::size_t>(roots_[k])];
    jet.value[k] = d.v;
    Mat& h = jet.hessian[static_cast<std::size_t>(k)];
    for (int i = 0; i < n; ++i) {
      jet.jacobian(k, i) = d.g[i];
      for (int j = i; j < n; ++j) {
        h(i, j) = d.h[i * kMaxExprParams + j];
        h(j, i) = h(i, j);
      }
    }
  }
  return jet;
}

std::string ChartExpr::print_output(int k) const {
  std::ostringstream out;
  print_node(nodes_, params_, roots_.at(static_cast<std::size_t>(k)), out);
  return out.str();
}

std::string ChartExpr::print() const {
  if (outputs() == 1) return print_output(0);
  std::string s = "(";
  for (int k = 0; k < outputs(); ++k) {
    if (k > 0) s += ", ";
    s += print_output(k);
  }
  return s + ")";
}

ChartExpr ChartExpr::product(const ChartExpr& a, const ChartExpr& b) {
  std::vector<std::string> params = a.params_;
  for (const auto& p : b.params_) {
    std::string name = p;
    while (std::find(params.begin(), params.end(), name) != params.end()) name += "_";
    params.push_back(name);
  }
  std::vector<ExprNode> nodes = a.nodes_;
  const int offset = static_cast<int>(a.nodes_.size());
  for (ExprNode n : b.nodes_) {
    if (n.lhs >= 0) n.lhs += offset;
    if (n.rhs >= 0) n.rhs += offset;
    if (n.op == OpCode::kParam) {
      n.param += a.arity();
      n.name = params[static_cast<std::size_t>(n.param)];
    }
    nodes.push_back(std::move(n));
  }
  std::vector<int> roots = a.roots_;
  for (int r : b.roots_) roots.push_back(r + offset);
  return from_parts(std::move(params), std::move(nodes), std::move(roots));
}

ChartExpr parse_chart(std::string_view text, const std::vector<std::string>& params, const ConstantTable& constants) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = i + 1; j < params.size(); ++j) {
      if (params[i] == params[j]) throw ParseError("duplicate parameter " + params[i], {1, 1});
    }
  }
  Parser parser(tokenize(text), params, constants);
  return parser.parse_top();
}

}  // namespace penumbra
