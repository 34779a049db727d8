#pragma once

#include "penumbra/error.hpp"
#include "penumbra/linalg.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace penumbra {

// Largest number of parameters a single expression may declare.
inline constexpr int kMaxExprParams = 8;

enum class OpCode : std::uint8_t {
  kConstant,  // literal or scene-bound named constant
  kParam,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kPow,
  kSin,
  kCos,
  kTan,
  kExp,
  kLog,
  kSqrt,
  kAtan2,
};

struct ExprNode {
  OpCode op = OpCode::kConstant;
  double value = 0.0;  // kConstant
  int param = -1;      // kParam
  std::string name;    // named constant, empty for literals
  int lhs = -1;
  int rhs = -1;
  bool parameter_free = true;
  SourceLocation loc;
};

/// Value, Jacobian and per-output Hessians of a vector expression.
struct Jet2 {
  Vec value;                  // m
  Mat jacobian;               // m x n
  std::vector<Mat> hessian;   // m entries, each n x n

  int outputs() const { return static_cast<int>(value.size()); }
  int params() const { return static_cast<int>(jacobian.cols()); }
};

struct Jet1 {
  Vec value;
  Mat jacobian;
};

using ConstantTable = std::map<std::string, double>;

/// Immutable expression DAG. Nodes are stored so that children always precede
/// their parents; evaluation is a single forward sweep and is reentrant.
class ChartExpr {
 public:
  ChartExpr() = default;

  const std::vector<std::string>& params() const { return params_; }
  int arity() const { return static_cast<int>(params_.size()); }
  int outputs() const { return static_cast<int>(roots_.size()); }
  const std::vector<ExprNode>& nodes() const { return nodes_; }
  const std::vector<int>& roots() const { return roots_; }

  Vec eval(const Vec& u) const;
  Jet1 eval_first(const Vec& u) const;
  Jet2 eval_jet(const Vec& u) const;

  /// Fully parenthesized source; reparses to an expression that evaluates identically.
  std::string print() const;
  std::string print_output(int k) const;

  /// Concatenation (params of a, then params of b; outputs likewise).
  static ChartExpr product(const ChartExpr& a, const ChartExpr& b);

  /// Builds an expression from already-validated parts. Used by the parser and by product().
  static ChartExpr from_parts(std::vector<std::string> params, std::vector<ExprNode> nodes,
                              std::vector<int> roots);

 private:
  std::vector<std::string> params_;
  std::vector<ExprNode> nodes_;
  std::vector<int> roots_;
};

/// Parses "expr" or "(expr, expr, ...)". Identifiers resolve against `params`,
/// then `constants`, then the builtin `pi`.
ChartExpr parse_chart(std::string_view text, const std::vector<std::string>& params,
                      const ConstantTable& constants = {});

inline Jet2 eval_jet(const ChartExpr& chart, const Vec& u) { return chart.eval_jet(u); }

/// Shortest round-trip decimal representation.
std::string format_double(double x);

}  // namespace penumbra
