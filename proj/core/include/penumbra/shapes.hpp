#pragma once

#include "penumbra/chart_expr.hpp"
#include "penumbra/domain.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace penumbra {

/// A chart from the built-in shape library, written in the chart DSL.
struct ShapeSpec {
  std::string name;
  std::vector<std::string> params;
  std::string chart;
  ConstantTable constants;
  DomainBox domain;
  int ambient_dim = 3;

  ChartExpr parse() const { return parse_chart(chart, params, constants); }
};

const std::vector<ShapeSpec>& builtin_shapes();

/// Throws Error for unknown names.
const ShapeSpec& builtin_shape(std::string_view name);

}  // namespace penumbra
