#include "penumbra/shapes.hpp"

#include "penumbra/error.hpp"

#include <numbers>

namespace penumbra {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<ShapeSpec> make_library() {
  std::vector<ShapeSpec> lib;
  lib.push_back({"plane", {"u", "v"}, "(u, v, 0)", {}, {{-1, 1}, {-1, 1}}, 3});
  lib.push_back({"sphere",
                 {"theta", "phi"},
                 "(a*sin(theta)*cos(phi), a*sin(theta)*sin(phi), a*cos(theta))",
                 {{"a", 1.0}},
                 {{0.05, kPi - 0.05}, {0, 2 * kPi, true}},
                 3});
  lib.push_back({"cylinder", {"u", "v"}, "(r*cos(u), r*sin(u), v)", {{"r", 1.0}}, {{0, 2 * kPi, true}, {-1, 1}}, 3});
  lib.push_back({"cone",
                 {"s", "u"},
                 "(s*sin(alpha)*cos(u), s*sin(alpha)*sin(u), s*cos(alpha))",
                 {{"alpha", 0.5}},
                 {{0.5, 2.0}, {0, 2 * kPi, true}},
                 3});
  lib.push_back({"torus",
                 {"t", "p"},
                 "((R + r*cos(t))*cos(p), (R + r*cos(t))*sin(p), r*sin(t))",
                 {{"R", 2.0}, {"r", 1.0}},
                 {{0, 2 * kPi, true}, {0, 2 * kPi, true}},
                 3});
  lib.push_back({"circle", {"u"}, "(r*cos(u), r*sin(u))", {{"r", 1.0}}, {{0, 2 * kPi, true}}, 2});
  lib.push_back({"circle3", {"u"}, "(r*cos(u), r*sin(u), 0)", {{"r", 1.0}}, {{0, 2 * kPi, true}}, 3});
  lib.push_back({"helix_curve", {"t"}, "(a*cos(t), a*sin(t), c*t)", {{"a", 1.0}, {"c", 0.5}}, {{0, 4 * kPi}}, 3});
  lib.push_back({"saddle", {"x", "y"}, "(x, y, x^2 - y^2)", {}, {{-1, 1}, {-1, 1}}, 3});
  lib.push_back({"wave", {"x", "y"}, "(x, y, sin(x)*cos(y))", {}, {{-1.5, 1.5}, {-1.5, 1.5}}, 3});
  lib.push_back({"paraboloid", {"x", "y"}, "(x, y, exp(0.5*x) + log(2 + y*y))", {}, {{-1, 1}, {-1, 1}}, 3});
  lib.push_back({"clifford_torus",
                 {"u", "v"},
                 "(cos(u), sin(u), cos(v), sin(v))",
                 {},
                 {{0, 2 * kPi, true}, {0, 2 * kPi, true}},
                 4});
  lib.push_back({"sphere_x_circle",
                 {"theta", "phi", "w"},
                 "(sin(theta)*cos(phi), sin(theta)*sin(phi), cos(theta), cos(w), sin(w))",
                 {},
                 {{0.05, kPi - 0.05}, {0, 2 * kPi, true}, {0, 2 * kPi, true}},
                 5});
  lib.push_back({"stereographic",
                 {"x", "y"},
                 "(2*x/(1 + x^2 + y^2), 2*y/(1 + x^2 + y^2), (x^2 + y^2 - 1)/(1 + x^2 + y^2))",
                 {},
                 {{-2, 2}, {-2, 2}},
                 3});
  lib.push_back({"mixed_primitives", {"rho", "phi"}, "(sqrt(rho)*cos(phi), rho^1.5*sin(phi), atan2(rho, 1 + phi^2))", {},
                 {{0.2, 2.0}, {-1, 1}}, 3});
  return lib;
}

}  // namespace

const std::vector<ShapeSpec>& builtin_shapes() {
  static const std::vector<ShapeSpec> lib = make_library();
  return lib;
}

const ShapeSpec& builtin_shape(std::string_view name) {
  for (const auto& s : builtin_shapes()) {
    if (s.name == name) return s;
  }
  throw Error("unknown built-in shape " + std::string(name));
}

}  // namespace penumbra
