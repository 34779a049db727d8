#pragma once

// Shared builders and independent oracles for the test suites.

#include "penumbra/chart_expr.hpp"
#include "penumbra/geometry.hpp"
#include "penumbra/shapes.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace penumbra::test {

inline constexpr double kPi = std::numbers::pi;

inline std::shared_ptr<const AmbientSpace> flat(int m) { return std::make_shared<const AmbientSpace>(AmbientSpace::flat(m)); }

inline std::shared_ptr<const AmbientSpace> unit_sphere_ambient() {
  return std::make_shared<const AmbientSpace>(
      AmbientSpace::constrained(parse_chart("x^2 + y^2 + z^2 - 1", {"x", "y", "z"})));
}

inline PatchPtr shape_patch(const std::string& name, const ConstantTable& overrides = {}) {
  const ShapeSpec& s = builtin_shape(name);
  ConstantTable c = s.constants;
  for (const auto& [k, v] : overrides) c[k] = v;
  return std::make_shared<const SubmanifoldPatch>(s.name, parse_chart(s.chart, s.params, c), s.domain, flat(s.ambient_dim));
}

inline PatchPtr patch(const std::string& name, const std::string& chart, const std::vector<std::string>& params,
                      DomainBox box, std::shared_ptr<const AmbientSpace> amb, const ConstantTable& c = {}) {
  return std::make_shared<const SubmanifoldPatch>(name, parse_chart(chart, params, c), std::move(box), std::move(amb));
}

inline PatchPtr nested(const std::string& name, const std::string& chart, const std::vector<std::string>& params,
                       DomainBox box, PatchPtr parent) {
  return std::make_shared<const SubmanifoldPatch>(name, parse_chart(chart, params), std::move(box), std::move(parent));
}

/// Latitude circle at colatitude theta as a curve in the unit sphere S^2.
inline PatchPtr latitude(double theta) {
  return patch("latitude", "(s*cos(u), s*sin(u), c)", {"u"}, {{0, 2 * kPi, true}}, unit_sphere_ambient(),
               {{"s", std::sin(theta)}, {"c", std::cos(theta)}});
}

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

using VecFn = std::function<Vec(const Vec&)>;

/// Central differences with one Richardson step: (4 D(h/2) - D(h)) / 3.
inline Mat fd_jacobian(const VecFn& f, const Vec& u, double h = 1e-4) {
  const Vec f0 = f(u);
  Mat j(f0.size(), u.size());
  for (Eigen::Index l = 0; l < u.size(); ++l) {
    auto d = [&](double s) {
      Vec up = u, dn = u;
      up[l] += s;
      dn[l] -= s;
      return Vec((f(up) - f(dn)) / (2 * s));
    };
    j.col(l) = (4.0 * d(h / 2) - d(h)) / 3.0;
  }
  return j;
}

/// Hessian of output `a` by central second differences with Richardson.
inline Mat fd_hessian(const VecFn& f, const Vec& u, int a, double h = 1e-3) {
  const Eigen::Index n = u.size();
  Mat hess(n, n);
  auto second = [&](Eigen::Index i, Eigen::Index j, double s) {
    auto at = [&](double di, double dj) {
      Vec x = u;
      x[i] += di;
      x[j] += dj;
      return f(x)[a];
    };
    return (at(s, s) - at(s, -s) - at(-s, s) + at(-s, -s)) / (4 * s * s);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) hess(i, j) = (4.0 * second(i, j, h / 2) - second(i, j, h)) / 3.0;
  }
  return hess;
}

/// Uniform point inside a domain box, kept `margin` away from closed edges.
inline Vec random_point(std::mt19937_64& rng, const DomainBox& box, double margin = 0.0) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Vec u(static_cast<Eigen::Index>(box.size()));
  for (std::size_t i = 0; i < box.size(); ++i) {
    const double m = box[i].periodic ? 0.0 : margin * box[i].length();
    u[static_cast<Eigen::Index>(i)] = box[i].lo + m + uni(rng) * (box[i].length() - 2 * m);
  }
  return u;
}

/// Orthonormal basis of the kernel of a (full row rank) matrix, by SVD.
inline Mat kernel_basis(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const Eigen::Index r = a.rows();
  return svd.matrixV().rightCols(a.cols() - r);
}

}  // namespace penumbra::test
