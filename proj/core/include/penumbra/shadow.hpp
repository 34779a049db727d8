#pragma once

#include "penumbra/geometry.hpp"
#include "penumbra/report.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace penumbra {

/// F_j = <Y, xi_j> and its Jacobian. For parallel Y the Jacobian is
/// -<II(tan Y, d_l phi), xi_j>; otherwise <grad_{d_l} Y, xi_j> is added.
struct ShadowResidual {
  Vec u;
  Vec y;
  Vec f;
  Mat jacobian;          // k x n, full derivative of F
  Mat theorem_jacobian;  // the second fundamental form term alone
  Mat field_term;        // <grad Y, xi>
  Mat normals;   // m x k, the xi_j used for both F and J
  FrameData frame;
};

/// Normals: aligned with `reference` when given, the oriented normal when
/// k = 1, the frame's normal frame otherwise.
ShadowResidual shadow_residual(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& u,
                               const Tolerances& tol = {}, const Mat* reference = nullptr);

/// Central differences of F with normals aligned to those at u.
Mat shadow_fd_jacobian(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& u,
                       const Tolerances& tol = {}, double step = 1e-4);

/// |J - FD Jacobian|_inf.
double shadow_jacobian_consistency(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& u,
                                   const Tolerances& tol = {}, double step = 1e-4);

struct ShadowPoint {
  Vec u;
  Vec x;
  double abs_f = 0.0;
  double sigma_min = 0.0;  // k-th singular value of J
  double sigma_max = 0.0;
  bool smooth = false;
};

struct ShadowSet {
  int param_dim = 0;
  int codim = 0;
  int ambient_dim = 0;
  std::vector<ShadowPoint> points;
  std::vector<std::vector<std::size_t>> polylines;  // indices into points
  std::vector<bool> polyline_closed;
  bool degenerate = false;  // |F| < extract_tol on most of the grid: S = M
  double zero_fraction = 0.0;
  std::size_t newton_seeds = 0;
  std::size_t newton_failures = 0;
  std::string method;  // "marching-squares", "bisection", "newton", "degenerate"

  int expected_dim() const { return param_dim - codim; }
  std::size_t certified_count() const;
};

ShadowSet extract_shadow_set(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                             const Tolerances& tol = {});

/// Recomputes J at every point; smooth iff sigma_k > rank_tol * sigma_1.
/// Returns the number of certified points.
std::size_t smoothness_certificate(const SubmanifoldPatch& patch, const FieldAlongM& field, ShadowSet& set,
                                   const Tolerances& tol = {});

struct SmoothShadowResult {
  TheoremReport report;
  ShadowSet set;
  double jacobian_consistency = 0.0;
};

/// Surjective II(Y, .) at every shadow point implies S is a submanifold of
/// dimension n - k. Checks the extracted set against that claim.
SmoothShadowResult smooth_shadow_check(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                                       const Tolerances& tol = {});

/// Largest analytic-vs-FD Jacobian mismatch in the shadow checks.
inline constexpr double kJacobianTol = 1e-5;

/// Symmetric Hausdorff distance in parameter space. 0 for two empty sets,
/// infinity when exactly one is empty.
double hausdorff_distance(const DomainBox& box, const std::vector<Vec>& a, const std::vector<Vec>& b);

/// Parameter points of a set; a degenerate set stands for every grid vertex.
std::vector<Vec> shadow_parameter_points(const ShadowSet& set, const Grid& grid);

struct ProductShadowResult {
  TheoremReport report;
  ShadowSet direct;
  ShadowSet first;
  ShadowSet second;
  double hausdorff = 0.0;
  double cell = 0.0;
};

/// Extracts S of the product patch directly and compares it with the
/// Cartesian product of the factor sets.
ProductShadowResult product_shadow_check(PatchPtr a, PatchPtr b, const FieldAlongM& ya, const FieldAlongM& yb,
                                         const std::vector<int>& cells_a, const std::vector<int>& cells_b,
                                         const Tolerances& tol = {});

/// Product patch of two top-level patches: chart (u, v) -> (phi_a(u), phi_b(v)).
PatchPtr product_patch(const SubmanifoldPatch& a, const SubmanifoldPatch& b);

}  // namespace penumbra
