#include "support.hpp"

#include "penumbra/scene.hpp"
#include "penumbra/shadow.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace penumbra;
using namespace penumbra::test;

namespace {

const FieldAlongM kE3 = FieldAlongM::constant(vec({0, 0, 1}));

// Unit normal of a surface in R^3 from chart derivatives only.
double oracle_f(const SubmanifoldPatch& p, const Vec& y, const Vec& u) {
  const Mat j = p.chart().eval_first(u).jacobian;
  const Eigen::Vector3d a = j.col(0), b = j.col(1);
  const Eigen::Vector3d n = a.cross(b).normalized();
  return n.dot(Eigen::Vector3d(y));
}

// Roots of F along each axis for `lines` offset values of the other axis,
// located by dense sign sampling and refined by bisection.
std::vector<Vec> dense_roots(const SubmanifoldPatch& p, const Vec& y, int samples, int lines) {
  const DomainBox& box = p.domain();
  std::vector<Vec> roots;
  for (int axis = 0; axis < 2; ++axis) {
    const int other = 1 - axis;
    const ParamInterval& iv = box[static_cast<std::size_t>(axis)];
    const ParamInterval& ov = box[static_cast<std::size_t>(other)];
    for (int c = 0; c < lines; ++c) {
      Vec u(2);
      u[other] = ov.lo + ov.length() * (c + 0.5) / lines;
      auto f = [&](double t) {
        u[axis] = t;
        return oracle_f(p, y, u);
      };
      for (int r = 0; r < samples; ++r) {
        double a = iv.lo + iv.length() * r / samples;
        double b = iv.lo + iv.length() * (r + 1) / samples;
        double fa = f(a);
        const double fb = f(b);
        if ((fa < 0) == (fb < 0)) continue;
        for (int it = 0; it < 60; ++it) {
          const double m = 0.5 * (a + b);
          const double fm = f(m);
          if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        u[axis] = 0.5 * (a + b);
        roots.push_back(u);
      }
    }
  }
  return roots;
}

std::vector<Vec> params_of(const ShadowSet& s) {
  std::vector<Vec> out;
  for (const ShadowPoint& p : s.points) out.push_back(p.u);
  return out;
}

// Largest distance from the oracle roots to the extraction and back.
double oracle_gap(const DomainBox& box, const std::vector<Vec>& oracle, const std::vector<Vec>& extracted) {
  double worst = 0.0;
  for (const Vec& r : oracle) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& e : extracted) best = std::min(best, param_distance(box, r, e));
    worst = std::max(worst, best);
  }
  return worst;
}

Scene corpus(const std::string& name) { return load_scene_file(std::string(PENUMBRA_SCENES_DIR) + "/" + name); }

}  // namespace

TEST(ShadowResidual, Examples) {
  const PatchPtr cyl = shape_patch("cylinder");
  EXPECT_LT(shadow_residual(*cyl, kE3, vec({1.3, 0.4})).f.norm(), 1e-15);

  const PatchPtr sphere = shape_patch("sphere");
  for (double theta : {0.3, 1.0, 2.0}) {
    const ShadowResidual r = shadow_residual(*sphere, kE3, vec({theta, 0.5}));
    ASSERT_EQ(r.f.size(), 1);
    EXPECT_NEAR(std::abs(r.f[0]), std::abs(std::cos(theta)), 1e-14);
    // the normal used is +-x, so F agrees with <e3, n> up to that sign
    EXPECT_NEAR(r.f[0], std::cos(theta) * r.normals.col(0).dot(r.frame.point), 1e-14);
  }

  const PatchPtr plane = shape_patch("plane");
  EXPECT_NEAR(std::abs(shadow_residual(*plane, kE3, vec({0.2, 0.1})).f[0]), 1.0, 0.0);
}

TEST(ShadowResidual, ParallelFieldJacobianIsTheSecondFormTerm) {
  const ShadowResidual r = shadow_residual(*shape_patch("torus"), kE3, vec({0.3, 1.1}));
  EXPECT_EQ(r.field_term.norm(), 0.0);
  EXPECT_EQ(r.jacobian, r.theorem_jacobian);
}

TEST(ShadowJacobian, Examples) {
  EXPECT_LT(shadow_jacobian_consistency(*shape_patch("sphere"), kE3, vec({kPi / 2, 0.3})), 1e-5);
  const FieldAlongM tilted = FieldAlongM::constant(vec({0.3, -0.2, 1}));
  const PatchPtr plane = shape_patch("plane");
  EXPECT_EQ(shadow_residual(*plane, tilted, vec({0.1, 0.1})).jacobian.norm(), 0.0);
  EXPECT_LT(shadow_fd_jacobian(*plane, tilted, vec({0.1, 0.1})).norm(), 1e-12);

  const PatchPtr torus = shape_patch("torus");
  double worst = 0.0;
  for (const Vec& u : Grid(torus->domain(), 32).vertices()) {
    worst = std::max(worst, shadow_jacobian_consistency(*torus, kE3, u));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(ShadowJacobian, NonParallelFieldNeedsTheFieldTerm) {
  // Y vanishes on the shadow points, so II(Y, .) = 0 there but F still has a regular zero
  const Scene s = corpus("product_s1s1_s2s2.scene");
  const PatchPtr ea = s.find_patch("ea");
  const FieldAlongM& ya = s.find_field("ya");
  const Vec u = vec({kPi / 2});
  const ShadowResidual r = shadow_residual(*ea, ya, u);
  EXPECT_LT(r.f.norm(), 1e-15);
  EXPECT_LT(r.theorem_jacobian.norm(), 1e-15);
  EXPECT_NEAR(std::abs(r.jacobian(0, 0)), 1.0, 1e-12);
  EXPECT_LT(shadow_jacobian_consistency(*ea, ya, u), 1e-5);
}

TEST(Extraction, SphereEquator) {
  const PatchPtr sphere = shape_patch("sphere");
  ShadowSet s = extract_shadow_set(*sphere, kE3, Grid(sphere->domain(), 64));
  smoothness_certificate(*sphere, kE3, s);
  EXPECT_EQ(s.expected_dim(), 1);
  ASSERT_EQ(s.polylines.size(), 1u);
  EXPECT_TRUE(s.polyline_closed[0]);
  double max_z = 0.0;
  for (const ShadowPoint& p : s.points) {
    max_z = std::max(max_z, std::abs(p.x[2]));
    EXPECT_TRUE(p.smooth);
    EXPECT_NEAR(p.sigma_min, 1.0, 1e-6);
  }
  EXPECT_LT(max_z, 1e-9);
  EXPECT_EQ(s.certified_count(), s.points.size());
}

TEST(Extraction, TorusHasTwoCircles) {
  const PatchPtr torus = shape_patch("torus");
  ShadowSet s = extract_shadow_set(*torus, kE3, Grid(torus->domain(), 64));
  smoothness_certificate(*torus, kE3, s);
  ASSERT_EQ(s.polylines.size(), 2u);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_TRUE(s.polyline_closed[c]);
    const double theta = s.points[s.polylines[c].front()].u[0];
    const double target = std::abs(theta) < 1 || std::abs(theta - 2 * kPi) < 1 ? 0.0 : kPi;
    for (std::size_t i : s.polylines[c]) {
      EXPECT_LT(std::abs(std::remainder(s.points[i].u[0] - target, 2 * kPi)), 1e-8);
      EXPECT_TRUE(s.points[i].smooth);
      EXPECT_NEAR(s.points[i].sigma_min, 1.0, 1e-6);  // |II(Y, Y)| = 1/r
    }
  }
}

TEST(Extraction, CircleInPlaneGivesTwoPoints) {
  const PatchPtr p = patch("circle", "(cos(u), sin(u))", {"u"}, {{0, 2 * kPi, true}}, flat(2));
  const FieldAlongM e2 = FieldAlongM::constant(vec({0, 1}));
  ShadowSet s = extract_shadow_set(*p, e2, Grid(p->domain(), 64));
  smoothness_certificate(*p, e2, s);
  ASSERT_EQ(s.points.size(), 2u);
  EXPECT_EQ(s.expected_dim(), 0);
  std::vector<double> xs;
  for (const ShadowPoint& q : s.points) {
    EXPECT_LT(std::abs(q.x[1]), 1e-9);
    EXPECT_TRUE(q.smooth);
    xs.push_back(q.x[0]);
  }
  std::sort(xs.begin(), xs.end());
  EXPECT_NEAR(xs[0], -1.0, 1e-9);
  EXPECT_NEAR(xs[1], 1.0, 1e-9);
}

TEST(Extraction, CylinderIsDegenerate) {
  const PatchPtr cyl = shape_patch("cylinder");
  const ShadowSet s = extract_shadow_set(*cyl, kE3, Grid(cyl->domain(), 32));
  EXPECT_TRUE(s.degenerate);
  EXPECT_TRUE(s.points.empty());
  EXPECT_EQ(s.method, "degenerate");
  const SmoothShadowResult r = smooth_shadow_check(*cyl, kE3, Grid(cyl->domain(), 32));
  EXPECT_EQ(r.report.verdict, Verdict::kHypothesesNotMet);
}

TEST(Extraction, PlaneIsEmpty) {
  const PatchPtr plane = shape_patch("plane");
  const ShadowSet s = extract_shadow_set(*plane, kE3, Grid(plane->domain(), 16));
  EXPECT_FALSE(s.degenerate);
  EXPECT_TRUE(s.points.empty());
}

TEST(Extraction, ExactVertexZerosAreEmittedOnce) {
  // F = cos(theta) vanishes exactly on the grid row theta = pi/2 of this box
  const PatchPtr sphere = patch("band", "(sin(t)*cos(p), sin(t)*sin(p), cos(t))", {"t", "p"},
                                {{kPi / 4, 3 * kPi / 4}, {0, 2 * kPi, true}}, flat(3));
  const ShadowSet s = extract_shadow_set(*sphere, kE3, Grid(sphere->domain(), 16));
  ASSERT_EQ(s.polylines.size(), 1u);
  EXPECT_EQ(s.points.size(), 16u);
  for (const ShadowPoint& q : s.points) EXPECT_NEAR(q.u[0], kPi / 2, 1e-10);
}

TEST(Extraction, NewtonHandlesCodimensionTwo) {
  const PatchPtr c = shape_patch("clifford_torus");
  const FieldAlongM y = FieldAlongM::constant(vec({0, 1, 0, 1}));
  ShadowSet s = extract_shadow_set(*c, y, Grid(c->domain(), 32));
  EXPECT_EQ(s.method, "newton");
  EXPECT_EQ(s.points.size(), 4u);
  for (const ShadowPoint& q : s.points) {
    EXPECT_LT(std::abs(q.x[1]), 1e-9);
    EXPECT_LT(std::abs(q.x[3]), 1e-9);
  }
}

TEST(SmoothShadow, SphereIsConfirmed) {
  const PatchPtr sphere = shape_patch("sphere");
  const SmoothShadowResult r = smooth_shadow_check(*sphere, kE3, Grid(sphere->domain(), 64));
  EXPECT_EQ(r.report.verdict, Verdict::kConfirmed);
  EXPECT_LT(r.jacobian_consistency, kJacobianTol);
}

TEST(ProductShadow, CirclesInR4) {
  const PatchPtr a = patch("c1", "(cos(u), sin(u))", {"u"}, {{0, 2 * kPi, true}}, flat(2));
  const PatchPtr b = patch("c2", "(cos(v), sin(v))", {"v"}, {{0, 2 * kPi, true}}, flat(2));
  const FieldAlongM e2 = FieldAlongM::constant(vec({0, 1}));
  const ProductShadowResult r = product_shadow_check(a, b, e2, e2, {48}, {48});
  EXPECT_EQ(r.direct.points.size(), 4u);
  EXPECT_EQ(r.first.points.size(), 2u);
  EXPECT_EQ(r.second.points.size(), 2u);
  EXPECT_LT(r.hausdorff, 1e-9);
  EXPECT_EQ(r.report.verdict, Verdict::kConfirmed);
}

TEST(ProductShadow, EquatorsInProductOfSpheres) {
  const Scene s = corpus("product_s1s1_s2s2.scene");
  const ProductShadowResult r = product_shadow_check(s.find_patch("ea"), s.find_patch("eb"), s.find_field("ya"),
                                                     s.find_field("yb"), {48}, {48});
  EXPECT_EQ(r.direct.points.size(), 4u);
  EXPECT_LT(r.hausdorff, r.cell);
  EXPECT_EQ(r.report.verdict, Verdict::kConfirmed);
}

TEST(ProductShadow, ZeroFieldFactorContributesEverything) {
  const PatchPtr a = patch("c1", "(cos(u), sin(u))", {"u"}, {{0, 2 * kPi, true}}, flat(2));
  const PatchPtr b = patch("c2", "(cos(v), sin(v))", {"v"}, {{0, 2 * kPi, true}}, flat(2));
  const ProductShadowResult r = product_shadow_check(a, b, FieldAlongM::constant(vec({0, 1})),
                                                     FieldAlongM::constant(vec({0, 0})), {24}, {24});
  EXPECT_TRUE(r.second.degenerate);
  EXPECT_EQ(r.first.points.size(), 2u);
  EXPECT_LT(r.hausdorff, r.cell);
}

TEST(Hausdorff, Conventions) {
  const DomainBox box{{0, 2 * kPi, true}};
  EXPECT_EQ(hausdorff_distance(box, {}, {}), 0.0);
  EXPECT_TRUE(std::isinf(hausdorff_distance(box, {vec({1})}, {})));
  // periodic wrap: 0.1 and 2*pi - 0.1 are 0.2 apart
  EXPECT_NEAR(hausdorff_distance(box, {vec({0.1})}, {vec({2 * kPi - 0.1})}), 0.2, 1e-12);
}

TEST(ShadowProperty, ExtractedPointsAreSound) {
  const FieldAlongM tilted = FieldAlongM::constant(vec({0.3, 0, 1}));
  for (const PatchPtr& p : {shape_patch("sphere"), shape_patch("torus"), shape_patch("saddle")}) {
    for (const FieldAlongM& y : {kE3, tilted, FieldAlongM::constant(vec({1, 0, 0}))}) {
      const ShadowSet s = extract_shadow_set(*p, y, Grid(p->domain(), 48));
      for (const ShadowPoint& q : s.points) {
        EXPECT_LT(shadow_residual(*p, y, q.u).f.cwiseAbs().maxCoeff(), 1e-8) << p->name();
      }
    }
  }
}

TEST(ShadowProperty, DenseOracleFindsNothingNewAndNothingSpurious) {
  struct Case {
    PatchPtr patch;
    Vec y;
  };
  const std::vector<Case> cases = {{shape_patch("sphere"), vec({0, 0, 1})},
                                   {shape_patch("torus"), vec({0, 0, 1})},
                                   {shape_patch("torus"), vec({0.3, 0, 1})},
                                   {shape_patch("saddle"), vec({1, 0, 0})},
                                   {shape_patch("paraboloid"), vec({0, 1, 0})}};
  for (const Case& c : cases) {
    const Grid grid(c.patch->domain(), 64);
    const ShadowSet s = extract_shadow_set(*c.patch, FieldAlongM::constant(c.y), grid);
    // 64 times finer than the extraction grid along each sampled line
    const std::vector<Vec> oracle = dense_roots(*c.patch, c.y, 64 * 64, 64);
    const std::vector<Vec> got = params_of(s);
    ASSERT_FALSE(oracle.empty()) << c.patch->name();
    ASSERT_FALSE(got.empty()) << c.patch->name();
    EXPECT_LT(oracle_gap(c.patch->domain(), oracle, got), grid.cell_diagonal()) << c.patch->name();
    EXPECT_LT(oracle_gap(c.patch->domain(), got, oracle), grid.cell_diagonal()) << c.patch->name();
  }
}

TEST(ShadowProperty, CompactPatchesGiveClosedPolylines) {
  const FieldAlongM tilted = FieldAlongM::constant(vec({0.3, 0.2, 1}));
  const PatchPtr torus = shape_patch("torus");
  for (const FieldAlongM& y : {kE3, tilted}) {
    const ShadowSet s = extract_shadow_set(*torus, y, Grid(torus->domain(), 64));
    ASSERT_FALSE(s.polylines.empty());
    for (bool closed : s.polyline_closed) EXPECT_TRUE(closed);
  }
}

TEST(ShadowProperty, PolylineTangentIsOrthogonalToGradient) {
  const double limit = std::sin(2.0 * kPi / 180.0);
  const FieldAlongM tilted = FieldAlongM::constant(vec({0.3, 0.2, 1}));
  const PatchPtr torus = shape_patch("torus");
  const ShadowSet s = extract_shadow_set(*torus, tilted, Grid(torus->domain(), 64));
  for (const auto& line : s.polylines) {
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
      const Vec a = s.points[line[i]].u;
      Vec d = s.points[line[i + 1]].u - a;
      for (Eigen::Index k = 0; k < d.size(); ++k) d[k] = std::remainder(d[k], 2 * kPi);
      const Vec mid = a + 0.5 * d;
      const Vec g = shadow_residual(*torus, tilted, mid).jacobian.row(0).transpose();
      EXPECT_LT(std::abs(d.dot(g)) / (d.norm() * g.norm()), limit);
    }
  }
}

TEST(ShadowProperty, JacobianTheoremAtCertifiedPoints) {
  const FieldAlongM tilted = FieldAlongM::constant(vec({0.3, 0.2, 1}));
  for (const PatchPtr& p : {shape_patch("sphere"), shape_patch("torus"), shape_patch("wave")}) {
    ShadowSet s = extract_shadow_set(*p, tilted, Grid(p->domain(), 48));
    smoothness_certificate(*p, tilted, s);
    for (const ShadowPoint& q : s.points) {
      if (q.smooth) {
        EXPECT_LT(shadow_jacobian_consistency(*p, tilted, q.u), 1e-5) << p->name();
      }
    }
  }
}

TEST(ShadowProperty, ExtractionIsDeterministic) {
  const PatchPtr torus = shape_patch("torus");
  const FieldAlongM tilted = FieldAlongM::constant(vec({0.3, 0.2, 1}));
  const ShadowSet a = extract_shadow_set(*torus, tilted, Grid(torus->domain(), 48));
  const ShadowSet b = extract_shadow_set(*torus, tilted, Grid(torus->domain(), 48));
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].u, b.points[i].u);
  EXPECT_EQ(a.polylines, b.polylines);
}
