#include "support.hpp"

#include "penumbra/error.hpp"
#include "penumbra/geometry.hpp"

#include <gtest/gtest.h>

using namespace penumbra;
using namespace penumbra::test;

TEST(AmbientProjector, FlatIsIdentity) {
  const AmbientTangent t = ambient_tangent_projector(AmbientSpace::flat(3), vec({0.3, -2, 5}));
  EXPECT_LT((t.projector - Mat::Identity(3, 3)).norm(), 1e-15);
  EXPECT_LT((t.basis - Mat::Identity(3, 3)).norm(), 1e-15);
}

TEST(AmbientProjector, SphereAtNorthPole) {
  const AmbientTangent t = ambient_tangent_projector(*unit_sphere_ambient(), vec({0, 0, 1}));
  ASSERT_EQ(t.basis.cols(), 2);
  EXPECT_LT(t.basis.row(2).norm(), 1e-15);
  EXPECT_LT((t.basis.transpose() * t.basis - Mat::Identity(2, 2)).norm(), 1e-14);
}

TEST(AmbientProjector, ProductOfSpheresMatchesNullSpaceOracle) {
  const AmbientSpace a = AmbientSpace::constrained(parse_chart("x^2 + y^2 + z^2 - 1", {"x", "y", "z"}));
  const AmbientSpace b = AmbientSpace::constrained(parse_chart("p^2 + q^2 + r^2 - 1", {"p", "q", "r"}));
  const AmbientSpace prod = AmbientSpace::product(a, b);
  ASSERT_EQ(prod.embedding_dim(), 6);
  ASSERT_EQ(prod.dim(), 4);
  const Vec x = vec({1, 0, 0, 0, 0, 1});
  const AmbientTangent t = ambient_tangent_projector(prod, x);
  ASSERT_EQ(t.basis.cols(), 4);
  Mat dc(2, 6);
  dc << 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2;
  const Mat k = kernel_basis(dc);
  EXPECT_LT((t.projector - k * k.transpose()).norm(), 1e-12);
  EXPECT_LT((dc * t.basis).norm(), 1e-12);
}

TEST(AmbientProjector, RejectsPointsOffTheAmbient) {
  EXPECT_THROW(ambient_tangent_projector(*unit_sphere_ambient(), vec({0, 0, 1.1})), GeometryError);
}

TEST(Frame, CylinderAtOrigin) {
  const FrameData f = frame_at(*shape_patch("cylinder"), vec({0, 0}));
  EXPECT_LT((f.metric - Mat::Identity(2, 2)).norm(), 1e-15);
  ASSERT_EQ(f.codim(), 1);
  EXPECT_LT((Vec(f.normal_frame.col(0)) - vec({1, 0, 0})).norm(), 1e-15);
}

TEST(Frame, SphereEquatorMetric) {
  const FrameData f = frame_at(*shape_patch("sphere"), vec({kPi / 2, 0}));
  EXPECT_LT((f.metric - Mat::Identity(2, 2)).norm(), 1e-15);
}

TEST(Frame, EquatorInsideSphereHasVerticalNormal) {
  const FrameData f = frame_at(*latitude(kPi / 2), vec({0}));
  ASSERT_EQ(f.codim(), 1);
  // canonical sign makes the largest component positive
  EXPECT_LT((Vec(f.normal_frame.col(0)) - vec({0, 0, 1})).norm(), 1e-12);
}

TEST(Split, CylinderExamples) {
  const FrameData f = frame_at(*shape_patch("cylinder"), vec({0, 0}));
  TangentNormalSplit s = split_tangent_normal(f, vec({0, 0, 1}));
  EXPECT_LT((s.tan - vec({0, 0, 1})).norm(), 1e-15);
  EXPECT_LT(s.nor.norm(), 1e-15);
  s = split_tangent_normal(f, vec({1, 0, 0}));
  EXPECT_LT(s.tan.norm(), 1e-15);
  EXPECT_LT((s.nor - vec({1, 0, 0})).norm(), 1e-15);
}

TEST(Split, SphereTangentPartOfVertical) {
  const PatchPtr sphere = shape_patch("sphere");
  for (double theta : {0.3, 1.0, kPi / 2, 2.5}) {
    const FrameData f = frame_at(*sphere, vec({theta, 0.7}));
    EXPECT_NEAR(split_tangent_normal(f, vec({0, 0, 1})).tan.norm(), std::sin(theta), 1e-14);
  }
}

TEST(Split, RejectsVectorsLeavingTheAmbient) {
  const FrameData f = frame_at(*latitude(kPi / 3), vec({0.4}));
  EXPECT_THROW(split_tangent_normal(f, f.point), GeometryError);
}

TEST(Connection, ConstantFieldInFlatSpaceIsParallel) {
  const PatchPtr torus = shape_patch("torus");
  const FieldAlongM y = FieldAlongM::constant(vec({0.2, -1, 3}));
  for (const Vec& w : {vec({1, 0}), vec({0.3, -0.8})}) {
    EXPECT_EQ(covariant_derivative_along(*torus, y, vec({0.4, 1.2}), w).norm(), 0.0);
  }
}

TEST(Connection, VerticalFieldAlongEquatorOfS2IsParallel) {
  const FieldAlongM y = FieldAlongM::ambient_expr(parse_chart("(-x*z, -y*z, 1 - z^2)", {"x", "y", "z"}));
  const PatchPtr eq = latitude(kPi / 2);
  for (double u : {0.0, 1.0, 4.0}) EXPECT_LT(covariant_derivative_along(*eq, y, vec({u}), vec({1})).norm(), 1e-15);
}

TEST(Connection, VerticalFieldAlongLatitudeMatchesFiniteDifferences) {
  const FieldAlongM y = FieldAlongM::ambient_expr(parse_chart("(-x*z, -y*z, 1 - z^2)", {"x", "y", "z"}));
  const double theta = kPi / 3;
  const PatchPtr lat = latitude(theta);
  const Vec u = vec({0.8});
  // unit parameter speed: |d phi/du| = sin(theta)
  const Vec w = vec({1.0 / std::sin(theta)});
  const Vec d = covariant_derivative_along(*lat, y, u, w);
  const VecFn yv = [&](const Vec& s) { return y.value(*lat, s); };
  const Vec raw = fd_jacobian(yv, u) * w;
  const AmbientTangent t = ambient_tangent_projector(lat->ambient(), lat->position(u));
  const Vec oracle = t.projector * raw;
  EXPECT_GT(d.norm(), 0.1);
  EXPECT_NEAR(d.norm(), oracle.norm(), 1e-6);
  EXPECT_LT((d - oracle).norm(), 1e-6);
}

TEST(Validation, CylinderPasses) {
  const PatchPtr cyl = shape_patch("cylinder");
  const FieldAlongM y = FieldAlongM::constant(vec({0, 0, 1}));
  const PatchValidation v = validate_patch(*cyl, &y, Grid(cyl->domain(), 16));
  EXPECT_TRUE(v.passed);
  EXPECT_LT(v.max_constraint_residual, 1e-10);
  EXPECT_LT(v.max_field_tangency, 1e-10);
  EXPECT_GT(v.min_relative_singular_value, 0.5);
}

TEST(Validation, SphereChartOnTorusFailsAtFirstGridPoint) {
  auto torus = std::make_shared<const AmbientSpace>(AmbientSpace::constrained(
      parse_chart("(x^2 + y^2 + z^2 + 3)^2 - 16*(x^2 + y^2)", {"x", "y", "z"})));
  const PatchPtr p = patch("sphere", "(sin(a)*cos(b), sin(a)*sin(b), cos(a))", {"a", "b"},
                           {{0.1, 3.0}, {0, 2 * kPi, true}}, torus);
  const Grid grid(p->domain(), 8);
  const PatchValidation v = validate_patch(*p, nullptr, grid);
  ASSERT_FALSE(v.passed);
  ASSERT_FALSE(v.failures.empty());
  EXPECT_EQ(v.failures.front().check, "on_ambient");
  EXPECT_EQ(v.failures.front().u, grid.vertex(std::size_t{0}));
}

TEST(Validation, ConeApexIsRankDeficient) {
  const PatchPtr cone = shape_patch("cone");
  const PatchPtr apex = patch("cone", cone->chart().print(), cone->chart().params(), {{0, 1}, {0, 2 * kPi, true}},
                              flat(3), {{"alpha", 0.5}});
  const PatchValidation v = validate_patch(*apex, nullptr, Grid(apex->domain(), 8));
  ASSERT_FALSE(v.passed);
  bool rank = false;
  for (const auto& f : v.failures) {
    if (f.check == "rank") {
      rank = true;
      EXPECT_DOUBLE_EQ(f.u[0], 0.0);
    }
  }
  EXPECT_TRUE(rank);
  EXPECT_THROW(frame_at(*apex, vec({0, 0.5})), GeometryError);
}

TEST(Validation, NonTangentFieldIsFlagged) {
  const PatchPtr lat = latitude(kPi / 3);
  const FieldAlongM radial = FieldAlongM::ambient_expr(parse_chart("(x, y, z)", {"x", "y", "z"}));
  const PatchValidation v = validate_patch(*lat, &radial, Grid(lat->domain(), 8));
  ASSERT_FALSE(v.passed);
  EXPECT_EQ(v.failures.front().check, "field_tangency");
}

TEST(Nesting, ComposedJetMatchesDirectChart) {
  const PatchPtr torus = shape_patch("torus");
  const PatchPtr curve = nested("diag", "(s, 2*s)", {"s"}, {{0, 1}}, torus);
  const PatchPtr direct = patch("direct", "((2 + cos(s))*cos(2*s), (2 + cos(s))*sin(2*s), sin(s))", {"s"}, {{0, 1}},
                                flat(3));
  for (double s : {0.1, 0.5, 0.9}) {
    const Jet2 a = curve->ambient_jet(vec({s}));
    const Jet2 b = direct->ambient_jet(vec({s}));
    EXPECT_LT((a.value - b.value).norm(), 1e-14);
    EXPECT_LT((a.jacobian - b.jacobian).norm(), 1e-13);
    for (int k = 0; k < 3; ++k) EXPECT_LT((a.hessian[k] - b.hessian[k]).norm(), 1e-12);
  }
  EXPECT_TRUE(curve->is_descendant_of(*torus));
  EXPECT_EQ(curve->codim(), 2);
}

// Orthonormal frames at random points of the corpus patches.
TEST(GeometryProperty, FramesAreOrthonormalAndComplete) {
  std::mt19937_64 rng(3);
  std::vector<PatchPtr> patches = {shape_patch("torus"), shape_patch("sphere"), shape_patch("saddle"),
                                   shape_patch("helix_curve"), shape_patch("clifford_torus"),
                                   shape_patch("sphere_x_circle"), latitude(kPi / 3)};
  for (const PatchPtr& p : patches) {
    for (int k = 0; k < 50; ++k) {
      const FrameData f = frame_at(*p, random_point(rng, p->domain(), 0.01));
      const int m = static_cast<int>(f.point.size());
      Mat all(m, m);
      const Mat amb_normal = kernel_basis(f.ambient_basis.transpose());
      all << f.tangent_basis, f.normal_frame, amb_normal;
      EXPECT_LT((all.transpose() * all - Mat::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-10) << p->name();
    }
  }
}

TEST(GeometryProperty, SplitIsADirectSum) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (const PatchPtr& p : {shape_patch("torus"), latitude(0.7), shape_patch("clifford_torus")}) {
    for (int k = 0; k < 50; ++k) {
      const FrameData f = frame_at(*p, random_point(rng, p->domain(), 0.01));
      Vec v(f.point.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
      v = f.ambient_projector * v;
      const TangentNormalSplit s = split_tangent_normal(f, v);
      EXPECT_LT((s.tan + s.nor - v).norm(), 1e-12);
      const TangentNormalSplit again = split_tangent_normal(f, s.tan + s.nor);
      EXPECT_LT((again.tan - s.tan).norm(), 1e-12);
      EXPECT_LT((again.nor - s.nor).norm(), 1e-12);
      EXPECT_LT(std::abs(s.tan.dot(s.nor)), 1e-12);
    }
  }
}

TEST(GeometryProperty, ConnectionStaysTangentToTheAmbient) {
  std::mt19937_64 rng(9);
  const FieldAlongM y = FieldAlongM::ambient_expr(parse_chart("(-x*z, -y*z, 1 - z^2)", {"x", "y", "z"}));
  const PatchPtr sphere_in_s2 =
      patch("cap", "(sin(a)*cos(b), sin(a)*sin(b), cos(a))", {"a", "b"}, {{0.2, 2.9}, {0, 2 * kPi, true}},
            unit_sphere_ambient());
  for (int k = 0; k < 50; ++k) {
    const Vec u = random_point(rng, sphere_in_s2->domain());
    const Vec d = covariant_derivative_along(*sphere_in_s2, y, u, vec({0.3, -0.6}));
    const Vec x = sphere_in_s2->position(u);
    EXPECT_LT(std::abs(d.dot(x)), 1e-9);
  }
}

TEST(GeometryProperty, FramesAreBitReproducible) {
  const PatchPtr p = shape_patch("torus");
  const Vec u = vec({0.123, 4.56});
  const FrameData a = frame_at(*p, u);
  const FrameData b = frame_at(*p, u);
  EXPECT_EQ(a.tangent_basis, b.tangent_basis);
  EXPECT_EQ(a.normal_frame, b.normal_frame);
  EXPECT_EQ(a.metric, b.metric);
}

TEST(GeometryProperty, OrientedNormalIsContinuous) {
  const PatchPtr torus = shape_patch("torus");
  Vec prev;
  for (int k = 0; k <= 200; ++k) {
    const Vec n = oriented_normal(frame_at(*torus, vec({2 * kPi * k / 200.0, 0.3})));
    if (prev.size() != 0) {
      EXPECT_GT(n.dot(prev), 0.9);
    }
    prev = n;
  }
}

TEST(Field, SampledDerivativeMatchesClosedForm) {
  const PatchPtr torus = shape_patch("torus");
  const ChartExpr e = parse_chart("(x*y, z, x - y)", {"x", "y", "z"});
  const FieldAlongM closed = FieldAlongM::ambient_expr(e);
  const FieldAlongM sampled = FieldAlongM::sampled(
      [torus, e](const Vec& u) { return e.eval(torus->position(u)); }, torus, "sampled copy");
  const Vec u = vec({0.4, 2.0});
  EXPECT_LT((closed.derivative(*torus, u) - sampled.derivative(*torus, u)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((closed.scaled(2.0).value(*torus, u) - 2.0 * closed.value(*torus, u)).norm(), 1e-15);
}
