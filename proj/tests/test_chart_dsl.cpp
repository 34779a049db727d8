#include "support.hpp"

#include "penumbra/chart_expr.hpp"
#include "penumbra/error.hpp"
#include "penumbra/shapes.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace penumbra;
using namespace penumbra::test;

TEST(ChartDsl, ParsesVectorExpression) {
  const ChartExpr e = parse_chart("(cos(u), sin(u), v)", {"u", "v"});
  EXPECT_EQ(e.outputs(), 3);
  EXPECT_EQ(e.arity(), 2);
}

TEST(ChartDsl, UnknownIdentifierCarriesLocation) {
  try {
    parse_chart("(cos(u), sin(w))", {"u", "v"});
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.message(), "unknown identifier w");
    EXPECT_EQ(e.location().line, 1);
    EXPECT_EQ(e.location().column, 14);
  }
}

TEST(ChartDsl, ArityMismatchAndMalformedInput) {
  EXPECT_THROW(parse_chart("sin(u, v)", {"u", "v"}), ParseError);
  EXPECT_THROW(parse_chart("atan2(u)", {"u"}), ParseError);
  EXPECT_THROW(parse_chart("(u + , v)", {"u", "v"}), ParseError);
  EXPECT_THROW(parse_chart("(u, v", {"u", "v"}), ParseError);
  EXPECT_THROW(parse_chart("u $ v", {"u", "v"}), ParseError);
  EXPECT_THROW(parse_chart("u", {"u", "u"}), ParseError);
}

TEST(ChartDsl, TorusWithBoundConstants) {
  const ChartExpr e =
      parse_chart("((R + r*cos(t))*cos(p), (R + r*cos(t))*sin(p), r*sin(t))", {"t", "p"}, {{"R", 2.0}, {"r", 1.0}});
  EXPECT_EQ(e.arity(), 2);
  const Vec x = e.eval(vec({0.0, 0.0}));
  EXPECT_DOUBLE_EQ(x[0], 3.0);
  EXPECT_DOUBLE_EQ(x[1], 0.0);
  EXPECT_DOUBLE_EQ(x[2], 0.0);
}

TEST(ChartDsl, CylinderJet) {
  const Jet2 j = eval_jet(parse_chart("(cos(u), sin(u), v)", {"u", "v"}), vec({0.0, 0.0}));
  EXPECT_EQ(j.value, vec({1, 0, 0}));
  EXPECT_EQ(Vec(j.jacobian.col(0)), vec({0, 1, 0}));
  EXPECT_EQ(Vec(j.jacobian.col(1)), vec({0, 0, 1}));
}

TEST(ChartDsl, ProductJet) {
  const Jet2 j = eval_jet(parse_chart("u*v", {"u", "v"}), vec({2.0, 3.0}));
  EXPECT_DOUBLE_EQ(j.value[0], 6.0);
  EXPECT_DOUBLE_EQ(j.jacobian(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(j.jacobian(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(j.hessian[0](0, 1), 1.0);
  EXPECT_DOUBLE_EQ(j.hessian[0](0, 0), 0.0);
}

TEST(ChartDsl, TorusJetMatchesFiniteDifferences) {
  const ChartExpr e = builtin_shape("torus").parse();
  const Vec u = vec({kPi / 2, 0.0});
  const Jet2 j = e.eval_jet(u);
  const VecFn f = [&](const Vec& x) { return e.eval(x); };
  EXPECT_LT((j.jacobian - fd_jacobian(f, u)).cwiseAbs().maxCoeff(), 1e-6);
  for (int a = 0; a < 3; ++a) EXPECT_LT((j.hessian[a] - fd_hessian(f, u, a)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ChartDsl, SingularPrimitiveIsADomainError) {
  const ChartExpr e = parse_chart("(log(u), sqrt(v))", {"u", "v"});
  EXPECT_THROW(e.eval(vec({-1.0, 1.0})), DomainError);
  EXPECT_THROW(e.eval_jet(vec({1.0, 0.0})), DomainError);
  EXPECT_NO_THROW(e.eval_jet(vec({1.0, 1.0})));
}

TEST(ChartDsl, PowerWithNonIntegerExponentNeedsPositiveBase) {
  const ChartExpr e = parse_chart("u^1.5", {"u"});
  EXPECT_NEAR(e.eval(vec({4.0}))[0], 8.0, 1e-12);
  EXPECT_THROW(e.eval(vec({-1.0})), DomainError);
  EXPECT_NEAR(parse_chart("u^2", {"u"}).eval(vec({-3.0}))[0], 9.0, 0.0);
}

TEST(ChartDsl, PrecedenceAndUnaryMinus) {
  EXPECT_DOUBLE_EQ(parse_chart("-u^2", {"u"}).eval(vec({3.0}))[0], -9.0);
  EXPECT_DOUBLE_EQ(parse_chart("2^3^2", {}).eval(Vec(0))[0], 512.0);
  EXPECT_DOUBLE_EQ(parse_chart("1 - 2 - 3", {}).eval(Vec(0))[0], -4.0);
  EXPECT_DOUBLE_EQ(parse_chart("8 / 4 / 2", {}).eval(Vec(0))[0], 1.0);
  EXPECT_DOUBLE_EQ(parse_chart("2*pi", {}).eval(Vec(0))[0], 2 * kPi);
}

// Every built-in chart: analytic derivatives against the FD oracle at random points.
TEST(ChartDslProperty, BuiltinJetsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  int evaluated = 0;
  for (const ShapeSpec& s : builtin_shapes()) {
    const ChartExpr e = s.parse();
    const VecFn f = [&](const Vec& x) { return e.eval(x); };
    for (int k = 0; k < 1000 / static_cast<int>(builtin_shapes().size()) + 1; ++k) {
      const Vec u = random_point(rng, s.domain, 0.01);
      const Jet2 j = e.eval_jet(u);
      ASSERT_LT((j.jacobian - fd_jacobian(f, u)).cwiseAbs().maxCoeff(), 1e-6) << s.name;
      for (int a = 0; a < j.outputs(); ++a) {
        ASSERT_LT((j.hessian[a] - fd_hessian(f, u, a)).cwiseAbs().maxCoeff(), 1e-4) << s.name;
      }
      ++evaluated;
    }
  }
  EXPECT_GE(evaluated, 1000);
}

TEST(ChartDslProperty, HessiansAreExactlySymmetric) {
  std::mt19937_64 rng(11);
  for (const ShapeSpec& s : builtin_shapes()) {
    const ChartExpr e = s.parse();
    for (int k = 0; k < 20; ++k) {
      const Jet2 j = e.eval_jet(random_point(rng, s.domain, 0.01));
      for (const Mat& h : j.hessian) EXPECT_EQ(h, h.transpose()) << s.name;
    }
  }
}

TEST(ChartDslProperty, PrintReparsesToTheSameFunction) {
  std::mt19937_64 rng(13);
  for (const ShapeSpec& s : builtin_shapes()) {
    const ChartExpr e = s.parse();
    const ChartExpr back = parse_chart(e.print(), s.params, s.constants);
    for (int k = 0; k < 100; ++k) {
      const Vec u = random_point(rng, s.domain, 0.01);
      EXPECT_EQ(e.eval(u), back.eval(u)) << s.name;
    }
  }
}

TEST(ChartDslProperty, FirstOrderEvaluationAgreesWithJet) {
  std::mt19937_64 rng(17);
  for (const ShapeSpec& s : builtin_shapes()) {
    const ChartExpr e = s.parse();
    const Vec u = random_point(rng, s.domain, 0.01);
    const Jet1 a = e.eval_first(u);
    const Jet2 b = e.eval_jet(u);
    EXPECT_EQ(a.value, b.value);
    EXPECT_LT((a.jacobian - b.jacobian).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(ChartDsl, ProductConcatenatesParametersAndOutputs) {
  const ChartExpr a = parse_chart("(cos(u), sin(u))", {"u"});
  const ChartExpr b = parse_chart("(v, v^2)", {"v"});
  const ChartExpr p = ChartExpr::product(a, b);
  EXPECT_EQ(p.arity(), 2);
  EXPECT_EQ(p.outputs(), 4);
  const Vec x = p.eval(vec({0.0, 2.0}));
  EXPECT_EQ(x, vec({1, 0, 2, 4}));
}
