#include "penumbra/chart_expr.hpp"
#include "penumbra/geometry.hpp"
#include "penumbra/shadow.hpp"
#include "penumbra/shapes.hpp"
#include "penumbra/transport.hpp"

#include <benchmark/benchmark.h>

#include <memory>
#include <numbers>

namespace {

using namespace penumbra;

PatchPtr make_patch(const char* shape) {
  const ShapeSpec& s = builtin_shape(shape);
  return std::make_shared<const SubmanifoldPatch>(s.name, s.parse(), s.domain,
                                                  std::make_shared<const AmbientSpace>(AmbientSpace::flat(s.ambient_dim)));
}

void BM_TorusJet(benchmark::State& state) {
  const ChartExpr chart = builtin_shape("torus").parse();
  Vec u(2);
  u << 0.3, 1.1;
  for (auto _ : state) benchmark::DoNotOptimize(chart.eval_jet(u));
}
BENCHMARK(BM_TorusJet);

void BM_Frame(benchmark::State& state) {
  const PatchPtr torus = make_patch("torus");
  Vec u(2);
  u << 0.3, 1.1;
  for (auto _ : state) benchmark::DoNotOptimize(frame_at(*torus, u));
}
BENCHMARK(BM_Frame);

void BM_TorusShadow(benchmark::State& state) {
  const PatchPtr torus = make_patch("torus");
  const FieldAlongM e3 = FieldAlongM::constant(Vec::Unit(3, 2));
  const Grid grid(torus->domain(), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(extract_shadow_set(*torus, e3, grid));
}
BENCHMARK(BM_TorusShadow)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_LatitudeTransport(benchmark::State& state) {
  auto s2 = std::make_shared<const AmbientSpace>(
      AmbientSpace::constrained(parse_chart("x^2 + y^2 + z^2 - 1", {"x", "y", "z"})));
  const double th = std::numbers::pi / 3;
  auto lat = std::make_shared<const SubmanifoldPatch>(
      "latitude", parse_chart("(s*cos(u), s*sin(u), c)", {"u"}, {{"s", std::sin(th)}, {"c", std::cos(th)}}),
      DomainBox{{0, 2 * std::numbers::pi, true}}, s2);
  Vec a(1), b(1);
  a << 0.0;
  b << 2 * std::numbers::pi;
  const ParamCurve loop = ParamCurve::polyline({a, b}, true);
  const Vec w0 = Vec::Unit(3, 1);
  Tolerances tol;
  tol.transport_steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(parallel_transport(*lat, loop, w0, tol));
}
BENCHMARK(BM_LatitudeTransport)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
