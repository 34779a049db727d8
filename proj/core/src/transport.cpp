#include "penumbra/transport.hpp"

#include "penumbra/curvature.hpp"
#include "penumbra/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace penumbra {

namespace {

constexpr double kClosureTol = 1e-12;

// One smooth piece s in [0, 1] -> (u(s), du/ds).
struct Piece {
  std::function<void(double, Vec&, Vec&)> eval;
  double length = 0.0;
};

std::vector<Piece> pieces_of(const ParamCurve& curve) {
  std::vector<Piece> out;
  if (curve.is_polyline()) {
    const auto& pts = curve.points();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const Vec a = pts[i];
      const Vec d = pts[i + 1] - pts[i];
      const double len = d.norm();
      if (len == 0.0) continue;
      out.push_back({[a, d](double s, Vec& u, Vec& du) {
                       u = a + s * d;
                       du = d;
                     },
                     len});
    }
  } else {
    const ChartExpr expr = *curve.expr();
    out.push_back({[expr](double s, Vec& u, Vec& du) {
                     Vec t(1);
                     t[0] = s;
                     const Jet1 j = expr.eval_first(t);
                     u = j.value;
                     du = j.jacobian.col(0);
                   },
                   curve.length()});
  }
  return out;
}

// Projector onto T_xN; identity for flat ambients.
Mat projector_at(const AmbientSpace& amb, const Vec& x) {
  const Eigen::Index m = x.size();
  if (amb.is_flat()) return Mat::Identity(m, m);
  const Mat dc = amb.constraint()->eval_first(x).jacobian;
  return Mat::Identity(m, m) - dc.transpose() * (dc * dc.transpose()).ldlt().solve(dc);
}

// dV/ds = -Dc^T (Dc Dc^T)^{-1} B with B_r = (H_r xdot)^T V.
Mat transport_rhs(const SubmanifoldPatch& patch, const Vec& u, const Vec& du, const Mat& v) {
  const Jet1 pos = patch.ambient_first(u);
  const Vec xdot = pos.jacobian * du;
  const Jet2 c = patch.ambient().constraint()->eval_jet(pos.value);
  const Eigen::Index r = c.jacobian.rows();
  Mat b(r, v.cols());
  for (Eigen::Index k = 0; k < r; ++k) {
    b.row(k) = (c.hessian[static_cast<std::size_t>(k)] * xdot).transpose() * v;
  }
  const Mat& dc = c.jacobian;
  return -dc.transpose() * (dc * dc.transpose()).ldlt().solve(b);
}

struct Drift {
  Mat gram0;
  double norm = 0.0;
  double inner = 0.0;

  void update(const Mat& v) {
    const Mat g = v.transpose() * v;
    inner = std::max(inner, (g - gram0).cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      if (gram0(i, i) > 0.0) norm = std::max(norm, std::abs(std::sqrt(g(i, i) / gram0(i, i)) - 1.0));
    }
  }
};

Mat integrate(const SubmanifoldPatch& patch, const std::vector<Piece>& pieces, const Mat& v0, int total_steps,
              TransportResult* record, bool record_path) {
  double total = 0.0;
  for (const Piece& p : pieces) total += p.length;
  Mat v = v0;
  Drift drift{v0.transpose() * v0};
  int steps_taken = 0;
  Vec u;
  Vec du;
  for (const Piece& piece : pieces) {
    const int steps = std::max(1, static_cast<int>(std::llround(total_steps * piece.length / total)));
    const double h = 1.0 / steps;
    for (int s = 0; s < steps; ++s) {
      const double s0 = s * h;
      piece.eval(s0, u, du);
      const Mat k1 = transport_rhs(patch, u, du, v);
      piece.eval(s0 + 0.5 * h, u, du);
      const Mat k2 = transport_rhs(patch, u, du, v + 0.5 * h * k1);
      const Mat k3 = transport_rhs(patch, u, du, v + 0.5 * h * k2);
      piece.eval(s0 + h, u, du);
      const Mat k4 = transport_rhs(patch, u, du, v + h * k3);
      v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const Vec x = patch.position(u);
      const Mat projected = projector_at(patch.ambient(), x) * v;
      if (record != nullptr) {
        record->tangency_drift = std::max(record->tangency_drift, (v - projected).cwiseAbs().maxCoeff());
      }
      v = projected;
      if (!v.allFinite()) throw GeometryError("parallel transport diverged");
      drift.update(v);
      if (record != nullptr && record_path) {
        record->path_u.push_back(u);
        record->path_v.push_back(v);
      }
      ++steps_taken;
    }
  }
  if (record != nullptr) {
    record->steps = steps_taken;
    record->norm_drift = drift.norm;
    record->inner_product_drift = drift.inner;
  }
  return v;
}

bool periodic_equal(const DomainBox& box, const Vec& a, const Vec& b, double tol) {
  return param_distance(box, a, b) <= tol;
}

}  // namespace

// ---------------------------------------------------------------- curves

ParamCurve ParamCurve::polyline(std::vector<Vec> points, bool closed) {
  if (points.empty()) throw GeometryError("polyline needs at least one point");
  if (points.size() == 1) points.push_back(points.front());
  for (const Vec& p : points) {
    if (p.size() != points.front().size()) throw GeometryError("polyline points differ in dimension");
  }
  ParamCurve c;
  c.points_ = std::move(points);
  c.closed_ = closed;
  return c;
}

ParamCurve ParamCurve::expression(ChartExpr expr, bool closed) {
  if (expr.arity() != 1) throw GeometryError("curve expression must have exactly one parameter");
  ParamCurve c;
  c.expr_ = std::move(expr);
  c.closed_ = closed;
  return c;
}

int ParamCurve::dim() const { return expr_ ? expr_->outputs() : static_cast<int>(points_.front().size()); }

Vec ParamCurve::at(double t) const {
  if (expr_) {
    Vec s(1);
    s[0] = t;
    return expr_->eval(s);
  }
  const double total = length();
  if (total == 0.0) return points_.front();
  double target = std::clamp(t, 0.0, 1.0) * total;
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const double len = (points_[i + 1] - points_[i]).norm();
    if (target <= len || i + 2 == points_.size()) {
      return len == 0.0 ? points_[i] : Vec(points_[i] + (std::min(target, len) / len) * (points_[i + 1] - points_[i]));
    }
    target -= len;
  }
  return points_.back();
}

double ParamCurve::length() const {
  double total = 0.0;
  if (expr_) {
    constexpr int kSamples = 256;
    Vec prev = at(0.0);
    for (int i = 1; i <= kSamples; ++i) {
      const Vec cur = at(static_cast<double>(i) / kSamples);
      total += (cur - prev).norm();
      prev = cur;
    }
    return total;
  }
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) total += (points_[i + 1] - points_[i]).norm();
  return total;
}

ParamCurve ParamCurve::reversed() const {
  if (expr_) {
    // t -> 1 - t substituted at the parameter node.
    std::vector<ExprNode> nodes = expr_->nodes();
    std::vector<int> remap(nodes.size());
    std::vector<ExprNode> out;
    ExprNode one;
    one.value = 1.0;
    ExprNode param;
    param.op = OpCode::kParam;
    param.param = 0;
    param.parameter_free = false;
    out.push_back(one);
    out.push_back(param);
    ExprNode flip;
    flip.op = OpCode::kSub;
    flip.lhs = 0;
    flip.rhs = 1;
    flip.parameter_free = false;
    out.push_back(flip);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      ExprNode n = nodes[i];
      if (n.op == OpCode::kParam) {
        remap[i] = 2;
        continue;
      }
      if (n.lhs >= 0) n.lhs = remap[static_cast<std::size_t>(n.lhs)];
      if (n.rhs >= 0) n.rhs = remap[static_cast<std::size_t>(n.rhs)];
      remap[i] = static_cast<int>(out.size());
      out.push_back(n);
    }
    std::vector<int> roots;
    for (int r : expr_->roots()) roots.push_back(remap[static_cast<std::size_t>(r)]);
    return expression(ChartExpr::from_parts(expr_->params(), std::move(out), std::move(roots)), closed_);
  }
  std::vector<Vec> pts(points_.rbegin(), points_.rend());
  return polyline(std::move(pts), closed_);
}

ParamCurve ParamCurve::then(const ParamCurve& next) const {
  if (expr_ || next.expr_) throw GeometryError("only polylines can be concatenated");
  if ((points_.back() - next.points_.front()).norm() > kClosureTol) {
    throw GeometryError("concatenated curves do not meet");
  }
  std::vector<Vec> pts = points_;
  pts.insert(pts.end(), next.points_.begin() + 1, next.points_.end());
  return polyline(std::move(pts), closed_ || next.closed_);
}

void ParamCurve::check_domain(const DomainBox& box) const {
  if (static_cast<int>(box.size()) != dim()) throw GeometryError("curve dimension does not match the patch");
  std::vector<Vec> samples;
  if (expr_) {
    for (int i = 0; i <= 256; ++i) samples.push_back(at(i / 256.0));
  } else {
    samples = points_;
  }
  for (const Vec& u : samples) {
    for (std::size_t a = 0; a < box.size(); ++a) {
      const auto& iv = box[a];
      const double v = u[static_cast<Eigen::Index>(a)];
      if (!iv.periodic && (v < iv.lo - 1e-12 || v > iv.hi + 1e-12)) {
        throw GeometryError("curve leaves the domain at parameter " + std::to_string(a));
      }
    }
  }
  if (closed_ && !periodic_equal(box, start(), end(), kClosureTol)) {
    throw GeometryError("closed curve does not return to its start");
  }
}

// ---------------------------------------------------------------- transport

TransportResult transport_frame(const SubmanifoldPatch& patch, const ParamCurve& curve, const Mat& v0,
                                const Tolerances& tol, const TransportOptions& opts) {
  curve.check_domain(patch.domain());
  TransportResult result;
  result.initial = v0;
  const Vec x0 = patch.position(curve.start());
  const Mat p0 = projector_at(patch.ambient(), x0);
  const double off = (v0 - p0 * v0).cwiseAbs().maxCoeff();
  if (v0.size() > 0 && off > tol.on_ambient_tol * std::max(1.0, v0.cwiseAbs().maxCoeff())) {
    throw GeometryError("initial vector is not tangent to the ambient manifold");
  }
  if (patch.ambient().is_flat()) {
    result.final = v0;
    return result;
  }
  const std::vector<Piece> pieces = pieces_of(curve);
  if (pieces.empty()) {
    result.final = v0;
    return result;
  }
  const int steps = std::max(1, tol.transport_steps);
  result.final = integrate(patch, pieces, v0, steps, &result, opts.record_path);
  if (opts.richardson) {
    const Mat fine = integrate(patch, pieces, v0, 2 * steps, nullptr, false);
    result.richardson_error = (fine - result.final).cwiseAbs().maxCoeff() / 15.0;
  }
  return result;
}

TransportResult parallel_transport(const SubmanifoldPatch& patch, const ParamCurve& curve, const Vec& v0,
                                   const Tolerances& tol, const TransportOptions& opts) {
  return transport_frame(patch, curve, Mat(v0), tol, opts);
}

// ---------------------------------------------------------------- geodesics

GeodesicTrace geodesic_trace(const SubmanifoldPatch& patch, const Vec& u0, const Vec& w0, double length,
                             const Tolerances& tol, int steps) {
  if (w0.norm() == 0.0) throw GeometryError("geodesic needs a nonzero initial velocity");
  if (steps <= 0) steps = tol.transport_steps;
  const int n = patch.dim();
  const Jet1 start = patch.ambient_first(u0);
  const double speed = (start.jacobian * w0).norm();
  GeodesicTrace out;
  Vec u = u0;
  Vec v = w0 / speed;
  const double h = length / steps;

  auto accel = [&](const Vec& uu, const Vec& vv) {
    const std::vector<Mat> gamma = christoffel(patch, uu);
    Vec a(n);
    for (int k = 0; k < n; ++k) a[k] = -vv.dot(gamma[static_cast<std::size_t>(k)] * vv);
    return a;
  };
  auto measure = [&](const Vec& uu, const Vec& vv) {
    const Jet2 jet = patch.ambient_jet(uu);
    const Vec udd = accel(uu, vv);
    Vec a = jet.jacobian * udd;
    for (std::size_t c = 0; c < jet.hessian.size(); ++c) {
      a[static_cast<Eigen::Index>(c)] += vv.dot(jet.hessian[c] * vv);
    }
    const Mat& j = jet.jacobian;
    const Vec tangential = j * (j.transpose() * j).ldlt().solve(j.transpose() * a);
    out.tangential_residual = std::max(out.tangential_residual, tangential.norm());
    out.ambient_residual = std::max(out.ambient_residual, (projector_at(patch.ambient(), jet.value) * a).norm());
    out.speed_drift = std::max(out.speed_drift, std::abs((j * vv).norm() - 1.0));
  };

  out.u.push_back(u);
  out.velocity.push_back(v);
  measure(u, v);
  for (int s = 0; s < steps; ++s) {
    const Vec a1 = accel(u, v);
    const Vec u2 = u + 0.5 * h * v;
    const Vec v2 = v + 0.5 * h * a1;
    const Vec a2 = accel(u2, v2);
    const Vec u3 = u + 0.5 * h * v2;
    const Vec v3 = v + 0.5 * h * a2;
    const Vec a3 = accel(u3, v3);
    const Vec u4 = u + h * v3;
    const Vec v4 = v + h * a3;
    const Vec a4 = accel(u4, v4);
    u += (h / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4);
    v += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    if (!u.allFinite() || !v.allFinite()) throw GeometryError("geodesic integration blew up");
    if (!inside(patch.domain(), u, 1e-9)) {
      throw GeometryError("geodesic left the domain after arc length " + format_double((s + 1) * h));
    }
    out.u.push_back(u);
    out.velocity.push_back(v);
    measure(u, v);
  }
  out.length = length;
  out.curve = ParamCurve::polyline(out.u, false);
  return out;
}

double geodesic_tgs_residual(const SubmanifoldPatch& patch, const std::vector<Vec>& samples, double length,
                             const Tolerances& tol, int steps) {
  double worst = 0.0;
  for (const Vec& u : samples) {
    for (int i = 0; i < patch.dim(); ++i) {
      try {
        worst = std::max(worst, geodesic_trace(patch, u, Vec::Unit(patch.dim(), i), length, tol, steps).ambient_residual);
      } catch (const GeometryError&) {
        // geodesic left the box before `length`; this sample contributes nothing
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------- holonomy

HolonomySample holonomy_loop(const SubmanifoldPatch& patch, const std::vector<ParamCurve>& loops,
                             const Tolerances& tol) {
  if (loops.empty()) throw GeometryError("holonomy needs at least one loop");
  HolonomySample sample;
  sample.u0 = loops.front().start();
  sample.x0 = patch.position(sample.u0);
  sample.basis = ambient_tangent_projector(patch.ambient(), sample.x0, tol).basis;
  const DomainBox& box = patch.domain();
  for (const ParamCurve& loop : loops) {
    loop.check_domain(box);
    if (!periodic_equal(box, loop.start(), sample.u0, kClosureTol) ||
        !periodic_equal(box, loop.end(), sample.u0, kClosureTol)) {
      throw GeometryError("holonomy loops must start and end at the same base point");
    }
    const TransportResult r = transport_frame(patch, loop, sample.basis, tol);
    Mat p = sample.basis.transpose() * r.final;
    const Eigen::Index d = p.rows();
    sample.orthogonality_error =
        std::max(sample.orthogonality_error, (p.transpose() * p - Mat::Identity(d, d)).cwiseAbs().maxCoeff());
    sample.norm_drift = std::max(sample.norm_drift, r.norm_drift);
    sample.inner_product_drift = std::max(sample.inner_product_drift, r.inner_product_drift);
    sample.loops.push_back(loop);
    sample.maps.push_back(std::move(p));
  }
  return sample;
}

double rotation_angle(const Mat& p) {
  if (p.rows() != 2 || p.cols() != 2) throw GeometryError("rotation angle needs a 2x2 map");
  return std::atan2(p(1, 0), p(0, 0));
}

// ---------------------------------------------------------------- parallel fields

ParamCurve staircase(const Vec& from, const Vec& to) {
  std::vector<Vec> pts{from};
  Vec cur = from;
  for (Eigen::Index i = 0; i < from.size(); ++i) {
    if (cur[i] == to[i]) continue;
    cur[i] = to[i];
    pts.push_back(cur);
  }
  return ParamCurve::polyline(std::move(pts), false);
}

FieldAlongM staircase_field(PatchPtr patch, const Vec& u0, const Vec& w0, const Tolerances& tol) {
  const SubmanifoldPatch* raw = patch.get();
  const bool flat = patch->ambient().is_flat();
  auto sampler = [raw, u0, w0, tol, flat](const Vec& u) -> Vec {
    if (flat) return w0;
    const Vec target = wrap_into(raw->domain(), u);
    return parallel_transport(*raw, staircase(u0, target), w0, tol).final.col(0);
  };
  std::string desc = "transport of (";
  for (Eigen::Index i = 0; i < w0.size(); ++i) desc += (i ? ", " : "") + format_double(w0[i]);
  desc += ") along staircase paths";
  return FieldAlongM::sampled(sampler, std::move(patch), desc);
}

std::vector<ProbeLoop> probe_loops(const SubmanifoldPatch& patch, const Vec& u0, const ProbeOptions& opts) {
  const DomainBox& box = patch.domain();
  const int n = patch.dim();
  std::vector<ProbeLoop> loops;
  for (int level : opts.levels) {
    if (level <= 0) continue;
    const Grid cells(box, level);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    const std::size_t total = static_cast<std::size_t>(std::pow(level, n));
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rem = flat;
      for (int a = n - 1; a >= 0; --a) {
        idx[static_cast<std::size_t>(a)] = static_cast<int>(rem % static_cast<std::size_t>(level));
        rem /= static_cast<std::size_t>(level);
      }
      Vec corner(n);
      for (int a = 0; a < n; ++a) corner[a] = box[static_cast<std::size_t>(a)].lo + idx[static_cast<std::size_t>(a)] * cells.spacing(a);
      std::string where = "(";
      for (int a = 0; a < n; ++a) where += (a ? "," : "") + std::to_string(idx[static_cast<std::size_t>(a)]);
      where += ")";
      const ParamCurve to = staircase(u0, corner);
      auto add = [&](std::vector<Vec> face, const std::string& label) {
        ParamCurve loop = to.then(ParamCurve::polyline(std::move(face))).then(staircase(corner, u0));
        loops.push_back({label, ParamCurve::polyline(loop.points(), true)});
      };
      if (n == 1) {
        const Vec far = corner + Vec::Constant(1, cells.spacing(0));
        add({corner, far, corner}, "cell level " + std::to_string(level) + " " + where);
        continue;
      }
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const Vec ei = Vec::Unit(n, i) * cells.spacing(i);
          const Vec ej = Vec::Unit(n, j) * cells.spacing(j);
          add({corner, corner + ei, corner + ei + ej, corner + ej, corner},
              "cell level " + std::to_string(level) + " " + where + " axes " + std::to_string(i) + "-" +
                  std::to_string(j));
        }
      }
    }
  }
  for (int a = 0; a < n; ++a) {
    const ParamInterval& iv = box[static_cast<std::size_t>(a)];
    if (!iv.periodic) continue;
    Vec end = u0;
    end[a] += iv.length();
    loops.push_back({"wrap axis " + std::to_string(a), ParamCurve::polyline({u0, end}, true)});
  }
  std::mt19937_64 rng(opts.seed);
  auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int r = 0; r < opts.random_loops; ++r) {
    const int count = 3 + static_cast<int>(rng() % 4);
    std::vector<Vec> pts{u0};
    for (int k = 0; k < count; ++k) {
      Vec p(n);
      for (int a = 0; a < n; ++a) {
        const ParamInterval& iv = box[static_cast<std::size_t>(a)];
        p[a] = iv.lo + uniform() * iv.length();
      }
      pts.push_back(p);
    }
    pts.push_back(u0);
    loops.push_back({"random " + std::to_string(r), ParamCurve::polyline(std::move(pts), true)});
  }
  return loops;
}

ParallelFieldResult construct_parallel_field(PatchPtr patch, const Vec& u0, const Vec& w0,
                                             const std::vector<Vec>& sample_u, const ProbeOptions& opts,
                                             const Tolerances& tol) {
  const Vec x0 = patch->position(u0);
  const AmbientTangent amb = ambient_tangent_projector(patch->ambient(), x0, tol);
  if ((w0 - amb.projector * w0).norm() > tol.on_ambient_tol * std::max(1.0, w0.norm())) {
    throw GeometryError("seed vector is not tangent to the ambient manifold");
  }
  ParallelFieldResult result;
  const std::vector<ProbeLoop> loops = probe_loops(*patch, u0, opts);
  result.report.loops = loops.size();
  if (!patch->ambient().is_flat()) {
    for (const ProbeLoop& loop : loops) {
      const TransportResult r = parallel_transport(*patch, loop.curve, w0, tol);
      const double obs = (r.final.col(0) - w0).norm();
      result.report.norm_drift = std::max(result.report.norm_drift, r.norm_drift);
      if (obs > result.report.obstruction || result.report.worst_loop.empty()) {
        result.report.obstruction = std::max(obs, result.report.obstruction);
        result.report.worst_loop = loop.label;
      }
    }
  }
  result.report.certified = result.report.obstruction < tol.holonomy_tol;
  result.report.message = result.report.certified ? kNoObstructionMessage : kObstructionMessage;
  result.field = staircase_field(patch, u0, w0, tol);
  for (const Vec& u : sample_u) result.samples.push_back(result.field.value(*patch, u));
  return result;
}

ParallelFieldReport parallel_field_report(PatchPtr patch, const Vec& u0, const Vec& w0, const ProbeOptions& opts,
                                          const Tolerances& tol) {
  ParallelFieldReport out;
  const ParallelFieldResult built = construct_parallel_field(patch, u0, w0, {}, opts, tol);
  out.obstruction = built.report;
  TheoremReport& report = out.report;
  report.theorem = "parallel-field";
  report.subject = patch->name();
  report.measurements["loops"] = static_cast<double>(built.report.loops);
  report.measurements["norm_drift"] = built.report.norm_drift;
  report.add_hypothesis("holonomy_obstruction", built.report.obstruction, tol.holonomy_tol, "<");
  report.notes.push_back(built.report.message);
  if (!built.report.worst_loop.empty()) report.notes.push_back("worst loop: " + built.report.worst_loop);
  if (report.hypotheses_hold()) {
    const Grid coarse(patch->domain(), 4);
    const ParallelityResult p = parallelity_residual(*patch, built.field, coarse, tol);
    report.add_conclusion("field_parallelity", p.value, tol.holonomy_tol, "<");
    report.witness = p.witness;
  }
  report.decide();
  return out;
}

ParallelityResult parallelity_residual(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                                       const Tolerances& tol) {
  ParallelityResult out;
  for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
    const Vec u = grid.vertex(k);
    const double norm = field.value(patch, u).norm();
    for (int i = 0; i < patch.dim(); ++i) {
      const double d = covariant_derivative_along(patch, field, u, Vec::Unit(patch.dim(), i), tol).norm();
      const double r = norm > 0.0 ? d / norm : d;
      if (out.witness.size() == 0 || r > out.value) {
        out.value = r;
        out.witness = u;
      }
    }
  }
  return out;
}

TheoremReport parallel_normal_frame_tgs_check(const SubmanifoldPatch& patch, const std::vector<FieldAlongM>& fields,
                                              const Grid& grid, const Tolerances& tol) {
  TheoremReport report;
  report.theorem = "parallel-normal-frame";
  report.subject = patch.name();
  const int k = patch.codim();
  const int r = static_cast<int>(fields.size());
  report.add_hypothesis("frame_count_mismatch", std::abs(r - k), 0.5, "<");
  if (r == k && k > 0) {
    for (int i = 0; i < r; ++i) {
      const ParallelityResult p = parallelity_residual(patch, fields[static_cast<std::size_t>(i)], grid, tol);
      report.add_hypothesis("parallelity_" + std::to_string(i + 1), p.value, tol.holonomy_tol, "<");
    }
    double tangency = 0.0;
    double span = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < grid.total_vertices(); ++v) {
      const Vec u = grid.vertex(v);
      const FrameData frame = frame_at(patch, u, tol);
      Mat x(frame.point.size(), r);
      for (int i = 0; i < r; ++i) x.col(i) = fields[static_cast<std::size_t>(i)].value(patch, u);
      for (int i = 0; i < r; ++i) {
        const double len = x.col(i).norm();
        const Vec tan_part = frame.tangent_basis * (frame.tangent_basis.transpose() * x.col(i));
        tangency = std::max(tangency, len > 0.0 ? tan_part.norm() / len : 0.0);
      }
      const Vec sv = singular_values(frame.normal_frame.transpose() * x);
      span = std::min(span, sv[0] > 0.0 ? sv[sv.size() - 1] / sv[0] : 0.0);
    }
    report.add_hypothesis("normality", tangency, tol.on_ambient_tol, "<");
    report.add_hypothesis("frame_span", span, tol.rank_tol, ">");
  }
  if (report.hypotheses_hold()) {
    const TgsScan scan = totally_geodesic_scan(patch, grid, tol);
    report.add_conclusion("tgs_residual", scan.max_residual, tol.tgs_tol, "<");
    report.witness = scan.witness;
  } else {
    report.notes.push_back("hypotheses violated; no verdict on total geodesy");
  }
  report.decide();
  return report;
}

}  // namespace penumbra
