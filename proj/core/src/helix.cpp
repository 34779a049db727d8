#include "penumbra/helix.hpp"

#include "penumbra/curvature.hpp"
#include "penumbra/error.hpp"
#include "penumbra/shadow.hpp"
#include "penumbra/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace penumbra {

namespace {

constexpr int kMaxParentCells = 32;
constexpr int kIntegralCurveSeeds = 8;
constexpr int kIntegralCurveSteps = 100;

const SubmanifoldPatch& parent_of(const SubmanifoldPatch& sub) {
  if (sub.parent() == nullptr) throw GeometryError("patch " + sub.name() + " is not nested in another patch");
  return *sub.parent();
}

Grid parent_grid(const SubmanifoldPatch& parent, const Grid& grid) {
  return Grid(parent.domain(), std::min(grid.cells(0), kMaxParentCells));
}

Vec tangent_part(const FrameData& frame, const Vec& v) {
  return frame.tangent_basis * (frame.tangent_basis.transpose() * v);
}

// Unit tangent field along tan(Y) and its parameter-space velocity.
struct TangentFlow {
  const SubmanifoldPatch& patch;
  const FieldAlongM& field;
  const Tolerances& tol;

  Vec unit(const Vec& u) const {
    const FrameData f = frame_at(patch, u, tol);
    const Vec t = tangent_part(f, field.value(patch, u));
    const double len = t.norm();
    if (len == 0.0) throw GeometryError("tan(Y) vanishes along the integral curve");
    return t / len;
  }

  Vec velocity(const Vec& u) const {
    const Jet1 j = patch.ambient_first(u);
    return (j.jacobian.transpose() * j.jacobian).ldlt().solve(j.jacobian.transpose() * unit(u));
  }
};

}  // namespace

double helix_angle(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& u, const Tolerances& tol) {
  const FrameData frame = frame_at(patch, u, tol);
  return split_tangent_normal(frame, field.value(patch, u), tol).tan.norm();
}

nlohmann::json HelixReport::to_json() const {
  nlohmann::json out;
  out["samples"] = h.size();
  out["mean"] = mean;
  out["max_deviation"] = max_deviation;
  out["min"] = min_h;
  out["max"] = max_h;
  out["nor_mean"] = nor_mean;
  out["nor_deviation"] = nor_deviation;
  out["norm_deviation"] = norm_deviation;
  out["pythagoras_residual"] = pythagoras_residual;
  out["helix"] = helix;
  out["orthogonal"] = orthogonal;
  out["tangent"] = tangent;
  out["min_witness"] = vec_to_json(min_witness);
  out["max_witness"] = vec_to_json(max_witness);
  return out;
}

HelixReport helix_constancy_report(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                                   const Tolerances& tol) {
  HelixReport r;
  std::vector<double> norms;
  r.min_h = std::numeric_limits<double>::infinity();
  r.max_h = -std::numeric_limits<double>::infinity();
  r.min_nor = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
    const Vec u = grid.vertex(k);
    const FrameData frame = frame_at(patch, u, tol);
    const Vec y = field.value(patch, u);
    const TangentNormalSplit s = split_tangent_normal(frame, y, tol);
    const double h = s.tan.norm();
    const double nor = s.nor.norm();
    const double len = y.norm();
    r.h.push_back(h);
    r.nor.push_back(nor);
    norms.push_back(len);
    r.pythagoras_residual = std::max(r.pythagoras_residual, std::abs(h * h + nor * nor - len * len));
    r.max_excess = std::max(r.max_excess, h - len);
    if (h < r.min_h) {
      r.min_h = h;
      r.min_witness = u;
    }
    if (h > r.max_h) {
      r.max_h = h;
      r.max_witness = u;
    }
    r.min_nor = std::min(r.min_nor, nor);
  }
  const double count = static_cast<double>(r.h.size());
  double norm_mean = 0.0;
  for (std::size_t i = 0; i < r.h.size(); ++i) {
    r.mean += r.h[i] / count;
    r.nor_mean += r.nor[i] / count;
    norm_mean += norms[i] / count;
  }
  double max_nor = 0.0;
  for (std::size_t i = 0; i < r.h.size(); ++i) {
    r.max_deviation = std::max(r.max_deviation, std::abs(r.h[i] - r.mean));
    r.nor_deviation = std::max(r.nor_deviation, std::abs(r.nor[i] - r.nor_mean));
    r.norm_deviation = std::max(r.norm_deviation, std::abs(norms[i] - norm_mean));
    max_nor = std::max(max_nor, r.nor[i]);
  }
  r.helix = r.max_deviation < tol.helix_tol;
  r.orthogonal = r.max_h < tol.helix_tol;
  r.tangent = max_nor < tol.helix_tol;
  return r;
}

double tangent_part_parallelity(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                                const Tolerances& tol) {
  const double step = tol.fd_step;
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
    const Vec u = grid.vertex(k);
    const FrameData frame = frame_at(patch, u, tol);
    const double len = field.value(patch, u).norm();
    for (int i = 0; i < patch.dim(); ++i) {
      Vec up = u;
      Vec dn = u;
      up[i] += step;
      dn[i] -= step;
      const Vec tp = tangent_part(frame_at(patch, up, tol), field.value(patch, up));
      const Vec tm = tangent_part(frame_at(patch, dn, tol), field.value(patch, dn));
      const Vec d = tangent_part(frame, (tp - tm) / (2.0 * step));
      worst = std::max(worst, len > 0.0 ? d.norm() / len : d.norm());
    }
  }
  return worst;
}

TheoremReport classify_hypersurface_helix(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                                          const Tolerances& tol) {
  TheoremReport report;
  report.theorem = "hypersurface-helix";
  report.subject = patch.name();
  report.add_hypothesis("codimension_mismatch", std::abs(patch.codim() - 1), 0.5, "<");
  if (!report.hypotheses_hold()) {
    report.decide();
    return report;
  }
  const HelixReport helix = helix_constancy_report(patch, field, grid, tol);
  report.add_hypothesis("field_parallelity", parallelity_residual(patch, field, grid, tol).value, tol.holonomy_tol,
                        "<");
  report.add_hypothesis("helix_deviation", helix.max_deviation, tol.helix_tol, "<");
  report.measurements["helix_angle_mean"] = helix.mean;
  report.measurements["min_helix_angle"] = helix.min_h;
  report.measurements["min_normal_part"] = helix.min_nor;
  if (!report.hypotheses_hold()) {
    report.notes.push_back("not a certified helix; no case analysis");
    report.decide();
    return report;
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < helix.h.size(); ++i) scale = std::max(scale, std::hypot(helix.h[i], helix.nor[i]));
  scale = std::max(scale, std::numeric_limits<double>::min());

  if (helix.min_h / scale < tol.transversality_floor) {
    report.notes.push_back("case a: Y orthogonal to M");
    report.measurements["case"] = 1;
    report.witness = helix.min_witness;
    report.add_conclusion("tgs_residual", totally_geodesic_scan(patch, grid, tol).max_residual, tol.tgs_tol, "<");
  } else if (helix.min_nor / scale < tol.transversality_floor) {
    report.notes.push_back("case b: Y tangent to M; splitting out of scope, parallelity of tan(Y) on M verified");
    report.measurements["case"] = 2;
    report.add_conclusion("tangent_part_parallelity", tangent_part_parallelity(patch, field, grid, tol), tol.tgs_tol,
                          "<");
  } else {
    report.notes.push_back("case c: Y transversal; integral curves of tan(Y) traced");
    report.measurements["case"] = 3;
    const TangentFlow flow{patch, field, tol};
    const DomainBox& box = patch.domain();
    double shortest = std::numeric_limits<double>::infinity();
    for (const ParamInterval& iv : box) shortest = std::min(shortest, iv.length());
    const double h = 0.25 * shortest / kIntegralCurveSteps;
    const double delta = tol.fd_step;
    double in_m = 0.0;
    double in_n = 0.0;
    std::size_t points = 0;
    const std::size_t total = grid.total_vertices();
    const std::size_t stride = std::max<std::size_t>(1, total / kIntegralCurveSeeds);
    for (std::size_t seed = 0; seed < total; seed += stride) {
      Vec u = grid.vertex(seed);
      for (int s = 0; s <= kIntegralCurveSteps; ++s) {
        const Vec v = flow.velocity(u);
        const Vec a = (flow.unit(u + delta * v) - flow.unit(u - delta * v)) / (2.0 * delta);
        const FrameData frame = frame_at(patch, u, tol);
        in_m = std::max(in_m, tangent_part(frame, a).norm());
        in_n = std::max(in_n, (frame.ambient_projector * a).norm());
        ++points;
        if (s == kIntegralCurveSteps) break;
        const Vec k1 = v;
        const Vec k2 = flow.velocity(u + 0.5 * h * k1);
        const Vec k3 = flow.velocity(u + 0.5 * h * k2);
        const Vec k4 = flow.velocity(u + h * k3);
        const Vec next = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!inside(box, next, 0.0)) break;
        u = next;
      }
    }
    report.measurements["integral_curve_points"] = static_cast<double>(points);
    report.add_conclusion("integral_curves_geodesic_in_M", in_m, tol.tgs_tol, "<");
    report.add_conclusion("integral_curves_geodesic_in_N", in_n, tol.tgs_tol, "<");
  }
  report.decide();
  return report;
}

double membership_residual(const SubmanifoldPatch& sub, const FieldAlongM& field, const Grid& grid,
                           const Tolerances& tol) {
  const SubmanifoldPatch& parent = parent_of(sub);
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
    const Vec pu = sub.chart().eval(grid.vertex(k));
    worst = std::max(worst, max_abs(shadow_residual(parent, field, pu, tol).f));
  }
  return worst;
}

TheoremReport orthogonal_tgs_check(const SubmanifoldPatch& sub, const FieldAlongM& field, const Grid& grid,
                                   const Tolerances& tol) {
  TheoremReport report;
  report.theorem = "orthogonal-tgs";
  report.subject = sub.name();
  const SubmanifoldPatch& parent = parent_of(sub);
  report.add_hypothesis("codimension_in_parent_mismatch", std::abs(parent.dim() - sub.dim() - 1), 0.5, "<");
  if (!report.hypotheses_hold()) {
    report.decide();
    return report;
  }
  report.add_hypothesis("field_parallelity_on_parent",
                        parallelity_residual(parent, field, parent_grid(parent, grid), tol).value, tol.holonomy_tol,
                        "<");
  double tangency = 0.0;
  double not_tgs = std::numeric_limits<double>::infinity();
  double tgs_in_m = 0.0;
  for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
    const Vec u = grid.vertex(k);
    const NestedForms forms = nested_forms(sub, u, tol);
    const Vec y = field.value(sub, u);
    const double len = y.norm();
    const double t = tangent_part(forms.frame, y).norm();
    tangency = std::max(tangency, len > 0.0 ? t / len : t);
    const double ln = max_normal_curvature(second_fundamental_form(sub, u, tol));
    if (ln < not_tgs) {
      not_tgs = ln;
      report.witness = u;
    }
    tgs_in_m = std::max(tgs_in_m, max_relative_curvature(forms));
  }
  report.add_hypothesis("field_orthogonal_to_sub", tangency, tol.tgs_tol, "<");
  report.add_hypothesis("sub_not_tgs_in_ambient", not_tgs, tol.ntgs_floor, ">");
  const double membership = membership_residual(sub, field, grid, tol);
  report.measurements["membership_residual"] = membership;
  report.measurements["tgs_in_parent_residual"] = tgs_in_m;
  if (report.hypotheses_hold()) {
    const bool both_small = membership < tol.extract_tol && tgs_in_m < tol.tgs_tol;
    const bool both_large = membership > tol.transversality_floor && tgs_in_m > tol.ntgs_floor;
    report.add_agreement("membership_iff_tgs_in_parent", membership, tol.extract_tol, both_small || both_large);
    report.notes.push_back(both_small   ? "L lies in the shadow boundary and is totally geodesic in M"
                           : both_large ? "L leaves the shadow boundary and is not totally geodesic in M"
                                        : "membership and total geodesy disagree at this resolution");
  } else {
    report.notes.push_back("hypotheses violated; the equivalence is not asserted");
  }
  report.decide();
  return report;
}

TheoremReport tgs_helix_check(const SubmanifoldPatch& sub, const FieldAlongM& field, const Grid& grid,
                              const Tolerances& tol) {
  TheoremReport report;
  report.theorem = "tgs-helix";
  report.subject = sub.name();
  const SubmanifoldPatch& parent = parent_of(sub);
  report.add_hypothesis("field_parallelity_on_parent",
                        parallelity_residual(parent, field, parent_grid(parent, grid), tol).value, tol.holonomy_tol,
                        "<");
  report.add_hypothesis("membership_residual", membership_residual(sub, field, grid, tol), tol.extract_tol, "<");
  double tgs_in_m = 0.0;
  for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
    tgs_in_m = std::max(tgs_in_m, max_relative_curvature(nested_forms(sub, grid.vertex(k), tol)));
  }
  report.add_hypothesis("tgs_in_parent_residual", tgs_in_m, tol.tgs_tol, "<");
  if (report.hypotheses_hold()) {
    const HelixReport helix = helix_constancy_report(sub, field, grid, tol);
    report.measurements["helix_angle_mean"] = helix.mean;
    report.add_conclusion("helix_deviation", helix.max_deviation, tol.helix_tol, "<");
    report.witness = helix.max_witness;
  }
  report.decide();
  return report;
}

TheoremReport minimality_criterion(const SubmanifoldPatch& sub, const FieldAlongM& field, const Grid& grid,
                                   const Tolerances& tol) {
  TheoremReport report;
  report.theorem = "minimality";
  report.subject = sub.name();
  const SubmanifoldPatch& parent = parent_of(sub);
  report.add_hypothesis("codimension_in_parent_mismatch", std::abs(parent.dim() - sub.dim() - 1), 0.5, "<");
  report.add_hypothesis("parent_codimension_mismatch", std::abs(parent.codim() - 1), 0.5, "<");
  if (!report.hypotheses_hold()) {
    report.decide();
    return report;
  }
  report.add_hypothesis("field_parallelity_on_parent",
                        parallelity_residual(parent, field, parent_grid(parent, grid), tol).value, tol.holonomy_tol,
                        "<");
  report.add_hypothesis("membership_residual", membership_residual(sub, field, grid, tol), tol.extract_tol, "<");

  double transversality = std::numeric_limits<double>::infinity();
  double g_hy = 0.0;
  double h_m = 0.0;
  double bang = 0.0;
  double bang_mean = 0.0;
  for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
    const Vec u = grid.vertex(k);
    const NestedForms forms = nested_forms(sub, u, tol);
    const Vec y = field.value(sub, u);
    const double nor = (y - tangent_part(forms.frame, y)).norm();
    if (nor < transversality) {
      transversality = nor;
      report.witness = u;
    }
    g_hy = std::max(g_hy, std::abs(forms.mean_ln.dot(y)));
    h_m = std::max(h_m, forms.mean_lm.norm());
    bang_mean = std::max(bang_mean, (forms.mean_ln - forms.mean_lm - forms.mean_mn).norm());
    for (std::size_t i = 0; i < forms.ii_ln.size(); ++i) {
      for (std::size_t j = 0; j < forms.ii_ln.size(); ++j) {
        bang = std::max(bang, (forms.ii_ln[i][j] - forms.ii_lm[i][j] - forms.ii_mn[i][j]).norm());
      }
    }
  }
  report.add_hypothesis("transversality", transversality, tol.transversality_floor, ">");
  report.measurements["max_g_H_Y"] = g_hy;
  report.measurements["max_H_in_parent"] = h_m;
  if (report.hypotheses_hold()) {
    const bool both_small = g_hy < tol.tgs_tol && h_m < tol.tgs_tol;
    const bool both_large = g_hy > tol.ntgs_floor && h_m > tol.ntgs_floor;
    report.add_agreement("minimal_iff_g_H_Y_zero", g_hy, tol.tgs_tol, both_small || both_large);
    report.add_conclusion("bang_residual", bang, kBangTol, "<");
    report.add_conclusion("bang_mean_residual", bang_mean, kBangTol, "<");
    report.notes.push_back(both_small   ? "g(H, Y) = 0 and L is minimal in M"
                           : both_large ? "g(H, Y) != 0 and L is not minimal in M"
                                        : "g(H, Y) and minimality disagree at this resolution");
  }
  report.decide();
  return report;
}

TheoremReport bang_report(const SubmanifoldPatch& sub, const Grid& grid, const Tolerances& tol) {
  TheoremReport report;
  report.theorem = "bang";
  report.subject = sub.name();
  report.add_hypothesis("nested", sub.parent() != nullptr ? 1.0 : 0.0, 0.5, ">");
  if (report.hypotheses_hold()) {
    double bang = 0.0;
    double bang_mean = 0.0;
    for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
      const NestedForms forms = nested_forms(sub, grid.vertex(k), tol);
      bang_mean = std::max(bang_mean, (forms.mean_ln - forms.mean_lm - forms.mean_mn).norm());
      for (std::size_t i = 0; i < forms.ii_ln.size(); ++i) {
        for (std::size_t j = 0; j < forms.ii_ln.size(); ++j) {
          bang = std::max(bang, (forms.ii_ln[i][j] - forms.ii_lm[i][j] - forms.ii_mn[i][j]).norm());
        }
      }
    }
    report.add_conclusion("second_form_residual", bang, kBangTol, "<");
    report.add_conclusion("mean_curvature_residual", bang_mean, kBangTol, "<");
  }
  report.decide();
  return report;
}

TubeScene tube_scene_generator(const SubmanifoldPatch& curve, const Vec& v, double epsilon, const Grid& grid,
                               const Tolerances& tol) {
  const int n = curve.dim();
  const int m = curve.ambient().embedding_dim();
  if (curve.parent() != nullptr || !curve.ambient().is_flat()) {
    throw GeometryError("tube base must be a top-level patch of a flat ambient");
  }
  if (m != n + 2) throw GeometryError("tube base must have codimension two");
  if (v.size() != m || v.norm() == 0.0) throw GeometryError("tube direction must be a nonzero ambient vector");
  if (!(epsilon > 0.0)) throw GeometryError("tube half-width must be positive");

  TubeScene scene;
  scene.direction = v;
  scene.epsilon = epsilon;
  scene.min_transversality = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
    const Vec u = grid.vertex(k);
    const FrameData frame = frame_at(curve, u, tol);
    const double t = (v - tangent_part(frame, v)).norm() / v.norm();
    scene.min_transversality = std::min(scene.min_transversality, t);
    if (t <= tol.transversality_floor) {
      throw GeometryError("transversality failure: direction is tangent to " + curve.name() + " near u = (" +
                          format_double(u[0]) + (n > 1 ? ", ...)" : ")"));
    }
  }

  const ChartExpr& base = curve.chart();
  std::vector<std::string> params = base.params();
  std::string lam = "lam";
  while (std::find(params.begin(), params.end(), lam) != params.end()) lam += "_";
  params.push_back(lam);
  std::vector<ExprNode> nodes = base.nodes();
  ExprNode pnode;
  pnode.op = OpCode::kParam;
  pnode.param = n;
  pnode.name = lam;
  pnode.parameter_free = false;
  const int lam_index = static_cast<int>(nodes.size());
  nodes.push_back(pnode);
  std::vector<int> roots;
  for (int i = 0; i < m; ++i) {
    ExprNode c;
    c.value = v[i];
    const int ci = static_cast<int>(nodes.size());
    nodes.push_back(c);
    ExprNode mul;
    mul.op = OpCode::kMul;
    mul.lhs = lam_index;
    mul.rhs = ci;
    mul.parameter_free = false;
    const int mi = static_cast<int>(nodes.size());
    nodes.push_back(mul);
    ExprNode add;
    add.op = OpCode::kAdd;
    add.lhs = base.roots()[static_cast<std::size_t>(i)];
    add.rhs = mi;
    add.parameter_free = false;
    roots.push_back(static_cast<int>(nodes.size()));
    nodes.push_back(add);
  }
  DomainBox box = curve.domain();
  box.push_back({-epsilon, epsilon, false});
  scene.tube = std::make_shared<const SubmanifoldPatch>(curve.name() + "_tube",
                                                        ChartExpr::from_parts(params, std::move(nodes), roots),
                                                        std::move(box), curve.ambient_ptr());
  std::string sub_text = "(";
  for (int i = 0; i < n; ++i) sub_text += base.params()[static_cast<std::size_t>(i)] + ", ";
  sub_text += "0)";
  scene.curve = std::make_shared<const SubmanifoldPatch>(curve.name(), parse_chart(sub_text, base.params()),
                                                         curve.domain(), scene.tube);
  scene.field = FieldAlongM::constant(v);
  return scene;
}

}  // namespace penumbra
