// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "support.hpp"

#include "penumbra/commands.hpp"
#include "penumbra/curvature.hpp"
#include "penumbra/helix.hpp"
#include "penumbra/scene.hpp"
#include "penumbra/shadow.hpp"
#include "penumbra/transport.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace penumbra;
using namespace penumbra::test;

namespace {

namespace fs = std::filesystem;

const std::string kScenes = PENUMBRA_SCENES_DIR;

// Periodic axes start at lo, matching the CLI's base point.
Vec domain_center_of(const DomainBox& box) {
  Vec c(static_cast<Eigen::Index>(box.size()));
  for (std::size_t i = 0; i < box.size(); ++i) {
    c[static_cast<Eigen::Index>(i)] = box[i].periodic ? box[i].lo : 0.5 * (box[i].lo + box[i].hi);
  }
  return c;
}

std::string scene_path(const std::string& name) { return kScenes + "/" + name + ".scene"; }

std::vector<std::string> corpus_names() {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(kScenes)) {
    if (e.is_regular_file() && e.path().extension() == ".scene") names.push_back(e.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Criterion = std::function<void(Outcome&)>;

// Unit normal of a surface in R^3 from the cross product of chart tangents.
double cross_normal_f(const SubmanifoldPatch& p, const Vec& y, const Vec& u) {
  const Mat j = p.chart().eval_first(u).jacobian;
  const Eigen::Vector3d a = j.col(0), b = j.col(1);
  return a.cross(b).normalized().dot(Eigen::Vector3d(y));
}

struct Extraction {
  PatchPtr patch;
  Vec y;
  ShadowSet set;
};

Extraction extract_corpus(const std::string& name, int cells) {
  const Scene s = load_scene_file(scene_path(name));
  Extraction e{s.main_patch(), {}, {}};
  const FieldAlongM& field = s.main_field();
  e.y = field.value(*e.patch, domain_center_of(e.patch->domain()));
  e.set = extract_shadow_set(*e.patch, field, Grid(e.patch->domain(), cells));
  smoothness_certificate(*e.patch, field, e.set);
  return e;
}

double angle_gap(double a, double b) { return std::abs(std::remainder(a - b, 2 * kPi)); }

bool root_is_flat(const SubmanifoldPatch& p) {
  const SubmanifoldPatch* q = &p;
  while (q->parent() != nullptr) q = q->parent();
  return q->ambient().is_flat();
}

// Obstruction through the scene's seed, chosen the way the CLI chooses it.
double scene_obstruction(const Scene& s) {
  const PatchPtr p = s.main_patch();
  Vec u0 = domain_center_of(p->domain());
  Vec w0;
  const auto decl = s.field_decls.find(s.field);
  if (decl != s.field_decls.end() && decl->second.kind == "transport") {
    u0 = decl->second.base;
    w0 = decl->second.seed;
  } else if (s.has_field()) {
    w0 = s.main_field().value(*p, u0);
  } else {
    w0 = ambient_tangent_projector(p->ambient(), p->position(u0)).basis.col(0);
  }
  return parallel_field_report(p, u0, w0, {}, s.tol).obstruction.obstruction;
}

const nlohmann::json* find_theorem(const nlohmann::json& report, const std::string& file, const std::string& id) {
  for (const auto& sj : report["results"]["scenes"]) {
    if (sj.value("file", "") != file + ".scene" || !sj.contains("theorems")) continue;
    for (const auto& t : sj["theorems"]) {
      if (t.value("theorem", "") == id) return &t;
    }
  }
  return nullptr;
}

nlohmann::json g_verify_all;

void derivative_oracle(Outcome& o) {
  std::mt19937_64 rng(20261015);
  const auto& shapes = builtin_shapes();
  double worst_j = 0.0, worst_h = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const ShapeSpec& s = shapes[static_cast<std::size_t>(k) % shapes.size()];
    const ChartExpr e = s.parse();
    const VecFn f = [&](const Vec& x) { return e.eval(x); };
    const Vec u = random_point(rng, s.domain, 0.01);
    const Jet2 j = e.eval_jet(u);
    worst_j = std::max(worst_j, (j.jacobian - fd_jacobian(f, u)).cwiseAbs().maxCoeff());
    for (int a = 0; a < j.outputs(); ++a) {
      worst_h = std::max(worst_h, (j.hessian[static_cast<std::size_t>(a)] - fd_hessian(f, u, a)).cwiseAbs().maxCoeff());
    }
  }
  o.detail << "1000 points over " << shapes.size() << " charts, jacobian " << worst_j << ", hessian " << worst_h;
  o.require(worst_j < 1e-6, "jacobian < 1e-6");
  o.require(worst_h < 1e-4, "hessian < 1e-4");
}

void sphere_shadow(Outcome& o) {
  const Extraction e = extract_corpus("sphere_e3", 64);
  double max_z = 0.0;
  for (const ShadowPoint& p : e.set.points) max_z = std::max(max_z, std::abs(p.x[2]));
  const bool closed = e.set.polyline_closed.size() == 1 && e.set.polyline_closed[0];
  o.detail << e.set.polylines.size() << " component(s), " << e.set.points.size() << " points, max |z| " << max_z
           << ", certified " << e.set.certified_count();
  o.require(e.set.polylines.size() == 1 && closed, "one closed component");
  o.require(!e.set.points.empty() && max_z < 1e-9, "max |z| < 1e-9");
  o.require(e.set.certified_count() == e.set.points.size(), "all certified");
  o.require(e.set.expected_dim() == 1, "n - k = 1");
}

void torus_shadow(Outcome& o) {
  const Extraction e = extract_corpus("torus_e3", 64);
  bool closed = e.set.polylines.size() == 2;
  double worst = 0.0;
  std::vector<double> targets;
  for (std::size_t c = 0; c < e.set.polylines.size(); ++c) {
    closed = closed && e.set.polyline_closed[c];
    const double theta = e.set.points[e.set.polylines[c].front()].u[0];
    const double target = angle_gap(theta, 0.0) < angle_gap(theta, kPi) ? 0.0 : kPi;
    targets.push_back(target);
    for (std::size_t i : e.set.polylines[c]) worst = std::max(worst, angle_gap(e.set.points[i].u[0], target));
  }
  std::sort(targets.begin(), targets.end());
  o.detail << e.set.polylines.size() << " component(s), max theta offset " << worst << ", certified "
           << e.set.certified_count() << "/" << e.set.points.size();
  o.require(closed, "two closed components");
  o.require(targets == std::vector<double>{0.0, kPi}, "one at 0 and one at pi");
  o.require(worst < 1e-8, "theta within 1e-8");
  o.require(e.set.certified_count() == e.set.points.size(), "all certified");
}

void finite_shadow(Outcome& o) {
  const Extraction e = extract_corpus("circle_e2", 64);
  std::vector<double> xs;
  double off = 0.0;
  for (const ShadowPoint& p : e.set.points) {
    xs.push_back(p.x[0]);
    off = std::max(off, std::abs(p.x[1]));
  }
  std::sort(xs.begin(), xs.end());
  o.detail << e.set.points.size() << " point(s)";
  o.require(xs.size() == 2, "exactly 2 points");
  if (xs.size() == 2) {
    const double err = std::max({std::abs(xs[0] + 1), std::abs(xs[1] - 1), off});
    o.detail << ", max offset from (+-1, 0) " << err;
    o.require(err < 1e-9, "at (+-1, 0) within 1e-9");
  }
}

void jacobian_theorem(Outcome& o) {
  double worst = 0.0;
  std::size_t checked = 0;
  for (const char* name : {"sphere_e3", "torus_e3"}) {
    const Extraction e = extract_corpus(name, 64);
    const FieldAlongM y = FieldAlongM::constant(e.y);
    for (const ShadowPoint& p : e.set.points) {
      if (!p.smooth) continue;
      const ShadowResidual r = shadow_residual(*e.patch, y, p.u);
      const VecFn f = [&](const Vec& u) { return vec({cross_normal_f(*e.patch, e.y, u)}); };
      const Mat fd = fd_jacobian(f, p.u);
      // the cross-product normal and the residual's normal agree up to sign
      const Mat jn = e.patch->chart().eval_first(p.u).jacobian;
      const Eigen::Vector3d n = Eigen::Vector3d(jn.col(0)).cross(Eigen::Vector3d(jn.col(1)));
      const double sign = n.dot(Eigen::Vector3d(r.normals.col(0))) < 0 ? -1.0 : 1.0;
      worst = std::max(worst, (r.theorem_jacobian - sign * fd).cwiseAbs().maxCoeff());
      ++checked;
    }
  }
  o.detail << checked << " certified points, max |J - FD| " << worst;
  o.require(checked > 0, "certified points exist");
  o.require(worst < 1e-5, "|J - FD| < 1e-5");
}

void product_theorem(Outcome& o) {
  for (const char* name : {"product_s1s1_s2s2", "product_circles_r4"}) {
    const Scene s = load_scene_file(scene_path(name));
    const PatchPtr a = s.find_patch(s.product[0]);
    const PatchPtr b = s.find_patch(s.product[1]);
    const ProductShadowResult r = product_shadow_check(a, b, s.find_field(s.product_fields[0]),
                                                       s.find_field(s.product_fields[1]), s.cells(a->dim()),
                                                       s.cells(b->dim()), s.tol);
    o.detail << name << " hausdorff " << r.hausdorff << " (cell " << r.cell << ", " << r.direct.points.size()
             << " points); ";
    o.require(!r.direct.points.empty() && r.hausdorff < r.cell, std::string(name) + " within one cell");
  }
}

void holonomy_oracle(Outcome& o) {
  const std::map<std::string, double> latitudes{{"latitude_p6", kPi / 6}, {"latitude_p3", kPi / 3}, {"equator_s2", kPi / 2}};
  double worst = 0.0;
  for (const auto& [name, theta] : latitudes) {
    const CommandOutcome c = run_command("transport", {scene_path(name)}, {});
    const double expected = 2 * kPi * (1 - std::cos(theta));
    bool found = false;
    for (const auto& l : c.report["results"]["loops"]) {
      if (!l.contains("rotation_angle")) continue;
      const double a = l["rotation_angle"].get<double>();
      worst = std::max(worst, std::min(angle_gap(a, expected), angle_gap(-a, expected)));
      found = true;
    }
    o.require(found, name + " has a closed loop");
  }
  o.detail << "rotation error " << worst;
  o.require(worst < 1e-6, "rotation within 1e-6");

  for (const char* name : {"latitude_p6", "latitude_p3"}) {
    const double ob = scene_obstruction(load_scene_file(scene_path(name)));
    o.detail << ", " << name << " obstruction " << ob;
    o.require(ob > 1e-6, std::string(name) + " rejected");
  }
  const double eq = scene_obstruction(load_scene_file(scene_path("equator_s2")));
  o.detail << ", equator_s2 obstruction " << eq;
  o.require(eq < 1e-6, "equator certified");

  double flat_worst = 0.0;
  int flat = 0;
  for (const std::string& name : corpus_names()) {
    const Scene s = load_scene_file(scene_path(name));
    if (s.patch.empty() || !root_is_flat(*s.main_patch())) continue;
    flat_worst = std::max(flat_worst, scene_obstruction(s));
    ++flat;
  }
  o.detail << ", " << flat << " flat scenes max obstruction " << flat_worst;
  o.require(flat > 0 && flat_worst < 1e-10, "flat scenes certified");
}

void transport_invariants(Outcome& o) {
  double norm = 0.0, inner = 0.0, inverse = 0.0;
  int runs = 0;
  for (const std::string& name : corpus_names()) {
    const Scene s = load_scene_file(scene_path(name));
    if (s.patch.empty()) continue;
    const CommandOutcome c = run_command("transport", {scene_path(name)}, {});
    const nlohmann::json& r = c.report["results"];
    norm = std::max(norm, r["max_norm_drift"].get<double>());
    inner = std::max(inner, r["max_inner_product_drift"].get<double>());
    inverse = std::max(inverse, r["max_inverse_error"].get<double>());
    ++runs;
  }
  o.detail << runs << " scenes, norm drift " << norm << ", inner product drift " << inner << ", inverse error "
           << inverse;
  o.require(runs > 0, "transports ran");
  o.require(norm < 1e-8, "norm drift < 1e-8");
  o.require(inner < 1e-7, "inner product drift < 1e-7");
  o.require(inverse < 1e-6, "inverse error < 1e-6");
}

void theorem_suite(Outcome& o) {
  const CommandOutcome c = run_command("verify-all", {kScenes}, {});
  g_verify_all = c.report;
  struct Want {
    const char* file;
    const char* theorem;
    Verdict verdict;
  };
  const std::vector<Want> wants = {
      {"equator_sphere", "orthogonal-tgs", Verdict::kConfirmed},
      {"torus_outer_equator", "orthogonal-tgs", Verdict::kConfirmed},
      {"plane_degenerate", "orthogonal-tgs", Verdict::kHypothesesNotMet},
      {"equator_sphere", "tgs-helix", Verdict::kConfirmed},
      {"cylinder_ruling", "tgs-helix", Verdict::kConfirmed},
      {"equator_sphere", "minimality", Verdict::kConfirmed},
      {"torus_outer_equator", "minimality", Verdict::kConfirmed},
      {"tube_circle", "minimality", Verdict::kConfirmed},
      {"plane_degenerate", "parallel-normal-frame", Verdict::kConfirmed},
      {"equator_s2", "parallel-normal-frame", Verdict::kConfirmed},
  };
  int matched = 0;
  for (const Want& w : wants) {
    const nlohmann::json* t = find_theorem(c.report, w.file, w.theorem);
    const bool ok = t != nullptr && (*t)["verdict"] == to_string(w.verdict);
    matched += ok ? 1 : 0;
    o.require(ok, std::string(w.theorem) + " on " + w.file + " is " + to_string(w.verdict));
  }
  o.detail << matched << "/" << wants.size() << " verdicts, exit " << c.exit_code;
  o.require(c.exit_code == 0, "exit code 0");
}

void helix_corpus(Outcome& o) {
  for (const char* name : {"cylinder_e3", "cone_axis", "sphere_e3"}) {
    const Scene s = load_scene_file(scene_path(name));
    const PatchPtr p = s.main_patch();
    const HelixReport h = helix_constancy_report(*p, s.main_field(), s.grid_for(*p), s.tol);
    const TheoremReport t = run_theorem(s, "hypersurface-helix");
    const bool sphere = std::string(name) == "sphere_e3";
    o.detail << name << " helix " << (h.helix ? "yes" : "no") << " deviation " << h.max_deviation << "; ";
    if (sphere) {
      o.require(!h.helix && h.max_deviation > 0.5, "sphere not helix, deviation > 0.5");
      o.require(t.verdict != Verdict::kConfirmed, "sphere classification not confirmed");
    } else {
      o.require(h.helix && h.max_deviation < 1e-8, std::string(name) + " helix, deviation < 1e-8");
      o.require(t.verdict == Verdict::kConfirmed, std::string(name) + " classification confirmed");
    }
  }
  const Scene s = load_scene_file(scene_path("cylinder_e3"));
  const PatchPtr p = s.main_patch();
  double gk = 0.0;
  for (const Vec& u : s.grid_for(*p).vertices()) gk = std::max(gk, std::abs(gauss_kronecker(*p, u)));
  o.detail << "cylinder max |GK| " << gk;
  o.require(gk < 1e-9, "cylinder GK within 1e-9");
}

void determinism(Outcome& o) {
  if (g_verify_all.is_null()) g_verify_all = run_command("verify-all", {kScenes}, {}).report;
  const nlohmann::json again = run_command("verify-all", {kScenes}, {}).report;
  const std::string a = canonical_json(without_timings(g_verify_all));
  const std::string b = canonical_json(without_timings(again));
  o.detail << "verify-all reports of " << a.size() << " and " << b.size() << " bytes";
  o.require(a == b, "byte-identical without timings");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Criterion>> criteria = {
      {"derivative oracle", derivative_oracle},
      {"sphere shadow", sphere_shadow},
      {"torus shadow", torus_shadow},
      {"finite shadow", finite_shadow},
      {"jacobian theorem", jacobian_theorem},
      {"product theorem", product_theorem},
      {"holonomy oracle", holonomy_oracle},
      {"transport invariants", transport_invariants},
      {"theorem suite", theorem_suite},
      {"helix corpus", helix_corpus},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %zu: %s %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
