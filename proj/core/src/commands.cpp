#include "penumbra/commands.hpp"

#include "penumbra/curvature.hpp"
#include "penumbra/error.hpp"
#include "penumbra/helix.hpp"
#include "penumbra/transport.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#ifndef PENUMBRA_VERSION
#define PENUMBRA_VERSION "0.0.0"
#endif

namespace penumbra {

namespace fs = std::filesystem;

namespace {

Vec domain_center(const DomainBox& box) {
  Vec c(static_cast<Eigen::Index>(box.size()));
  for (std::size_t i = 0; i < box.size(); ++i) {
    // periodic axes start at lo so that wrap loops pass through a grid vertex
    c[static_cast<Eigen::Index>(i)] = box[i].periodic ? box[i].lo : 0.5 * (box[i].lo + box[i].hi);
  }
  return c;
}

void apply_tolerances(Scene& scene, const std::vector<std::string>& items) {
  for (const std::string& item : items) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) throw Error("--tol expects name=value, got '" + item + "'");
    const std::string name = item.substr(0, eq);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error("--tol value for '" + name + "' is not a number");
    }
    scene.tol.set(name, value);
  }
}

nlohmann::json scene_json(const Scene& scene) { return {{"name", scene.name}, {"digest", scene.digest}}; }

nlohmann::json shadow_summary(const ShadowSet& set, double jacobian) {
  nlohmann::json j;
  j["points"] = set.points.size();
  j["degenerate"] = set.degenerate;
  if (set.degenerate) j["set_equals_patch"] = true;
  j["method"] = set.method;
  j["expected_dim"] = set.expected_dim();
  j["components"] = set.polylines.size();
  nlohmann::json closed = nlohmann::json::array();
  for (bool c : set.polyline_closed) closed.push_back(c);
  j["closed"] = closed;
  j["certified"] = set.certified_count();
  j["zero_fraction"] = set.zero_fraction;
  j["newton_seeds"] = set.newton_seeds;
  j["newton_failures"] = set.newton_failures;
  j["jacobian_consistency"] = jacobian;
  return j;
}

void require_valid(const Scene& scene) {
  const ValidationReport v = validate_scene(scene);
  if (v.passed) return;
  for (const auto& p : v.patches) {
    if (!p.failures.empty()) {
      const ValidationFailure& f = p.failures.front();
      std::ostringstream msg;
      msg << scene.name << ": validation failed (" << f.check << ") on patch '" << f.patch << "' at u = (";
      for (Eigen::Index i = 0; i < f.u.size(); ++i) msg << (i ? ", " : "") << format_double(f.u[i]);
      msg << "): " << f.message;
      throw Error(msg.str());
    }
  }
  const ValidationFailure& f = v.nesting_failures.front();
  throw Error(scene.name + ": validation failed (nesting) on patch '" + f.patch + "': " + f.message);
}

std::string artifact_format(const std::string& command, const CommandOptions& opts) {
  if (!opts.format.empty()) {
    if (opts.format != "json" && opts.format != "csv" && opts.format != "obj") {
      throw Error("unsupported format '" + opts.format + "' (use csv, obj or json)");
    }
    return opts.format;
  }
  if (command == "shadow") return "csv";
  if (command == "tube") return "scene";
  return "json";
}

std::vector<std::string> collect_scene_files(const std::vector<std::string>& args) {
  std::vector<std::string> files;
  for (const std::string& a : args) {
    if (fs::is_directory(a)) {
      std::vector<std::string> found;
      for (const auto& entry : fs::directory_iterator(a)) {
        if (entry.is_regular_file() && entry.path().extension() == ".scene") found.push_back(entry.path().string());
      }
      std::sort(found.begin(), found.end(), [](const std::string& x, const std::string& y) {
        return fs::path(x).filename().string() < fs::path(y).filename().string();
      });
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(a);
    }
  }
  return files;
}

void need_args(const std::string& command, const std::vector<std::string>& args, std::size_t n,
               const std::string& usage) {
  if (args.size() != n) throw Error(command + ": usage: penumbra " + command + " " + usage);
}

// Combines per-item exit codes: any error wins, then hypotheses-not-met.
int combine(int a, int b) {
  if (a == 1 || b == 1) return 1;
  if (a == 2 || b == 2) return 2;
  return 0;
}

CommandOutcome cmd_validate(const Scene& scene) {
  CommandOutcome out;
  const ValidationReport v = validate_scene(scene);
  out.report["results"]["validation"] = v.to_json();
  out.exit_code = v.passed ? 0 : 1;
  return out;
}

CommandOutcome cmd_shadow(const Scene& scene, const std::string& format, const CommandOptions& opts) {
  CommandOutcome out;
  const PatchPtr patch = scene.main_patch();
  const FieldAlongM& field = scene.main_field();
  const Grid grid = scene.grid_for(*patch);
  const SmoothShadowResult r = smooth_shadow_check(*patch, field, grid, scene.tol);
  out.report["results"]["patch"] = patch->name();
  out.report["results"]["shadow"] = shadow_summary(r.set, r.jacobian_consistency);
  out.report["results"]["theorem"] = r.report.to_json();
  if (r.set.degenerate) {
    out.exit_code = 2;
  } else if (r.set.certified_count() != r.set.points.size()) {
    out.exit_code = 2;
  } else {
    out.exit_code = exit_code(r.report.verdict);
  }
  if (format == "csv" || format == "obj") {
    if (r.set.points.empty() && !r.set.degenerate && !opts.allow_empty) {
      throw Error("shadow set is empty; pass --allow-empty to export it anyway");
    }
    ShadowSet exported = r.set;
    if (exported.degenerate) {
      // the set is the whole patch: export the sampled vertices
      exported.polylines.clear();
      exported.polyline_closed.clear();
      exported.points.clear();
      for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
        ShadowPoint p;
        p.u = grid.vertex(k);
        const ShadowResidual sr = shadow_residual(*patch, field, p.u, scene.tol);
        p.x = sr.frame.point;
        p.abs_f = max_abs(sr.f);
        exported.points.push_back(std::move(p));
      }
    }
    out.artifact = format == "csv" ? shadow_csv(exported) : shadow_obj(exported);
  }
  return out;
}

CommandOutcome cmd_helix(const Scene& scene) {
  CommandOutcome out;
  const PatchPtr patch = scene.main_patch();
  const FieldAlongM& field = scene.main_field();
  const Grid grid = scene.grid_for(*patch);
  const HelixReport h = helix_constancy_report(*patch, field, grid, scene.tol);
  nlohmann::json& res = out.report["results"];
  res["patch"] = patch->name();
  res["helix"] = h.to_json();
  if (patch->codim() == 1 && patch->ambient().is_flat()) {
    double gk = 0.0;
    for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
      gk = std::max(gk, std::abs(gauss_kronecker(*patch, grid.vertex(k), scene.tol)));
    }
    res["max_abs_gauss_kronecker"] = gk;
  }
  if (patch->codim() == 1) {
    const TheoremReport c = classify_hypersurface_helix(*patch, field, grid, scene.tol);
    res["classification"] = c.to_json();
    out.exit_code = exit_code(c.verdict);
  } else {
    out.exit_code = h.helix ? 0 : 2;
  }
  return out;
}

bool returns_to_start(const DomainBox& box, const std::vector<Vec>& pts) {
  return param_distance(box, pts.front(), pts.back()) < 1e-12;
}

CommandOutcome cmd_transport(const Scene& scene, const CommandOptions& opts) {
  CommandOutcome out;
  const PatchPtr patch = scene.main_patch();
  const Tolerances& tol = scene.tol;

  std::vector<ProbeLoop> loops;
  for (const LoopDecl& l : scene.loops) {
    if (l.patch != patch->name()) continue;
    loops.push_back({l.name, ParamCurve::polyline(l.points, returns_to_start(patch->domain(), l.points))});
  }
  Vec u0 = domain_center(patch->domain());
  if (loops.empty()) {
    ProbeOptions po;
    po.levels = {2};
    po.random_loops = 4;
    po.seed = opts.seed;
    loops = probe_loops(*patch, u0, po);
  }

  nlohmann::json arr = nlohmann::json::array();
  double norm_drift = 0.0;
  double inner_drift = 0.0;
  double inverse_error = 0.0;
  for (const ProbeLoop& loop : loops) {
    loop.curve.check_domain(patch->domain());
    const Vec x0 = patch->position(loop.curve.start());
    const AmbientTangent amb = ambient_tangent_projector(patch->ambient(), x0, tol);
    const TransportResult fwd = transport_frame(*patch, loop.curve, amb.basis, tol);
    const TransportResult back = transport_frame(*patch, loop.curve.reversed(), fwd.final, tol);
    const double inv = (back.final - fwd.initial).cwiseAbs().maxCoeff();
    norm_drift = std::max({norm_drift, fwd.norm_drift, back.norm_drift});
    inner_drift = std::max({inner_drift, fwd.inner_product_drift, back.inner_product_drift});
    inverse_error = std::max(inverse_error, inv);

    nlohmann::json lj;
    lj["label"] = loop.label;
    lj["closed"] = loop.curve.closed();
    lj["steps"] = fwd.steps;
    lj["norm_drift"] = fwd.norm_drift;
    lj["inner_product_drift"] = fwd.inner_product_drift;
    lj["tangency_drift"] = fwd.tangency_drift;
    lj["inverse_error"] = inv;
    if (loop.curve.closed()) {
      const Mat map = amb.basis.transpose() * fwd.final;
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index i = 0; i < map.rows(); ++i) rows.push_back(vec_to_json(map.row(i).transpose()));
      lj["holonomy"] = rows;
      lj["holonomy_defect"] = (map - Mat::Identity(map.rows(), map.cols())).norm();
      if (map.rows() == 2) lj["rotation_angle"] = rotation_angle(map);
    }
    arr.push_back(lj);
  }
  nlohmann::json& res = out.report["results"];
  res["patch"] = patch->name();
  res["loops"] = arr;
  res["max_norm_drift"] = norm_drift;
  res["max_inner_product_drift"] = inner_drift;
  res["max_inverse_error"] = inverse_error;
  const bool ok = norm_drift < tol.transport_tol && inner_drift < 10.0 * tol.transport_tol && inverse_error < tol.holonomy_tol;
  res["invariants_hold"] = ok;
  out.exit_code = ok ? 0 : 1;
  return out;
}

CommandOutcome cmd_tube(const Scene& scene, const std::string& format) {
  CommandOutcome out;
  if (!scene.tube) throw Error(scene.name + ": scene has no [tube] block");
  const PatchPtr curve = scene.find_patch(scene.tube->curve);
  const TubeScene t =
      tube_scene_generator(*curve, scene.tube->direction, scene.tube->epsilon, scene.grid_for(*curve), scene.tol);
  const std::string text = tube_scene_text(scene, t);
  nlohmann::json& res = out.report["results"];
  res["curve"] = curve->name();
  res["epsilon"] = t.epsilon;
  res["direction"] = vec_to_json(t.direction);
  res["min_transversality"] = t.min_transversality;
  res["scene_digest"] = scene_digest(text);
  if (format == "scene") out.artifact = text;
  return out;
}

CommandOutcome cmd_verify_all(const std::vector<std::string>& args, const CommandOptions& opts) {
  CommandOutcome out;
  if (args.empty()) throw Error("verify-all: usage: penumbra verify-all <dir-or-scene>...");
  const std::vector<std::string> files = collect_scene_files(args);
  if (files.empty()) throw Error("verify-all: no .scene files found");
  nlohmann::json scenes = nlohmann::json::array();
  std::map<std::string, int> tally{{"confirmed", 0}, {"hypotheses-not-met", 0}, {"counterexample-flag", 0}};
  int mismatches = 0;
  int errors = 0;
  int code = 0;
  for (const std::string& file : files) {
    nlohmann::json sj;
    sj["file"] = fs::path(file).filename().string();
    try {
      const Scene scene = load_with_options(file, opts);
      sj["digest"] = scene.digest;
      require_valid(scene);
      nlohmann::json theorems = nlohmann::json::array();
      for (const std::string& id : scene.verify) {
        const TheoremReport r = run_theorem(scene, id, opts.seed);
        nlohmann::json tj = r.to_json();
        tally[to_string(r.verdict)] += 1;
        auto it = scene.expect.find(id);
        if (it != scene.expect.end()) {
          const bool match = it->second == r.verdict;
          tj["expected"] = to_string(it->second);
          tj["matches_expectation"] = match;
          if (!match) {
            ++mismatches;
            code = combine(code, 1);
          }
        } else {
          code = combine(code, exit_code(r.verdict));
        }
        theorems.push_back(tj);
      }
      sj["theorems"] = theorems;
    } catch (const Error& e) {
      sj["error"] = e.what();
      ++errors;
      code = 1;
    }
    scenes.push_back(sj);
  }
  nlohmann::json& res = out.report["results"];
  res["scenes"] = scenes;
  res["summary"] = {{"scenes", files.size()},
                    {"confirmed", tally["confirmed"]},
                    {"hypotheses_not_met", tally["hypotheses-not-met"]},
                    {"counterexample_flags", tally["counterexample-flag"]},
                    {"expectation_mismatches", mismatches},
                    {"errors", errors}};
  out.exit_code = code;
  return out;
}

}  // namespace

std::string tool_version() { return PENUMBRA_VERSION; }

const std::vector<std::string>& theorem_ids() {
  static const std::vector<std::string> ids = {"bang",           "hypersurface-helix", "minimality",
                                               "orthogonal-tgs", "parallel-field",     "parallel-normal-frame",
                                               "product-shadow", "smooth-shadow",      "tgs-helix"};
  return ids;
}

TheoremReport run_theorem(const Scene& scene, const std::string& id, std::uint64_t seed) {
  const Tolerances& tol = scene.tol;
  if (id == "smooth-shadow") {
    const PatchPtr p = scene.main_patch();
    return smooth_shadow_check(*p, scene.main_field(), scene.grid_for(*p), tol).report;
  }
  if (id == "product-shadow") {
    if (scene.product.size() != 2 || scene.product_fields.size() != 2) {
      throw SceneError(scene.name + ": product-shadow needs 'product' and 'product_fields' in [scene]");
    }
    const PatchPtr a = scene.find_patch(scene.product[0]);
    const PatchPtr b = scene.find_patch(scene.product[1]);
    return product_shadow_check(a, b, scene.find_field(scene.product_fields[0]),
                                scene.find_field(scene.product_fields[1]), scene.cells(a->dim()),
                                scene.cells(b->dim()), tol)
        .report;
  }
  if (id == "parallel-field") {
    const PatchPtr p = scene.main_patch();
    Vec u0 = domain_center(p->domain());
    Vec w0;
    const auto decl = scene.field_decls.find(scene.field);
    if (decl != scene.field_decls.end() && decl->second.kind == "transport") {
      u0 = decl->second.base;
      w0 = decl->second.seed;
    } else {
      w0 = scene.main_field().value(*p, u0);
    }
    ProbeOptions po;
    po.seed = seed;
    return parallel_field_report(p, u0, w0, po, tol).report;
  }
  if (id == "parallel-normal-frame") {
    const PatchPtr p = scene.main_patch();
    std::vector<FieldAlongM> fields;
    for (const auto& n : scene.normal_fields) fields.push_back(scene.find_field(n));
    return parallel_normal_frame_tgs_check(*p, fields, scene.grid_for(*p), tol);
  }
  if (id == "hypersurface-helix") {
    const PatchPtr p = scene.main_patch();
    return classify_hypersurface_helix(*p, scene.main_field(), scene.grid_for(*p), tol);
  }
  if (id == "orthogonal-tgs" || id == "tgs-helix" || id == "minimality" || id == "bang") {
    const PatchPtr s = scene.sub_patch();
    const Grid grid = scene.grid_for(*s);
    if (id == "bang") return bang_report(*s, grid, tol);
    const FieldAlongM& y = scene.main_field();
    if (id == "orthogonal-tgs") return orthogonal_tgs_check(*s, y, grid, tol);
    if (id == "tgs-helix") return tgs_helix_check(*s, y, grid, tol);
    return minimality_criterion(*s, y, grid, tol);
  }
  std::string known;
  for (const auto& t : theorem_ids()) known += (known.empty() ? "" : ", ") + t;
  throw Error("unknown theorem '" + id + "' (known: " + known + ")");
}

Scene load_with_options(const std::string& path, const CommandOptions& opts) {
  Scene scene = load_scene_file(path);
  if (opts.grid) {
    if (*opts.grid < 1) throw Error("--grid must be positive");
    scene.set_resolution(*opts.grid);
  }
  apply_tolerances(scene, opts.tol);
  return scene;
}

CommandOutcome run_command(const std::string& command, const std::vector<std::string>& args,
                           const CommandOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string format = artifact_format(command, opts);
  if (format == "csv" || format == "obj") {
    if (command != "shadow") throw Error(command + ": --format " + format + " applies to shadow only");
  }
  CommandOutcome out;
  std::optional<Scene> scene;
  if (command == "verify-all") {
    out = cmd_verify_all(args, opts);
  } else if (command == "verify") {
    need_args(command, args, 2, "<theorem-id> <scene>");
    scene = load_with_options(args[1], opts);
    require_valid(*scene);
    const TheoremReport r = run_theorem(*scene, args[0], opts.seed);
    out.report["results"]["theorem"] = r.to_json();
    out.exit_code = exit_code(r.verdict);
  } else {
    need_args(command, args, 1, "<scene>");
    scene = load_with_options(args[0], opts);
    if (command == "validate") {
      out = cmd_validate(*scene);
    } else {
      require_valid(*scene);
      if (command == "shadow") {
        out = cmd_shadow(*scene, format, opts);
      } else if (command == "helix") {
        out = cmd_helix(*scene);
      } else if (command == "transport") {
        out = cmd_transport(*scene, opts);
      } else if (command == "parallel-field") {
        const TheoremReport r = run_theorem(*scene, "parallel-field", opts.seed);
        out.report["results"]["theorem"] = r.to_json();
        out.report["results"]["message"] = r.notes.front();
        out.exit_code = exit_code(r.verdict);
      } else if (command == "tube") {
        out = cmd_tube(*scene, format);
      } else {
        throw Error("unknown command '" + command + "'");
      }
    }
  }
  out.report["command"] = command;
  out.report["tool"] = {{"name", "penumbra"}, {"version", tool_version()}};
  if (scene) out.report["scene"] = scene_json(*scene);
  out.report["flags"] = {{"grid", opts.grid ? nlohmann::json(*opts.grid) : nlohmann::json(nullptr)},
                         {"seed", opts.seed},
                         {"tol", opts.tol}};
  out.report["exit_code"] = out.exit_code;
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  out.report["timings"] = {{"total_ms", ms}};
  if (format == "json") out.artifact = canonical_json(out.report);
  return out;
}

int execute(const std::string& command, const std::vector<std::string>& args, const CommandOptions& opts,
            std::ostream& out, std::ostream& err) {
  try {
    const CommandOutcome r = run_command(command, args, opts);
    if (!opts.out.empty()) {
      write_file_atomic(opts.out, r.artifact);
    } else {
      out << r.artifact;
    }
    if (!opts.report.empty()) write_file_atomic(opts.report, canonical_json(r.report));
    return r.exit_code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

std::string canonical_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json without_timings(const nlohmann::json& j) {
  if (j.is_object()) {
    nlohmann::json r = nlohmann::json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "timings") r[it.key()] = without_timings(it.value());
    }
    return r;
  }
  if (j.is_array()) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& v : j) r.push_back(without_timings(v));
    return r;
  }
  return j;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move output into place at " + path + ": " + ec.message());
  }
}

std::string shadow_csv(const ShadowSet& set) {
  std::ostringstream out;
  for (int i = 1; i <= set.param_dim; ++i) out << "u_" << i << ",";
  for (int i = 1; i <= set.ambient_dim; ++i) out << "x_" << i << ",";
  out << "abs_F,sigma_min,smooth\n";
  for (const ShadowPoint& p : set.points) {
    for (Eigen::Index i = 0; i < p.u.size(); ++i) out << format_double(p.u[i]) << ",";
    for (Eigen::Index i = 0; i < p.x.size(); ++i) out << format_double(p.x[i]) << ",";
    out << format_double(p.abs_f) << "," << format_double(p.sigma_min) << "," << (p.smooth ? "smooth" : "singular")
        << "\n";
  }
  return out.str();
}

std::string shadow_obj(const ShadowSet& set) {
  std::ostringstream out;
  out << "# shadow set: " << set.points.size() << " points, " << set.polylines.size() << " polylines\n";
  for (const ShadowPoint& p : set.points) {
    out << "v";
    for (Eigen::Index i = 0; i < p.x.size(); ++i) out << " " << format_double(p.x[i]);
    for (Eigen::Index i = p.x.size(); i < 3; ++i) out << " 0";
    out << "\n";
  }
  std::vector<bool> used(set.points.size(), false);
  for (std::size_t k = 0; k < set.polylines.size(); ++k) {
    const auto& line = set.polylines[k];
    if (line.empty()) continue;
    out << "l";
    for (std::size_t i : line) {
      out << " " << i + 1;
      used[i] = true;
    }
    if (set.polyline_closed[k]) out << " " << line.front() + 1;
    out << "\n";
  }
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    if (!used[i]) out << "p " << i + 1 << "\n";
  }
  return out.str();
}

}  // namespace penumbra
