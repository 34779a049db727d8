#include "penumbra/shadow.hpp"

#include "penumbra/curvature.hpp"
#include "penumbra/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>

namespace penumbra {

namespace {

// Vertex values inside this band count as positive, so a zero set lying
// exactly on grid vertices is not split by roundoff noise.
constexpr double kZeroBand = 1e-12;
constexpr double kBisectionWidth = 1e-10;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

bool positive(double f) { return f >= -kZeroBand; }

Mat choose_normals(const FrameData& frame, const Mat* reference) {
  if (reference != nullptr) return aligned_normal_frame(frame, *reference);
  if (frame.codim() == 1) return Mat(oriented_normal(frame));
  return frame.normal_frame;
}

Vec residual_only(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& u, const Tolerances& tol,
                  const Mat* reference = nullptr) {
  const FrameData frame = frame_at(patch, u, tol);
  return choose_normals(frame, reference).transpose() * field.value(patch, u);
}

void certify(ShadowPoint& p, const Mat& j, const Tolerances& tol) {
  const Vec sv = singular_values(j);
  if (sv.size() == 0) {
    p.sigma_max = p.sigma_min = 0.0;
    p.smooth = false;
    return;
  }
  p.sigma_max = sv[0];
  p.sigma_min = j.rows() <= j.cols() ? sv[j.rows() - 1] : 0.0;
  p.smooth = p.sigma_max > 0.0 && p.sigma_min > tol.rank_tol * p.sigma_max;
}

ShadowPoint make_point(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& u, const Tolerances& tol) {
  const ShadowResidual r = shadow_residual(patch, field, u, tol);
  ShadowPoint p;
  p.u = u;
  p.x = r.frame.point;
  p.abs_f = max_abs(r.f);
  certify(p, r.jacobian, tol);
  return p;
}

// Root of the scalar residual on the segment a -> b, signs classified by positive().
std::optional<Vec> bisect(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& a, const Vec& b,
                          double fa, const Tolerances& tol) {
  const double width = (b - a).norm();
  double lo = 0.0;
  double hi = 1.0;
  const bool pos_lo = positive(fa);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Vec u = a + mid * (b - a);
    const double fm = residual_only(patch, field, u, tol)[0];
    if ((hi - lo) * width <= kBisectionWidth) {
      if (std::abs(fm) < 0.5 * tol.extract_tol) return u;
      if ((hi - lo) * width <= 1e-15) return std::nullopt;
    }
    if (positive(fm) == pos_lo) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::nullopt;
}

struct EdgeKey {
  std::size_t vertex;
  int axis;
  bool operator<(const EdgeKey& o) const { return vertex != o.vertex ? vertex < o.vertex : axis < o.axis; }
};

void link_polylines(ShadowSet& set, std::vector<ShadowPoint> raw, const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<bool> visited(raw.size(), false);
  auto walk = [&](std::size_t start) {
    std::vector<std::size_t> chain{start};
    visited[start] = true;
    std::size_t prev = kNone;
    std::size_t cur = start;
    bool closed = false;
    while (true) {
      std::size_t next = kNone;
      for (std::size_t nb : adj[cur]) {
        if (nb == prev) continue;
        if (nb == start && chain.size() > 2) {
          closed = true;
          continue;
        }
        if (!visited[nb]) {
          next = nb;
          break;
        }
      }
      if (next == kNone) break;
      prev = cur;
      cur = next;
      visited[cur] = true;
      chain.push_back(cur);
    }
    std::vector<std::size_t> ids;
    for (std::size_t c : chain) {
      ids.push_back(set.points.size());
      set.points.push_back(raw[c]);
    }
    set.polylines.push_back(std::move(ids));
    set.polyline_closed.push_back(closed);
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!visited[i] && adj[i].size() <= 1) walk(i);
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!visited[i]) walk(i);
  }
}

void extract_sign_changes(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                          const std::vector<double>& f, const Tolerances& tol, ShadowSet& set) {
  const int n = grid.dims();
  std::map<EdgeKey, std::size_t> edge_ids;
  std::vector<ShadowPoint> raw;
  for (std::size_t v = 0; v < grid.total_vertices(); ++v) {
    const std::vector<int> idx = grid.unflatten(v);
    for (int axis = 0; axis < n; ++axis) {
      std::vector<int> other = idx;
      if (!grid.step(other, axis, +1)) continue;
      const std::size_t w = grid.flatten(other);
      if (positive(f[v]) == positive(f[w])) continue;
      const Vec a = grid.vertex(idx);
      Vec b = a;
      b[axis] += grid.spacing(axis);
      const std::optional<Vec> root = bisect(patch, field, a, b, f[v], tol);
      if (!root) continue;
      ShadowPoint p = make_point(patch, field, wrap_into(grid.box(), *root), tol);
      if (p.abs_f >= tol.extract_tol) continue;
      edge_ids[{v, axis}] = raw.size();
      raw.push_back(std::move(p));
    }
  }
  if (n != 2) {
    set.points = std::move(raw);
    return;
  }
  std::vector<std::vector<std::size_t>> adj(raw.size());
  auto link = [&](std::size_t p, std::size_t q) {
    adj[p].push_back(q);
    adj[q].push_back(p);
  };
  auto find = [&](const std::vector<int>& idx, int axis) {
    const auto it = edge_ids.find({grid.flatten(idx), axis});
    return it == edge_ids.end() ? kNone : it->second;
  };
  for (int i = 0; i < grid.cells(0); ++i) {
    for (int j = 0; j < grid.cells(1); ++j) {
      std::vector<int> c0{i, j};
      std::vector<int> c1 = c0;
      std::vector<int> c3 = c0;
      if (!grid.step(c1, 0, +1) || !grid.step(c3, 1, +1)) continue;
      const std::size_t e[4] = {find(c0, 0), find(c1, 1), find(c3, 0), find(c0, 1)};
      std::vector<int> present;
      for (int s = 0; s < 4; ++s) {
        if (e[s] != kNone) present.push_back(s);
      }
      if (present.size() == 2) {
        link(e[present[0]], e[present[1]]);
      } else if (present.size() == 4) {
        Vec center = grid.vertex(c0);
        center[0] += 0.5 * grid.spacing(0);
        center[1] += 0.5 * grid.spacing(1);
        const double fc = residual_only(patch, field, center, tol)[0];
        if (positive(fc) == positive(f[grid.flatten(c0)])) {
          link(e[0], e[1]);
          link(e[2], e[3]);
        } else {
          link(e[0], e[3]);
          link(e[1], e[2]);
        }
      }
    }
  }
  link_polylines(set, std::move(raw), adj);
}

void extract_newton(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                    const std::vector<ShadowResidual>& values, const Tolerances& tol, ShadowSet& set) {
  const double diag = grid.cell_diagonal();
  for (std::size_t v = 0; v < values.size(); ++v) {
    const ShadowResidual& r0 = values[v];
    const double jnorm = singular_values(r0.jacobian).size() > 0 ? singular_values(r0.jacobian)[0] : 0.0;
    if (r0.f.norm() > 1.5 * jnorm * diag) continue;
    ++set.newton_seeds;
    const Mat reference = r0.normals;
    Vec u = r0.u;
    bool converged = false;
    for (int it = 0; it < 40; ++it) {
      ShadowResidual r;
      try {
        r = shadow_residual(patch, field, u, tol, &reference);
      } catch (const Error&) {
        break;
      }
      if (r.f.norm() < 1e-2 * tol.extract_tol) {
        converged = true;
        break;
      }
      const Vec step = r.jacobian.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(r.f);
      u -= step;
      if (!u.allFinite() || !inside(grid.box(), u, 1e-9) || param_distance(grid.box(), u, r0.u) > 4.0 * diag) break;
    }
    if (!converged) {
      ++set.newton_failures;
      continue;
    }
    u = wrap_into(grid.box(), u);
    bool duplicate = false;
    for (const ShadowPoint& p : set.points) {
      if (param_distance(grid.box(), p.u, u) < 0.5 * diag) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;
    ShadowPoint p = make_point(patch, field, u, tol);
    if (p.abs_f >= tol.extract_tol) {
      ++set.newton_failures;
      continue;
    }
    set.points.push_back(std::move(p));
  }
}

}  // namespace

std::size_t ShadowSet::certified_count() const {
  std::size_t c = 0;
  for (const ShadowPoint& p : points) c += p.smooth ? 1 : 0;
  return c;
}

ShadowResidual shadow_residual(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& u,
                               const Tolerances& tol, const Mat* reference) {
  const Jet2 jet = patch.ambient_jet(u);
  ShadowResidual r;
  r.u = u;
  r.frame = frame_from_jet(patch, u, Jet1{jet.value, jet.jacobian}, tol);
  r.normals = choose_normals(r.frame, reference);
  r.y = field.value(patch, u);
  r.f = r.normals.transpose() * r.y;
  const SecondForm form = second_form_with_normals(r.frame, jet, r.normals);
  const Vec tan_coeff = r.frame.tangent_basis.transpose() * r.y;
  const Mat d_coeff = r.frame.tangent_basis.transpose() * r.frame.coordinate_tangents;
  const int k = form.codim();
  r.jacobian = Mat(k, patch.dim());
  for (int j = 0; j < k; ++j) {
    r.jacobian.row(j) = -(tan_coeff.transpose() * form.components[static_cast<std::size_t>(j)] * d_coeff);
  }
  r.theorem_jacobian = r.jacobian;
  // <grad Y, xi>: zero for parallel fields, needed for the rest
  if (!(field.kind() == FieldAlongM::Kind::kConstant && patch.ambient().is_flat())) {
    r.field_term = r.normals.transpose() * field.derivative(patch, u, tol.fd_step);
    r.jacobian += r.field_term;
  } else {
    r.field_term = Mat::Zero(k, patch.dim());
  }
  return r;
}

Mat shadow_fd_jacobian(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& u, const Tolerances& tol,
                       double step) {
  const ShadowResidual r0 = shadow_residual(patch, field, u, tol);
  Mat fd(r0.f.size(), patch.dim());
  for (int l = 0; l < patch.dim(); ++l) {
    Vec up = u;
    Vec dn = u;
    up[l] += step;
    dn[l] -= step;
    fd.col(l) = (residual_only(patch, field, up, tol, &r0.normals) - residual_only(patch, field, dn, tol, &r0.normals)) /
                (2.0 * step);
  }
  return fd;
}

double shadow_jacobian_consistency(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& u,
                                   const Tolerances& tol, double step) {
  const ShadowResidual r = shadow_residual(patch, field, u, tol);
  const Mat fd = shadow_fd_jacobian(patch, field, u, tol, step);
  if (fd.size() == 0) return 0.0;
  return (r.jacobian - fd).cwiseAbs().maxCoeff();
}

ShadowSet extract_shadow_set(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                             const Tolerances& tol) {
  if (grid.dims() != patch.dim()) throw GeometryError("grid dimension does not match the patch");
  ShadowSet set;
  set.param_dim = patch.dim();
  set.codim = patch.codim();
  set.ambient_dim = patch.ambient().embedding_dim();
  const int k = set.codim;
  const bool sign_scan = k == 1 && (patch.dim() == 1 || patch.dim() == 2);

  std::vector<double> scalar;
  std::vector<ShadowResidual> full;
  std::size_t zeros = 0;
  for (std::size_t v = 0; v < grid.total_vertices(); ++v) {
    const Vec u = grid.vertex(v);
    Vec f;
    if (sign_scan) {
      f = residual_only(patch, field, u, tol);
      scalar.push_back(f.size() > 0 ? f[0] : 0.0);
    } else {
      full.push_back(shadow_residual(patch, field, u, tol));
      f = full.back().f;
    }
    if (max_abs(f) < tol.extract_tol) ++zeros;
  }
  set.zero_fraction = static_cast<double>(zeros) / static_cast<double>(grid.total_vertices());
  if (k == 0 || set.zero_fraction >= tol.degenerate_fraction) {
    set.degenerate = true;
    set.method = "degenerate";
    return set;
  }
  if (sign_scan) {
    set.method = patch.dim() == 2 ? "marching-squares" : "bisection";
    extract_sign_changes(patch, field, grid, scalar, tol, set);
  } else {
    set.method = "newton";
    extract_newton(patch, field, grid, full, tol, set);
  }
  return set;
}

std::size_t smoothness_certificate(const SubmanifoldPatch& patch, const FieldAlongM& field, ShadowSet& set,
                                   const Tolerances& tol) {
  for (ShadowPoint& p : set.points) {
    const ShadowResidual r = shadow_residual(patch, field, p.u, tol);
    p.abs_f = max_abs(r.f);
    certify(p, r.jacobian, tol);
  }
  return set.certified_count();
}

double hausdorff_distance(const DomainBox& box, const std::vector<Vec>& a, const std::vector<Vec>& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  auto directed = [&box](const std::vector<Vec>& from, const std::vector<Vec>& to) {
    double worst = 0.0;
    for (const Vec& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec& q : to) {
        best = std::min(best, param_distance(box, p, q));
        if (best <= worst) break;
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

std::vector<Vec> shadow_parameter_points(const ShadowSet& set, const Grid& grid) {
  if (set.degenerate) return grid.vertices();
  std::vector<Vec> out;
  for (const ShadowPoint& p : set.points) out.push_back(p.u);
  return out;
}

PatchPtr product_patch(const SubmanifoldPatch& a, const SubmanifoldPatch& b) {
  if (a.parent() != nullptr || b.parent() != nullptr) {
    throw GeometryError("product factors must be top-level patches");
  }
  DomainBox box = a.domain();
  box.insert(box.end(), b.domain().begin(), b.domain().end());
  auto ambient = std::make_shared<const AmbientSpace>(AmbientSpace::product(a.ambient(), b.ambient()));
  return std::make_shared<const SubmanifoldPatch>(a.name() + "x" + b.name(), ChartExpr::product(a.chart(), b.chart()),
                                                  std::move(box), std::move(ambient));
}

ProductShadowResult product_shadow_check(PatchPtr a, PatchPtr b, const FieldAlongM& ya, const FieldAlongM& yb,
                                         const std::vector<int>& cells_a, const std::vector<int>& cells_b,
                                         const Tolerances& tol) {
  ProductShadowResult out;
  const PatchPtr prod = product_patch(*a, *b);
  const FieldAlongM y = FieldAlongM::product(ya, a->ambient().embedding_dim(), yb, b->ambient().embedding_dim());
  const Grid ga(a->domain(), cells_a);
  const Grid gb(b->domain(), cells_b);
  std::vector<int> cells = cells_a;
  cells.insert(cells.end(), cells_b.begin(), cells_b.end());
  const Grid gp(prod->domain(), cells);

  out.first = extract_shadow_set(*a, ya, ga, tol);
  out.second = extract_shadow_set(*b, yb, gb, tol);
  out.direct = extract_shadow_set(*prod, y, gp, tol);

  const std::vector<Vec> pa = shadow_parameter_points(out.first, ga);
  const std::vector<Vec> pb = shadow_parameter_points(out.second, gb);
  std::vector<Vec> combined;
  for (const Vec& p : pa) {
    for (const Vec& q : pb) {
      Vec r(p.size() + q.size());
      r << p, q;
      combined.push_back(std::move(r));
    }
  }
  const std::vector<Vec> direct = shadow_parameter_points(out.direct, gp);
  out.hausdorff = hausdorff_distance(gp.box(), direct, combined);
  out.cell = std::max({ga.cell_diagonal(), gb.cell_diagonal(), gp.cell_diagonal()});

  TheoremReport& report = out.report;
  report.theorem = "product-shadow";
  report.subject = prod->name();
  report.measurements["direct_points"] = static_cast<double>(direct.size());
  report.measurements["product_points"] = static_cast<double>(combined.size());
  report.measurements["first_degenerate"] = out.first.degenerate ? 1.0 : 0.0;
  report.measurements["second_degenerate"] = out.second.degenerate ? 1.0 : 0.0;
  report.measurements["direct_degenerate"] = out.direct.degenerate ? 1.0 : 0.0;
  report.add_conclusion("hausdorff", out.hausdorff, out.cell, "<");
  if (direct.empty() && combined.empty()) report.notes.push_back("both shadow sets are empty");
  report.decide();
  return out;
}

SmoothShadowResult smooth_shadow_check(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                                       const Tolerances& tol) {
  SmoothShadowResult out;
  out.set = extract_shadow_set(patch, field, grid, tol);
  const ShadowSet& set = out.set;
  TheoremReport& report = out.report;
  report.theorem = "smooth-shadow";
  report.subject = patch.name();
  report.measurements["points"] = static_cast<double>(set.points.size());
  report.measurements["components"] = static_cast<double>(set.polylines.size());
  report.measurements["certified"] = static_cast<double>(set.certified_count());
  report.measurements["expected_dim"] = set.expected_dim();
  report.add_hypothesis("zero_fraction", set.zero_fraction, tol.degenerate_fraction, "<");
  if (set.degenerate) report.notes.push_back("shadow set equals the patch");
  if (set.points.empty() || set.degenerate) {
    if (set.points.empty() && !set.degenerate) report.notes.push_back("empty shadow set");
    report.decide();
    return out;
  }

  double min_rel = std::numeric_limits<double>::infinity();
  double max_f = 0.0;
  for (const ShadowPoint& p : set.points) {
    min_rel = std::min(min_rel, p.sigma_max > 0.0 ? p.sigma_min / p.sigma_max : 0.0);
    max_f = std::max(max_f, p.abs_f);
  }
  report.add_hypothesis("surjectivity", min_rel, tol.rank_tol, ">");
  if (!report.hypotheses_hold()) {
    report.notes.push_back("II(Y, .) not surjective at some shadow point");
    report.decide();
    return out;
  }

  const std::size_t stride = std::max<std::size_t>(1, set.points.size() / 64);
  for (std::size_t i = 0; i < set.points.size(); i += stride) {
    out.jacobian_consistency =
        std::max(out.jacobian_consistency, shadow_jacobian_consistency(patch, field, set.points[i].u, tol));
  }
  report.add_conclusion("max_abs_F", max_f, tol.extract_tol, "<");
  report.add_conclusion("jacobian_consistency", out.jacobian_consistency, kJacobianTol, "<");

  if (set.expected_dim() == 0) {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < set.points.size(); ++i) {
      for (std::size_t j = i + 1; j < set.points.size(); ++j) {
        gap = std::min(gap, param_distance(grid.box(), set.points[i].u, set.points[j].u));
      }
    }
    report.add_conclusion("isolation", gap, 0.5 * grid.cell_diagonal(), ">");
  } else if (set.method == "marching-squares") {
    std::vector<bool> used(set.points.size(), false);
    double short_lines = 0.0;
    for (const auto& line : set.polylines) {
      if (line.size() < 2) short_lines += 1.0;
      for (std::size_t i : line) used[i] = true;
    }
    const double stray = static_cast<double>(std::count(used.begin(), used.end(), false));
    report.add_agreement("curve_structure", stray + short_lines, 0.0, stray + short_lines == 0.0);
  } else {
    report.notes.push_back("dimension of scattered samples not checked");
  }
  report.decide();
  return out;
}

}  // namespace penumbra
