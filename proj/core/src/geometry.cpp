#include "penumbra/geometry.hpp"

#include "penumbra/error.hpp"

#include <cmath>
#include <sstream>

namespace penumbra {

namespace {

std::string describe_point(const Vec& u) {
  std::ostringstream out;
  out << "(";
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (i > 0) out << ", ";
    out << format_double(u[i]);
  }
  out << ")";
  return out.str();
}

std::vector<std::string> default_coords(int dim) {
  std::vector<std::string> c;
  for (int i = 1; i <= dim; ++i) c.push_back("x" + std::to_string(i));
  return c;
}

ChartExpr constant_expr(const Vec& v, int dim) {
  std::string text = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) text += ", ";
    text += v[i] < 0 ? "-" + format_double(-v[i]) : format_double(v[i]);
  }
  text += v.size() == 1 ? ", 0)" : ")";
  ChartExpr e = parse_chart(text, default_coords(dim));
  if (v.size() == 1) {
    // single-output constant: drop the padding output
    return ChartExpr::from_parts(e.params(), e.nodes(), {e.roots().front()});
  }
  return e;
}

}  // namespace

// ---------------------------------------------------------------- ambient

AmbientSpace AmbientSpace::flat(int dim) { return flat(default_coords(dim)); }

AmbientSpace AmbientSpace::flat(std::vector<std::string> coords) {
  if (coords.empty()) throw GeometryError("ambient dimension must be positive");
  AmbientSpace a;
  a.coords_ = std::move(coords);
  return a;
}

AmbientSpace AmbientSpace::constrained(ChartExpr constraint) {
  AmbientSpace a;
  a.coords_ = constraint.params();
  if (constraint.outputs() >= static_cast<int>(a.coords_.size())) {
    throw GeometryError("ambient constraint count must be below the embedding dimension");
  }
  a.constraint_ = std::move(constraint);
  return a;
}

AmbientSpace AmbientSpace::product(const AmbientSpace& a, const AmbientSpace& b) {
  const int ma = a.embedding_dim();
  const int mb = b.embedding_dim();
  if (a.is_flat() && b.is_flat()) return flat(ma + mb);
  auto as_expr = [](const AmbientSpace& s) -> std::optional<ChartExpr> { return s.constraint_; };
  std::optional<ChartExpr> ca = as_expr(a);
  std::optional<ChartExpr> cb = as_expr(b);
  // A flat factor contributes coordinates but no equations.
  if (!ca) {
    ChartExpr e = parse_chart("0", default_coords(ma));
    ChartExpr joined = ChartExpr::product(e, *cb);
    std::vector<int> roots(joined.roots().begin() + 1, joined.roots().end());
    return constrained(ChartExpr::from_parts(joined.params(), joined.nodes(), roots));
  }
  if (!cb) {
    ChartExpr e = parse_chart("0", default_coords(mb));
    ChartExpr joined = ChartExpr::product(*ca, e);
    std::vector<int> roots(joined.roots().begin(), joined.roots().end() - 1);
    return constrained(ChartExpr::from_parts(joined.params(), joined.nodes(), roots));
  }
  return constrained(ChartExpr::product(*ca, *cb));
}

Vec AmbientSpace::constraint_value(const Vec& x) const {
  if (!constraint_) return Vec(0);
  return constraint_->eval(x);
}

double AmbientSpace::constraint_residual(const Vec& x) const { return max_abs(constraint_value(x)); }

Jet2 AmbientSpace::constraint_jet(const Vec& x) const {
  if (!constraint_) return Jet2{Vec(0), Mat(0, embedding_dim()), {}};
  return constraint_->eval_jet(x);
}

AmbientTangent ambient_tangent_projector(const AmbientSpace& amb, const Vec& x, const Tolerances& tol) {
  const int m = amb.embedding_dim();
  if (x.size() != m) throw GeometryError("point has wrong embedding dimension");
  AmbientTangent out;
  if (amb.is_flat()) {
    out.basis = Mat::Identity(m, m);
    out.projector = Mat::Identity(m, m);
    out.constraint_jacobian = Mat(0, m);
    return out;
  }
  const Jet1 c = amb.constraint()->eval_first(x);
  const double residual = max_abs(c.value);
  if (residual > tol.on_ambient_tol) {
    throw GeometryError("point " + describe_point(x) + " is off the ambient manifold (|c| = " +
                        format_double(residual) + ")");
  }
  const Vec sv = singular_values(c.jacobian);
  if (sv.size() == 0 || sv[0] == 0.0 || sv[sv.size() - 1] <= tol.rank_tol * sv[0]) {
    throw GeometryError("constraint Jacobian is rank deficient at " + describe_point(x));
  }
  const Mat& dc = c.jacobian;
  const Mat gram = dc * dc.transpose();
  out.projector = Mat::Identity(m, m) - dc.transpose() * gram.ldlt().solve(dc);
  out.basis = pivoted_orthonormal_basis(out.projector, amb.dim(), 1e-8);
  if (out.basis.cols() != amb.dim()) throw GeometryError("tangent space of N lost rank at " + describe_point(x));
  for (Eigen::Index j = 0; j < out.basis.cols(); ++j) canonical_sign(out.basis.col(j));
  out.constraint_jacobian = dc;
  return out;
}

// ---------------------------------------------------------------- patches

SubmanifoldPatch::SubmanifoldPatch(std::string name, ChartExpr chart, DomainBox domain,
                                   std::shared_ptr<const AmbientSpace> ambient)
    : name_(std::move(name)), chart_(std::move(chart)), domain_(std::move(domain)), ambient_(std::move(ambient)) {
  if (!ambient_) throw GeometryError("patch " + name_ + " has no ambient space");
  if (chart_.outputs() != ambient_->embedding_dim()) {
    throw GeometryError("chart of " + name_ + " has " + std::to_string(chart_.outputs()) +
                        " outputs but the ambient embedding dimension is " +
                        std::to_string(ambient_->embedding_dim()));
  }
  if (static_cast<int>(domain_.size()) != chart_.arity()) {
    throw GeometryError("domain box of " + name_ + " does not match the chart arity");
  }
}

SubmanifoldPatch::SubmanifoldPatch(std::string name, ChartExpr chart, DomainBox domain,
                                   std::shared_ptr<const SubmanifoldPatch> parent)
    : name_(std::move(name)), chart_(std::move(chart)), domain_(std::move(domain)), parent_(std::move(parent)) {
  if (!parent_) throw GeometryError("nested patch " + name_ + " has no parent");
  ambient_ = parent_->ambient_ptr();
  if (chart_.outputs() != parent_->dim()) {
    throw GeometryError("sub-chart of " + name_ + " must have one output per parameter of " + parent_->name());
  }
  if (static_cast<int>(domain_.size()) != chart_.arity()) {
    throw GeometryError("domain box of " + name_ + " does not match the chart arity");
  }
}

Vec SubmanifoldPatch::position(const Vec& u) const {
  const Vec v = chart_.eval(u);
  return parent_ ? parent_->position(v) : v;
}

Jet1 SubmanifoldPatch::ambient_first(const Vec& u) const {
  Jet1 inner = chart_.eval_first(u);
  if (!parent_) return inner;
  return compose(parent_->ambient_first(inner.value), inner);
}

Jet2 SubmanifoldPatch::ambient_jet(const Vec& u) const {
  Jet2 inner = chart_.eval_jet(u);
  if (!parent_) return inner;
  return compose(parent_->ambient_jet(inner.value), inner);
}

bool SubmanifoldPatch::is_descendant_of(const SubmanifoldPatch& other) const {
  for (const SubmanifoldPatch* p = this; p != nullptr; p = p->parent()) {
    if (p == &other) return true;
  }
  return false;
}

Jet1 SubmanifoldPatch::map_to_ancestor(const Vec& u, const SubmanifoldPatch& ancestor) const {
  if (this == &ancestor) return Jet1{u, Mat::Identity(u.size(), u.size())};
  if (!parent_) throw GeometryError("patch " + ancestor.name() + " is not an ancestor of " + name_);
  Jet1 inner = chart_.eval_first(u);
  return compose(parent_->map_to_ancestor(inner.value, ancestor), inner);
}

Jet2 SubmanifoldPatch::map_to_ancestor_jet(const Vec& u, const SubmanifoldPatch& ancestor) const {
  if (this == &ancestor) {
    const auto n = u.size();
    return Jet2{u, Mat::Identity(n, n), std::vector<Mat>(static_cast<std::size_t>(n), Mat::Zero(n, n))};
  }
  if (!parent_) throw GeometryError("patch " + ancestor.name() + " is not an ancestor of " + name_);
  Jet2 inner = chart_.eval_jet(u);
  return compose(parent_->map_to_ancestor_jet(inner.value, ancestor), inner);
}

Jet2 compose(const Jet2& outer, const Jet2& inner) {
  Jet2 out;
  out.value = outer.value;
  out.jacobian = outer.jacobian * inner.jacobian;
  const Eigen::Index n = inner.jacobian.cols();
  out.hessian.reserve(outer.hessian.size());
  for (std::size_t a = 0; a < outer.hessian.size(); ++a) {
    Mat h = inner.jacobian.transpose() * outer.hessian[a] * inner.jacobian;
    for (std::size_t q = 0; q < inner.hessian.size(); ++q) {
      h += outer.jacobian(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(q)) * inner.hessian[q];
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) h(j, i) = h(i, j);
    }
    out.hessian.push_back(std::move(h));
  }
  return out;
}

Jet1 compose(const Jet1& outer, const Jet1& inner) { return Jet1{outer.value, outer.jacobian * inner.jacobian}; }

// ---------------------------------------------------------------- frames

FrameData frame_from_jet(const SubmanifoldPatch& patch, const Vec& u, const Jet1& jet, const Tolerances& tol) {
  FrameData f;
  f.u = u;
  f.point = jet.value;
  f.coordinate_tangents = jet.jacobian;
  const int n = patch.dim();
  const Vec sv = singular_values(jet.jacobian);
  if (sv.size() == 0 || sv[0] == 0.0 || sv[sv.size() - 1] <= tol.rank_tol * sv[0]) {
    throw GeometryError("chart of " + patch.name() + " is rank deficient at u = " + describe_point(u));
  }
  const AmbientTangent amb = ambient_tangent_projector(patch.ambient(), f.point, tol);
  f.ambient_basis = amb.basis;
  f.ambient_projector = amb.projector;
  f.constraint_jacobian = amb.constraint_jacobian;

  f.tangent_basis = ordered_orthonormal_basis(jet.jacobian);
  for (int j = 0; j < n; ++j) canonical_sign(f.tangent_basis.col(j));
  f.metric = jet.jacobian.transpose() * jet.jacobian;
  f.tangent_coefficients = f.metric.ldlt().solve(jet.jacobian.transpose() * f.tangent_basis);

  const int k = patch.codim();
  if (k < 0) throw GeometryError("patch " + patch.name() + " has larger dimension than its ambient");
  const Mat residual = amb.basis - f.tangent_basis * (f.tangent_basis.transpose() * amb.basis);
  f.normal_frame = pivoted_orthonormal_basis(residual, k, 1e-8);
  if (f.normal_frame.cols() != k) {
    throw GeometryError("normal frame of " + patch.name() + " is degenerate at u = " + describe_point(u));
  }
  for (int j = 0; j < k; ++j) canonical_sign(f.normal_frame.col(j));
  return f;
}

FrameData frame_at(const SubmanifoldPatch& patch, const Vec& u, const Tolerances& tol) {
  return frame_from_jet(patch, u, patch.ambient_first(u), tol);
}

Vec oriented_normal(const FrameData& frame) {
  if (frame.codim() != 1) throw GeometryError("oriented normal requires codimension one");
  const Eigen::Index m = frame.point.size();
  const Eigen::Index r = frame.constraint_jacobian.rows();
  const Eigen::Index n = frame.coordinate_tangents.cols();
  Mat basis(m, m);
  if (r > 0) basis.leftCols(r) = frame.constraint_jacobian.transpose();
  basis.middleCols(r, n) = frame.coordinate_tangents;
  basis.col(m - 1) = frame.normal_frame.col(0);
  const double det = basis.determinant();
  return det < 0.0 ? Vec(-frame.normal_frame.col(0)) : Vec(frame.normal_frame.col(0));
}

Mat aligned_normal_frame(const FrameData& local, const Mat& reference) {
  const Mat projected = local.normal_frame * (local.normal_frame.transpose() * reference);
  return ordered_orthonormal_basis(projected);
}

TangentNormalSplit split_tangent_normal(const FrameData& frame, const Vec& v, const Tolerances& tol) {
  const Vec off = v - frame.ambient_projector * v;
  if (off.norm() > tol.on_ambient_tol * std::max(1.0, v.norm())) {
    throw GeometryError("vector is not tangent to the ambient manifold (residual " + format_double(off.norm()) + ")");
  }
  TangentNormalSplit s;
  s.tan = frame.tangent_basis * (frame.tangent_basis.transpose() * v);
  s.nor = v - s.tan;
  return s;
}

// ---------------------------------------------------------------- fields

FieldAlongM FieldAlongM::constant(Vec value) {
  FieldAlongM f;
  f.kind_ = Kind::kConstant;
  f.constant_ = std::move(value);
  f.description_ = "constant " + describe_point(f.constant_);
  return f;
}

FieldAlongM FieldAlongM::ambient_expr(ChartExpr expr) {
  FieldAlongM f;
  f.kind_ = Kind::kAmbientExpr;
  f.description_ = "ambient " + expr.print();
  f.expr_ = std::move(expr);
  return f;
}

FieldAlongM FieldAlongM::chart_expr(ChartExpr expr, PatchPtr base) {
  if (!base) throw GeometryError("chart field needs a base patch");
  if (expr.arity() != base->dim()) throw GeometryError("chart field arity must match its base patch");
  FieldAlongM f;
  f.kind_ = Kind::kChartExpr;
  f.description_ = "chart " + expr.print();
  f.expr_ = std::move(expr);
  f.base_ = std::move(base);
  return f;
}

FieldAlongM FieldAlongM::sampled(Sampler sampler, PatchPtr base, std::string description) {
  if (!base) throw GeometryError("sampled field needs a base patch");
  FieldAlongM f;
  f.kind_ = Kind::kSampled;
  f.sampler_ = std::move(sampler);
  f.base_ = std::move(base);
  f.description_ = std::move(description);
  return f;
}

FieldAlongM FieldAlongM::product(const FieldAlongM& a, int dim_a, const FieldAlongM& b, int dim_b) {
  auto as_expr = [](const FieldAlongM& f, int dim) -> ChartExpr {
    if (f.kind_ == Kind::kConstant) return constant_expr(f.constant_ * f.scale_, dim);
    if (f.kind_ == Kind::kAmbientExpr && f.scale_ == 1.0) return *f.expr_;
    throw GeometryError("product fields must be constant or ambient expressions");
  };
  if (a.kind_ == Kind::kConstant && b.kind_ == Kind::kConstant) {
    Vec v(a.constant_.size() + b.constant_.size());
    v << a.constant_ * a.scale_, b.constant_ * b.scale_;
    return constant(v);
  }
  return ambient_expr(ChartExpr::product(as_expr(a, dim_a), as_expr(b, dim_b)));
}

Vec FieldAlongM::value(const SubmanifoldPatch& patch, const Vec& u) const {
  switch (kind_) {
    case Kind::kConstant:
      if (constant_.size() != patch.ambient().embedding_dim()) {
        throw GeometryError("constant field has wrong ambient dimension");
      }
      return scale_ * constant_;
    case Kind::kAmbientExpr:
      return scale_ * expr_->eval(patch.position(u));
    case Kind::kChartExpr:
      return scale_ * expr_->eval(patch.map_to_ancestor(u, *base_).value);
    case Kind::kSampled:
      return scale_ * sampler_(&patch == base_.get() ? u : patch.map_to_ancestor(u, *base_).value);
  }
  return Vec();
}

Mat FieldAlongM::derivative(const SubmanifoldPatch& patch, const Vec& u, double fd_step) const {
  const int m = patch.ambient().embedding_dim();
  const int n = patch.dim();
  switch (kind_) {
    case Kind::kConstant:
      return Mat::Zero(m, n);
    case Kind::kAmbientExpr: {
      const Jet1 pos = patch.ambient_first(u);
      return scale_ * (expr_->eval_first(pos.value).jacobian * pos.jacobian);
    }
    case Kind::kChartExpr: {
      const Jet1 map = patch.map_to_ancestor(u, *base_);
      return scale_ * (expr_->eval_first(map.value).jacobian * map.jacobian);
    }
    case Kind::kSampled: {
      if (fd_step <= 0.0) throw GeometryError("sampled field needs a positive finite-difference step");
      Mat d(m, n);
      for (int i = 0; i < n; ++i) {
        Vec up = u;
        Vec dn = u;
        up[i] += fd_step;
        dn[i] -= fd_step;
        d.col(i) = (value(patch, up) - value(patch, dn)) / (2.0 * fd_step);
      }
      return d;
    }
  }
  return Mat();
}

FieldAlongM FieldAlongM::scaled(double s) const {
  FieldAlongM f = *this;
  f.scale_ *= s;
  return f;
}

Vec covariant_derivative_along(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& u, const Vec& w,
                               const Tolerances& tol) {
  const Vec x = patch.position(u);
  const AmbientTangent amb = ambient_tangent_projector(patch.ambient(), x, tol);
  return amb.projector * (field.derivative(patch, u, tol.fd_step) * w);
}

// ---------------------------------------------------------------- validation

PatchValidation validate_patch(const SubmanifoldPatch& patch, const FieldAlongM* field, const Grid& grid,
                               const Tolerances& tol) {
  PatchValidation report;
  report.patch = patch.name();
  bool on_failed = false;
  bool rank_failed = false;
  bool field_failed = false;
  bool eval_failed = false;
  auto fail = [&](const std::string& check, const Vec& u, double value, const std::string& msg) {
    report.failures.push_back({check, patch.name(), u, value, msg});
  };
  for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
    const Vec u = grid.vertex(k);
    ++report.samples;
    Jet1 jet;
    try {
      jet = patch.ambient_first(u);
    } catch (const DomainError& e) {
      if (!eval_failed) fail("evaluation", u, 0.0, e.what());
      eval_failed = true;
      continue;
    }
    const double c = patch.ambient().constraint_residual(jet.value);
    report.max_constraint_residual = std::max(report.max_constraint_residual, c);
    const bool on = c <= tol.on_ambient_tol;
    if (!on && !on_failed) {
      on_failed = true;
      fail("on_ambient", u, c, "point is off the ambient manifold");
    }
    const Vec sv = singular_values(jet.jacobian);
    const double rel = (sv.size() == 0 || sv[0] == 0.0) ? 0.0 : sv[sv.size() - 1] / sv[0];
    report.min_relative_singular_value = std::min(report.min_relative_singular_value, rel);
    if (rel <= tol.rank_tol && !rank_failed) {
      rank_failed = true;
      fail("rank", u, rel, "chart Jacobian drops rank");
    }
    if (field != nullptr && on) {
      try {
        const Vec y = field->value(patch, u);
        const AmbientTangent amb = ambient_tangent_projector(patch.ambient(), jet.value, tol);
        const double t = (y - amb.projector * y).norm() / std::max(1.0, y.norm());
        report.max_field_tangency = std::max(report.max_field_tangency, t);
        if (t > tol.on_ambient_tol && !field_failed) {
          field_failed = true;
          fail("field_tangency", u, t, "field is not tangent to the ambient manifold");
        }
      } catch (const Error& e) {
        if (!field_failed) fail("field_tangency", u, 0.0, e.what());
        field_failed = true;
      }
    }
  }
  report.passed = report.failures.empty();
  return report;
}

}  // namespace penumbra
