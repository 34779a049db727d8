#pragma once

#include "penumbra/chart_expr.hpp"
#include "penumbra/domain.hpp"
#include "penumbra/linalg.hpp"
#include "penumbra/tolerances.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace penumbra {

/// Orthonormal description of T_xN at an ambient point.
struct AmbientTangent {
  Mat basis;                // m x d, orthonormal
  Mat constraint_jacobian;  // r x m (empty rows when N is flat)
  Mat projector;            // m x m orthogonal projector onto T_xN
};

/// N = c^{-1}(0) inside R^m with the induced metric, or all of R^m.
class AmbientSpace {
 public:
  static AmbientSpace flat(int dim);
  static AmbientSpace flat(std::vector<std::string> coords);
  /// `constraint` has the ambient coordinates as parameters and one output per equation.
  static AmbientSpace constrained(ChartExpr constraint);
  static AmbientSpace product(const AmbientSpace& a, const AmbientSpace& b);

  int embedding_dim() const { return static_cast<int>(coords_.size()); }
  int constraint_count() const { return constraint_ ? constraint_->outputs() : 0; }
  int dim() const { return embedding_dim() - constraint_count(); }
  bool is_flat() const { return !constraint_.has_value(); }
  const std::vector<std::string>& coords() const { return coords_; }
  const std::optional<ChartExpr>& constraint() const { return constraint_; }

  Vec constraint_value(const Vec& x) const;
  double constraint_residual(const Vec& x) const;

  /// Value, gradients and Hessians of the constraint (empty for flat ambients).
  Jet2 constraint_jet(const Vec& x) const;

 private:
  std::vector<std::string> coords_;
  std::optional<ChartExpr> constraint_;
};

/// Orthonormal basis of T_xN = ker Dc(x). Throws GeometryError off the ambient
/// or where Dc loses rank.
AmbientTangent ambient_tangent_projector(const AmbientSpace& amb, const Vec& x, const Tolerances& tol = {});

/// A chart phi: U -> R^m of M inside N. A nested patch maps its parameters into
/// its parent's parameter domain instead; its ambient chart is the composite.
class SubmanifoldPatch {
 public:
  SubmanifoldPatch(std::string name, ChartExpr chart, DomainBox domain, std::shared_ptr<const AmbientSpace> ambient);
  SubmanifoldPatch(std::string name, ChartExpr chart, DomainBox domain,
                   std::shared_ptr<const SubmanifoldPatch> parent);

  const std::string& name() const { return name_; }
  const ChartExpr& chart() const { return chart_; }
  const DomainBox& domain() const { return domain_; }
  const AmbientSpace& ambient() const { return *ambient_; }
  std::shared_ptr<const AmbientSpace> ambient_ptr() const { return ambient_; }
  const SubmanifoldPatch* parent() const { return parent_.get(); }
  std::shared_ptr<const SubmanifoldPatch> parent_ptr() const { return parent_; }

  int dim() const { return chart_.arity(); }
  /// Codimension inside N.
  int codim() const { return ambient_->dim() - dim(); }

  Vec position(const Vec& u) const;
  Jet1 ambient_first(const Vec& u) const;
  Jet2 ambient_jet(const Vec& u) const;

  bool is_descendant_of(const SubmanifoldPatch& other) const;
  /// Parameters of `ancestor` reached from u, with the Jacobian of that map.
  Jet1 map_to_ancestor(const Vec& u, const SubmanifoldPatch& ancestor) const;
  Jet2 map_to_ancestor_jet(const Vec& u, const SubmanifoldPatch& ancestor) const;

 private:
  std::string name_;
  ChartExpr chart_;
  DomainBox domain_;
  std::shared_ptr<const AmbientSpace> ambient_;
  std::shared_ptr<const SubmanifoldPatch> parent_;
};

using PatchPtr = std::shared_ptr<const SubmanifoldPatch>;

/// Chain rule for second-order jets: outer evaluated at inner.value.
Jet2 compose(const Jet2& outer, const Jet2& inner);
Jet1 compose(const Jet1& outer, const Jet1& inner);

struct FrameData {
  Vec u;
  Vec point;
  Mat coordinate_tangents;   // m x n, columns d phi / d u_i
  Mat tangent_basis;         // m x n orthonormal
  Mat tangent_coefficients;  // n x n, tangent_basis = coordinate_tangents * coefficients
  Mat normal_frame;          // m x k orthonormal, inside T_xN
  Mat ambient_basis;         // m x d
  Mat ambient_projector;     // m x m
  Mat constraint_jacobian;   // r x m
  Mat metric;                // n x n

  int dim() const { return static_cast<int>(tangent_basis.cols()); }
  int codim() const { return static_cast<int>(normal_frame.cols()); }
};

/// Frames at u. Tangent basis is Gram-Schmidt of the coordinate tangents in
/// parameter order; the normal frame is pivoted Gram-Schmidt of the ambient
/// basis with the tangent part removed. Every vector gets canonical_sign().
FrameData frame_at(const SubmanifoldPatch& patch, const Vec& u, const Tolerances& tol = {});
FrameData frame_from_jet(const SubmanifoldPatch& patch, const Vec& u, const Jet1& jet, const Tolerances& tol = {});

/// For codimension one: the normal vector oriented so that
/// det[grad c_1..grad c_r, d_1 phi..d_n phi, nu] > 0. Continuous in u.
Vec oriented_normal(const FrameData& frame);

/// Normal frame at another point, aligned with `reference`: projects the
/// reference vectors onto the local normal space and re-orthonormalizes in
/// order. Gives a smooth local frame field through the reference frame.
Mat aligned_normal_frame(const FrameData& local, const Mat& reference);

struct TangentNormalSplit {
  Vec tan;
  Vec nor;
};

/// Throws GeometryError when V is not tangent to N.
TangentNormalSplit split_tangent_normal(const FrameData& frame, const Vec& v, const Tolerances& tol = {});

/// A vector field Y: M -> TN.
class FieldAlongM {
 public:
  enum class Kind { kConstant, kAmbientExpr, kChartExpr, kSampled };
  using Sampler = std::function<Vec(const Vec& base_params)>;

  FieldAlongM() = default;

  static FieldAlongM constant(Vec value);
  /// Parameters are the ambient coordinates; Y(u) = expr(phi(u)).
  static FieldAlongM ambient_expr(ChartExpr expr);
  /// Parameters are those of `base`; usable on `base` and its nested descendants.
  static FieldAlongM chart_expr(ChartExpr expr, PatchPtr base);
  static FieldAlongM sampled(Sampler sampler, PatchPtr base, std::string description);
  static FieldAlongM product(const FieldAlongM& a, int dim_a, const FieldAlongM& b, int dim_b);

  Kind kind() const { return kind_; }
  bool closed_form() const { return kind_ != Kind::kSampled; }
  const std::string& description() const { return description_; }
  const Vec& constant_value() const { return constant_; }

  Vec value(const SubmanifoldPatch& patch, const Vec& u) const;
  /// dY/du (m x n). Closed forms use dual numbers, sampled fields central differences.
  Mat derivative(const SubmanifoldPatch& patch, const Vec& u, double fd_step = 1e-5) const;

  FieldAlongM scaled(double s) const;

 private:
  Kind kind_ = Kind::kConstant;
  Vec constant_;
  std::optional<ChartExpr> expr_;
  PatchPtr base_;
  Sampler sampler_;
  std::string description_;
  double scale_ = 1.0;
};

/// proj_{T_xN}(D_W Y) with W = d phi(u) w.
Vec covariant_derivative_along(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& u, const Vec& w,
                               const Tolerances& tol = {});

struct ValidationFailure {
  std::string check;  // "on_ambient", "rank", "field_tangency", "evaluation"
  std::string patch;
  Vec u;
  double value = 0.0;
  std::string message;
};

struct PatchValidation {
  std::string patch;
  std::size_t samples = 0;
  double max_constraint_residual = 0.0;
  double min_relative_singular_value = 1.0;
  double max_field_tangency = 0.0;
  bool passed = true;
  std::vector<ValidationFailure> failures;
};

/// Samples the grid; each check stops at its first failing vertex.
PatchValidation validate_patch(const SubmanifoldPatch& patch, const FieldAlongM* field, const Grid& grid,
                               const Tolerances& tol = {});

}  // namespace penumbra
