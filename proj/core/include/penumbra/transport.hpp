#pragma once

#include "penumbra/geometry.hpp"
#include "penumbra/report.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace penumbra {

/// A curve t in [0, 1] -> u(t) in a patch's parameter space: either a polyline
/// (uniform speed on each segment) or a one-parameter expression. Coordinates
/// on periodic axes are not wrapped, so a loop may travel once around an axis.
class ParamCurve {
 public:
  static ParamCurve polyline(std::vector<Vec> points, bool closed = false);
  static ParamCurve expression(ChartExpr expr, bool closed = false);

  bool closed() const { return closed_; }
  bool is_polyline() const { return !expr_.has_value(); }
  int dim() const;
  const std::vector<Vec>& points() const { return points_; }
  const std::optional<ChartExpr>& expr() const { return expr_; }

  Vec start() const { return at(0.0); }
  Vec end() const { return at(1.0); }
  Vec at(double t) const;
  /// Total parameter-space length.
  double length() const;
  ParamCurve reversed() const;
  /// Polylines only: this curve followed by `next` (which must start at this curve's end).
  ParamCurve then(const ParamCurve& next) const;

  /// Throws GeometryError when the curve leaves the box on a closed axis or a
  /// closed curve fails to return to its start (modulo periods).
  void check_domain(const DomainBox& box) const;

 private:
  std::vector<Vec> points_;
  std::optional<ChartExpr> expr_;
  bool closed_ = false;
};

struct TransportOptions {
  bool richardson = false;   // repeat with half steps and report the difference
  bool record_path = false;  // keep V at every step
};

struct TransportResult {
  Mat initial;  // m x c
  Mat final;
  std::vector<Vec> path_u;
  std::vector<Mat> path_v;
  int steps = 0;
  double norm_drift = 0.0;           // max | |V(t)| / |V(0)| - 1 |
  double inner_product_drift = 0.0;  // max |<V_i(t), V_j(t)> - <V_i(0), V_j(0)>|
  double tangency_drift = 0.0;       // largest off-T_xN component removed by re-projection
  double richardson_error = 0.0;
};

/// Parallel transport along the patch image of `curve`, w.r.t. the ambient
/// connection. Columns of `v0` are transported together.
TransportResult transport_frame(const SubmanifoldPatch& patch, const ParamCurve& curve, const Mat& v0,
                                const Tolerances& tol = {}, const TransportOptions& opts = {});
TransportResult parallel_transport(const SubmanifoldPatch& patch, const ParamCurve& curve, const Vec& v0,
                                   const Tolerances& tol = {}, const TransportOptions& opts = {});

struct GeodesicTrace {
  std::vector<Vec> u;
  std::vector<Vec> velocity;
  double length = 0.0;
  double tangential_residual = 0.0;  // max |tan_M(ambient acceleration)|, zero for a geodesic of M
  double ambient_residual = 0.0;     // max |proj_{TN}(ambient acceleration)|, zero for a geodesic of N
  double speed_drift = 0.0;
  ParamCurve curve;
};

/// Unit-speed geodesic of M from u0 in direction w0 up to arc length `length`.
GeodesicTrace geodesic_trace(const SubmanifoldPatch& patch, const Vec& u0, const Vec& w0, double length,
                             const Tolerances& tol = {}, int steps = 0);

/// Largest ambient geodesic residual of short geodesics of M started at the
/// samples along each coordinate direction; vanishes for totally geodesic M.
double geodesic_tgs_residual(const SubmanifoldPatch& patch, const std::vector<Vec>& samples, double length,
                             const Tolerances& tol = {}, int steps = 256);

struct HolonomySample {
  Vec u0;
  Vec x0;
  Mat basis;  // m x d orthonormal basis of T_xN
  std::vector<ParamCurve> loops;
  std::vector<Mat> maps;  // d x d, in `basis` coordinates
  double norm_drift = 0.0;
  double inner_product_drift = 0.0;
  double orthogonality_error = 0.0;  // max |P^T P - I|
};

HolonomySample holonomy_loop(const SubmanifoldPatch& patch, const std::vector<ParamCurve>& loops,
                             const Tolerances& tol = {});

/// Rotation angle of a 2x2 orthogonal map, in (-pi, pi].
double rotation_angle(const Mat& p);

/// Axis-aligned path: coordinate 0 first, then 1, ...
ParamCurve staircase(const Vec& from, const Vec& to);

/// Y(u) = transport of w0 along staircase(u0, u).
FieldAlongM staircase_field(PatchPtr patch, const Vec& u0, const Vec& w0, const Tolerances& tol = {});

struct ProbeOptions {
  std::vector<int> levels{2, 4, 8};
  int random_loops = 20;
  std::uint64_t seed = 0;
};

struct ProbeLoop {
  std::string label;
  ParamCurve curve;
};

/// Cell boundaries at each level (joined to u0 by staircases), one loop per
/// periodic axis, and seeded random polygons through u0.
std::vector<ProbeLoop> probe_loops(const SubmanifoldPatch& patch, const Vec& u0, const ProbeOptions& opts);

inline constexpr const char* kNoObstructionMessage = "no obstruction found at probe resolution";
inline constexpr const char* kObstructionMessage = "holonomy obstruction: no parallel field through this seed";

struct ObstructionReport {
  double obstruction = 0.0;
  std::string worst_loop;
  std::size_t loops = 0;
  bool certified = false;
  std::string message;
  double norm_drift = 0.0;
};

struct ParallelFieldResult {
  FieldAlongM field;
  ObstructionReport report;
  std::vector<Vec> samples;  // field values at the requested points
};

ParallelFieldResult construct_parallel_field(PatchPtr patch, const Vec& u0, const Vec& w0,
                                             const std::vector<Vec>& sample_u, const ProbeOptions& opts = {},
                                             const Tolerances& tol = {});

struct ParallelFieldReport {
  TheoremReport report;
  ObstructionReport obstruction;
};

/// Probes holonomy through (u0, w0); when no obstruction is found the
/// transported field is checked for parallelity on a coarse grid.
ParallelFieldReport parallel_field_report(PatchPtr patch, const Vec& u0, const Vec& w0, const ProbeOptions& opts = {},
                                          const Tolerances& tol = {});

struct ParallelityResult {
  double value = 0.0;  // max |grad_{d_i} Y| / |Y|
  Vec witness;
};

ParallelityResult parallelity_residual(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                                       const Tolerances& tol = {});

/// Parallel normal frame along M implies M totally geodesic.
TheoremReport parallel_normal_frame_tgs_check(const SubmanifoldPatch& patch, const std::vector<FieldAlongM>& fields,
                                              const Grid& grid, const Tolerances& tol = {});

}  // namespace penumbra
