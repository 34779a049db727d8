#pragma once

#include "penumbra/geometry.hpp"
#include "penumbra/report.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace penumbra {

/// h = |tan(Y)|; 0 when Y is orthogonal to M.
double helix_angle(const SubmanifoldPatch& patch, const FieldAlongM& field, const Vec& u, const Tolerances& tol = {});

struct HelixReport {
  std::vector<double> h;
  std::vector<double> nor;
  double mean = 0.0;
  double max_deviation = 0.0;
  double nor_mean = 0.0;
  double nor_deviation = 0.0;
  double norm_deviation = 0.0;     // max | |Y| - mean |Y| |
  double pythagoras_residual = 0.0;
  double max_excess = 0.0;         // max (h - |Y|), should stay <= 0
  bool helix = false;
  bool orthogonal = false;         // h ~ 0 everywhere
  bool tangent = false;            // |nor Y| ~ 0 everywhere
  Vec min_witness;
  Vec max_witness;
  double min_h = 0.0;
  double max_h = 0.0;
  double min_nor = 0.0;

  nlohmann::json to_json() const;
};

HelixReport helix_constancy_report(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                                   const Tolerances& tol = {});

/// Cases: Y orthogonal somewhere (M totally geodesic), tangent somewhere
/// (tan Y parallel on M), or transversal (integral curves of tan Y are
/// geodesics of N).
TheoremReport classify_hypersurface_helix(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                                          const Tolerances& tol = {});

/// Residual of tan(Y) being parallel for the connection of M (central differences).
double tangent_part_parallelity(const SubmanifoldPatch& patch, const FieldAlongM& field, const Grid& grid,
                                const Tolerances& tol = {});

/// L in S(M, Y) iff L totally geodesic in M, for L of codimension one in M.
TheoremReport orthogonal_tgs_check(const SubmanifoldPatch& sub, const FieldAlongM& field, const Grid& grid,
                                   const Tolerances& tol = {});

/// L totally geodesic in M and inside S(M, Y) implies L is a helix w.r.t. Y.
TheoremReport tgs_helix_check(const SubmanifoldPatch& sub, const FieldAlongM& field, const Grid& grid,
                              const Tolerances& tol = {});

/// For L inside S(M, Y) with Y transverse to L: L minimal in M iff g(H, Y) = 0.
TheoremReport minimality_criterion(const SubmanifoldPatch& sub, const FieldAlongM& field, const Grid& grid,
                                   const Tolerances& tol = {});

/// Grid-wide decomposition II^{L,N} = II^{L,M} + II^{M,N}.
TheoremReport bang_report(const SubmanifoldPatch& sub, const Grid& grid, const Tolerances& tol = {});

/// Tolerance of the decomposition cross-checks.
inline constexpr double kBangTol = 1e-8;

/// Largest |F| of the parent's shadow residual along L.
double membership_residual(const SubmanifoldPatch& sub, const FieldAlongM& field, const Grid& grid,
                           const Tolerances& tol = {});

struct TubeScene {
  PatchPtr tube;   // (u, lam) -> phi_L(u) + lam v
  PatchPtr curve;  // L inside the tube: (u) -> (u, 0)
  FieldAlongM field;
  Vec direction;
  double epsilon = 0.0;
  double min_transversality = 0.0;
};

/// Throws GeometryError when v is not transverse to L on the grid.
TubeScene tube_scene_generator(const SubmanifoldPatch& curve, const Vec& v, double epsilon, const Grid& grid,
                               const Tolerances& tol = {});

}  // namespace penumbra
