#pragma once

#include "penumbra/geometry.hpp"

#include <vector>

namespace penumbra {

/// II_ij^a = <II(e_i, e_j), xi_a> in the orthonormal tangent basis e_i of the
/// frame and the normal vectors xi_a stored in `normals`.
struct SecondForm {
  FrameData frame;
  Mat normals;                  // m x k, usually frame.normal_frame
  std::vector<Mat> components;  // k matrices, each n x n and symmetric

  int dim() const { return frame.dim(); }
  int codim() const { return static_cast<int>(components.size()); }

  /// II(e_i, e_j) as an ambient vector.
  Vec value(int i, int j) const;
  /// II(X, W) for ambient vectors X, W tangent to M.
  Vec apply(const Vec& x, const Vec& w) const;
};

SecondForm second_fundamental_form(const SubmanifoldPatch& patch, const Vec& u, const Tolerances& tol = {});
SecondForm second_form_from_jet(const SubmanifoldPatch& patch, const Vec& u, const Jet2& jet, const Tolerances& tol = {});
/// Components against an explicit orthonormal normal frame (m x k).
SecondForm second_form_with_normals(const FrameData& frame, const Jet2& jet, const Mat& normals);

/// (A_a)_il = <II(e_i, e_l), xi_a>.
Mat shape_operator(const SubmanifoldPatch& patch, const Vec& u, int xi_index, const Tolerances& tol = {});

struct MeanCurvature {
  Vec u;
  Vec point;
  Vec vector;  // ambient, inside T_xM^perp within T_xN
};

MeanCurvature mean_curvature(const SubmanifoldPatch& patch, const Vec& u, const Tolerances& tol = {});
Vec mean_curvature_vector(const SecondForm& form);

/// det A for a hypersurface of a flat ambient.
double gauss_kronecker(const SubmanifoldPatch& patch, const Vec& u, const Tolerances& tol = {});

/// |II(W, W)| / |W|^2 with W = d phi(u) w.
double totally_geodesic_residual(const SubmanifoldPatch& patch, const Vec& u, const Vec& w, const Tolerances& tol = {});

/// Largest |II(d, d)| over the unit directions e_i and (e_i + e_j)/sqrt(2).
double max_normal_curvature(const SecondForm& form);

struct TgsScan {
  double max_residual = 0.0;
  double min_residual = 0.0;  // min over points of the per-point maximum
  Vec witness;                // point attaining max_residual
  Vec min_witness;
  bool totally_geodesic = false;
};

TgsScan totally_geodesic_scan(const SubmanifoldPatch& patch, const Grid& grid, const Tolerances& tol = {});

/// Normal part of grad_W Z for a field Z normal to M.
Vec normal_connection_derivative(const SubmanifoldPatch& patch, const FieldAlongM& z, const Vec& u, const Vec& w,
                                 const Tolerances& tol = {});

/// Gamma[k](i, j) of the induced metric in the patch parameters.
std::vector<Mat> christoffel(const SubmanifoldPatch& patch, const Vec& u);
std::vector<Mat> christoffel_from_jet(const Jet2& jet);

/// Second fundamental forms of a nested L in M in N, in the orthonormal basis
/// e_i of T L. M is L's parent patch.
struct NestedForms {
  FrameData frame;                       // L inside N
  std::vector<std::vector<Vec>> ii_ln;   // II^{L in N}(e_i, e_j)
  std::vector<std::vector<Vec>> ii_lm;   // II^{L in M}(e_i, e_j)
  std::vector<std::vector<Vec>> ii_mn;   // II^{M in N}(e_i, e_j)
  Vec mean_ln;
  Vec mean_lm;
  Vec mean_mn;
  Vec parent_u;                          // image of u in M's parameters
};

NestedForms nested_forms(const SubmanifoldPatch& sub, const Vec& u, const Tolerances& tol = {});

/// Largest |II^{L in M}(d, d)| over the same unit directions as max_normal_curvature.
double max_relative_curvature(const NestedForms& forms);

struct BangCheck {
  Vec ii_ln;
  Vec ii_lm;
  Vec ii_mn;
  double residual = 0.0;       // |II^{L,N} - II^{L,M} - II^{M,N}|
  double mean_residual = 0.0;  // |H - H^M - H(L;M,N)|
};

/// X and W are parameter directions of L.
BangCheck bang_decomposition_check(const SubmanifoldPatch& sub, const Vec& u, const Vec& x, const Vec& w,
                                   const Tolerances& tol = {});

}  // namespace penumbra
