#include "penumbra/curvature.hpp"

#include "penumbra/error.hpp"

#include <cmath>
#include <limits>

namespace penumbra {

namespace {

void symmetrize(Mat& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      const double s = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = s;
      a(j, i) = s;
    }
  }
}

// Unit probe directions in an n-dimensional orthonormal basis.
std::vector<Vec> probe_directions(int n) {
  std::vector<Vec> dirs;
  for (int i = 0; i < n; ++i) dirs.push_back(Vec::Unit(n, i));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) dirs.push_back((Vec::Unit(n, i) + Vec::Unit(n, j)) / std::sqrt(2.0));
  }
  return dirs;
}

Vec bilinear(const std::vector<std::vector<Vec>>& form, const Vec& a, const Vec& b) {
  Vec out = Vec::Zero(form[0][0].size());
  for (std::size_t i = 0; i < form.size(); ++i) {
    for (std::size_t j = 0; j < form.size(); ++j) {
      out += a[static_cast<Eigen::Index>(i)] * b[static_cast<Eigen::Index>(j)] * form[i][j];
    }
  }
  return out;
}

}  // namespace

Vec SecondForm::value(int i, int j) const {
  Vec out = Vec::Zero(frame.point.size());
  for (int a = 0; a < codim(); ++a) out += components[static_cast<std::size_t>(a)](i, j) * normals.col(a);
  return out;
}

Vec SecondForm::apply(const Vec& x, const Vec& w) const {
  const Vec a = frame.tangent_basis.transpose() * x;
  const Vec b = frame.tangent_basis.transpose() * w;
  Vec out = Vec::Zero(frame.point.size());
  for (int k = 0; k < codim(); ++k) {
    out += a.dot(components[static_cast<std::size_t>(k)] * b) * normals.col(k);
  }
  return out;
}

SecondForm second_form_with_normals(const FrameData& frame, const Jet2& jet, const Mat& normals) {
  SecondForm form;
  form.frame = frame;
  form.normals = normals;
  const Eigen::Index n = frame.coordinate_tangents.cols();
  const Mat& c = frame.tangent_coefficients;
  for (Eigen::Index a = 0; a < normals.cols(); ++a) {
    Mat s = Mat::Zero(n, n);
    for (std::size_t out = 0; out < jet.hessian.size(); ++out) {
      s += normals(static_cast<Eigen::Index>(out), a) * jet.hessian[out];
    }
    Mat ii = c.transpose() * s * c;
    symmetrize(ii);
    form.components.push_back(std::move(ii));
  }
  return form;
}

SecondForm second_form_from_jet(const SubmanifoldPatch& patch, const Vec& u, const Jet2& jet, const Tolerances& tol) {
  const FrameData frame = frame_from_jet(patch, u, Jet1{jet.value, jet.jacobian}, tol);
  return second_form_with_normals(frame, jet, frame.normal_frame);
}

SecondForm second_fundamental_form(const SubmanifoldPatch& patch, const Vec& u, const Tolerances& tol) {
  return second_form_from_jet(patch, u, patch.ambient_jet(u), tol);
}

Mat shape_operator(const SubmanifoldPatch& patch, const Vec& u, int xi_index, const Tolerances& tol) {
  const SecondForm form = second_fundamental_form(patch, u, tol);
  if (xi_index < 0 || xi_index >= form.codim()) {
    throw Error("normal index " + std::to_string(xi_index) + " out of range (codimension " +
                std::to_string(form.codim()) + ")");
  }
  return form.components[static_cast<std::size_t>(xi_index)];
}

Vec mean_curvature_vector(const SecondForm& form) {
  Vec h = Vec::Zero(form.frame.point.size());
  for (int a = 0; a < form.codim(); ++a) h += form.components[static_cast<std::size_t>(a)].trace() * form.normals.col(a);
  return h / form.dim();
}

MeanCurvature mean_curvature(const SubmanifoldPatch& patch, const Vec& u, const Tolerances& tol) {
  const SecondForm form = second_fundamental_form(patch, u, tol);
  return MeanCurvature{u, form.frame.point, mean_curvature_vector(form)};
}

double gauss_kronecker(const SubmanifoldPatch& patch, const Vec& u, const Tolerances& tol) {
  if (!patch.ambient().is_flat() || patch.codim() != 1) {
    throw GeometryError("Gauss-Kronecker curvature needs a hypersurface of a flat ambient");
  }
  return second_fundamental_form(patch, u, tol).components[0].determinant();
}

double totally_geodesic_residual(const SubmanifoldPatch& patch, const Vec& u, const Vec& w, const Tolerances& tol) {
  const SecondForm form = second_fundamental_form(patch, u, tol);
  const Vec big_w = form.frame.coordinate_tangents * w;
  const double len2 = big_w.squaredNorm();
  if (len2 == 0.0) throw GeometryError("totally geodesic residual needs a nonzero direction");
  return form.apply(big_w, big_w).norm() / len2;
}

double max_normal_curvature(const SecondForm& form) {
  double best = 0.0;
  for (const Vec& d : probe_directions(form.dim())) {
    double s = 0.0;
    for (const Mat& c : form.components) {
      const double v = d.dot(c * d);
      s += v * v;
    }
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

TgsScan totally_geodesic_scan(const SubmanifoldPatch& patch, const Grid& grid, const Tolerances& tol) {
  TgsScan scan;
  scan.min_residual = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
    const Vec u = grid.vertex(k);
    const double r = max_normal_curvature(second_fundamental_form(patch, u, tol));
    if (k == 0 || r > scan.max_residual) {
      scan.max_residual = r;
      scan.witness = u;
    }
    if (r < scan.min_residual) {
      scan.min_residual = r;
      scan.min_witness = u;
    }
  }
  scan.totally_geodesic = scan.max_residual < tol.tgs_tol;
  return scan;
}

Vec normal_connection_derivative(const SubmanifoldPatch& patch, const FieldAlongM& z, const Vec& u, const Vec& w,
                                 const Tolerances& tol) {
  const FrameData frame = frame_at(patch, u, tol);
  const Vec zv = z.value(patch, u);
  const Vec tangential = frame.tangent_basis * (frame.tangent_basis.transpose() * zv);
  if (tangential.norm() > tol.on_ambient_tol * std::max(1.0, zv.norm())) {
    throw GeometryError("field is not normal to " + patch.name());
  }
  const Vec d = covariant_derivative_along(patch, z, u, w, tol);
  return d - frame.tangent_basis * (frame.tangent_basis.transpose() * d);
}

std::vector<Mat> christoffel_from_jet(const Jet2& jet) {
  const Mat& j = jet.jacobian;
  const Eigen::Index n = j.cols();
  std::vector<Mat> dg(static_cast<std::size_t>(n), Mat::Zero(n, n));
  for (Eigen::Index k = 0; k < n; ++k) {
    Mat& d = dg[static_cast<std::size_t>(k)];
    for (std::size_t c = 0; c < jet.hessian.size(); ++c) {
      const auto row = jet.hessian[c].row(k);
      const auto jc = j.row(static_cast<Eigen::Index>(c));
      d += row.transpose() * jc + jc.transpose() * row;
    }
  }
  const Mat ginv = (j.transpose() * j).inverse();
  std::vector<Mat> gamma(static_cast<std::size_t>(n), Mat::Zero(n, n));
  for (Eigen::Index k = 0; k < n; ++k) {
    Mat& g = gamma[static_cast<std::size_t>(k)];
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        double s = 0.0;
        for (Eigen::Index l = 0; l < n; ++l) {
          s += ginv(k, l) * (dg[static_cast<std::size_t>(a)](b, l) + dg[static_cast<std::size_t>(b)](a, l) -
                             dg[static_cast<std::size_t>(l)](a, b));
        }
        g(a, b) = 0.5 * s;
      }
    }
    symmetrize(g);
  }
  return gamma;
}

std::vector<Mat> christoffel(const SubmanifoldPatch& patch, const Vec& u) {
  return christoffel_from_jet(patch.ambient_jet(u));
}

NestedForms nested_forms(const SubmanifoldPatch& sub, const Vec& u, const Tolerances& tol) {
  const SubmanifoldPatch* parent = sub.parent();
  if (parent == nullptr) throw GeometryError("patch " + sub.name() + " is not nested in another patch");

  NestedForms out;
  const Jet2 jet_l = sub.ambient_jet(u);
  const SecondForm form_l = second_form_from_jet(sub, u, jet_l, tol);
  out.frame = form_l.frame;

  const Jet2 psi = sub.chart().eval_jet(u);
  out.parent_u = psi.value;
  const Jet2 jet_m = parent->ambient_jet(psi.value);
  const SecondForm form_m = second_form_from_jet(*parent, psi.value, jet_m, tol);
  const std::vector<Mat> gamma = christoffel_from_jet(jet_m);

  const int n = sub.dim();
  const int nm = parent->dim();
  const Mat& t = out.frame.tangent_basis;
  const Mat& c = out.frame.tangent_coefficients;
  const Mat a = psi.jacobian * c;  // e_i in M's parameters

  const auto un = static_cast<std::size_t>(n);
  out.ii_ln.assign(un, std::vector<Vec>(un));
  out.ii_lm.assign(un, std::vector<Vec>(un));
  out.ii_mn.assign(un, std::vector<Vec>(un));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Vec v(nm);
      for (int k = 0; k < nm; ++k) {
        const double hess = c.col(i).dot(psi.hessian[static_cast<std::size_t>(k)] * c.col(j));
        v[k] = hess + a.col(i).dot(gamma[static_cast<std::size_t>(k)] * a.col(j));
      }
      const Vec amb = jet_m.jacobian * v;
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      out.ii_lm[ui][uj] = amb - t * (t.transpose() * amb);
      out.ii_mn[ui][uj] = form_m.apply(t.col(i), t.col(j));
      out.ii_ln[ui][uj] = form_l.value(i, j);
    }
  }
  const Eigen::Index m = out.frame.point.size();
  out.mean_ln = Vec::Zero(m);
  out.mean_lm = Vec::Zero(m);
  out.mean_mn = Vec::Zero(m);
  for (std::size_t i = 0; i < un; ++i) {
    out.mean_ln += out.ii_ln[i][i] / n;
    out.mean_lm += out.ii_lm[i][i] / n;
    out.mean_mn += out.ii_mn[i][i] / n;
  }
  return out;
}

double max_relative_curvature(const NestedForms& forms) {
  double best = 0.0;
  for (const Vec& d : probe_directions(static_cast<int>(forms.ii_lm.size()))) {
    best = std::max(best, bilinear(forms.ii_lm, d, d).norm());
  }
  return best;
}

BangCheck bang_decomposition_check(const SubmanifoldPatch& sub, const Vec& u, const Vec& x, const Vec& w,
                                   const Tolerances& tol) {
  const NestedForms forms = nested_forms(sub, u, tol);
  const Mat& dphi = forms.frame.coordinate_tangents;
  const Vec a = forms.frame.tangent_basis.transpose() * (dphi * x);
  const Vec b = forms.frame.tangent_basis.transpose() * (dphi * w);
  BangCheck check;
  check.ii_ln = bilinear(forms.ii_ln, a, b);
  check.ii_lm = bilinear(forms.ii_lm, a, b);
  check.ii_mn = bilinear(forms.ii_mn, a, b);
  check.residual = (check.ii_ln - check.ii_lm - check.ii_mn).norm();
  check.mean_residual = (forms.mean_ln - forms.mean_lm - forms.mean_mn).norm();
  return check;
}

}  // namespace penumbra
