#include "penumbra/linalg.hpp"

#include <cmath>

namespace penumbra {

void canonical_sign(Eigen::Ref<Vec> v) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > best_abs) {
      best_abs = std::abs(v[i]);
      best = i;
    }
  }
  if (v.size() > 0 && v[best] < 0.0) v = -v;
}

Mat pivoted_orthonormal_basis(const Mat& columns, int max_rank, double rel_tol) {
  const Eigen::Index rows = columns.rows();
  Mat work = columns;
  double scale = 0.0;
  for (Eigen::Index j = 0; j < work.cols(); ++j) scale = std::max(scale, work.col(j).norm());
  std::vector<Vec> basis;
  std::vector<bool> used(static_cast<std::size_t>(work.cols()), false);
  while (static_cast<int>(basis.size()) < max_rank) {
    Eigen::Index pick = -1;
    double pick_norm = 0.0;
    for (Eigen::Index j = 0; j < work.cols(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double nrm = work.col(j).norm();
      if (nrm > pick_norm) {
        pick_norm = nrm;
        pick = j;
      }
    }
    if (pick < 0 || pick_norm <= rel_tol * scale || pick_norm == 0.0) break;
    used[static_cast<std::size_t>(pick)] = true;
    Vec q = work.col(pick) / pick_norm;
    // reorthogonalize against the accepted basis once more
    for (const Vec& b : basis) q -= b.dot(q) * b;
    q.normalize();
    basis.push_back(q);
    for (Eigen::Index j = 0; j < work.cols(); ++j) {
      if (!used[static_cast<std::size_t>(j)]) work.col(j) -= q.dot(work.col(j)) * q;
    }
  }
  Mat out(rows, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = basis[i];
  return out;
}

Mat ordered_orthonormal_basis(const Mat& columns) {
  Mat q = columns;
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      q.col(j).normalize();
    }
  }
  return q;
}

Vec singular_values(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0) return Vec(0);
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues();
}

double max_abs(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double wrap_difference(double a, double b, double period) {
  double d = std::fmod(a - b, period);
  if (d > 0.5 * period) d -= period;
  if (d <= -0.5 * period) d += period;
  return d;
}

}  // namespace penumbra
