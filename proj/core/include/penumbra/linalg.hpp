#pragma once

#include <Eigen/Dense>

#include <vector>

namespace penumbra {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Flip v so that its first component of largest magnitude is positive.
void canonical_sign(Eigen::Ref<Vec> v);

// Orthonormal basis for the column span of `columns`, built by modified
// Gram-Schmidt with greedy column pivoting (largest residual first, lowest
// index on ties). At most `max_rank` vectors are returned; columns whose
// residual drops below `rel_tol` times the largest column norm are skipped.
Mat pivoted_orthonormal_basis(const Mat& columns, int max_rank, double rel_tol = 1e-10);

// Orthonormalizes columns in order (no pivoting), twice for stability.
// The caller guarantees full column rank.
Mat ordered_orthonormal_basis(const Mat& columns);

// Singular values in decreasing order.
Vec singular_values(const Mat& a);

// Infinity norm of a vector; 0 for empty vectors.
double max_abs(const Vec& v);

// Wrapped difference a - b on a periodic axis of length `period`, in (-period/2, period/2].
double wrap_difference(double a, double b, double period);

}  // namespace penumbra
