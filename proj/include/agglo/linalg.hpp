#pragma once

#include "agglo/error.hpp"
#include "agglo/parallel.hpp"
#include "agglo/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace agglo {

/// k smallest eigenpairs of a symmetric matrix. values ascending, vectors
/// column-aligned with values.
template <typename Scalar>
struct EigenResult {
  Vector<Scalar> values;
  Matrix<Scalar> vectors;
};

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::non_finite, std::string(what) + ": non-finite entry");
  }
}

/// Euclidean distance between every pair of rows of X (not squared).
template <typename Derived>
Matrix<typename Derived::Scalar> pairwise_distances(const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  require_finite(X, "pairwise_distances");
  const Index n = X.rows();
  // One contiguous column per sample.
  const Matrix<Scalar> cols = X.transpose();
  Matrix<Scalar> D = Matrix<Scalar>::Zero(n, n);
  parallel_rows(n, [&](Index begin, Index end) {
    for (Index j = begin; j < end; ++j) {
      for (Index i = 0; i < j; ++i) D(i, j) = (cols.col(i) - cols.col(j)).norm();
    }
  });
  D.template triangularView<Eigen::StrictlyLower>() = D.transpose();
  return D;
}

/// Mask of the r nearest off-diagonal neighbours of every row. Ties go to
/// the lowest column index.
template <typename Derived>
BoolMatrix knn_mask(const Eigen::MatrixBase<Derived>& D, Index r) {
  const Index n = D.rows();
  if (D.cols() != n) {
    throw Error(ErrorCode::dimension_mismatch, "knn_mask: distance matrix must be square");
  }
  if (r < 1 || r > n - 1) {
    throw Error(ErrorCode::invalid_argument,
                "knn_sparsify: neighbour count " + std::to_string(r) + " outside [1, " +
                    std::to_string(n - 1) + "]");
  }
  BoolMatrix mask = BoolMatrix::Constant(n, n, false);
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> Dt = D.transpose();  // row i of D as a contiguous column
  parallel_rows(n, [&](Index begin, Index end) {
    std::vector<std::pair<Scalar, Index>> order(static_cast<std::size_t>(n - 1));
    for (Index i = begin; i < end; ++i) {
      std::size_t c = 0;
      for (Index j = 0; j < n; ++j) {
        if (j != i) order[c++] = {Dt(j, i), j};
      }
      // Lexicographic on (distance, column): ties go to the lower index.
      std::partial_sort(order.begin(), order.begin() + r, order.end());
      for (Index t = 0; t < r; ++t) mask(i, order[static_cast<std::size_t>(t)].second) = true;
    }
  });
  return mask;
}

/// Keeps each row's r smallest off-diagonal entries and zeroes the rest.
/// The result is generally not symmetric.
template <typename Derived>
Matrix<typename Derived::Scalar> knn_sparsify(const Eigen::MatrixBase<Derived>& D, Index r) {
  using Scalar = typename Derived::Scalar;
  const BoolMatrix mask = knn_mask(D, r);
  return mask.select(D.derived(), Matrix<Scalar>::Zero(D.rows(), D.cols()));
}

/// k algebraically smallest eigenpairs of a symmetric matrix via a dense
/// self-adjoint decomposition.
template <typename Derived>
EigenResult<typename Derived::Scalar> sym_eigs_smallest(const Eigen::MatrixBase<Derived>& M,
                                                        Index k,
                                                        typename Derived::Scalar symmetry_tol = 1e-10) {
  using Scalar = typename Derived::Scalar;
  const Index n = M.rows();
  if (M.cols() != n) {
    throw Error(ErrorCode::dimension_mismatch, "sym_eigs_smallest: matrix must be square");
  }
  if (k < 1 || k > n) {
    throw Error(ErrorCode::invalid_argument,
                "sym_eigs_smallest: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  require_finite(M, "sym_eigs_smallest");
  const Scalar asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > symmetry_tol) {
    throw Error(ErrorCode::asymmetric,
                "sym_eigs_smallest: input not symmetric (max |M - M^T| = " + std::to_string(asym) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(M, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    // Eigen's tridiagonal QR gives up after 30 sweeps per row.
    throw Error(ErrorCode::not_converged,
                "sym_eigs_smallest: QR iteration did not converge within " + std::to_string(30 * n) +
                    " iterations");
  }
  // Eigen returns eigenvalues in ascending order.
  return {solver.eigenvalues().head(k), solver.eigenvectors().leftCols(k)};
}

}  // namespace agglo
