#pragma once

#include "agglo/error.hpp"
#include "agglo/linalg.hpp"
#include "agglo/parallel.hpp"
#include "agglo/types.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace agglo {

/// Rows whose activation denominator falls below this use the last-edge rule.
inline constexpr double kDegenerateDenominator = 1e-12;
/// Edges at or below this symmetric weight do not connect components.
inline constexpr double kEdgeThreshold = 1e-12;

/// Selector state of one activated row, enough to backpropagate through it.
/// For a regular row, `pivot` is the row-minimum entry; for a last-edge row
/// it is the surviving entry. A minimum attained by several entries is a kink
/// of the activation and receives a zero subgradient.
template <typename Scalar>
struct RowActivation {
  Index pivot = -1;
  Scalar denominator = 0;
  bool last_edge = false;
  bool pivot_tied = false;
};

namespace detail {

/// Activates x[0..n) skipping position `skip` (pass -1 for none). Entries
/// <= 0 are inactive. out must not alias x.
template <typename Scalar>
RowActivation<Scalar> activate_row(const Scalar* x, Index n, Index skip, Scalar P, Scalar* out) {
  RowActivation<Scalar> st;
  Index argmin = -1;
  Index argmax = -1;
  Index argmax_nonzero = -1;
  Scalar lo = 0;
  Scalar hi = 0;
  Scalar hi_nonzero = 0;
  Scalar positive_sum = 0;
  bool tied = false;
  for (Index j = 0; j < n; ++j) {
    out[j] = Scalar(0);
    if (j == skip) continue;
    const Scalar v = x[j];
    if (argmin < 0 || v < lo) {
      argmin = j;
      lo = v;
      tied = false;
    } else if (v == lo) {
      tied = true;
    }
    if (argmax < 0 || v > hi) {
      argmax = j;
      hi = v;
    }
    if (v != 0 && (argmax_nonzero < 0 || v > hi_nonzero)) {
      argmax_nonzero = j;
      hi_nonzero = v;
    }
    if (v > 0) positive_sum += v;
  }
  if (argmin < 0) return st;  // nothing but the skipped entry

  const Scalar denominator = P * (positive_sum - lo);
  if (!(hi > 0) || std::abs(denominator) < Scalar(kDegenerateDenominator)) {
    // Exact zeros are sparsified-away edges; the last edge is only drawn
    // from them when the whole row is zero.
    st.last_edge = true;
    st.pivot = argmax_nonzero >= 0 ? argmax_nonzero : argmax;
    out[st.pivot] = Scalar(1);
    return st;
  }
  st.pivot = argmin;
  st.pivot_tied = tied;
  st.denominator = denominator;
  for (Index j = 0; j < n; ++j) {
    const Scalar v = x[j];
    if (v > 0 && j != skip) out[j] = std::max(Scalar(0), (P * v - lo) / denominator);
  }
  return st;
}

/// Gradient of one activated row. `y` is the activation output, `g` the
/// upstream gradient; accumulates into grad_x.
template <typename Scalar>
void activate_row_backward(const Scalar* x, const Scalar* y, const Scalar* g, Index n, Index skip, Scalar P,
                           const RowActivation<Scalar>& st, Scalar* grad_x) {
  if (st.last_edge || st.pivot < 0) return;  // constant output
  Scalar weighted = 0;
  Scalar total = 0;
  for (Index j = 0; j < n; ++j) {
    if (j == skip || !(x[j] > 0)) continue;
    weighted += g[j] * y[j];
    total += g[j];
  }
  const Scalar inv = Scalar(1) / st.denominator;
  for (Index j = 0; j < n; ++j) {
    if (j == skip || !(x[j] > 0)) continue;
    grad_x[j] += P * (g[j] - weighted) * inv;
  }
  if (!st.pivot_tied) grad_x[st.pivot] += (P * weighted - total) * inv;
}

}  // namespace detail

/// Row activation: negative entries map to 0, strictly positive entries to
/// (P*x_i - x_min) / (P*(sum of positives - x_min)). A row without positive
/// entries keeps only its maximal nonzero entry (its first entry if all are
/// zero), at weight 1.
template <typename Derived>
Vector<typename Derived::Scalar> activation_row(const Eigen::MatrixBase<Derived>& x,
                                                typename Derived::Scalar P) {
  using Scalar = typename Derived::Scalar;
  if (!(P > 1)) throw Error(ErrorCode::invalid_argument, "activation: P must exceed 1");
  require_finite(x, "activation_row");
  const Vector<Scalar> in = x;
  Vector<Scalar> out(in.size());
  detail::activate_row<Scalar>(in.data(), in.size(), -1, P, out.data());
  return out;
}

/// Row-wise activation of a square matrix with the diagonal held out of the
/// computation and left at zero.
template <typename Scalar>
Matrix<Scalar> activate_rows(const Matrix<Scalar>& X, Scalar P,
                             std::vector<RowActivation<Scalar>>* states = nullptr) {
  if (!(P > 1)) throw Error(ErrorCode::invalid_argument, "activation: P must exceed 1");
  const Index n = X.rows();
  // Work on columns of the transpose so each row is contiguous.
  const Matrix<Scalar> Xt = X.transpose();
  Matrix<Scalar> out_t(n, n);
  std::vector<RowActivation<Scalar>> local(static_cast<std::size_t>(n));
  parallel_rows(n, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      local[static_cast<std::size_t>(i)] = detail::activate_row<Scalar>(Xt.col(i).data(), n, i, P, out_t.col(i).data());
    }
  });
  Matrix<Scalar> out = out_t.transpose();
  if (states) *states = std::move(local);
  return out;
}

/// Gradient of activate_rows with respect to its input.
template <typename Scalar>
Matrix<Scalar> activate_rows_backward(const Matrix<Scalar>& X, const Matrix<Scalar>& Y,
                                      const Matrix<Scalar>& grad_Y, Scalar P,
                                      const std::vector<RowActivation<Scalar>>& states) {
  const Index n = X.rows();
  const Matrix<Scalar> Xt = X.transpose();
  const Matrix<Scalar> Yt = Y.transpose();
  const Matrix<Scalar> Gt = grad_Y.transpose();
  Matrix<Scalar> grad_t = Matrix<Scalar>::Zero(n, n);
  parallel_rows(n, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      detail::activate_row_backward<Scalar>(Xt.col(i).data(), Yt.col(i).data(), Gt.col(i).data(), n, i, P,
                                            states[static_cast<std::size_t>(i)], grad_t.col(i).data());
    }
  });
  Matrix<Scalar> grad = grad_t.transpose();
  return grad;
}

/// (M + M^T) / 2
template <typename Derived>
Matrix<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& M) {
  return (M + M.transpose()) / typename Derived::Scalar(2);
}

/// Connection graph of a latent representation: activation applied to the
/// rows of (z + z^T)/2, with the diagonal excluded.
template <typename Derived>
Matrix<typename Derived::Scalar> make_connection_graph(const Eigen::MatrixBase<Derived>& z,
                                                       typename Derived::Scalar P) {
  using Scalar = typename Derived::Scalar;
  if (z.rows() != z.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "make_connection_graph: latent representation must be square");
  }
  require_finite(z, "make_connection_graph");
  return activate_rows<Scalar>(symmetrize(z), P);
}

/// Weighted sum of child graphs (plus an optional bias), diagonal zeroed.
/// This is the pre-activation of agglomerate().
template <typename Scalar>
Matrix<Scalar> agglomeration_input(std::span<const Matrix<Scalar>> graphs, std::span<const Scalar> weights,
                                   const Matrix<Scalar>* bias = nullptr) {
  if (graphs.empty()) throw Error(ErrorCode::invalid_argument, "agglomerate: no input graphs");
  if (graphs.size() != weights.size()) {
    throw Error(ErrorCode::dimension_mismatch, "agglomerate: " + std::to_string(graphs.size()) + " graphs but " +
                                                   std::to_string(weights.size()) + " weights");
  }
  const Index n = graphs.front().rows();
  Matrix<Scalar> sum = Matrix<Scalar>::Zero(n, n);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (graphs[i].rows() != n || graphs[i].cols() != n) {
      throw Error(ErrorCode::dimension_mismatch, "agglomerate: graph " + std::to_string(i) + " is not " +
                                                     std::to_string(n) + "x" + std::to_string(n));
    }
    sum += weights[i] * graphs[i];
  }
  if (bias) {
    if (bias->rows() != n || bias->cols() != n) {
      throw Error(ErrorCode::dimension_mismatch, "agglomerate: bias shape mismatch");
    }
    sum += *bias;
  }
  sum.diagonal().setZero();
  return sum;
}

/// Agglomeration of child graphs: activation over the weighted sum, then a
/// ReLU.
template <typename Scalar>
Matrix<Scalar> agglomerate(std::span<const Matrix<Scalar>> graphs, std::span<const Scalar> weights, Scalar P,
                           const Matrix<Scalar>* bias = nullptr) {
  Matrix<Scalar> out = activate_rows<Scalar>(agglomeration_input(graphs, weights, bias), P);
  return out.cwiseMax(Scalar(0));
}

/// Unnormalised Laplacian of the symmetrised graph A = (S + S^T)/2.
template <typename Derived>
Matrix<typename Derived::Scalar> laplacian(const Eigen::MatrixBase<Derived>& S) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> A = symmetrize(S);
  A.diagonal().setZero();
  Matrix<Scalar> L = -A;
  L.diagonal() = A.rowwise().sum();
  return L;
}

struct Components {
  int count = 0;
  Labels labels;
};

/// Connected components of the undirected graph with an edge wherever
/// (S_ij + S_ji)/2 exceeds kEdgeThreshold. Components are numbered in the
/// order their lowest-index member appears.
template <typename Derived>
Components connected_components(const Eigen::MatrixBase<Derived>& S) {
  const Index n = S.rows();
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      auto& p = parent[static_cast<std::size_t>(i)];
      p = parent[static_cast<std::size_t>(p)];
      i = p;
    }
    return i;
  };
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if ((S(i, j) + S(j, i)) / 2 > kEdgeThreshold) {
        const Index a = find(i);
        const Index b = find(j);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }
    }
  }
  Components out;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> root_label(static_cast<std::size_t>(n), -1);
  for (Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(find(i));
    if (root_label[r] < 0) root_label[r] = out.count++;
    out.labels[static_cast<std::size_t>(i)] = root_label[r];
  }
  return out;
}

/// Undirected DOT export; one edge per unordered pair with weight A_ij.
void write_dot(const MatrixXd& S, const std::filesystem::path& path);
/// (i, j, weight) triples for i < j with A_ij above kEdgeThreshold.
void write_edge_csv(const MatrixXd& S, const std::filesystem::path& path);

}  // namespace agglo
