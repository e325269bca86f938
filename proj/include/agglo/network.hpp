#pragma once

#include "agglo/dataset.hpp"
#include "agglo/graph.hpp"
#include "agglo/types.hpp"
#include "agglo/view_structure.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace agglo {

/// Trainable quantities. Per-leaf blocks follow ViewStructure::leaves(),
/// per-internal-node blocks follow ViewStructure::internal_bottom_up().
struct ParameterSet {
  std::vector<MatrixXd> latent;   ///< z, one n x n block per leaf
  std::vector<VectorXd> weights;  ///< w, one entry per child of each internal node
  std::vector<VectorXd> scales;   ///< h, one entry per feature of each leaf (learnable data space only)
  std::vector<MatrixXd> biases;   ///< b, one n x n block per internal node (learnable data space only)
};

/// Calls f(block_a, block_b, ...) on corresponding blocks of several
/// identically shaped parameter sets.
template <typename F, typename First, typename... Rest>
void for_each_block(F&& f, First& first, Rest&... rest) {
  for (std::size_t i = 0; i < first.latent.size(); ++i) f(first.latent[i], rest.latent[i]...);
  for (std::size_t i = 0; i < first.weights.size(); ++i) f(first.weights[i], rest.weights[i]...);
  for (std::size_t i = 0; i < first.scales.size(); ++i) f(first.scales[i], rest.scales[i]...);
  for (std::size_t i = 0; i < first.biases.size(); ++i) f(first.biases[i], rest.biases[i]...);
}

/// Same shapes as `like`, all zero.
ParameterSet zeros_like(const ParameterSet& like);

struct LossBreakdown {
  double sc = 0;  ///< lambda * Tr(F^T L F)
  double gc = 0;
  double cac = 0;
  double total = 0;
};

/// Everything one forward pass produces. Per-node vectors are indexed by
/// ViewStructure node index.
struct ForwardTrace {
  std::vector<MatrixXd> distances;  ///< leaf D (sparsified) and agglomerated D
  MatrixXd consensus_distance;      ///< D^(c)
  std::vector<MatrixXd> graphs;     ///< S^(v)
  MatrixXd consensus;               ///< S^(c)
  LossBreakdown loss;

  // Backpropagation state.
  std::vector<MatrixXd> pre_activation;  ///< leaves: (z+z^T)/2, internal: weighted sum (+ bias)
  std::vector<std::vector<RowActivation<double>>> activation;
  std::vector<BoolMatrix> neighbor_mask;  ///< per leaf position
  std::vector<MatrixXd> projected;        ///< per leaf position, learnable data space only
};

/// Hash of every discrete selector in a trace (row pivots, last-edge flags,
/// active sets, neighbour masks). Equal signatures mean two traces lie on
/// the same smooth piece of the loss.
std::uint64_t branch_signature(const ForwardTrace& trace);

struct AgglomeratedDistances {
  std::vector<MatrixXd> per_node;  ///< indexed by node; leaves hold their input
  MatrixXd consensus;
};

/// Each internal node's distance matrix is the unweighted mean of its
/// children's, bottom-up to the root.
AgglomeratedDistances agglomerate_raw(std::span<const MatrixXd> leaf_distances, const ViewStructure& structure);

/// Effective weight of every leaf distance inside D^(c): the product of
/// 1/|v| along the path to the root. Sums to one.
std::vector<double> consensus_leaf_weights(const ViewStructure& structure);

/// tanh(h_j * (X_ij - mean_j)) with column means of X.
MatrixXd project_data(const MatrixXd& X, const VectorXd& h);

/// Sum over leaves of sum(D o z~) + ||z~||_F^2 with z~ = (z + z^T)/2.
double loss_gc(std::span<const MatrixXd> latent, std::span<const MatrixXd> leaf_distances);

/// lambda * Tr(F^T L F), evaluated as lambda/2 * sum_ij A_ij ||F_i - F_j||^2.
double loss_sc(const MatrixXd& F, const MatrixXd& consensus, double lambda);

/// sum(D^(c) o S^(c)) + ||S^(c)||_F^2 (+ sum of ||b||_F^2 over biases).
double loss_cac(const MatrixXd& consensus, const MatrixXd& consensus_distance,
                std::span<const MatrixXd> biases = {});

/// Initial latent representation from a sparsified distance matrix: on
/// retained entries, the row's largest retained distance minus D_ij; zero
/// elsewhere; then symmetrised.
MatrixXd initial_latent(const MatrixXd& distances, const BoolMatrix& mask);

struct NetworkConfig {
  Mode mode = Mode::ann;
  double p = 1.13;
  Index neighbors = 10;
};

struct GradientResult {
  ParameterSet grad;
  ForwardTrace trace;
};

/// The agglomerative network over one dataset and view structure.
///
/// In ANN mode the leaf distance matrices are computed once from the raw
/// features. In learnable-data-space mode they are recomputed on every pass
/// from tanh-projected features, and biases enter each agglomeration.
class Network {
 public:
  Network(ViewStructure structure, const Dataset& dataset, NetworkConfig config);

  /// ANN network over precomputed leaf distance matrices (leaf order).
  /// Nonzero off-diagonal entries count as retained neighbours.
  static Network from_distances(ViewStructure structure, std::vector<MatrixXd> leaf_distances, double p);

  const ViewStructure& structure() const { return structure_; }
  const NetworkConfig& config() const { return config_; }
  Index samples() const { return n_; }

  /// h = 1, b = 0, w = 1/|v|, z from the initial leaf distances.
  ParameterSet initial_parameters() const;

  /// Sparsified leaf distances and their neighbour masks at `params`.
  std::vector<MatrixXd> leaf_distances(const ParameterSet& params, std::vector<BoolMatrix>* masks = nullptr,
                                       std::vector<MatrixXd>* projected = nullptr) const;

  /// Forward pass with F held fixed.
  ForwardTrace forward(const ParameterSet& params, const MatrixXd& F, double lambda) const;

  /// Exact gradients of the total loss with F held fixed. Activation
  /// selectors and neighbour masks are frozen at their current values.
  GradientResult gradients(const ParameterSet& params, const MatrixXd& F, double lambda) const;

  /// Backward pass over a trace produced by forward(params, ...). The
  /// gradient does not depend on the F the trace was built with.
  ParameterSet backward(const ParameterSet& params, const ForwardTrace& trace, const MatrixXd& F,
                        double lambda) const;

 private:
  Network(ViewStructure structure, NetworkConfig config);

  ViewStructure structure_;
  NetworkConfig config_;
  Index n_ = 0;
  std::vector<MatrixXd> centered_;        // learnable data space: per leaf, column-centred features
  std::vector<MatrixXd> fixed_distances_;  // ANN: per leaf
  std::vector<BoolMatrix> fixed_masks_;
};

}  // namespace agglo
