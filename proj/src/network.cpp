#include "agglo/network.hpp"

#include "agglo/error.hpp"
#include "agglo/linalg.hpp"

#include <cmath>

namespace agglo {

namespace {

/// Squared row distances ||F_i - F_j||^2.
MatrixXd embedding_gaps(const MatrixXd& F) {
  const VectorXd sq = F.rowwise().squaredNorm();
  MatrixXd gaps = -2.0 * F * F.transpose();
  gaps.colwise() += sq;
  gaps.rowwise() += sq.transpose();
  gaps.diagonal().setZero();
  return gaps.cwiseMax(0.0);
}

void hash_mix(std::uint64_t& h, std::uint64_t v) {
  // FNV-1a over the 8 bytes of v
  for (int b = 0; b < 8; ++b) {
    h ^= (v >> (8 * b)) & 0xffu;
    h *= 0x100000001b3ull;
  }
}

}  // namespace

ParameterSet zeros_like(const ParameterSet& like) {
  ParameterSet out = like;
  for_each_block([](auto& block) { block.setZero(); }, out);
  return out;
}

std::uint64_t branch_signature(const ForwardTrace& trace) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t v = 0; v < trace.activation.size(); ++v) {
    const MatrixXd& x = trace.pre_activation[v];
    for (Index i = 0; i < x.rows(); ++i) {
      const auto& st = trace.activation[v][static_cast<std::size_t>(i)];
      hash_mix(h, static_cast<std::uint64_t>(st.pivot + 1));
      hash_mix(h, (st.last_edge ? 1u : 0u) | (st.pivot_tied ? 2u : 0u));
      std::uint64_t bits = 0;
      for (Index j = 0; j < x.cols(); ++j) {
        bits = (bits << 1) | (j != i && x(i, j) > 0 ? 1u : 0u);
        if ((j & 63) == 63) hash_mix(h, bits);
      }
      hash_mix(h, bits);
    }
  }
  for (const BoolMatrix& m : trace.neighbor_mask) {
    for (Index i = 0; i < m.size(); ++i) {
      if (m.data()[i]) hash_mix(h, static_cast<std::uint64_t>(i));
    }
  }
  return h;
}

AgglomeratedDistances agglomerate_raw(std::span<const MatrixXd> leaf_distances, const ViewStructure& structure) {
  const auto leaves = structure.leaves();
  if (leaf_distances.size() != leaves.size()) {
    throw Error(ErrorCode::dimension_mismatch, "agglomerate_raw: " + std::to_string(leaf_distances.size()) +
                                                   " distance matrices for " + std::to_string(leaves.size()) +
                                                   " leaves");
  }
  const Index n = leaf_distances.front().rows();
  AgglomeratedDistances out;
  out.per_node.resize(structure.nodes().size());
  for (std::size_t t = 0; t < leaves.size(); ++t) {
    if (leaf_distances[t].rows() != n || leaf_distances[t].cols() != n) {
      throw Error(ErrorCode::sample_count_mismatch, "agglomerate_raw: leaf '" + structure.node(leaves[t]).id +
                                                        "' distance matrix is not " + std::to_string(n) + "x" +
                                                        std::to_string(n));
    }
    out.per_node[leaves[t]] = leaf_distances[t];
  }
  for (std::size_t node : structure.internal_bottom_up()) {
    const auto children = structure.children(node);
    MatrixXd sum = MatrixXd::Zero(n, n);
    for (std::size_t c : children) sum += out.per_node[c];
    out.per_node[node] = sum / static_cast<double>(children.size());
  }
  out.consensus = out.per_node[structure.root()];
  return out;
}

std::vector<double> consensus_leaf_weights(const ViewStructure& structure) {
  std::vector<double> out;
  for (std::size_t leaf : structure.leaves()) {
    double w = 1.0;
    for (std::size_t v = leaf; v != structure.root(); v = structure.parent(v)) {
      w /= static_cast<double>(subview_count(structure, structure.parent(v)));
    }
    out.push_back(w);
  }
  return out;
}

MatrixXd project_data(const MatrixXd& X, const VectorXd& h) {
  if (h.size() != X.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "project_data: " + std::to_string(h.size()) + " scales for " +
                                                   std::to_string(X.cols()) + " features");
  }
  MatrixXd centered = X.rowwise() - X.colwise().mean();
  return (centered * h.asDiagonal()).array().tanh().matrix();
}

double loss_gc(std::span<const MatrixXd> latent, std::span<const MatrixXd> leaf_distances) {
  if (latent.size() != leaf_distances.size()) {
    throw Error(ErrorCode::dimension_mismatch, "loss_gc: latent and distance counts differ");
  }
  double total = 0;
  for (std::size_t v = 0; v < latent.size(); ++v) {
    const MatrixXd zs = symmetrize(latent[v]);
    total += leaf_distances[v].cwiseProduct(zs).sum() + zs.squaredNorm();
  }
  return total;
}

double loss_sc(const MatrixXd& F, const MatrixXd& consensus, double lambda) {
  MatrixXd A = symmetrize(consensus);
  A.diagonal().setZero();
  return lambda * 0.5 * A.cwiseProduct(embedding_gaps(F)).sum();
}

double loss_cac(const MatrixXd& consensus, const MatrixXd& consensus_distance, std::span<const MatrixXd> biases) {
  double total = consensus_distance.cwiseProduct(consensus).sum() + consensus.squaredNorm();
  for (const MatrixXd& b : biases) total += b.squaredNorm();
  return total;
}

MatrixXd initial_latent(const MatrixXd& distances, const BoolMatrix& mask) {
  const Index n = distances.rows();
  MatrixXd z = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    double row_max = 0;
    for (Index j = 0; j < n; ++j) {
      if (mask(i, j)) row_max = std::max(row_max, distances(i, j));
    }
    for (Index j = 0; j < n; ++j) {
      if (mask(i, j)) z(i, j) = row_max - distances(i, j);
    }
  }
  return symmetrize(z);
}

Network::Network(ViewStructure structure, NetworkConfig config)
    : structure_(std::move(structure)), config_(config) {
  if (!(config_.p > 1)) throw Error(ErrorCode::invalid_argument, "P must exceed 1");
}

Network::Network(ViewStructure structure, const Dataset& dataset, NetworkConfig config)
    : Network(std::move(structure), config) {
  const StructureReport report = validate(structure_, dataset);
  n_ = report.samples;
  if (config_.neighbors < 1 || config_.neighbors > n_ - 1) {
    throw Error(ErrorCode::invalid_argument, "neighbour count " + std::to_string(config_.neighbors) +
                                                 " outside [1, " + std::to_string(n_ - 1) + "]");
  }
  for (std::size_t leaf : structure_.leaves()) {
    const MatrixXd& X = dataset.views.at(structure_.node(leaf).data);
    require_finite(X, ("view '" + structure_.node(leaf).data + "'").c_str());
    if (config_.mode == Mode::annld) {
      centered_.push_back(X.rowwise() - X.colwise().mean());
    } else {
      const MatrixXd full = pairwise_distances(X);
      BoolMatrix mask = knn_mask(full, config_.neighbors);
      fixed_distances_.push_back(mask.select(full, MatrixXd::Zero(n_, n_)));
      fixed_masks_.push_back(std::move(mask));
    }
  }
}

Network Network::from_distances(ViewStructure structure, std::vector<MatrixXd> leaf_distances, double p) {
  Network net(std::move(structure), NetworkConfig{Mode::ann, p, 1});
  if (leaf_distances.size() != net.structure_.leaves().size()) {
    throw Error(ErrorCode::dimension_mismatch, "from_distances: one distance matrix per leaf required");
  }
  net.n_ = leaf_distances.front().rows();
  for (MatrixXd& D : leaf_distances) {
    if (D.rows() != net.n_ || D.cols() != net.n_) {
      throw Error(ErrorCode::sample_count_mismatch, "from_distances: distance matrices differ in size");
    }
    require_finite(D, "from_distances");
    BoolMatrix mask = D.array() != 0.0;
    mask.matrix().diagonal().setConstant(false);
    net.fixed_masks_.push_back(std::move(mask));
    net.fixed_distances_.push_back(std::move(D));
  }
  return net;
}

std::vector<MatrixXd> Network::leaf_distances(const ParameterSet& params, std::vector<BoolMatrix>* masks,
                                              std::vector<MatrixXd>* projected) const {
  if (config_.mode == Mode::ann) {
    if (masks) *masks = fixed_masks_;
    return fixed_distances_;
  }
  std::vector<MatrixXd> out;
  if (masks) masks->clear();
  if (projected) projected->clear();
  for (std::size_t t = 0; t < centered_.size(); ++t) {
    if (params.scales.size() != centered_.size() || params.scales[t].size() != centered_[t].cols()) {
      throw Error(ErrorCode::dimension_mismatch, "scale vector shape does not match leaf features");
    }
    MatrixXd Xp = (centered_[t] * params.scales[t].asDiagonal()).array().tanh().matrix();
    const MatrixXd full = pairwise_distances(Xp);
    BoolMatrix mask = knn_mask(full, config_.neighbors);
    out.push_back(mask.select(full, MatrixXd::Zero(n_, n_)));
    if (masks) masks->push_back(std::move(mask));
    if (projected) projected->push_back(std::move(Xp));
  }
  return out;
}

ParameterSet Network::initial_parameters() const {
  ParameterSet p;
  const auto leaves = structure_.leaves();
  if (config_.mode == Mode::annld) {
    for (const MatrixXd& X : centered_) p.scales.push_back(VectorXd::Ones(X.cols()));
  }
  std::vector<BoolMatrix> masks;
  const std::vector<MatrixXd> D = leaf_distances(p, &masks);
  for (std::size_t t = 0; t < leaves.size(); ++t) p.latent.push_back(initial_latent(D[t], masks[t]));
  for (std::size_t node : structure_.internal_bottom_up()) {
    const double count = static_cast<double>(subview_count(structure_, node));
    p.weights.push_back(VectorXd::Constant(static_cast<Index>(count), 1.0 / count));
    if (config_.mode == Mode::annld) p.biases.push_back(MatrixXd::Zero(n_, n_));
  }
  return p;
}

ForwardTrace Network::forward(const ParameterSet& params, const MatrixXd& F, double lambda) const {
  const auto leaves = structure_.leaves();
  const auto internal = structure_.internal_bottom_up();
  if (params.latent.size() != leaves.size() || params.weights.size() != internal.size()) {
    throw Error(ErrorCode::dimension_mismatch, "parameter set does not match the view structure");
  }
  const bool learnable = config_.mode == Mode::annld;
  if (learnable && params.biases.size() != internal.size()) {
    throw Error(ErrorCode::dimension_mismatch, "learnable data space needs one bias per internal view");
  }
  if (F.rows() != n_) throw Error(ErrorCode::dimension_mismatch, "F must have one row per sample");

  ForwardTrace tr;
  const std::size_t nodes = structure_.nodes().size();
  tr.graphs.resize(nodes);
  tr.pre_activation.resize(nodes);
  tr.activation.resize(nodes);

  const std::vector<MatrixXd> D = leaf_distances(params, &tr.neighbor_mask, learnable ? &tr.projected : nullptr);
  AgglomeratedDistances agg = agglomerate_raw(D, structure_);
  tr.distances = std::move(agg.per_node);
  tr.consensus_distance = std::move(agg.consensus);

  for (std::size_t t = 0; t < leaves.size(); ++t) {
    const std::size_t v = leaves[t];
    if (params.latent[t].rows() != n_ || params.latent[t].cols() != n_) {
      throw Error(ErrorCode::dimension_mismatch, "latent representation must be n x n");
    }
    tr.pre_activation[v] = symmetrize(params.latent[t]);
    tr.graphs[v] = activate_rows<double>(tr.pre_activation[v], config_.p, &tr.activation[v]);
  }
  for (std::size_t u = 0; u < internal.size(); ++u) {
    const std::size_t v = internal[u];
    const auto children = structure_.children(v);
    if (params.weights[u].size() != static_cast<Index>(children.size())) {
      throw Error(ErrorCode::dimension_mismatch, "view '" + structure_.node(v).id + "' needs one weight per subview");
    }
    std::vector<MatrixXd> inputs;
    inputs.reserve(children.size());
    for (std::size_t c : children) inputs.push_back(tr.graphs[c]);
    std::vector<double> w(params.weights[u].data(), params.weights[u].data() + params.weights[u].size());
    tr.pre_activation[v] = agglomeration_input<double>(inputs, w, learnable ? &params.biases[u] : nullptr);
    tr.graphs[v] = activate_rows<double>(tr.pre_activation[v], config_.p, &tr.activation[v]).cwiseMax(0.0);
  }
  tr.consensus = tr.graphs[structure_.root()];

  tr.loss.sc = loss_sc(F, tr.consensus, lambda);
  tr.loss.gc = loss_gc(params.latent, D);
  tr.loss.cac = loss_cac(tr.consensus, tr.consensus_distance,
                         learnable ? std::span<const MatrixXd>(params.biases) : std::span<const MatrixXd>());
  tr.loss.total = tr.loss.sc + tr.loss.gc + tr.loss.cac;
  return tr;
}

GradientResult Network::gradients(const ParameterSet& params, const MatrixXd& F, double lambda) const {
  GradientResult res;
  res.trace = forward(params, F, lambda);
  res.grad = backward(params, res.trace, F, lambda);
  return res;
}

ParameterSet Network::backward(const ParameterSet& params, const ForwardTrace& tr, const MatrixXd& F,
                               double lambda) const {
  ParameterSet g = zeros_like(params);
  const auto leaves = structure_.leaves();
  const auto internal = structure_.internal_bottom_up();
  const bool learnable = config_.mode == Mode::annld;

  std::vector<MatrixXd> grad_graph(structure_.nodes().size());
  // d/dS^(c) of the spectral and consensus terms.
  grad_graph[structure_.root()] =
      0.5 * lambda * embedding_gaps(F) + tr.consensus_distance + 2.0 * tr.consensus;

  for (std::size_t u = internal.size(); u-- > 0;) {
    const std::size_t v = internal[u];
    // The trailing ReLU is the identity on every entry the activation can
    // emit, so the gradient passes straight through it.
    const MatrixXd grad_in = activate_rows_backward<double>(tr.pre_activation[v], tr.graphs[v], grad_graph[v],
                                                            config_.p, tr.activation[v]);
    const auto children = structure_.children(v);
    for (std::size_t c = 0; c < children.size(); ++c) {
      const std::size_t child = children[c];
      g.weights[u](static_cast<Index>(c)) = grad_in.cwiseProduct(tr.graphs[child]).sum();
      const MatrixXd contribution = params.weights[u](static_cast<Index>(c)) * grad_in;
      if (grad_graph[child].size() == 0) {
        grad_graph[child] = contribution;
      } else {
        grad_graph[child] += contribution;
      }
    }
    if (learnable) g.biases[u] = grad_in + 2.0 * params.biases[u];
  }

  const std::vector<double> leaf_w = consensus_leaf_weights(structure_);
  for (std::size_t t = 0; t < leaves.size(); ++t) {
    const std::size_t v = leaves[t];
    const MatrixXd& zs = tr.pre_activation[v];
    const MatrixXd& D = tr.distances[v];
    MatrixXd grad_zs =
        activate_rows_backward<double>(zs, tr.graphs[v], grad_graph[v], config_.p, tr.activation[v]) + D + 2.0 * zs;
    g.latent[t] = symmetrize(grad_zs);

    if (!learnable) continue;
    // dL/dD on retained entries: z~ from the consistency term, the leaf's
    // share of S^(c) from the consensus term.
    const BoolMatrix& mask = tr.neighbor_mask[t];
    const MatrixXd grad_D = zs + leaf_w[t] * tr.consensus;
    MatrixXd coef = MatrixXd::Zero(n_, n_);
    for (Index j = 0; j < n_; ++j) {
      for (Index i = 0; i < n_; ++i) {
        if (mask(i, j) && D(i, j) > 0) coef(i, j) = grad_D(i, j) / D(i, j);
      }
    }
    const MatrixXd both = coef + coef.transpose();
    const MatrixXd& Xp = tr.projected[t];
    const MatrixXd grad_Xp = both.rowwise().sum().asDiagonal() * Xp - both * Xp;
    const MatrixXd dtanh = (1.0 - Xp.array().square()).matrix();
    g.scales[t] = (grad_Xp.cwiseProduct(dtanh).cwiseProduct(centered_[t])).colwise().sum().transpose();
  }
  return g;
}

}  // namespace agglo
