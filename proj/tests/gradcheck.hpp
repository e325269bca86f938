#pragma once

// Random small networks and a central-difference gradient check, shared by
// the unit tests and the acceptance binary.

#include "agglo/network.hpp"
#include "agglo/view_structure.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace gradcheck {

struct Instance {
  agglo::Dataset dataset;
  agglo::ViewStructure structure;
  agglo::NetworkConfig config;
  agglo::ParameterSet params;
  agglo::MatrixXd F;
  double lambda = 1.0;
};

inline agglo::MatrixXd normal_matrix(agglo::Index r, agglo::Index c, std::mt19937_64& gen, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  agglo::MatrixXd m(r, c);
  for (agglo::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(gen);
  return m;
}

/// n in [8, 12], 2 to 4 leaves, one or two layers, parameters moved away
/// from their initial values.
inline Instance random_instance(std::uint64_t seed, agglo::Mode mode) {
  std::mt19937_64 gen(seed);
  const agglo::Index n = std::uniform_int_distribution<agglo::Index>(8, 12)(gen);
  const int leaves = std::uniform_int_distribution<int>(2, 4)(gen);
  const bool two_layers = std::uniform_int_distribution<int>(0, 1)(gen) == 1;

  agglo::Dataset ds;
  std::vector<agglo::ViewNode> nodes;
  std::vector<std::string> names;
  for (int t = 0; t < leaves; ++t) {
    const std::string name = "v" + std::to_string(t);
    const agglo::Index dims = std::uniform_int_distribution<agglo::Index>(1, 4)(gen);
    ds.views[name] = normal_matrix(n, dims, gen, 1.0);
    nodes.push_back({name, 0, {}, name});
    names.push_back(name);
  }
  if (two_layers) {
    // First group takes the first leaf (or two), the second the rest.
    const int split = leaves > 2 ? 2 : 1;
    agglo::ViewNode a{"ga", 1, {}, {}};
    agglo::ViewNode b{"gb", 1, {}, {}};
    for (int t = 0; t < leaves; ++t) (t < split ? a : b).children.push_back(names[static_cast<std::size_t>(t)]);
    nodes.push_back(a);
    nodes.push_back(b);
    nodes.push_back({"root", 2, {"ga", "gb"}, {}});
  } else {
    nodes.push_back({"root", 1, names, {}});
  }

  const agglo::Index r = std::uniform_int_distribution<agglo::Index>(2, n - 2)(gen);
  const double p = std::uniform_real_distribution<double>(1.05, 1.6)(gen);
  Instance inst{std::move(ds), agglo::ViewStructure(nodes), agglo::NetworkConfig{mode, p, r}, {}, {}, 1.0};

  const agglo::Network net(inst.structure, inst.dataset, inst.config);
  inst.params = net.initial_parameters();
  for (auto& z : inst.params.latent) z += normal_matrix(n, n, gen, 0.3);
  for (auto& w : inst.params.weights) w += normal_matrix(w.size(), 1, gen, 0.1);
  for (auto& h : inst.params.scales) h += normal_matrix(h.size(), 1, gen, 0.2);
  for (auto& b : inst.params.biases) b += normal_matrix(n, n, gen, 0.05);

  const agglo::Index k = std::uniform_int_distribution<agglo::Index>(2, 3)(gen);
  Eigen::HouseholderQR<agglo::MatrixXd> qr(normal_matrix(n, k, gen, 1.0));
  inst.F = qr.householderQ() * agglo::MatrixXd::Identity(n, k);
  inst.lambda = std::uniform_real_distribution<double>(0.5, 20.0)(gen);
  return inst;
}

struct Report {
  double max_relative_error = 0;
  long checked = 0;
  long skipped = 0;
};

/// Scale below which a gradient entry is compared absolutely rather than
/// relatively; central differences carry roundoff of order eps * |L| / h.
inline constexpr double kRelativeFloor = 1e-3;

/// Compares every analytic gradient entry to a central difference with the
/// given step. A coordinate is skipped when either probe point lies on a
/// different branch (activation selectors or neighbour masks) than the base
/// point.
inline Report check(const Instance& inst, double step = 1e-5) {
  const agglo::Network net(inst.structure, inst.dataset, inst.config);
  const agglo::GradientResult base = net.gradients(inst.params, inst.F, inst.lambda);
  const std::uint64_t base_sig = agglo::branch_signature(base.trace);

  agglo::ParameterSet probe = inst.params;
  agglo::ParameterSet grad = base.grad;
  Report rep;
  agglo::for_each_block(
      [&](auto& block, auto& g) {
        for (agglo::Index i = 0; i < block.size(); ++i) {
          double& x = block.data()[i];
          const double saved = x;
          x = saved + step;
          const agglo::ForwardTrace up = net.forward(probe, inst.F, inst.lambda);
          x = saved - step;
          const agglo::ForwardTrace down = net.forward(probe, inst.F, inst.lambda);
          x = saved;
          if (agglo::branch_signature(up) != base_sig || agglo::branch_signature(down) != base_sig) {
            ++rep.skipped;
            continue;
          }
          const double numeric = (up.loss.total - down.loss.total) / (2 * step);
          const double analytic = g.data()[i];
          const double scale = std::max({std::abs(numeric), std::abs(analytic), kRelativeFloor});
          rep.max_relative_error = std::max(rep.max_relative_error, std::abs(numeric - analytic) / scale);
          ++rep.checked;
        }
      },
      probe, grad);
  return rep;
}

}  // namespace gradcheck
