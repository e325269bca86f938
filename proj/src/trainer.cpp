#include "agglo/trainer.hpp"

#include "agglo/error.hpp"
#include "agglo/format.hpp"
#include "agglo/graph.hpp"
#include "agglo/linalg.hpp"

#include <cmath>
#include <cstdlib>
#include <ostream>

namespace agglo {

const char* to_string(Mode mode) { return mode == Mode::ann ? "ann" : "annld"; }

Mode parse_mode(const std::string& text) {
  if (text == "ann") return Mode::ann;
  if (text == "annld") return Mode::annld;
  throw Error(ErrorCode::invalid_argument, "unknown mode '" + text + "' (expected ann or annld)");
}

TrainerConfig TrainerConfig::defaults_for(Mode mode) {
  TrainerConfig c;
  c.mode = mode;
  if (mode == Mode::ann) {
    c.lambda_max = 1e5;
    c.p = 1.13;
    c.lr = 0.05;
    c.neighbors = 10;
  } else {
    c.lambda_max = 1e7;
    c.p = 1.05;
    c.lr = 0.1;
    c.neighbors = 9;
  }
  return c;
}

void TrainerConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_argument, what); };
  if (k < 2) fail("k must be at least 2 (got " + std::to_string(k) + ")");
  if (!(lambda_init > 0)) fail("lambda-init must be positive");
  if (!(lambda_init <= lambda_max)) fail("lambda-init must not exceed lambda-max");
  if (!(p > 1)) fail("P must exceed 1");
  if (!(lr > 0)) fail("learning rate must be positive");
  if (neighbors < 1) fail("neighbour count must be at least 1");
  if (max_iters < 0) fail("max-iters must be non-negative");
}

nlohmann::json TrainerConfig::to_json() const {
  return {{"k", k},
          {"lambda_init", lambda_init},
          {"lambda_max", lambda_max},
          {"p", p},
          {"lr", lr},
          {"r", neighbors},
          {"mode", to_string(mode)},
          {"max_iters", max_iters},
          {"seed", seed}};
}

TrainerConfig TrainerConfig::from_json(const nlohmann::json& doc) {
  try {
    TrainerConfig c = defaults_for(parse_mode(doc.at("mode").get<std::string>()));
    c.k = doc.at("k").get<int>();
    c.lambda_init = doc.at("lambda_init").get<double>();
    c.lambda_max = doc.at("lambda_max").get<double>();
    c.p = doc.at("p").get<double>();
    c.lr = doc.at("lr").get<double>();
    c.neighbors = doc.at("r").get<Index>();
    c.max_iters = doc.at("max_iters").get<int>();
    c.seed = doc.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("trainer config: ") + e.what());
  }
}

AdamMoments make_moments(const ParameterSet& like) { return {zeros_like(like), zeros_like(like), 0}; }

void adam_step(ParameterSet& params, const ParameterSet& grads, AdamMoments& moments, double lr) {
  ++moments.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(moments.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(moments.step));
  for_each_block(
      [&](auto& x, const auto& g, auto& m, auto& v) {
        m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
        v = (kAdamBeta2 * v.array() + (1.0 - kAdamBeta2) * g.array().square()).matrix();
        x.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEpsilon);
      },
      params, grads, moments.first, moments.second);
}

SpectralUpdate update_F(const MatrixXd& consensus, int k) {
  const MatrixXd L = laplacian(consensus);
  EigenResult<double> eig = sym_eigs_smallest(L, k);
  SpectralUpdate out;
  out.eigen_sum = eig.values.sum();
  out.eigenvalues = std::move(eig.values);
  out.F = std::move(eig.vectors);
  return out;
}

ScheduleAction schedule_lambda(double& lambda, double lambda_max, int components, int k) {
  if (components < 1) throw Error(ErrorCode::invalid_argument, "component count must be at least 1");
  if (components == k) return ScheduleAction::terminate;
  if (components < k) {
    lambda = std::min(lambda_max, 2.0 * lambda);
    return ScheduleAction::accept_double;
  }
  lambda /= 2.0;
  return ScheduleAction::restore_halve;
}

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out) {
  out << "iteration,lambda,components,eigval_sum,loss_sc,loss_gc,loss_cac,loss_total\n";
  for (const TraceRow& r : trace) {
    out << r.iteration << ',' << format_real(r.lambda) << ',' << r.components << ',' << format_real(r.eigen_sum)
        << ',' << format_real(r.loss.sc) << ',' << format_real(r.loss.gc) << ',' << format_real(r.loss.cac) << ','
        << format_real(r.loss.total) << '\n';
  }
}

TrainResult train(const TrainerConfig& config, const Dataset& dataset, const ViewStructure& structure) {
  config.validate();
  Network network(structure, dataset, NetworkConfig{config.mode, config.p, config.neighbors});
  return train(config, network);
}

TrainResult train(const TrainerConfig& config, const Network& network) {
  config.validate();
  if (config.k > network.samples()) {
    throw Error(ErrorCode::invalid_argument, "k exceeds the sample count");
  }

  // Current accepted state.
  Snapshot state;
  state.params = network.initial_parameters();
  state.moments = make_moments(state.params);
  state.lambda = config.lambda_init;
  // Forward trace of the accepted parameters; S^(c) does not depend on F.
  ForwardTrace state_trace = network.forward(state.params, MatrixXd::Zero(network.samples(), config.k), 0.0);
  state.consensus = state_trace.consensus;
  SpectralUpdate spectral = update_F(state.consensus, config.k);
  state.F = spectral.F;
  state.components = connected_components(state.consensus).count;

  TrainResult result;
  {
    LossBreakdown loss = state_trace.loss;
    loss.sc = loss_sc(state.F, state.consensus, state.lambda);
    loss.total = loss.sc + loss.gc + loss.cac;
    result.trace.push_back({0, state.lambda, state.components, spectral.eigen_sum, loss});
  }

  MatrixXd best_graph = state.consensus;
  int best_components = state.components;
  auto consider = [&](const MatrixXd& graph, int components) {
    if (std::abs(components - config.k) <= std::abs(best_components - config.k)) {
      best_graph = graph;
      best_components = components;
    }
  };

  bool converged = state.components == config.k;
  int iteration = 0;
  while (!converged && iteration < config.max_iters) {
    ++iteration;
    const double lambda = state.lambda;
    ParameterSet params = state.params;
    AdamMoments moments = state.moments;
    const ParameterSet grad = network.backward(params, state_trace, state.F, lambda);
    adam_step(params, grad, moments, config.lr);

    ForwardTrace probe = network.forward(params, state.F, lambda);
    SpectralUpdate next = update_F(probe.consensus, config.k);
    const int components = connected_components(probe.consensus).count;
    LossBreakdown loss = probe.loss;
    loss.sc = loss_sc(next.F, probe.consensus, lambda);
    loss.total = loss.sc + loss.gc + loss.cac;
    result.trace.push_back({iteration, lambda, components, next.eigen_sum, loss});
    consider(probe.consensus, components);

    double new_lambda = state.lambda;
    switch (schedule_lambda(new_lambda, config.lambda_max, components, config.k)) {
      case ScheduleAction::terminate:
        state.params = std::move(params);
        state.moments = std::move(moments);
        state.F = std::move(next.F);
        state.consensus = probe.consensus;
        state.components = components;
        state.iteration = iteration;
        state_trace = std::move(probe);
        converged = true;
        break;
      case ScheduleAction::accept_double:
        state.params = std::move(params);
        state.moments = std::move(moments);
        state.F = std::move(next.F);
        state.consensus = probe.consensus;
        state.components = components;
        state.iteration = iteration;
        state.lambda = new_lambda;
        state_trace = std::move(probe);
        break;
      case ScheduleAction::restore_halve:
        // The rejected step is discarded; only lambda changes.
        state.lambda = new_lambda;
        break;
    }
  }

  result.converged = converged;
  result.iterations = iteration;
  result.consensus = converged ? state.consensus : best_graph;
  const Components comps = connected_components(result.consensus);
  result.components = comps.count;
  result.labels = comps.labels;
  return result;
}

}  // namespace agglo
