#pragma once

#include "agglo/dataset.hpp"
#include "agglo/network.hpp"
#include "agglo/view_structure.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace agglo {

struct TrainerConfig {
  int k = 2;
  double lambda_init = 15.0;
  double lambda_max = 1e5;
  double p = 1.13;
  double lr = 0.05;
  Index neighbors = 10;
  Mode mode = Mode::ann;
  int max_iters = 1000;
  std::uint64_t seed = 0;

  /// Published per-mode settings: ANN uses lambda_max 1e5, P 1.13, lr 0.05,
  /// 10 neighbours; the learnable-data-space variant 1e7, 1.05, 0.1, 9.
  static TrainerConfig defaults_for(Mode mode);

  /// Throws Error(invalid_argument) on k < 2, lambda_init > lambda_max,
  /// neighbors < 1, P <= 1, lr <= 0 or max_iters < 0.
  void validate() const;

  nlohmann::json to_json() const;
  static TrainerConfig from_json(const nlohmann::json& doc);
};

const char* to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct AdamMoments {
  ParameterSet first;
  ParameterSet second;
  long step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

AdamMoments make_moments(const ParameterSet& like);

/// One bias-corrected Adam update, in place.
void adam_step(ParameterSet& params, const ParameterSet& grads, AdamMoments& moments, double lr);

struct SpectralUpdate {
  MatrixXd F;             ///< n x k orthonormal eigenvectors
  VectorXd eigenvalues;  ///< k smallest Laplacian eigenvalues
  double eigen_sum = 0;
};

/// Eigenvectors of the k smallest eigenvalues of laplacian(S).
SpectralUpdate update_F(const MatrixXd& consensus, int k);

enum class ScheduleAction { accept_double, restore_halve, terminate };

/// Lambda schedule: fewer components than k doubles lambda (capped),
/// more halves it and asks for a restore, exactly k terminates. Returns the
/// action and updates lambda in place.
ScheduleAction schedule_lambda(double& lambda, double lambda_max, int components, int k);

/// Everything needed to resume training from an accepted state.
struct Snapshot {
  ParameterSet params;
  AdamMoments moments;
  MatrixXd F;
  MatrixXd consensus;
  double lambda = 0;
  int iteration = 0;
  int components = 0;
};

struct TraceRow {
  int iteration = 0;
  double lambda = 0;  ///< lambda the step was taken with
  int components = 0;
  double eigen_sum = 0;
  LossBreakdown loss;
};

struct TrainResult {
  Labels labels;
  MatrixXd consensus;
  std::vector<TraceRow> trace;
  bool converged = false;
  int iterations = 0;
  int components = 0;
};

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out);

/// Alternates one Adam step on the network parameters with an eigenvector
/// update of F until the consensus graph has exactly k components or
/// max_iters steps have run. Without convergence the returned state is the
/// one whose component count is closest to k (latest wins ties).
TrainResult train(const TrainerConfig& config, const Dataset& dataset, const ViewStructure& structure);

/// Lower-level entry point over an already built network.
TrainResult train(const TrainerConfig& config, const Network& network);

}  // namespace agglo
