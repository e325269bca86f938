#pragma once

#include "agglo/dataset.hpp"
#include "agglo/metrics.hpp"
#include "agglo/trainer.hpp"
#include "agglo/view_structure.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace agglo {

/// Headerless numeric CSV, one row per sample.
MatrixXd read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const MatrixXd& m, const std::filesystem::path& path);

/// One integer per line.
Labels read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(const Labels& labels, const std::filesystem::path& path);

/// Reads a manifest {"views": {"<name>": "<csv>"}, "labels": "<csv>"}.
/// Relative paths resolve against the manifest's directory.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes one CSV per view, labels.csv when present, and manifest.json into
/// dir. Returns the manifest path.
std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

struct SyntheticData {
  Dataset dataset;
  ViewStructure structure;
};

struct BlobOptions {
  int n_per_cluster = 50;
  int k = 3;
  int views = 2;
  int dims = 2;
  double separation = 8.0;
  double noise = 1.0;
  std::uint64_t seed = 0;
};

/// Isotropic Gaussian blobs. Every view gets its own k centres at mutual
/// distance >= separation * noise; all views share the cluster assignment.
/// Samples are ordered cluster by cluster. Flat structure, m = 1.
SyntheticData synth_blobs(const BlobOptions& options);

struct LayeredOptions {
  int n = 71;
  int k = 6;
  std::vector<int> groups{5, 6};
  double overlap = 0.0;
  int total_dims = 75;
  std::uint64_t seed = 0;
};

/// Two-layer data: root <- one node per group <- that group's leaves. Each
/// leaf mixes a low-dimensional cluster signal with confounders shared across
/// all leaves: x = (1 - overlap) * signal + overlap * confounder. Labels are
/// balanced (sizes differ by at most one).
SyntheticData synth_layered(const LayeredOptions& options);

/// Accuracy of assigning each sample to the nearest class mean of the
/// concatenated raw features.
double nearest_center_accuracy(const Dataset& dataset);

/// Writes labels.csv, metrics.json, trace.csv, graph.dot, graph_edges.csv
/// and run_config.json into out_dir (created if missing).
void save_results(const TrainResult& result, const std::optional<MetricsReport>& report,
                  const TrainerConfig& config, const std::filesystem::path& out_dir);

}  // namespace agglo
