// Command-line front end: synth, train, eval, inspect.
//
// Exit codes: 0 success, 1 usage or validation error, 2 training stopped at
// max-iters without reaching k components, 3 I/O error.

#include "agglo/data_io.hpp"
#include "agglo/error.hpp"
#include "agglo/format.hpp"
#include "agglo/metrics.hpp"
#include "agglo/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitIo = 3;

int exit_code_for(agglo::ErrorCode code) {
  switch (code) {
    case agglo::ErrorCode::io:
    case agglo::ErrorCode::missing_file:
      return kExitIo;
    default:
      return kExitUsage;
  }
}

struct SynthArgs {
  std::string out;
  int k = 3;
  std::uint64_t seed = 0;
  // blobs
  int n_per_cluster = 50;
  int views = 2;
  int dims = 2;
  double separation = 8.0;
  double noise = 1.0;
  // layered
  int n = 71;
  std::vector<int> groups{5, 6};
  double overlap = 0.0;
  int total_dims = 75;
};

struct TrainArgs {
  std::string mode = "ann";
  std::optional<int> k;
  std::optional<double> lambda_init, lambda_max, p, lr;
  std::optional<agglo::Index> r;
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  std::string data, structure, out;
};

int write_synth(const agglo::SyntheticData& data, const std::string& out) {
  const fs::path manifest = agglo::save_dataset(data.dataset, out);
  data.structure.save(fs::path(out) / "structure.json");
  std::cout << "wrote " << manifest.string() << " (" << data.dataset.views.size() << " views, n=" << data.dataset.n()
            << ")\n";
  return kExitOk;
}

int run_train(const TrainArgs& a) {
  agglo::TrainerConfig config = agglo::TrainerConfig::defaults_for(agglo::parse_mode(a.mode));
  if (!a.k) throw agglo::Error(agglo::ErrorCode::invalid_argument, "--k is required");
  config.k = *a.k;
  if (a.lambda_init) config.lambda_init = *a.lambda_init;
  if (a.lambda_max) config.lambda_max = *a.lambda_max;
  if (a.p) config.p = *a.p;
  if (a.lr) config.lr = *a.lr;
  if (a.r) config.neighbors = *a.r;
  if (a.max_iters) config.max_iters = *a.max_iters;
  if (a.seed) config.seed = *a.seed;
  config.validate();

  const agglo::Dataset dataset = agglo::load_dataset(a.data);
  const agglo::ViewStructure structure = agglo::ViewStructure::load(a.structure);
  const agglo::TrainResult result = agglo::train(config, dataset, structure);

  std::optional<agglo::MetricsReport> report;
  if (dataset.labels) report = agglo::evaluate(result.labels, *dataset.labels);
  agglo::save_results(result, report, config, a.out);

  std::cout << "converged: " << (result.converged ? "true" : "false") << "\n"
            << "components: " << result.components << "\n"
            << "iterations: " << result.iterations << "\n";
  if (report) std::cout << "metrics: " << report->to_json().dump() << "\n";
  return result.converged ? kExitOk : kExitNotConverged;
}

int run_eval(const std::string& pred_path, const std::string& truth_path, const std::string& out) {
  const agglo::Labels pred = agglo::read_labels_csv(pred_path);
  const agglo::Labels truth = agglo::read_labels_csv(truth_path);
  const agglo::MetricsReport report = agglo::evaluate(pred, truth);
  const std::string text = report.to_json().dump(2);
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw agglo::Error(agglo::ErrorCode::io, "cannot write " + out);
    f << text << '\n';
    if (!f) throw agglo::Error(agglo::ErrorCode::io, "write failed for " + out);
  }
  std::cout << text << '\n';
  return kExitOk;
}

int run_inspect(const std::string& dir) {
  const fs::path trace_path = fs::path(dir) / "trace.csv";
  const fs::path config_path = fs::path(dir) / "run_config.json";
  if (!fs::exists(trace_path)) {
    throw agglo::Error(agglo::ErrorCode::missing_file, "no trace.csv in " + dir);
  }
  if (!fs::exists(config_path)) {
    throw agglo::Error(agglo::ErrorCode::missing_file, "no run_config.json in " + dir);
  }
  nlohmann::json cfg;
  {
    std::ifstream in(config_path);
    try {
      in >> cfg;
    } catch (const nlohmann::json::exception& e) {
      throw agglo::Error(agglo::ErrorCode::parse, config_path.string() + ": " + e.what());
    }
  }
  const agglo::TrainerConfig config = agglo::TrainerConfig::from_json(cfg);

  std::ifstream in(trace_path);
  std::string line;
  std::getline(in, line);  // header
  struct Row {
    int iteration, components;
    double lambda, eigen_sum;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 4) throw agglo::Error(agglo::ErrorCode::parse, trace_path.string() + ": malformed row");
    rows.push_back({std::stoi(cells[0]), std::stoi(cells[2]), std::stod(cells[1]), std::stod(cells[3])});
  }
  if (rows.empty()) throw agglo::Error(agglo::ErrorCode::parse, trace_path.string() + ": empty trace");

  // Training stops as soon as k components appear, so the last row decides.
  const Row& last = rows.back();
  const bool converged = last.components == config.k;
  int doublings = 0, halvings = 0;
  double lo = rows.front().lambda, hi = rows.front().lambda;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    lo = std::min(lo, rows[i].lambda);
    hi = std::max(hi, rows[i].lambda);
    if (rows[i].lambda > rows[i - 1].lambda) ++doublings;
    if (rows[i].lambda < rows[i - 1].lambda) ++halvings;
  }
  // labels.csv holds the returned state, which differs from the last trace
  // row when training did not converge.
  int components = last.components;
  const fs::path labels_path = fs::path(dir) / "labels.csv";
  if (fs::exists(labels_path)) {
    const agglo::Labels labels = agglo::read_labels_csv(labels_path);
    components = static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
  }
  std::cout << "mode: " << agglo::to_string(config.mode) << "\n"
            << "k: " << config.k << "\n"
            << "converged: " << (converged ? "true" : "false") << "\n"
            << "components: " << components << "\n"
            << "iterations: " << last.iteration << "\n"
            << "eigval_sum: " << agglo::format_real(last.eigen_sum) << "\n"
            << "lambda: start " << agglo::format_real(rows.front().lambda) << ", final "
            << agglo::format_real(last.lambda) << ", min " << agglo::format_real(lo) << ", max "
            << agglo::format_real(hi) << ", increases " << doublings << ", decreases " << halvings << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agglomerative multi-view clustering"};
  app.require_subcommand(1);

  SynthArgs s;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-view dataset");
  synth->require_subcommand(1);
  auto* blobs = synth->add_subcommand("blobs", "Gaussian blobs, flat view structure");
  blobs->add_option("--k", s.k, "Cluster count")->check(CLI::PositiveNumber);
  blobs->add_option("--n-per-cluster", s.n_per_cluster, "Samples per cluster")->check(CLI::PositiveNumber);
  blobs->add_option("--views", s.views, "Number of views")->check(CLI::PositiveNumber);
  blobs->add_option("--dims", s.dims, "Features per view")->check(CLI::PositiveNumber);
  blobs->add_option("--separation", s.separation, "Minimum centre distance in noise units");
  blobs->add_option("--noise", s.noise, "Noise standard deviation");
  blobs->add_option("--seed", s.seed, "Generator seed");
  blobs->add_option("--out", s.out, "Output directory")->required();
  auto* layered = synth->add_subcommand("layered", "Two-layer view structure with shared confounders");
  layered->add_option("--k", s.k, "Cluster count")->check(CLI::PositiveNumber);
  layered->add_option("--n", s.n, "Sample count")->check(CLI::PositiveNumber);
  layered->add_option("--groups", s.groups, "Leaves per group, comma separated")->delimiter(',');
  layered->add_option("--overlap", s.overlap, "Confounder fraction in [0, 1)");
  layered->add_option("--dims", s.total_dims, "Total feature count across leaves")->check(CLI::PositiveNumber);
  layered->add_option("--seed", s.seed, "Generator seed");
  layered->add_option("--out", s.out, "Output directory")->required();

  TrainArgs t;
  auto* train = app.add_subcommand("train", "Cluster a dataset");
  train->add_option("--mode", t.mode, "ann or annld")->check(CLI::IsMember({"ann", "annld"}));
  train->add_option("--k", t.k, "Target cluster count")->required();
  train->add_option("--lambda-init", t.lambda_init, "Initial lambda");
  train->add_option("--lambda-max", t.lambda_max, "Lambda cap");
  train->add_option("--p", t.p, "Activation parameter P > 1");
  train->add_option("--lr", t.lr, "Adam learning rate");
  train->add_option("--r", t.r, "Nearest neighbours kept per row");
  train->add_option("--max-iters", t.max_iters, "Outer iteration limit");
  train->add_option("--seed", t.seed, "Seed recorded with the run");
  train->add_option("--data", t.data, "Dataset manifest JSON")->required();
  train->add_option("--structure", t.structure, "View structure JSON")->required();
  train->add_option("--out", t.out, "Output directory")->required();

  std::string pred, truth, eval_out;
  auto* eval = app.add_subcommand("eval", "Score predicted labels against ground truth");
  eval->add_option("--pred", pred, "Predicted labels CSV")->required();
  eval->add_option("--truth", truth, "Ground-truth labels CSV")->required();
  eval->add_option("--out", eval_out, "Write metrics JSON here");

  std::string run_dir;
  auto* inspect = app.add_subcommand("inspect", "Summarise a finished run");
  inspect->add_option("run", run_dir, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*blobs) {
      return write_synth(agglo::synth_blobs({s.n_per_cluster, s.k, s.views, s.dims, s.separation, s.noise, s.seed}),
                         s.out);
    }
    if (*layered) {
      return write_synth(agglo::synth_layered({s.n, s.k, s.groups, s.overlap, s.total_dims, s.seed}), s.out);
    }
    if (*train) return run_train(t);
    if (*eval) return run_eval(pred, truth, eval_out);
    if (*inspect) return run_inspect(run_dir);
  } catch (const agglo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
