#include "agglo/data_io.hpp"

#include "agglo/error.hpp"
#include "agglo/format.hpp"
#include "agglo/graph.hpp"
#include "agglo/rng.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string_view>

namespace fs = std::filesystem;

namespace agglo {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::ifstream open_for_read(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::missing_file, "file not found: " + path.string());
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return in;
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

template <typename T>
T parse_token(std::string_view token, const fs::path& path, std::size_t line) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(ErrorCode::parse, path.string() + ":" + std::to_string(line) + ": cannot parse '" +
                                      std::string(token) + "'");
  }
  return value;
}

void write_json(const nlohmann::json& doc, const fs::path& path) {
  auto out = open_for_write(path);
  out << doc.dump(2) << '\n';
  finish(out, path);
}

/// Draws k centres in `dims` dimensions whose pairwise distances are all at
/// least min_gap.
MatrixXd draw_centers(CounterRng& rng, int k, int dims, double min_gap) {
  MatrixXd centers(k, dims);
  double spread = min_gap * std::max(1.0, static_cast<double>(k));
  for (int c = 0; c < k; ++c) {
    int attempts = 0;
    while (true) {
      for (int d = 0; d < dims; ++d) centers(c, d) = spread * rng.normal();
      bool ok = true;
      for (int o = 0; o < c && ok; ++o) ok = (centers.row(c) - centers.row(o)).norm() >= min_gap;
      if (ok) break;
      if (++attempts % 200 == 0) spread *= 1.5;
    }
  }
  return centers;
}

std::string leaf_name(std::size_t i) { return "v" + std::to_string(i + 1); }

}  // namespace

MatrixXd read_matrix_csv(const fs::path& path) {
  auto in = open_for_read(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      row.push_back(parse_token<double>(view.substr(start, comma - start), path, lineno));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::ragged_rows, path.string() + ":" + std::to_string(lineno) + ": row has " +
                                              std::to_string(row.size()) + " columns, expected " +
                                              std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::parse, path.string() + ": no data rows");
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

void write_matrix_csv(const MatrixXd& m, const fs::path& path) {
  auto out = open_for_write(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_real(m(i, j));
    }
    out << '\n';
  }
  finish(out, path);
}

Labels read_labels_csv(const fs::path& path) {
  auto in = open_for_read(path);
  Labels labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    labels.push_back(parse_token<int>(line, path, lineno));
  }
  return labels;
}

void write_labels_csv(const Labels& labels, const fs::path& path) {
  auto out = open_for_write(path);
  for (int l : labels) out << l << '\n';
  finish(out, path);
}

Dataset load_dataset(const fs::path& manifest_path) {
  auto in = open_for_read(manifest_path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, manifest_path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("views") || !doc["views"].is_object() || doc["views"].empty()) {
    throw Error(ErrorCode::parse, manifest_path.string() + ": manifest needs a non-empty \"views\" object");
  }
  const fs::path base = manifest_path.parent_path();
  auto resolve = [&](const nlohmann::json& entry) {
    if (!entry.is_string()) throw Error(ErrorCode::parse, manifest_path.string() + ": paths must be strings");
    fs::path p = entry.get<std::string>();
    return p.is_absolute() ? p : base / p;
  };

  Dataset ds;
  std::string first;
  for (const auto& [name, entry] : doc["views"].items()) {
    MatrixXd m = read_matrix_csv(resolve(entry));
    if (first.empty()) {
      first = name;
    } else if (m.rows() != ds.views.at(first).rows()) {
      throw Error(ErrorCode::sample_count_mismatch, "view '" + name + "' has " + std::to_string(m.rows()) +
                                                        " rows but view '" + first + "' has " +
                                                        std::to_string(ds.views.at(first).rows()));
    }
    ds.views.emplace(name, std::move(m));
  }
  if (doc.contains("labels") && !doc["labels"].is_null()) {
    Labels labels = read_labels_csv(resolve(doc["labels"]));
    if (static_cast<Index>(labels.size()) != ds.n()) {
      throw Error(ErrorCode::sample_count_mismatch, "labels file has " + std::to_string(labels.size()) +
                                                        " entries but views have " + std::to_string(ds.n()) + " rows");
    }
    ds.labels = std::move(labels);
  }
  return ds;
}

fs::path save_dataset(const Dataset& dataset, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json manifest;
  manifest["views"] = nlohmann::json::object();
  for (const auto& [name, m] : dataset.views) {
    const std::string file = name + ".csv";
    write_matrix_csv(m, dir / file);
    manifest["views"][name] = file;
  }
  if (dataset.labels) {
    write_labels_csv(*dataset.labels, dir / "labels.csv");
    manifest["labels"] = "labels.csv";
  }
  const fs::path path = dir / "manifest.json";
  write_json(manifest, path);
  return path;
}

SyntheticData synth_blobs(const BlobOptions& o) {
  if (o.n_per_cluster < 1 || o.k < 1 || o.views < 1 || o.dims < 1) {
    throw Error(ErrorCode::invalid_argument, "synth_blobs: counts must be at least 1");
  }
  if (!(o.separation > 0) || !(o.noise >= 0)) {
    throw Error(ErrorCode::invalid_argument, "synth_blobs: separation must be positive and noise non-negative");
  }
  const Index n = static_cast<Index>(o.n_per_cluster) * o.k;
  Dataset ds;
  Labels labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i / o.n_per_cluster);
  std::vector<std::string> names;
  for (int v = 0; v < o.views; ++v) {
    CounterRng rng(o.seed, static_cast<std::uint64_t>(v) + 1);
    const double gap = o.separation * (o.noise > 0 ? o.noise : 1.0);
    const MatrixXd centers = draw_centers(rng, o.k, o.dims, gap);
    MatrixXd X(n, o.dims);
    for (Index i = 0; i < n; ++i) {
      for (int d = 0; d < o.dims; ++d) {
        X(i, d) = centers(labels[static_cast<std::size_t>(i)], d) + o.noise * rng.normal();
      }
    }
    names.push_back(leaf_name(static_cast<std::size_t>(v)));
    ds.views.emplace(names.back(), std::move(X));
  }
  ds.labels = std::move(labels);
  return {std::move(ds), ViewStructure::flat(names)};
}

SyntheticData synth_layered(const LayeredOptions& o) {
  if (o.n < 1 || o.k < 1 || o.groups.empty()) {
    throw Error(ErrorCode::invalid_argument, "synth_layered: n, k and groups must be non-empty");
  }
  if (!(o.overlap >= 0.0 && o.overlap < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "synth_layered: overlap must lie in [0, 1)");
  }
  std::size_t leaf_count = 0;
  for (int g : o.groups) {
    if (g < 1) throw Error(ErrorCode::invalid_argument, "synth_layered: every group needs at least one leaf");
    leaf_count += static_cast<std::size_t>(g);
  }
  if (o.total_dims < static_cast<int>(leaf_count)) {
    throw Error(ErrorCode::invalid_argument, "synth_layered: fewer dimensions than leaves");
  }

  // Each leaf lives in a kLatent-dimensional space mapped linearly onto its
  // features. Class signal and the shared confounder occupy the same latent
  // coordinates, so overlap entangles them rather than adding side noise.
  constexpr int kLatent = 2;
  constexpr double kSeparation = 8.0;
  constexpr double kConfounderScale = 1.0;  // relative to the centre gap

  const Index n = o.n;
  Labels labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i % o.k);

  // Per-sample confounders, shared by every leaf.
  CounterRng shared(o.seed, 0);
  MatrixXd confounders(n, kLatent);
  for (Index i = 0; i < n; ++i) {
    for (int c = 0; c < kLatent; ++c) confounders(i, c) = shared.normal();
  }
  const double confounder_scale = kConfounderScale * kSeparation;
  // Centres sit on a regular polygon with side kSeparation, rotated per leaf.
  const double radius = o.k > 1 ? kSeparation / (2.0 * std::sin(std::numbers::pi / o.k)) : 0.0;

  Dataset ds;
  std::vector<ViewNode> nodes;
  ViewNode root{"consensus", 2, {}, {}};
  std::size_t leaf = 0;
  for (std::size_t g = 0; g < o.groups.size(); ++g) {
    ViewNode group{"group" + std::to_string(g + 1), 1, {}, {}};
    for (int t = 0; t < o.groups[g]; ++t, ++leaf) {
      const int dims = o.total_dims / static_cast<int>(leaf_count) +
                       (leaf < static_cast<std::size_t>(o.total_dims) % leaf_count ? 1 : 0);
      CounterRng rng(o.seed, leaf + 1);
      MatrixXd centers(o.k, kLatent);
      const double theta = 2.0 * std::numbers::pi * rng.uniform();
      for (int c = 0; c < o.k; ++c) {
        const double angle = theta + 2.0 * std::numbers::pi * c / o.k;
        centers(c, 0) = radius * std::cos(angle);
        centers(c, 1) = radius * std::sin(angle);
      }
      MatrixXd mixing(kLatent, dims);
      for (Index a = 0; a < mixing.rows(); ++a) {
        for (Index b = 0; b < mixing.cols(); ++b) mixing(a, b) = rng.normal() / std::sqrt(double(kLatent));
      }
      MatrixXd latent(n, kLatent);
      for (Index i = 0; i < n; ++i) {
        for (int d = 0; d < kLatent; ++d) {
          latent(i, d) = (1.0 - o.overlap) * (centers(labels[static_cast<std::size_t>(i)], d) + rng.normal()) +
                         o.overlap * confounder_scale * confounders(i, d);
        }
      }
      MatrixXd X = latent * mixing;
      const std::string name = leaf_name(leaf);
      ds.views.emplace(name, std::move(X));
      nodes.push_back({name, 0, {}, name});
      group.children.push_back(name);
    }
    root.children.push_back(group.id);
    nodes.push_back(std::move(group));
  }
  nodes.push_back(std::move(root));
  ds.labels = std::move(labels);
  return {std::move(ds), ViewStructure(std::move(nodes))};
}

double nearest_center_accuracy(const Dataset& dataset) {
  if (!dataset.labels) throw Error(ErrorCode::invalid_argument, "nearest_center_accuracy: dataset has no labels");
  const Index n = dataset.n();
  Index width = 0;
  for (const auto& [name, m] : dataset.views) width += m.cols();
  MatrixXd X(n, width);
  Index col = 0;
  for (const auto& [name, m] : dataset.views) {
    X.middleCols(col, m.cols()) = m;
    col += m.cols();
  }
  const Labels& y = *dataset.labels;
  const int k = *std::max_element(y.begin(), y.end()) + 1;
  MatrixXd means = MatrixXd::Zero(k, width);
  VectorXd counts = VectorXd::Zero(k);
  for (Index i = 0; i < n; ++i) {
    means.row(y[static_cast<std::size_t>(i)]) += X.row(i);
    counts(y[static_cast<std::size_t>(i)]) += 1;
  }
  for (int c = 0; c < k; ++c) {
    if (counts(c) > 0) means.row(c) /= counts(c);
  }
  Index correct = 0;
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    (means.rowwise() - X.row(i)).rowwise().squaredNorm().minCoeff(&best);
    if (best == y[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

void save_results(const TrainResult& result, const std::optional<MetricsReport>& report,
                  const TrainerConfig& config, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + out_dir.string() + ": " + ec.message());
  write_labels_csv(result.labels, out_dir / "labels.csv");
  write_json(report ? report->to_json() : nlohmann::json::object(), out_dir / "metrics.json");
  {
    auto out = open_for_write(out_dir / "trace.csv");
    write_trace_csv(result.trace, out);
    finish(out, out_dir / "trace.csv");
  }
  write_dot(result.consensus, out_dir / "graph.dot");
  write_edge_csv(result.consensus, out_dir / "graph_edges.csv");
  write_json(config.to_json(), out_dir / "run_config.json");
}

}  // namespace agglo
