#include "agglo/data_io.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using agglo::ErrorCode;
using agglo::Index;
using agglo::MatrixXd;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Csv, MatrixRoundTripIsBitwise) {
  std::mt19937_64 gen(71);
  const MatrixXd m = testutil::random_matrix(7, 3, gen, 1e3);
  const auto dir = testutil::scratch_dir("csv_roundtrip");
  agglo::write_matrix_csv(m, dir / "m.csv");
  EXPECT_EQ(agglo::read_matrix_csv(dir / "m.csv"), m);
}

TEST(Csv, ToleratesWhitespaceAndCrLf) {
  const auto dir = testutil::scratch_dir("csv_ws");
  write_text(dir / "m.csv", " 1, 2.5 \r\n3,-4e-1\r\n\n");
  MatrixXd expected(2, 2);
  expected << 1, 2.5, 3, -0.4;
  EXPECT_EQ(agglo::read_matrix_csv(dir / "m.csv"), expected);
}

TEST(Csv, Errors) {
  const auto dir = testutil::scratch_dir("csv_errors");
  write_text(dir / "ragged.csv", "1,2\n3\n");
  EXPECT_AGGLO_ERROR(agglo::read_matrix_csv(dir / "ragged.csv"), ErrorCode::ragged_rows);
  write_text(dir / "text.csv", "1,x\n");
  EXPECT_AGGLO_ERROR(agglo::read_matrix_csv(dir / "text.csv"), ErrorCode::parse);
  write_text(dir / "empty.csv", "\n");
  EXPECT_AGGLO_ERROR(agglo::read_matrix_csv(dir / "empty.csv"), ErrorCode::parse);
  write_text(dir / "trailing.csv", "1,2,\n");
  EXPECT_AGGLO_ERROR(agglo::read_matrix_csv(dir / "trailing.csv"), ErrorCode::parse);
  EXPECT_AGGLO_ERROR(agglo::read_matrix_csv(dir / "absent.csv"), ErrorCode::missing_file);
  write_text(dir / "labels.csv", "0\n1.5\n");
  EXPECT_AGGLO_ERROR(agglo::read_labels_csv(dir / "labels.csv"), ErrorCode::parse);
  write_text(dir / "labels2.csv", "0\nabc\n");
  EXPECT_AGGLO_ERROR(agglo::read_labels_csv(dir / "labels2.csv"), ErrorCode::parse);
}

TEST(Csv, LabelsRoundTrip) {
  const auto dir = testutil::scratch_dir("labels");
  const agglo::Labels labels{3, 0, 0, 12, -1};
  agglo::write_labels_csv(labels, dir / "l.csv");
  EXPECT_EQ(agglo::read_labels_csv(dir / "l.csv"), labels);
  EXPECT_EQ(slurp(dir / "l.csv"), "3\n0\n0\n12\n-1\n");
}

TEST(Manifest, LoadsTwoAlignedViewsWithLabels) {
  const auto dir = testutil::scratch_dir("manifest_ok");
  write_text(dir / "a.csv", "1,2\n3,4\n5,6\n7,8\n");
  write_text(dir / "b.csv", "1\n2\n3\n4\n");
  write_text(dir / "y.csv", "0\n0\n1\n1\n");
  write_text(dir / "manifest.json", R"({"views": {"a": "a.csv", "b": "b.csv"}, "labels": "y.csv"})");
  const auto ds = agglo::load_dataset(dir / "manifest.json");
  EXPECT_EQ(ds.n(), 4);
  EXPECT_EQ(ds.views.size(), 2u);
  EXPECT_EQ(ds.views.at("a").cols(), 2);
  ASSERT_TRUE(ds.labels);
  EXPECT_EQ(*ds.labels, (agglo::Labels{0, 0, 1, 1}));
}

TEST(Manifest, Errors) {
  const auto dir = testutil::scratch_dir("manifest_bad");
  write_text(dir / "a.csv", "1\n2\n3\n4\n");
  write_text(dir / "b.csv", "1\n2\n3\n4\n5\n");
  write_text(dir / "bad_labels.csv", "0\n1\nx\n1\n");
  write_text(dir / "short_labels.csv", "0\n1\n");
  write_text(dir / "m1.json", R"({"views": {"a": "a.csv", "b": "b.csv"}})");
  EXPECT_AGGLO_ERROR(agglo::load_dataset(dir / "m1.json"), ErrorCode::sample_count_mismatch);
  write_text(dir / "m2.json", R"({"views": {"a": "a.csv"}, "labels": "bad_labels.csv"})");
  EXPECT_AGGLO_ERROR(agglo::load_dataset(dir / "m2.json"), ErrorCode::parse);
  write_text(dir / "m3.json", R"({"views": {"a": "nowhere.csv"}})");
  EXPECT_AGGLO_ERROR(agglo::load_dataset(dir / "m3.json"), ErrorCode::missing_file);
  write_text(dir / "m4.json", R"({"views": {}})");
  EXPECT_AGGLO_ERROR(agglo::load_dataset(dir / "m4.json"), ErrorCode::parse);
  write_text(dir / "m5.json", "{not json");
  EXPECT_AGGLO_ERROR(agglo::load_dataset(dir / "m5.json"), ErrorCode::parse);
  write_text(dir / "m6.json", R"({"views": {"a": "a.csv"}, "labels": "short_labels.csv"})");
  EXPECT_AGGLO_ERROR(agglo::load_dataset(dir / "m6.json"), ErrorCode::sample_count_mismatch);
  EXPECT_AGGLO_ERROR(agglo::load_dataset(dir / "absent.json"), ErrorCode::missing_file);
}

TEST(Blobs, ShapeAndBalance) {
  agglo::BlobOptions opt;
  opt.seed = 7;
  const auto data = agglo::synth_blobs(opt);
  EXPECT_EQ(data.dataset.n(), 150);
  EXPECT_EQ(data.dataset.views.size(), 2u);
  EXPECT_EQ(data.structure.depth(), 1);
  std::map<int, int> counts;
  for (int l : *data.dataset.labels) ++counts[l];
  EXPECT_EQ(counts, (std::map<int, int>{{0, 50}, {1, 50}, {2, 50}}));
  EXPECT_NO_THROW(agglo::validate(data.structure, data.dataset));
}

TEST(Blobs, DeterministicPerSeed) {
  agglo::BlobOptions opt;
  opt.seed = 7;
  const auto a = agglo::synth_blobs(opt);
  const auto b = agglo::synth_blobs(opt);
  EXPECT_EQ(a.dataset.views, b.dataset.views);
  opt.seed = 8;
  const auto c = agglo::synth_blobs(opt);
  EXPECT_NE(a.dataset.views.at("v1"), c.dataset.views.at("v1"));
}

TEST(Blobs, SeparatedCentresAreEasy) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    agglo::BlobOptions opt;
    opt.seed = seed;
    EXPECT_GE(agglo::nearest_center_accuracy(agglo::synth_blobs(opt).dataset), 0.99) << "seed " << seed;
  }
}

TEST(Blobs, RejectsBadOptions) {
  agglo::BlobOptions opt;
  opt.k = 0;
  EXPECT_AGGLO_ERROR(agglo::synth_blobs(opt), ErrorCode::invalid_argument);
  opt = {};
  opt.separation = 0;
  EXPECT_AGGLO_ERROR(agglo::synth_blobs(opt), ErrorCode::invalid_argument);
}

TEST(Layered, SurveyShape) {
  agglo::LayeredOptions opt;
  opt.seed = 7;
  const auto data = agglo::synth_layered(opt);
  EXPECT_EQ(data.dataset.n(), 71);
  EXPECT_EQ(data.structure.depth(), 2);
  EXPECT_EQ(data.structure.leaves().size(), 11u);
  EXPECT_EQ(data.structure.layer(1).size(), 2u);
  Index dims = 0;
  for (const auto& [_, m] : data.dataset.views) dims += m.cols();
  EXPECT_EQ(dims, 75);
  std::map<int, int> counts;
  for (int l : *data.dataset.labels) ++counts[l];
  EXPECT_EQ(counts.size(), 6u);
  for (const auto& [_, c] : counts) EXPECT_TRUE(c == 11 || c == 12);
}

TEST(Layered, OverlapEntanglesRawSpace) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    agglo::LayeredOptions opt;
    opt.n = 210;
    opt.seed = seed;
    opt.overlap = 0.0;
    EXPECT_GE(agglo::nearest_center_accuracy(agglo::synth_layered(opt).dataset), 0.99) << "seed " << seed;
    opt.overlap = 0.6;
    const auto entangled = agglo::synth_layered(opt);
    EXPECT_LT(agglo::nearest_center_accuracy(entangled.dataset), 0.8) << "seed " << seed;
    std::map<int, int> counts;
    for (int l : *entangled.dataset.labels) ++counts[l];
    for (const auto& [_, c] : counts) EXPECT_EQ(c, 35);
  }
}

TEST(Layered, DeterministicAndValidated) {
  agglo::LayeredOptions opt;
  opt.overlap = 0.4;
  opt.seed = 3;
  EXPECT_EQ(agglo::synth_layered(opt).dataset.views, agglo::synth_layered(opt).dataset.views);
  opt.overlap = 1.0;
  EXPECT_AGGLO_ERROR(agglo::synth_layered(opt), ErrorCode::invalid_argument);
  opt.overlap = 0.2;
  opt.groups = {3, 0};
  EXPECT_AGGLO_ERROR(agglo::synth_layered(opt), ErrorCode::invalid_argument);
  opt.groups = {5, 6};
  opt.total_dims = 4;
  EXPECT_AGGLO_ERROR(agglo::synth_layered(opt), ErrorCode::invalid_argument);
}

TEST(Dataset, SaveLoadRoundTripIsBitwise) {
  agglo::LayeredOptions opt;
  opt.overlap = 0.6;
  opt.seed = 11;
  const auto data = agglo::synth_layered(opt);
  const auto dir = testutil::scratch_dir("dataset_roundtrip");
  const auto manifest = agglo::save_dataset(data.dataset, dir);
  const auto back = agglo::load_dataset(manifest);
  EXPECT_EQ(back.views, data.dataset.views);
  EXPECT_EQ(back.labels, data.dataset.labels);
}

TEST(Results, WritesEveryArtifact) {
  agglo::BlobOptions opt;
  opt.n_per_cluster = 10;
  opt.seed = 2;
  const auto data = agglo::synth_blobs(opt);
  agglo::TrainerConfig c = agglo::TrainerConfig::defaults_for(agglo::Mode::ann);
  c.k = 3;
  c.neighbors = 5;
  c.seed = 42;
  const auto res = agglo::train(c, data.dataset, data.structure);
  const auto dir = testutil::scratch_dir("results") / "nested" / "run";
  agglo::save_results(res, agglo::evaluate(res.labels, *data.dataset.labels), c, dir);
  for (const char* f : {"labels.csv", "metrics.json", "trace.csv", "graph.dot", "graph_edges.csv", "run_config.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;

  const auto labels = agglo::read_labels_csv(dir / "labels.csv");
  EXPECT_EQ(labels.size(), 30u);
  for (int l : labels) EXPECT_TRUE(l >= 0 && l < 3);
  const auto cfg = nlohmann::json::parse(slurp(dir / "run_config.json"));
  EXPECT_EQ(cfg, c.to_json());
  const auto metrics = nlohmann::json::parse(slurp(dir / "metrics.json"));
  EXPECT_TRUE(metrics.contains("nmi"));
  const std::string trace = slurp(dir / "trace.csv");
  EXPECT_EQ(trace.rfind("iteration,lambda,components,eigval_sum,loss_sc,loss_gc,loss_cac,loss_total\n", 0), 0u);

  // Rerunning from the saved config reproduces the trace exactly.
  const auto again = agglo::train(agglo::TrainerConfig::from_json(cfg), data.dataset, data.structure);
  std::ostringstream ss;
  agglo::write_trace_csv(again.trace, ss);
  EXPECT_EQ(ss.str(), trace);
}

TEST(Results, MetricsEmptyWithoutLabels) {
  agglo::TrainResult res;
  res.labels = {0, 1};
  res.consensus = MatrixXd::Zero(2, 2);
  const auto dir = testutil::scratch_dir("results_nolabels");
  agglo::TrainerConfig c;
  agglo::save_results(res, std::nullopt, c, dir);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "metrics.json")), nlohmann::json::object());
}

TEST(Results, UnwritableDirectory) {
  const auto dir = testutil::scratch_dir("results_blocked");
  write_text(dir / "file", "x");
  agglo::TrainResult res;
  res.labels = {0, 1};
  res.consensus = MatrixXd::Zero(2, 2);
  EXPECT_AGGLO_ERROR(agglo::save_results(res, std::nullopt, agglo::TrainerConfig{}, dir / "file" / "sub"),
                     ErrorCode::io);
}
