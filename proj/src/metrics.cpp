#include "agglo/metrics.hpp"

#include "agglo/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace agglo {

namespace {

std::int64_t pairs(std::int64_t m) { return m * (m - 1) / 2; }

/// Relabels to 0..c-1 in order of first appearance.
std::vector<int> compact(const Labels& labels, int& count) {
  std::map<int, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, fresh] = ids.emplace(l, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  count = static_cast<int>(ids.size());
  return out;
}

void check_inputs(const Labels& pred, const Labels& truth) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorCode::dimension_mismatch, "evaluate: " + std::to_string(pred.size()) + " predicted labels but " +
                                                   std::to_string(truth.size()) + " ground-truth labels");
  }
  if (pred.size() < 2) throw Error(ErrorCode::invalid_argument, "evaluate: need at least two samples");
}

struct Contingency {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> cells;
  std::vector<std::int64_t> row_sums;
  std::vector<std::int64_t> col_sums;
};

Contingency contingency(const Labels& pred, const Labels& truth) {
  Contingency c;
  const std::vector<int> p = compact(pred, c.rows);
  const std::vector<int> t = compact(truth, c.cols);
  c.cells.assign(static_cast<std::size_t>(c.rows) * static_cast<std::size_t>(c.cols), 0);
  c.row_sums.assign(static_cast<std::size_t>(c.rows), 0);
  c.col_sums.assign(static_cast<std::size_t>(c.cols), 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    ++c.cells[static_cast<std::size_t>(p[i]) * static_cast<std::size_t>(c.cols) + static_cast<std::size_t>(t[i])];
    ++c.row_sums[static_cast<std::size_t>(p[i])];
    ++c.col_sums[static_cast<std::size_t>(t[i])];
  }
  return c;
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  return {{"nmi", nmi},
          {"ri", rand_index},
          {"purity", purity},
          {"precision", precision},
          {"recall", recall},
          {"f_score", f_score}};
}

PairCounts pair_counts(const Labels& pred, const Labels& truth) {
  check_inputs(pred, truth);
  const Contingency c = contingency(pred, truth);
  PairCounts out;
  std::int64_t same_pred = 0;
  std::int64_t same_truth = 0;
  for (std::int64_t v : c.cells) out.tp += pairs(v);
  for (std::int64_t v : c.row_sums) same_pred += pairs(v);
  for (std::int64_t v : c.col_sums) same_truth += pairs(v);
  out.fp = same_pred - out.tp;
  out.fn = same_truth - out.tp;
  out.tn = pairs(static_cast<std::int64_t>(pred.size())) - out.tp - out.fp - out.fn;
  return out;
}

MetricsReport evaluate(const Labels& pred, const Labels& truth) {
  check_inputs(pred, truth);
  const Contingency c = contingency(pred, truth);
  const double n = static_cast<double>(pred.size());
  MetricsReport r;

  auto entropy = [n](const std::vector<std::int64_t>& sums) {
    double h = 0;
    for (std::int64_t v : sums) {
      if (v > 0) {
        const double p = static_cast<double>(v) / n;
        h -= p * std::log(p);
      }
    }
    return h;
  };
  double mutual = 0;
  std::int64_t matched = 0;
  for (int a = 0; a < c.rows; ++a) {
    std::int64_t best = 0;
    for (int b = 0; b < c.cols; ++b) {
      const std::int64_t v = c.cells[static_cast<std::size_t>(a) * static_cast<std::size_t>(c.cols) +
                                     static_cast<std::size_t>(b)];
      best = std::max(best, v);
      if (v == 0) continue;
      const double pab = static_cast<double>(v) / n;
      const double pa = static_cast<double>(c.row_sums[static_cast<std::size_t>(a)]) / n;
      const double pb = static_cast<double>(c.col_sums[static_cast<std::size_t>(b)]) / n;
      mutual += pab * std::log(pab / (pa * pb));
    }
    matched += best;
  }
  const double hp = entropy(c.row_sums);
  const double ht = entropy(c.col_sums);
  r.nmi = (hp > 0 && ht > 0) ? std::clamp(mutual / std::sqrt(hp * ht), 0.0, 1.0) : 0.0;
  r.purity = static_cast<double>(matched) / n;

  const PairCounts pc = pair_counts(pred, truth);
  const double total = static_cast<double>(pc.tp + pc.fp + pc.fn + pc.tn);
  r.rand_index = static_cast<double>(pc.tp + pc.tn) / total;
  r.precision = (pc.tp + pc.fp) > 0 ? static_cast<double>(pc.tp) / static_cast<double>(pc.tp + pc.fp) : 0.0;
  r.recall = (pc.tp + pc.fn) > 0 ? static_cast<double>(pc.tp) / static_cast<double>(pc.tp + pc.fn) : 0.0;
  r.f_score = (r.precision + r.recall) > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

}  // namespace agglo
