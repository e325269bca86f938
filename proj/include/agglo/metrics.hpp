#pragma once

#include "agglo/types.hpp"

#include <json.hpp>

#include <cstdint>

namespace agglo {

struct MetricsReport {
  double nmi = 0;
  double rand_index = 0;
  double purity = 0;
  double precision = 0;
  double recall = 0;
  double f_score = 0;

  /// Flat object keyed nmi / ri / purity / precision / recall / f_score.
  nlohmann::json to_json() const;
};

/// Pair confusion over all n(n-1)/2 sample pairs: tp = same cluster in both
/// labelings, fp = same in pred only, fn = same in truth only.
struct PairCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
};

PairCounts pair_counts(const Labels& pred, const Labels& truth);

/// External clustering indices of `pred` against `truth`. NMI uses natural
/// logs and the geometric mean of the two entropies; it is 0 when either
/// labeling has a single cluster.
MetricsReport evaluate(const Labels& pred, const Labels& truth);

}  // namespace agglo
