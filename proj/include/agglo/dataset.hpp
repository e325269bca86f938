#pragma once

#include "agglo/types.hpp"

#include <map>
#include <optional>
#include <string>

namespace agglo {

/// Row-aligned feature matrices, one per named view, plus optional ground
/// truth.
struct Dataset {
  std::map<std::string, MatrixXd> views;
  std::optional<Labels> labels;

  /// Sample count, taken from the first view (0 when empty).
  Index n() const { return views.empty() ? 0 : views.begin()->second.rows(); }
};

}  // namespace agglo
