#pragma once

#include "agglo/types.hpp"

#include <functional>

namespace agglo {

/// Worker cap for row-parallel loops. Reads AGGLO_MVC_THREADS once; falls
/// back to the hardware concurrency.
unsigned max_threads();

/// Runs body(begin, end) over contiguous chunks of [0, n). Rows must be
/// independent; results are identical for any thread count.
void parallel_rows(Index n, const std::function<void(Index, Index)>& body);

}  // namespace agglo
