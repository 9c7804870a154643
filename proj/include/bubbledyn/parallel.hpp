#pragma once

#include <functional>

namespace bubbledyn {

/// Worker count: hardware concurrency capped by BUBBLEDYN_THREADS when set.
int worker_count();

/// Runs body(i) for i in [begin, end) over contiguous blocks, one per worker.
/// Iterations must be independent.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace bubbledyn
