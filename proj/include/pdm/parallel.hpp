#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace pdm {

/// Thread count from an explicit request, falling back to PDM_THREADS and then
/// the hardware concurrency. Always >= 1.
unsigned resolve_threads(unsigned requested);

/// Runs body(worker, begin, end) over [0, count) split into contiguous chunks,
/// one per worker. Blocks until every chunk is done. Exceptions from workers are
/// rethrown on the calling thread (first one wins).
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(unsigned worker, std::size_t begin, std::size_t end)>& body);

/// Interleaved variant: worker w processes items w, w + threads, ... which
/// balances load when item cost varies (image rows, partitions).
void parallel_for_interleaved(std::size_t count, unsigned threads,
                              const std::function<void(unsigned worker, std::size_t item)>& body);

}  // namespace pdm
