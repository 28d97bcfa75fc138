#include "pdm/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>

namespace pdm {

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PDM_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
      // fall through to hardware concurrency
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

void run_workers(unsigned threads, const std::function<void(unsigned)>& work) {
  if (threads <= 1) {
    work(0);
    return;
  }
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        work(w);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(unsigned, std::size_t, std::size_t)>& body) {
  if (count == 0) return;
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  const std::size_t chunk = (count + threads - 1) / threads;
  run_workers(threads, [&](unsigned w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin < end) body(w, begin, end);
  });
}

void parallel_for_interleaved(std::size_t count, unsigned threads,
                              const std::function<void(unsigned, std::size_t)>& body) {
  if (count == 0) return;
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  run_workers(threads, [&](unsigned w) {
    for (std::size_t i = w; i < count; i += threads) body(w, i);
  });
}

}  // namespace pdm
