#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace permcover {

/// Worker count from PERMCOVER_WORKERS, else the hardware concurrency.
inline int default_workers() {
  if (const char *env = std::getenv("PERMCOVER_WORKERS")) {
    try {
      int w = std::stoi(env);
      if (w > 0)
        return w;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Runs body(begin, end) over contiguous blocks of [0, count). Blocks are
 * statically assigned, so results written by index do not depend on the
 * worker count. workers <= 0 means default_workers(). The first exception
 * thrown by any block is rethrown on the calling thread.
 */
template <class Body>
void parallel_blocks(std::uint64_t count, int workers, Body &&body) {
  if (workers <= 0)
    workers = default_workers();
  if (count == 0)
    return;
  const auto w = static_cast<std::uint64_t>(std::min<std::uint64_t>(workers, count));
  if (w == 1) {
    body(std::uint64_t{0}, count);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(w);
  for (std::uint64_t t = 0; t < w; ++t) {
    const std::uint64_t begin = count * t / w;
    const std::uint64_t end = count * (t + 1) / w;
    threads.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
      }
    });
  }
  for (auto &t : threads)
    t.join();
  if (error)
    std::rethrow_exception(error);
}

} // namespace permcover
