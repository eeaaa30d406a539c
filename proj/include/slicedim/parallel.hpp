#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace slicedim {

/// Process-wide worker count used when a call does not pass one explicitly.
int default_workers();
void set_default_workers(int workers);

/// Run fn(i) for i in [0, count) on up to `workers` threads. Tasks must write
/// only to their own slot; callers reduce in index order, so results never
/// depend on the worker count.
template <class F>
void parallel_for(std::size_t count, int workers, F&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    auto n = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    pool.reserve(n);
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(body);
  }
  if (failure) std::rethrow_exception(failure);
}

template <class F>
void parallel_for(std::size_t count, F&& fn) {
  parallel_for(count, default_workers(), std::forward<F>(fn));
}

/// Sum of chunk(begin, end) over fixed-size chunks of [0, count), reduced in
/// chunk order. The chunking does not depend on the worker count.
template <class F>
double chunked_sum(std::size_t count, std::size_t chunk, F&& partial) {
  std::size_t chunks = (count + chunk - 1) / chunk;
  std::vector<double> sums(chunks, 0.0);
  parallel_for(chunks, [&](std::size_t c) {
    std::size_t begin = c * chunk;
    sums[c] = partial(begin, std::min(count, begin + chunk));
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return total;
}

}  // namespace slicedim
