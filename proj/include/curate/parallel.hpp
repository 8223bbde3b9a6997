#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace curate {

// Splits [0, n) into `workers` contiguous chunks and calls fn(begin, end, chunk)
// on each from its own thread. Chunk boundaries depend only on (n, workers), so
// callers that write results by index get identical output for any worker
// count. The first exception thrown by a chunk is rethrown after all join.
template <typename Fn>
void parallel_chunks(std::size_t n, int workers, Fn&& fn) {
  const std::size_t parts =
      std::max<std::size_t>(1, std::min<std::size_t>(n, std::max(workers, 1)));
  if (parts == 1) {
    fn(std::size_t{0}, n, std::size_t{0});
    return;
  }
  std::vector<std::exception_ptr> errors(parts);
  std::vector<std::thread> threads;
  threads.reserve(parts);
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t begin = n * p / parts;
    const std::size_t end = n * (p + 1) / parts;
    threads.emplace_back([&, begin, end, p] {
      try {
        fn(begin, end, p);
      } catch (...) {
        errors[p] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  parallel_chunks(n, workers, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  });
}

}  // namespace curate
