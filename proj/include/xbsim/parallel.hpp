#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace xbsim {

// Fixed work split used by callers that merge per-chunk results.
inline constexpr std::size_t kWorkChunks = 64;

// Splits [0, count) into `chunks` contiguous ranges and runs
// fn(begin, end, chunk) for each, on up to `threads` workers. Chunk
// boundaries depend only on count and chunks, so callers that merge
// per-chunk results in chunk order get thread-count independent output.
template <typename Fn>
void parallel_chunks(std::size_t count, std::size_t chunks, int threads, Fn&& fn) {
  chunks = std::max<std::size_t>(1, std::min(chunks, std::max<std::size_t>(count, 1)));
  auto bounds = [&](std::size_t c) { return count * c / chunks; };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(bounds(c), bounds(c + 1), c);
    return;
  }
  std::vector<std::exception_ptr> errors(chunks);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, chunks); ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < chunks; c += workers) {
        try {
          fn(bounds(c), bounds(c + 1), c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace xbsim
