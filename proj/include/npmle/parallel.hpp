#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

// Deterministic data parallelism. Work is cut into fixed-size blocks and
// each block produces its own partial result; partials are then combined
// in a fixed pairwise tree over block indices. The block layout depends
// only on the block size, never on the thread count, so numerical results
// are bitwise identical whether the loop runs on 1 thread or 16.

namespace npmle::parallel {

inline std::atomic<int>& default_threads_ref() {
  static std::atomic<int> n{1};
  return n;
}

inline int default_threads() { return default_threads_ref().load(); }

inline void set_default_threads(int n) {
  default_threads_ref().store(n < 1 ? 1 : n);
}

inline constexpr std::int64_t kBlock = 256;

inline std::int64_t block_count(std::int64_t n, std::int64_t block = kBlock) {
  return n <= 0 ? 0 : (n + block - 1) / block;
}

// body(block_index, begin, end) is called once per block, in unspecified
// thread order; blocks must not touch shared mutable state except through
// their own partial slot.
template <typename Body>
void for_blocks(std::int64_t n, int threads, Body&& body,
                std::int64_t block = kBlock) {
  const std::int64_t nb = block_count(n, block);
  if (nb == 0) return;
  if (threads <= 1 || nb == 1) {
    for (std::int64_t b = 0; b < nb; ++b) {
      const std::int64_t lo = b * block;
      const std::int64_t hi = lo + block < n ? lo + block : n;
      body(b, lo, hi);
    }
    return;
  }
  const int nt = static_cast<int>(threads < nb ? threads : nb);
  std::atomic<std::int64_t> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::int64_t b = next.fetch_add(1);
      if (b >= nb || failed.load()) break;
      const std::int64_t lo = b * block;
      const std::int64_t hi = lo + block < n ? lo + block : n;
      try {
        body(b, lo, hi);
      } catch (...) {
        if (!failed.exchange(true)) err = std::current_exception();
        break;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failed.load()) std::rethrow_exception(err);
}

// Pairwise tree reduction over per-block partial vectors, in block order:
// round k adds slot i+stride into slot i. Fixed shape, fixed rounding.
template <typename Merge>
void tree_reduce(std::int64_t nb, Merge&& merge_into) {
  for (std::int64_t stride = 1; stride < nb; stride *= 2)
    for (std::int64_t i = 0; i + stride < nb; i += 2 * stride)
      merge_into(i, i + stride);
}

}  // namespace npmle::parallel
