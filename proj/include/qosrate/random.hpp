#pragma once

// Seeded streams and deterministic chunked Monte Carlo fan-out. Work is split
// into fixed-size chunks; chunk c always draws from stream (seed, c), so the
// result does not depend on how many worker threads run the chunks.

#include <algorithm>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace qosrate {

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

inline constexpr std::uint64_t kDefaultChunk = 4096;

/// Runs `fn(rng, begin, end)` over [0, n) in chunks of `chunk` items and
/// returns the per-chunk results in chunk order.
template <class Result, class ChunkFn>
std::vector<Result> run_chunked(std::uint64_t n, std::uint64_t seed, unsigned workers,
                                ChunkFn&& fn, std::uint64_t chunk = kDefaultChunk) {
  const std::uint64_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<Result> results(n_chunks);
  auto run_range = [&](std::uint64_t first, std::uint64_t step) {
    for (std::uint64_t c = first; c < n_chunks; c += step) {
      Rng rng = make_stream(seed, c);
      const std::uint64_t begin = c * chunk;
      results[c] = fn(rng, begin, std::min(n, begin + chunk));
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(n_chunks, 1)));
  if (workers <= 1) {
    run_range(0, 1);
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_range, w, workers);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace qosrate
