#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ruinsim {

/// Number of RNG shards a Monte Carlo run is split into. Fixed, so results do
/// not depend on the worker count.
inline constexpr std::uint32_t kDefaultShards = 64;

struct MonteCarloOptions {
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::uint32_t shards = kDefaultShards;
};

/// Samples assigned to `shard` when `total` is split over `shards`.
inline std::uint64_t shard_size(std::uint64_t total, std::uint32_t shards, std::uint32_t shard) {
  return total / shards + (shard < total % shards ? 1 : 0);
}

/// Evaluates body(shard, shard_samples) for every shard on up to `workers`
/// threads and returns the per-shard results in shard order.
template <class Result, class Body>
std::vector<Result> run_shards(std::uint64_t total, std::uint32_t shards, unsigned workers,
                               Body&& body) {
  std::vector<Result> results(shards);
  std::atomic<std::uint32_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::uint32_t s = next++; s < shards; s = next++) {
      try {
        results[s] = body(s, shard_size(total, shards, s));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::clamp(workers, 1u, shards);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace ruinsim
