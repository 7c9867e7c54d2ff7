#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

namespace anchorpose {

/// The one random engine used throughout. Always passed explicitly.
using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent sub-stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of the sub-stream `name`/`index` under `seed`. Pure function of its
/// arguments, so streams never depend on scheduling.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::string_view name,
                                       std::uint64_t index = 0) noexcept {
  return mix64(mix64(seed ^ hash_name(name)) + mix64(index));
}

inline Rng make_rng(std::uint64_t seed, std::string_view name,
                    std::uint64_t index = 0) {
  return Rng(substream_seed(seed, name, index));
}

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// executed exactly once; callers write results into slot i so the outcome
/// does not depend on the schedule. The first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body &&body) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w)
    pool.emplace_back(run);
  run();
  pool.clear();
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace anchorpose
