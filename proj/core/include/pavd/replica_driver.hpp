#pragma once

/**
 * Deterministic replica scheduling.
 *
 * Replicas are identified by a global index.  Each index derives its own
 * generator stream from the master seed, threads work on contiguous index
 * ranges, and partial results merge in index order — so for a fixed seed the
 * output is bit-identical at any thread count.  Experiments that must hit a
 * target number of *kept* (typically surviving) replicas consume indices in
 * whole batches of kSurvivalBatch and stop after the first batch reaching
 * the target, a prefix rule that is likewise thread-count independent.
 */

#include <algorithm>
#include <cstdint>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

#include "pavd/rng.hpp"

namespace pavd {

/// Replicas processed per stopping-rule batch.
constexpr std::int64_t kSurvivalBatch = 256;

/// Runs fn(index, rng) for every index in [begin, end).  fn must only touch
/// state owned by its index (or otherwise thread-safe state).
template <class Fn>
void for_each_replica(std::int64_t begin, std::int64_t end, std::uint64_t seed,
                      int threads, Fn&& fn) {
  if (end <= begin) return;
  const std::int64_t count = end - begin;
  const int workers =
      static_cast<int>(std::min<std::int64_t>(std::max(1, threads), count));
  if (workers == 1) {
    for (std::int64_t i = begin; i < end; ++i) {
      Rng rng = derive_stream(seed, static_cast<std::uint64_t>(i));
      fn(i, rng);
    }
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    const std::int64_t lo = begin + count * t / workers;
    const std::int64_t hi = begin + count * (t + 1) / workers;
    pool.emplace_back([&fn, &errors, seed, lo, hi, t] {
      try {
        for (std::int64_t i = lo; i < hi; ++i) {
          Rng rng = derive_stream(seed, static_cast<std::uint64_t>(i));
          fn(i, rng);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Map-reduce variant: each worker accumulates into its own Local
/// (value-initialized), and parts merge in index order, so concatenation
/// merges reproduce the serial element order exactly.
template <class Local, class Fn, class Merge>
Local map_reduce_replicas(std::int64_t begin, std::int64_t end, std::uint64_t seed,
                          int threads, Fn&& fn, Merge&& merge) {
  Local out{};
  if (end <= begin) return out;
  const std::int64_t count = end - begin;
  const int workers =
      static_cast<int>(std::min<std::int64_t>(std::max(1, threads), count));
  if (workers == 1) {
    for (std::int64_t i = begin; i < end; ++i) {
      Rng rng = derive_stream(seed, static_cast<std::uint64_t>(i));
      fn(i, rng, out);
    }
    return out;
  }
  std::vector<Local> parts(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    const std::int64_t lo = begin + count * t / workers;
    const std::int64_t hi = begin + count * (t + 1) / workers;
    pool.emplace_back([&fn, &errors, &parts, seed, lo, hi, t] {
      try {
        Local& local = parts[static_cast<std::size_t>(t)];
        for (std::int64_t i = lo; i < hi; ++i) {
          Rng rng = derive_stream(seed, static_cast<std::uint64_t>(i));
          fn(i, rng, local);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& part : parts) merge(out, std::move(part));
  return out;
}

/// Batch stopping rule: run(i, rng) returns a kept result or nullopt; whole
/// batches run until `target` kept results exist or max_replicas is
/// exhausted.  Kept results land in replica order.  Returns the number of
/// replicas run.
template <class T, class RunFn>
std::int64_t run_until_kept(std::int64_t target, std::int64_t max_replicas,
                            std::uint64_t seed, int threads, RunFn&& run,
                            std::vector<T>& kept) {
  std::vector<std::optional<T>> slots;
  std::int64_t begun = 0;
  while (begun < max_replicas && static_cast<std::int64_t>(kept.size()) < target) {
    const std::int64_t batch_end = std::min(max_replicas, begun + kSurvivalBatch);
    slots.assign(static_cast<std::size_t>(batch_end - begun), std::nullopt);
    for_each_replica(begun, batch_end, seed, threads,
                     [&](std::int64_t i, Rng& rng) {
                       slots[static_cast<std::size_t>(i - begun)] = run(i, rng);
                     });
    for (auto& s : slots) {
      if (s) kept.push_back(std::move(*s));
    }
    begun = batch_end;
  }
  return begun;
}

}  // namespace pavd
