#pragma once

/**
 * Deterministic, platform-independent random number streams.
 *
 * Reproducibility contract: a (master seed, replica index) pair always
 * yields the same stream of variates, on every platform and at every
 * thread count.  Two ingredients make this hold:
 *
 *  1. the generator is std::mt19937_64, whose state transition and output
 *     are fully specified by the standard (unlike std::uniform_real_distribution
 *     and friends, whose algorithms are implementation-defined); and
 *  2. all variate transformations are implemented here by hand from the raw
 *     64-bit output.
 *
 * Stream derivation mixes the master seed and the replica index through
 * SplitMix64, a 64-bit finalizer with full avalanche, so that nearby
 * replica indices land in statistically unrelated regions of the
 * generator's seed space.
 */

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace pavd {

/// SplitMix64 finalizer.  Bijective on 64-bit words, full avalanche.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// A single deterministic stream of variates.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1), 53 random bits.
  double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Exponential with the given rate.  Uses -log(1-U) so the result is
  /// finite for every attainable U.
  double expo(double rate) { return -std::log1p(-u01()) / rate; }

  /// Bernoulli(p) as U < p.
  bool bernoulli(double p) { return u01() < p; }

  /// Uniform integer in [0, n) by scaling; adequate for the n << 2^53 sizes
  /// used here and, unlike rejection schemes, consumes exactly one draw,
  /// which keeps scripted tests and replay simple.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(u01() * static_cast<double>(n));
  }

 private:
  std::mt19937_64 gen_;
};

/// Derives the seed for one replica's stream from the master seed.
///
/// Distinct (seed, index) pairs map to distinct generator seeds unless
/// SplitMix64 collides across the combined words, which is a 2^-64 event.
inline std::uint64_t derive_stream_seed(std::uint64_t master_seed,
                                        std::uint64_t replica_index) {
  const std::uint64_t a = splitmix64(master_seed);
  const std::uint64_t b = splitmix64(a ^ (replica_index + 0x632BE59BD9B4E019ULL));
  return splitmix64(a + 0x9E3779B97F4A7C15ULL * b);
}

/// The stream for one replica of one master-seeded run.
inline Rng derive_stream(std::uint64_t master_seed, std::uint64_t replica_index) {
  return Rng(derive_stream_seed(master_seed, replica_index));
}

}  // namespace pavd
