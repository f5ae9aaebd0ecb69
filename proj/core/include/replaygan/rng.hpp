#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace replaygan {

/// Deterministic, platform-stable PRNG (splitmix64 core).
///
/// The standard <random> distributions are implementation-defined, which
/// would break byte-identical re-runs across library versions. Everything
/// that samples randomness in this project goes through this class.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    /// Uniform in [0, 1).
    double uniform();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n). Requires n > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal via Box-Muller (no cached spare, so the stream
    /// position is a pure function of the number of calls).
    double normal();

    double normal(double mean, double stddev);

    /// Draw an index from a discrete distribution given by nonnegative
    /// weights (need not be normalized).
    std::size_t categorical(const std::vector<double>& weights);

    /// Derive an independent substream; `tag` and `index` identify the
    /// purpose so streams never collide across call sites.
    Rng substream(std::string_view tag, std::uint64_t index = 0) const;

    /// Raw splitmix64 state, for checkpointing. Rng(raw_state()) resumes
    /// the stream exactly.
    std::uint64_t raw_state() const { return state_; }

  private:
    std::uint64_t state_;
};

/// 64-bit FNV-1a, used for config/artifact hashing in manifests.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(std::string_view s);

}  // namespace replaygan
