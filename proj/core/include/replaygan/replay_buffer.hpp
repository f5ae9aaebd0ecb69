#pragma once

#include <cstdint>
#include <vector>

#include "replaygan/rng.hpp"
#include "replaygan/tensor.hpp"

namespace replaygan::replay {

/// One stored record: its encoded feature sequence and the paired
/// learned standard deviations, both [time, 128].
struct BufferEntry {
    Tensor gamma;
    Tensor sigma;
};

/// Fixed-capacity store of real-data features. When an insert arrives
/// with no vacancy, one uniformly-random entry is released per insert;
/// eviction draws come from the buffer's own seeded stream.
class FeatureBuffer {
  public:
    explicit FeatureBuffer(std::int64_t capacity = 10000, std::uint64_t seed = 0);

    std::int64_t size() const { return static_cast<std::int64_t>(entries_.size()); }
    std::int64_t capacity() const { return capacity_; }
    bool empty() const { return entries_.empty(); }

    void append(BufferEntry entry);
    void append_batch(const Tensor& gamma, const Tensor& sigma, const std::vector<std::int64_t>& lengths);

    /// n i.i.d. uniform draws with replacement. Throws on empty buffer.
    std::vector<BufferEntry> sample(std::int64_t n, std::uint64_t seed) const;

    const std::vector<BufferEntry>& entries() const { return entries_; }
    std::uint64_t rng_state() const { return rng_.raw_state(); }
    void restore_rng_state(std::uint64_t state) { rng_ = Rng(state); }

  private:
    std::int64_t capacity_;
    std::vector<BufferEntry> entries_;
    Rng rng_;
};

enum class ReplayMode { Train, Test };

/// Train mode passes the stored features through unmodified; test mode
/// reparameterizes z = gamma + rho with rho ~ N(0, sigma) elementwise.
/// Rejects nonpositive sigmas.
Tensor make_generator_input(const Tensor& gamma, const Tensor& sigma, ReplayMode mode, std::uint64_t seed);

}  // namespace replaygan::replay
