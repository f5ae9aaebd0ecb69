#include "replaygan/replay_buffer.hpp"

#include <stdexcept>

namespace replaygan::replay {

FeatureBuffer::FeatureBuffer(std::int64_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity <= 0) throw std::invalid_argument("FeatureBuffer: capacity must be positive");
}

void FeatureBuffer::append(BufferEntry entry) {
    if (!entry.gamma.same_shape(entry.sigma))
        throw std::invalid_argument("FeatureBuffer: gamma and sigma must be paired in shape");
    if (size() == capacity_) {
        const auto victim = rng_.uniform_index(static_cast<std::uint64_t>(size()));
        entries_[static_cast<std::size_t>(victim)] = std::move(entry);
    } else {
        entries_.push_back(std::move(entry));
    }
}

void FeatureBuffer::append_batch(const Tensor& gamma, const Tensor& sigma, const std::vector<std::int64_t>& lengths) {
    if (gamma.rank() != 3 || !gamma.same_shape(sigma))
        throw std::invalid_argument("FeatureBuffer: batched features must be paired [B,T,K]");
    const std::int64_t b = gamma.dim(0), t_max = gamma.dim(1), k = gamma.dim(2);
    if (static_cast<std::int64_t>(lengths.size()) != b)
        throw std::invalid_argument("FeatureBuffer: one length per sample required");
    for (std::int64_t i = 0; i < b; ++i) {
        const std::int64_t len = std::min(lengths[static_cast<std::size_t>(i)], t_max);
        BufferEntry e{Tensor({len, k}), Tensor({len, k})};
        for (std::int64_t t = 0; t < len; ++t) {
            for (std::int64_t j = 0; j < k; ++j) {
                e.gamma.at2(t, j) = gamma.at3(i, t, j);
                e.sigma.at2(t, j) = sigma.at3(i, t, j);
            }
        }
        append(std::move(e));
    }
}

std::vector<BufferEntry> FeatureBuffer::sample(std::int64_t n, std::uint64_t seed) const {
    if (entries_.empty()) throw std::logic_error("FeatureBuffer: cannot sample from an empty buffer");
    if (n < 0) throw std::invalid_argument("FeatureBuffer: negative sample count");
    Rng rng(seed);
    std::vector<BufferEntry> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        out.push_back(entries_[static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(size())))]);
    return out;
}

Tensor make_generator_input(const Tensor& gamma, const Tensor& sigma, ReplayMode mode, std::uint64_t seed) {
    if (!gamma.same_shape(sigma)) throw std::invalid_argument("make_generator_input: paired shapes required");
    if (mode == ReplayMode::Train) return gamma;
    for (std::int64_t i = 0; i < sigma.size(); ++i)
        if (sigma[i] <= 0.0) throw std::invalid_argument("make_generator_input: sigma must be strictly positive");
    Rng rng(seed);
    Tensor z = gamma;
    for (std::int64_t i = 0; i < z.size(); ++i) z[i] += rng.normal(0.0, sigma[i]);
    return z;
}

}  // namespace replaygan::replay
