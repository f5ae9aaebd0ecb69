#pragma once

#include <cstdint>
#include <vector>

#include "replaygan/rng.hpp"
#include "replaygan/tensor.hpp"

namespace replaygan {

struct KMeansResult {
    Tensor centers;                // [k_eff, D]
    std::vector<std::int64_t> labels;  // one per point, in [0, k_eff)
    std::int64_t iterations = 0;
};

/// Lloyd's algorithm with seeded center initialization (k distinct point
/// indices drawn without replacement), capped iterations and a movement
/// tolerance. Assignment ties break toward the lowest center index;
/// clusters that empty out keep their previous center. k is clamped to
/// the number of points.
KMeansResult kmeans(const Tensor& points, std::int64_t k, std::uint64_t seed, std::int64_t max_iter = 300,
                    double tol = 1e-4);

}  // namespace replaygan
