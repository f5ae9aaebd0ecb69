#include "replaygan/kmeans.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace replaygan {

KMeansResult kmeans(const Tensor& points, std::int64_t k, std::uint64_t seed, std::int64_t max_iter, double tol) {
    if (points.rank() != 2) throw std::invalid_argument("kmeans: points must be [N,D]");
    const std::int64_t n = points.dim(0), d = points.dim(1);
    if (n == 0) throw std::invalid_argument("kmeans: no points");
    const std::int64_t k_eff = std::min(k, n);

    // seeded init: k distinct indices via partial Fisher-Yates
    Rng rng(seed);
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    for (std::int64_t i = 0; i < k_eff; ++i) {
        const auto j = i + static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(n - i)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    Tensor centers({k_eff, d});
    for (std::int64_t c = 0; c < k_eff; ++c)
        for (std::int64_t j = 0; j < d; ++j) centers.at2(c, j) = points.at2(order[static_cast<std::size_t>(c)], j);

    KMeansResult res;
    res.labels.assign(static_cast<std::size_t>(n), 0);

    std::vector<double> sums(static_cast<std::size_t>(k_eff * d));
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k_eff));

    for (std::int64_t iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter + 1;
        for (std::int64_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::int64_t best_c = 0;
            for (std::int64_t c = 0; c < k_eff; ++c) {
                double dist = 0.0;
                for (std::int64_t j = 0; j < d; ++j) {
                    const double diff = points.at2(i, j) - centers.at2(c, j);
                    dist += diff * diff;
                }
                if (dist < best) {
                    best = dist;
                    best_c = c;
                }
            }
            res.labels[static_cast<std::size_t>(i)] = best_c;
        }

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::int64_t i = 0; i < n; ++i) {
            const auto c = res.labels[static_cast<std::size_t>(i)];
            ++counts[static_cast<std::size_t>(c)];
            for (std::int64_t j = 0; j < d; ++j) sums[static_cast<std::size_t>(c * d + j)] += points.at2(i, j);
        }

        double max_shift = 0.0;
        for (std::int64_t c = 0; c < k_eff; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) continue;  // empty cluster keeps its center
            double shift = 0.0;
            for (std::int64_t j = 0; j < d; ++j) {
                const double next = sums[static_cast<std::size_t>(c * d + j)] /
                                    static_cast<double>(counts[static_cast<std::size_t>(c)]);
                const double diff = next - centers.at2(c, j);
                shift += diff * diff;
                centers.at2(c, j) = next;
            }
            max_shift = std::max(max_shift, std::sqrt(shift));
        }
        if (max_shift < tol) break;
    }

    res.centers = std::move(centers);
    return res;
}

}  // namespace replaygan
