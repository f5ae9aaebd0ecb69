#pragma once

// Independent gradient oracle: central finite differences over flattened
// inputs. Kept free of any autodiff machinery so it stays a valid check
// of the analytic path.

#include <cmath>
#include <functional>
#include <vector>

#include "replaygan/rng.hpp"
#include "replaygan/tensor.hpp"

namespace testsupport {

using replaygan::Rng;
using replaygan::Tensor;

inline Tensor random_tensor(Rng& rng, std::vector<std::int64_t> shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

/// Numeric gradient of `f` w.r.t. every element of inputs[which].
inline Tensor fd_gradient(const std::function<double(const std::vector<Tensor>&)>& f, std::vector<Tensor> inputs,
                          std::size_t which, double h = 1e-5) {
    Tensor grad(inputs[which].shape());
    for (std::int64_t i = 0; i < inputs[which].size(); ++i) {
        const double orig = inputs[which][i];
        const double step = h * std::max(1.0, std::abs(orig));
        inputs[which][i] = orig + step;
        const double fp = f(inputs);
        inputs[which][i] = orig - step;
        const double fm = f(inputs);
        inputs[which][i] = orig;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    return grad;
}

/// max over elements of |analytic - numeric| / max(|analytic|, |numeric|, floor)
inline double max_rel_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-6) {
    double worst = 0.0;
    for (std::int64_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

}  // namespace testsupport
