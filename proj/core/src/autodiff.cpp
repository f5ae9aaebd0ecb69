#include "replaygan/autodiff.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace replaygan::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using CMatMap = Eigen::Map<const RowMat>;

Var make_node(Tensor value, std::vector<Var> parents, BackwardFn backward) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    for (const auto& p : parents)
        if (p.defined() && p.requires_grad()) n->requires_grad = true;
    n->parents = std::move(parents);
    if (n->requires_grad) n->backward = std::move(backward);
    return Var(n);
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a.value().same_shape(b.value()))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.value().shape_str() + " vs " +
                                    b.value().shape_str());
}

using ArrMap = Eigen::Map<Eigen::ArrayXd>;
using CArrMap = Eigen::Map<const Eigen::ArrayXd>;

CArrMap arr(const Tensor& t) { return CArrMap(t.data(), t.size()); }
ArrMap arr(Tensor& t) { return ArrMap(t.data(), t.size()); }

/// Reconstructs a Var for `self` inside a backward closure. Nodes never
/// hold owning references to themselves, so this always locks while a
/// backward pass is reachable from the root.
Var lock_self(const std::weak_ptr<Node>& w) {
    auto s = w.lock();
    if (!s) throw std::logic_error("backward on expired node");
    return Var(std::move(s));
}

}  // namespace

const Tensor& Var::value() const {
    if (!n_) throw std::logic_error("value() on null Var");
    return n_->value;
}

bool Var::requires_grad() const { return n_ && n_->requires_grad; }

Var param(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(n);
}

Var constant(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Var(n);
}

Var constant_scalar(double v) { return constant(Tensor::scalar(v)); }

Var detach(const Var& x) { return constant(x.value()); }

// ---------------------------------------------------------------- elementwise

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out(a.value().shape());
    arr(out) = arr(a.value()) + arr(b.value());
    return make_node(std::move(out), {a, b}, [](const Var& g) { return std::vector<Var>{g, g}; });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a.value().shape());
    arr(out) = arr(a.value()) - arr(b.value());
    return make_node(std::move(out), {a, b}, [](const Var& g) { return std::vector<Var>{g, neg(g)}; });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a.value().shape());
    arr(out) = arr(a.value()) * arr(b.value());
    return make_node(std::move(out), {a, b},
                     [a, b](const Var& g) { return std::vector<Var>{mul(g, b), mul(g, a)}; });
}

Var divide(const Var& a, const Var& b) {
    check_same_shape(a, b, "divide");
    Tensor out(a.value().shape());
    arr(out) = arr(a.value()) / arr(b.value());
    return make_node(std::move(out), {a, b}, [a, b](const Var& g) {
        Var da = divide(g, b);
        Var db = neg(divide(mul(g, a), mul(b, b)));
        return std::vector<Var>{da, db};
    });
}

Var neg(const Var& a) {
    Tensor out(a.value().shape());
    arr(out) = -arr(a.value());
    return make_node(std::move(out), {a}, [](const Var& g) { return std::vector<Var>{neg(g)}; });
}

Var add_scalar(const Var& a, double c) {
    Tensor out(a.value().shape());
    arr(out) = arr(a.value()) + c;
    return make_node(std::move(out), {a}, [](const Var& g) { return std::vector<Var>{g}; });
}

Var mul_scalar(const Var& a, double c) {
    Tensor out(a.value().shape());
    arr(out) = arr(a.value()) * c;
    return make_node(std::move(out), {a}, [c](const Var& g) { return std::vector<Var>{mul_scalar(g, c)}; });
}

Var exp_v(const Var& a) {
    Tensor value(a.value().shape());
    arr(value) = arr(a.value()).exp();
    Var out = make_node(std::move(value), {a}, nullptr);
    if (out.requires_grad()) {
        std::weak_ptr<Node> self = out.node_ptr();
        out.node()->backward = [self](const Var& g) { return std::vector<Var>{mul(g, lock_self(self))}; };
    }
    return out;
}

Var log_v(const Var& a) {
    Tensor out(a.value().shape());
    arr(out) = arr(a.value()).log();
    return make_node(std::move(out), {a}, [a](const Var& g) { return std::vector<Var>{divide(g, a)}; });
}

Var sqrt_v(const Var& a) {
    Tensor value(a.value().shape());
    arr(value) = arr(a.value()).sqrt();
    Var out = make_node(std::move(value), {a}, nullptr);
    if (out.requires_grad()) {
        std::weak_ptr<Node> self = out.node_ptr();
        out.node()->backward = [self](const Var& g) {
            return std::vector<Var>{mul_scalar(divide(g, lock_self(self)), 0.5)};
        };
    }
    return out;
}

Var square(const Var& a) {
    Tensor out(a.value().shape());
    arr(out) = arr(a.value()).square();
    return make_node(std::move(out), {a},
                     [a](const Var& g) { return std::vector<Var>{mul_scalar(mul(g, a), 2.0)}; });
}

Var reciprocal(const Var& a) {
    Tensor value(a.value().shape());
    arr(value) = arr(a.value()).inverse();
    Var out = make_node(std::move(value), {a}, nullptr);
    if (out.requires_grad()) {
        std::weak_ptr<Node> self = out.node_ptr();
        out.node()->backward = [self](const Var& g) {
            Var s = lock_self(self);
            return std::vector<Var>{neg(mul(g, mul(s, s)))};
        };
    }
    return out;
}

Var tanh_v(const Var& a) {
    Tensor value(a.value().shape());
    arr(value) = arr(a.value()).tanh();
    Var out = make_node(std::move(value), {a}, nullptr);
    if (out.requires_grad()) {
        std::weak_ptr<Node> self = out.node_ptr();
        out.node()->backward = [self](const Var& g) {
            Var s = lock_self(self);
            return std::vector<Var>{mul(g, add_scalar(neg(square(s)), 1.0))};
        };
    }
    return out;
}

Var sigmoid(const Var& a) {
    Tensor value(a.value().shape());
    {
        const double* src = a.value().data();
        double* dst = value.data();
        const std::int64_t n = value.size();
        for (std::int64_t i = 0; i < n; ++i) {
            const double x = src[i];
            dst[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        }
    }
    Var out = make_node(std::move(value), {a}, nullptr);
    if (out.requires_grad()) {
        std::weak_ptr<Node> self = out.node_ptr();
        out.node()->backward = [self](const Var& g) {
            Var s = lock_self(self);
            return std::vector<Var>{mul(g, mul(s, add_scalar(neg(s), 1.0)))};
        };
    }
    return out;
}

Var relu(const Var& a) {
    Tensor out(a.value().shape());
    arr(out) = arr(a.value()).max(0.0);
    return make_node(std::move(out), {a}, [a](const Var& g) {
        // a.e. derivative; the mask is constant w.r.t. all inputs
        Tensor mask(a.value().shape());
        arr(mask) = (arr(a.value()) > 0.0).cast<double>();
        return std::vector<Var>{mul(g, constant(std::move(mask)))};
    });
}

Var abs_v(const Var& a) {
    return make_node(a.value().map([](double x) { return std::abs(x); }), {a}, [a](const Var& g) {
        Tensor sign = a.value().map([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
        return std::vector<Var>{mul(g, constant(std::move(sign)))};
    });
}

Var clamp(const Var& a, double lo, double hi) {
    return make_node(a.value().map([lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); }), {a},
                     [a, lo, hi](const Var& g) {
                         Tensor mask = a.value().map([lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
                         return std::vector<Var>{mul(g, constant(std::move(mask)))};
                     });
}

// --------------------------------------------------------------- broadcasting

Var add_rowwise(const Var& x, const Var& bias) {
    const std::int64_t k = bias.value().size();
    if (x.value().rank() < 1 || x.value().shape().back() != k)
        throw std::invalid_argument("add_rowwise: last axis mismatch");
    Tensor out = x.value();
    const std::int64_t rows = out.size() / k;
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < k; ++j) out[r * k + j] += bias.value()[j];
    return make_node(std::move(out), {x, bias},
                     [](const Var& g) { return std::vector<Var>{g, sum_leading(g)}; });
}

Var mul_rowwise(const Var& x, const Var& scale) {
    const std::int64_t k = scale.value().size();
    if (x.value().rank() < 1 || x.value().shape().back() != k)
        throw std::invalid_argument("mul_rowwise: last axis mismatch");
    Tensor out = x.value();
    const std::int64_t rows = out.size() / k;
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < k; ++j) out[r * k + j] *= scale.value()[j];
    return make_node(std::move(out), {x, scale}, [x, scale](const Var& g) {
        return std::vector<Var>{mul_rowwise(g, scale), sum_leading(mul(g, x))};
    });
}

Var expand_last(const Var& s, std::int64_t k) {
    std::vector<std::int64_t> shape = s.value().shape();
    shape.push_back(k);
    Tensor out(shape);
    const std::int64_t rows = s.value().size();
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < k; ++j) out[r * k + j] = s.value()[r];
    return make_node(std::move(out), {s}, [](const Var& g) { return std::vector<Var>{sum_last(g)}; });
}

Var row_scale(const Var& x, const Var& s) {
    const std::int64_t b = x.value().rank() > 0 ? x.value().shape()[0] : 0;
    if (s.value().rank() != 1 || s.value().size() != b) throw std::invalid_argument("row_scale: scale must be [B]");
    Tensor out = x.value();
    const std::int64_t per = b > 0 ? out.size() / b : 0;
    for (std::int64_t i = 0; i < b; ++i)
        for (std::int64_t j = 0; j < per; ++j) out[i * per + j] *= s.value()[i];
    return make_node(std::move(out), {x, s}, [x, s](const Var& g) {
        return std::vector<Var>{row_scale(g, s), sum_per_sample(mul(g, x))};
    });
}

Var expand_per_sample(const Var& s, const std::vector<std::int64_t>& ref_shape) {
    const std::int64_t b = ref_shape.empty() ? 0 : ref_shape[0];
    if (s.value().rank() != 1 || s.value().size() != b)
        throw std::invalid_argument("expand_per_sample: s must be [B]");
    Tensor out(ref_shape);
    const std::int64_t per = b > 0 ? out.size() / b : 0;
    for (std::int64_t i = 0; i < b; ++i)
        for (std::int64_t j = 0; j < per; ++j) out[i * per + j] = s.value()[i];
    return make_node(std::move(out), {s}, [](const Var& g) { return std::vector<Var>{sum_per_sample(g)}; });
}

Var add_bcast0(const Var& x, const Var& p) {
    if (x.value().rank() < 2) throw std::invalid_argument("add_bcast0: x must have rank >= 2");
    const std::int64_t b = x.value().shape()[0];
    const std::int64_t per = x.value().size() / std::max<std::int64_t>(b, 1);
    if (p.value().size() != per) throw std::invalid_argument("add_bcast0: p size mismatch");
    Tensor out = x.value();
    for (std::int64_t i = 0; i < b; ++i)
        for (std::int64_t j = 0; j < per; ++j) out[i * per + j] += p.value()[j];
    return make_node(std::move(out), {x, p},
                     [](const Var& g) { return std::vector<Var>{g, sum_axis0(g)}; });
}

Var expand_axis0(const Var& s, std::int64_t n) {
    std::vector<std::int64_t> shape;
    shape.push_back(n);
    for (auto d : s.value().shape()) shape.push_back(d);
    Tensor out(shape);
    const std::int64_t per = s.value().size();
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < per; ++j) out[i * per + j] = s.value()[j];
    return make_node(std::move(out), {s}, [](const Var& g) { return std::vector<Var>{sum_axis0(g)}; });
}

Var expand_to(const Var& s, const std::vector<std::int64_t>& shape) {
    if (s.value().size() != 1) throw std::invalid_argument("expand_to: source must be scalar");
    Tensor out = Tensor::full(shape, s.value()[0]);
    return make_node(std::move(out), {s}, [](const Var& g) { return std::vector<Var>{sum_all(g)}; });
}

Var expand_leading(const Var& s, const std::vector<std::int64_t>& full_shape) {
    const std::int64_t k = s.value().size();
    if (full_shape.empty() || full_shape.back() != k)
        throw std::invalid_argument("expand_leading: last axis mismatch");
    Tensor out(full_shape);
    const std::int64_t rows = out.size() / k;
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < k; ++j) out[r * k + j] = s.value()[j];
    return make_node(std::move(out), {s}, [](const Var& g) { return std::vector<Var>{sum_leading(g)}; });
}

// ------------------------------------------------------------- linear algebra

Var matmul(const Var& a, const Var& b) {
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0])
        throw std::invalid_argument("matmul: bad shapes " + av.shape_str() + " x " + bv.shape_str());
    const std::int64_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
    Tensor out({m, n});
    MatMap(out.data(), m, n).noalias() = CMatMap(av.data(), m, k) * CMatMap(bv.data(), k, n);
    return make_node(std::move(out), {a, b}, [a, b](const Var& g) {
        return std::vector<Var>{matmul(g, transpose2(b)), matmul(transpose2(a), g)};
    });
}

Var transpose2(const Var& a) {
    const auto& av = a.value();
    if (av.rank() != 2) throw std::invalid_argument("transpose2: rank != 2");
    const std::int64_t m = av.shape()[0], n = av.shape()[1];
    Tensor out({n, m});
    MatMap(out.data(), n, m).noalias() = CMatMap(av.data(), m, n).transpose();
    return make_node(std::move(out), {a}, [](const Var& g) { return std::vector<Var>{transpose2(g)}; });
}

Var bmm(const Var& a, const Var& b, bool trans_a, bool trans_b) {
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.rank() != 3 || bv.rank() != 3 || av.shape()[0] != bv.shape()[0])
        throw std::invalid_argument("bmm: bad shapes " + av.shape_str() + " x " + bv.shape_str());
    const std::int64_t batch = av.shape()[0];
    const std::int64_t m = trans_a ? av.shape()[2] : av.shape()[1];
    const std::int64_t ka = trans_a ? av.shape()[1] : av.shape()[2];
    const std::int64_t kb = trans_b ? bv.shape()[2] : bv.shape()[1];
    const std::int64_t n = trans_b ? bv.shape()[1] : bv.shape()[2];
    if (ka != kb) throw std::invalid_argument("bmm: inner dimension mismatch");
    Tensor out({batch, m, n});
    const std::int64_t sa = av.shape()[1] * av.shape()[2];
    const std::int64_t sb = bv.shape()[1] * bv.shape()[2];
    for (std::int64_t i = 0; i < batch; ++i) {
        CMatMap ma(av.data() + i * sa, av.shape()[1], av.shape()[2]);
        CMatMap mb(bv.data() + i * sb, bv.shape()[1], bv.shape()[2]);
        MatMap mo(out.data() + i * m * n, m, n);
        if (!trans_a && !trans_b)
            mo.noalias() = ma * mb;
        else if (trans_a && !trans_b)
            mo.noalias() = ma.transpose() * mb;
        else if (!trans_a && trans_b)
            mo.noalias() = ma * mb.transpose();
        else
            mo.noalias() = ma.transpose() * mb.transpose();
    }
    return make_node(std::move(out), {a, b}, [a, b, trans_a, trans_b](const Var& g) {
        Var da, db;
        if (!trans_a && !trans_b) {
            da = bmm(g, b, false, true);
            db = bmm(a, g, true, false);
        } else if (trans_a && !trans_b) {
            da = bmm(b, g, false, true);
            db = bmm(a, g, false, false);
        } else if (!trans_a && trans_b) {
            da = bmm(g, b, false, false);
            db = bmm(g, a, true, false);
        } else {
            da = bmm(b, g, true, true);
            db = bmm(g, a, true, true);
        }
        return std::vector<Var>{da, db};
    });
}

// ----------------------------------------------------------------------- shape

Var reshape(const Var& x, std::vector<std::int64_t> shape) {
    if (shape_numel(shape) != x.value().size()) throw std::invalid_argument("reshape: numel mismatch");
    Tensor out(shape, x.value().vec());
    std::vector<std::int64_t> orig = x.value().shape();
    return make_node(std::move(out), {x},
                     [orig](const Var& g) { return std::vector<Var>{reshape(g, orig)}; });
}

namespace {

/// Generic slice along an axis, expressed through (outer, axis, inner)
/// strides so the same helper backs slice_axis0/1 and slice_last.
Tensor slice_axis_impl(const Tensor& v, std::int64_t axis, std::int64_t start, std::int64_t len) {
    const auto& sh = v.shape();
    std::int64_t outer = 1, inner = 1;
    for (std::int64_t i = 0; i < axis; ++i) outer *= sh[static_cast<std::size_t>(i)];
    for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < sh.size(); ++i) inner *= sh[i];
    const std::int64_t n = sh[static_cast<std::size_t>(axis)];
    if (start < 0 || len < 0 || start + len > n) throw std::out_of_range("slice: range out of bounds");
    std::vector<std::int64_t> oshape = sh;
    oshape[static_cast<std::size_t>(axis)] = len;
    Tensor out(oshape);
    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t j = 0; j < len; ++j)
            for (std::int64_t i = 0; i < inner; ++i)
                out[(o * len + j) * inner + i] = v[(o * n + (start + j)) * inner + i];
    return out;
}

Tensor inject_axis_impl(const Tensor& g, std::int64_t axis, std::int64_t start, std::int64_t total) {
    const auto& sh = g.shape();
    std::int64_t outer = 1, inner = 1;
    for (std::int64_t i = 0; i < axis; ++i) outer *= sh[static_cast<std::size_t>(i)];
    for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < sh.size(); ++i) inner *= sh[i];
    const std::int64_t len = sh[static_cast<std::size_t>(axis)];
    std::vector<std::int64_t> oshape = sh;
    oshape[static_cast<std::size_t>(axis)] = total;
    Tensor out(oshape);
    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t j = 0; j < len; ++j)
            for (std::int64_t i = 0; i < inner; ++i)
                out[(o * total + (start + j)) * inner + i] = g[(o * len + j) * inner + i];
    return out;
}

Var slice_axis(const Var& x, std::int64_t axis, std::int64_t start, std::int64_t len) {
    const std::int64_t total = x.value().shape()[static_cast<std::size_t>(axis)];
    return make_node(slice_axis_impl(x.value(), axis, start, len), {x},
                     [axis, start, len, total](const Var& g) {
                         Var full = make_node(inject_axis_impl(g.value(), axis, start, total), {g},
                                              [axis, start, len](const Var& gg) {
                                                  return std::vector<Var>{slice_axis(gg, axis, start, len)};
                                              });
                         return std::vector<Var>{full};
                     });
}

}  // namespace

Var slice_last(const Var& x, std::int64_t start, std::int64_t len) {
    return slice_axis(x, x.value().rank() - 1, start, len);
}

Var slice_axis0(const Var& x, std::int64_t start, std::int64_t len) { return slice_axis(x, 0, start, len); }

Var slice_axis1(const Var& x, std::int64_t start, std::int64_t len) {
    if (x.value().rank() < 2) throw std::invalid_argument("slice_axis1: rank < 2");
    return slice_axis(x, 1, start, len);
}

namespace {

Var concat_axis(const std::vector<Var>& xs, std::int64_t axis) {
    if (xs.empty()) throw std::invalid_argument("concat: empty input");
    const auto& ref = xs[0].value().shape();
    std::vector<std::int64_t> oshape = ref;
    std::int64_t total = 0;
    for (const auto& x : xs) {
        const auto& sh = x.value().shape();
        if (sh.size() != ref.size()) throw std::invalid_argument("concat: rank mismatch");
        for (std::size_t i = 0; i < sh.size(); ++i)
            if (static_cast<std::int64_t>(i) != axis && sh[i] != ref[i])
                throw std::invalid_argument("concat: off-axis shape mismatch");
        total += sh[static_cast<std::size_t>(axis)];
    }
    oshape[static_cast<std::size_t>(axis)] = total;

    std::int64_t outer = 1, inner = 1;
    for (std::int64_t i = 0; i < axis; ++i) outer *= ref[static_cast<std::size_t>(i)];
    for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < ref.size(); ++i) inner *= ref[i];

    Tensor out(oshape);
    std::int64_t off = 0;
    for (const auto& x : xs) {
        const std::int64_t len = x.value().shape()[static_cast<std::size_t>(axis)];
        for (std::int64_t o = 0; o < outer; ++o)
            for (std::int64_t j = 0; j < len; ++j)
                for (std::int64_t i = 0; i < inner; ++i)
                    out[(o * total + off + j) * inner + i] = x.value()[(o * len + j) * inner + i];
        off += len;
    }

    std::vector<std::int64_t> lens;
    for (const auto& x : xs) lens.push_back(x.value().shape()[static_cast<std::size_t>(axis)]);
    return make_node(std::move(out), xs, [axis, lens](const Var& g) {
        std::vector<Var> grads;
        std::int64_t off = 0;
        for (std::int64_t len : lens) {
            grads.push_back(slice_axis(g, axis, off, len));
            off += len;
        }
        return grads;
    });
}

}  // namespace

Var concat_last(const std::vector<Var>& xs) {
    return concat_axis(xs, xs.at(0).value().rank() - 1);
}

Var concat_axis1(const std::vector<Var>& xs) { return concat_axis(xs, 1); }

// ------------------------------------------------------------------ reductions

Var sum_all(const Var& x) {
    double s = 0.0;
    for (std::int64_t i = 0; i < x.value().size(); ++i) s += x.value()[i];
    std::vector<std::int64_t> shape = x.value().shape();
    return make_node(Tensor::scalar(s), {x},
                     [shape](const Var& g) { return std::vector<Var>{expand_to(g, shape)}; });
}

Var sum_last(const Var& x) {
    const auto& sh = x.value().shape();
    if (sh.empty()) throw std::invalid_argument("sum_last: rank 0");
    const std::int64_t k = sh.back();
    std::vector<std::int64_t> oshape(sh.begin(), sh.end() - 1);
    Tensor out(oshape);
    const std::int64_t rows = out.size();
    for (std::int64_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::int64_t j = 0; j < k; ++j) s += x.value()[r * k + j];
        out[r] = s;
    }
    return make_node(std::move(out), {x},
                     [k](const Var& g) { return std::vector<Var>{expand_last(g, k)}; });
}

Var sum_leading(const Var& x) {
    const auto& sh = x.value().shape();
    if (sh.empty()) throw std::invalid_argument("sum_leading: rank 0");
    const std::int64_t k = sh.back();
    Tensor out({k});
    const std::int64_t rows = x.value().size() / k;
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < k; ++j) out[j] += x.value()[r * k + j];
    std::vector<std::int64_t> full = sh;
    return make_node(std::move(out), {x},
                     [full](const Var& g) { return std::vector<Var>{expand_leading(g, full)}; });
}

Var sum_per_sample(const Var& x) {
    const auto& sh = x.value().shape();
    if (sh.empty()) throw std::invalid_argument("sum_per_sample: rank 0");
    const std::int64_t b = sh[0];
    const std::int64_t per = b > 0 ? x.value().size() / b : 0;
    Tensor out({b});
    for (std::int64_t i = 0; i < b; ++i) {
        double s = 0.0;
        for (std::int64_t j = 0; j < per; ++j) s += x.value()[i * per + j];
        out[i] = s;
    }
    std::vector<std::int64_t> full = sh;
    return make_node(std::move(out), {x},
                     [full](const Var& g) { return std::vector<Var>{expand_per_sample(g, full)}; });
}

Var sum_axis0(const Var& x) {
    const auto& sh = x.value().shape();
    if (sh.empty()) throw std::invalid_argument("sum_axis0: rank 0");
    const std::int64_t n = sh[0];
    std::vector<std::int64_t> oshape(sh.begin() + 1, sh.end());
    Tensor out(oshape);
    const std::int64_t per = out.size();
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < per; ++j) out[j] += x.value()[i * per + j];
    return make_node(std::move(out), {x},
                     [n](const Var& g) { return std::vector<Var>{expand_axis0(g, n)}; });
}

Var sum_axis1(const Var& x) {
    const auto& sh = x.value().shape();
    if (sh.size() < 2) throw std::invalid_argument("sum_axis1: rank < 2");
    const std::int64_t b = sh[0], t = sh[1];
    std::vector<std::int64_t> oshape;
    oshape.push_back(b);
    for (std::size_t i = 2; i < sh.size(); ++i) oshape.push_back(sh[i]);
    Tensor out(oshape);
    const std::int64_t per = out.size() / std::max<std::int64_t>(b, 1);
    for (std::int64_t i = 0; i < b; ++i)
        for (std::int64_t j = 0; j < t; ++j)
            for (std::int64_t k = 0; k < per; ++k) out[i * per + k] += x.value()[(i * t + j) * per + k];
    return make_node(std::move(out), {x},
                     [t](const Var& g) { return std::vector<Var>{expand_axis1(g, t)}; });
}

Var expand_axis1(const Var& s, std::int64_t t) {
    const auto& sh = s.value().shape();
    if (sh.empty()) throw std::invalid_argument("expand_axis1: rank 0");
    const std::int64_t b = sh[0];
    std::vector<std::int64_t> oshape;
    oshape.push_back(b);
    oshape.push_back(t);
    for (std::size_t i = 1; i < sh.size(); ++i) oshape.push_back(sh[i]);
    Tensor out(oshape);
    const std::int64_t per = s.value().size() / std::max<std::int64_t>(b, 1);
    for (std::int64_t i = 0; i < b; ++i)
        for (std::int64_t j = 0; j < t; ++j)
            for (std::int64_t k = 0; k < per; ++k) out[(i * t + j) * per + k] = s.value()[i * per + k];
    return make_node(std::move(out), {s}, [](const Var& g) { return std::vector<Var>{sum_axis1(g)}; });
}

// ---------------------------------------------------------------- compositions

Var mean_all(const Var& x) {
    const std::int64_t n = std::max<std::int64_t>(x.value().size(), 1);
    return mul_scalar(sum_all(x), 1.0 / static_cast<double>(n));
}

Var mean_last(const Var& x) {
    const std::int64_t k = std::max<std::int64_t>(x.value().shape().back(), 1);
    return mul_scalar(sum_last(x), 1.0 / static_cast<double>(k));
}

Var softmax_last(const Var& x) {
    // max-shift is detached: a.e. it contributes zero gradient
    const auto& sh = x.value().shape();
    const std::int64_t k = sh.back();
    Tensor shift(std::vector<std::int64_t>(sh.begin(), sh.end() - 1));
    const std::int64_t rows = shift.size();
    for (std::int64_t r = 0; r < rows; ++r) {
        double m = x.value()[r * k];
        for (std::int64_t j = 1; j < k; ++j) m = std::max(m, x.value()[r * k + j]);
        shift[r] = m;
    }
    Var centered = sub(x, expand_last(constant(std::move(shift)), k));
    Var e = exp_v(centered);
    Var denom = sum_last(e);
    return mul(e, expand_last(reciprocal(denom), k));
}

Var l2_norm_per_sample(const Var& x) { return sqrt_v(sum_per_sample(square(x))); }

// -------------------------------------------------------------------- backward

namespace {

void topo_visit(Node* n, std::unordered_map<Node*, int>& state, std::vector<Node*>& order) {
    // iterative DFS; graphs get deep (LSTM over time, double backward)
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(n, 0);
    state[n] = 1;
    while (!stack.empty()) {
        auto& [cur, idx] = stack.back();
        if (idx < cur->parents.size()) {
            Node* p = cur->parents[idx].node();
            ++idx;
            if (p && p->requires_grad) {
                auto it = state.find(p);
                if (it == state.end()) {
                    state[p] = 1;
                    stack.emplace_back(p, 0);
                }
            }
        } else {
            order.push_back(cur);
            stack.pop_back();
        }
    }
}

}  // namespace

std::vector<Var> grad(const Var& root, const std::vector<Var>& wrt) {
    if (!root.defined()) throw std::invalid_argument("grad: null root");
    if (root.value().size() != 1) throw std::invalid_argument("grad: root must be scalar");

    std::vector<Var> out(wrt.size());
    auto zero_like = [](const Var& v) { return constant(Tensor::zeros(v.value().shape())); };

    if (!root.requires_grad()) {
        for (std::size_t i = 0; i < wrt.size(); ++i) out[i] = zero_like(wrt[i]);
        return out;
    }

    std::unordered_map<Node*, int> state;
    std::vector<Node*> order;  // parents before children
    topo_visit(root.node(), state, order);

    std::unordered_map<Node*, Var> grads;
    grads[root.node()] = constant(Tensor::full(root.value().shape(), 1.0));

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        auto git = grads.find(n);
        if (git == grads.end()) continue;  // not on a path from root
        if (!n->backward) continue;        // leaf
        std::vector<Var> pgrads = n->backward(git->second);
        if (pgrads.size() != n->parents.size())
            throw std::logic_error("backward returned wrong number of gradients");
        for (std::size_t i = 0; i < pgrads.size(); ++i) {
            const Var& p = n->parents[i];
            if (!p.defined() || !p.requires_grad() || !pgrads[i].defined()) continue;
            auto acc = grads.find(p.node());
            if (acc == grads.end())
                grads[p.node()] = pgrads[i];
            else
                acc->second = add(acc->second, pgrads[i]);
        }
    }

    for (std::size_t i = 0; i < wrt.size(); ++i) {
        auto it = grads.find(wrt[i].node());
        out[i] = (it != grads.end()) ? it->second : zero_like(wrt[i]);
    }
    return out;
}

}  // namespace replaygan::ad
