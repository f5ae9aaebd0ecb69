#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "replaygan/tensor.hpp"

namespace replaygan::ad {

struct Node;

/// Handle to a node of a dynamic computation graph. Cheap to copy.
///
/// Backward functions build further graph nodes, so gradients are
/// themselves differentiable; this is what makes the WGAN-GP gradient
/// penalty (a loss on a gradient norm) trainable.
class Var {
  public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : n_(std::move(n)) {}

    bool defined() const { return n_ != nullptr; }
    const Tensor& value() const;
    bool requires_grad() const;
    const std::vector<std::int64_t>& shape() const { return value().shape(); }
    std::int64_t size() const { return value().size(); }
    double item() const { return value().item(); }

    Node* node() const { return n_.get(); }
    std::shared_ptr<Node> node_ptr() const { return n_; }

  private:
    std::shared_ptr<Node> n_;
};

using BackwardFn = std::function<std::vector<Var>(const Var& grad_out)>;

struct Node {
    Tensor value;
    bool requires_grad = false;
    std::vector<Var> parents;
    BackwardFn backward;  // empty when requires_grad is false
};

/// Leaf with requires_grad = true (a parameter or probed input).
Var param(Tensor value);
/// Leaf with requires_grad = false.
Var constant(Tensor value);
Var constant_scalar(double v);
/// Same value, cut from the graph.
Var detach(const Var& x);

// ---- elementwise ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var divide(const Var& a, const Var& b);
Var neg(const Var& a);
Var add_scalar(const Var& a, double c);
Var mul_scalar(const Var& a, double c);
Var exp_v(const Var& a);
Var log_v(const Var& a);
Var sqrt_v(const Var& a);
Var square(const Var& a);
Var reciprocal(const Var& a);
Var tanh_v(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var abs_v(const Var& a);
Var clamp(const Var& a, double lo, double hi);

// ---- broadcasting ----
Var add_rowwise(const Var& x, const Var& bias);        // [..,K] + [K]
Var mul_rowwise(const Var& x, const Var& scale);       // [..,K] * [K]
Var expand_last(const Var& s, std::int64_t k);         // [..] -> [..,K]
Var row_scale(const Var& x, const Var& s);             // [B,..] * [B]
Var expand_per_sample(const Var& s, const std::vector<std::int64_t>& ref_shape);  // [B] -> [B,..]
Var add_bcast0(const Var& x, const Var& p);            // [B,T,K] + [T,K]
Var expand_axis0(const Var& s, std::int64_t n);        // [..] -> [n,..]
Var expand_to(const Var& s, const std::vector<std::int64_t>& shape);  // scalar -> shape
Var expand_leading(const Var& s, const std::vector<std::int64_t>& full_shape);  // [K] -> [..,K]

// ---- linear algebra ----
Var matmul(const Var& a, const Var& b);                // [M,K]x[K,N]
Var transpose2(const Var& a);                          // [M,N] -> [N,M]
Var bmm(const Var& a, const Var& b, bool trans_a = false, bool trans_b = false);  // [B,M,K]x[B,K,N]

// ---- shape ----
Var reshape(const Var& x, std::vector<std::int64_t> shape);
Var slice_last(const Var& x, std::int64_t start, std::int64_t len);
Var concat_last(const std::vector<Var>& xs);
Var slice_axis0(const Var& x, std::int64_t start, std::int64_t len);
Var slice_axis1(const Var& x, std::int64_t start, std::int64_t len);  // [B,T,K]
Var concat_axis1(const std::vector<Var>& xs);

// ---- reductions ----
Var sum_all(const Var& x);       // -> scalar
Var sum_last(const Var& x);      // [..,K] -> [..]
Var sum_leading(const Var& x);   // [..,K] -> [K]
Var sum_per_sample(const Var& x);  // [B,..] -> [B]
Var sum_axis0(const Var& x);     // [N,..] -> [..]
Var sum_axis1(const Var& x);     // [B,T,..] -> [B,..]
Var expand_axis1(const Var& s, std::int64_t t);  // [B,..] -> [B,T,..]

// ---- compositions ----
Var mean_all(const Var& x);
Var mean_last(const Var& x);
Var softmax_last(const Var& x);
Var l2_norm_per_sample(const Var& x);  // [B,..] -> [B]

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return divide(a, b); }
inline Var operator-(const Var& a) { return neg(a); }

/// Gradients of a scalar `root` w.r.t. each of `wrt`. Results are graph
/// nodes; pass them through further ops for higher-order derivatives.
/// Vars in `wrt` unreachable from `root` get zero gradients.
std::vector<Var> grad(const Var& root, const std::vector<Var>& wrt);

}  // namespace replaygan::ad
