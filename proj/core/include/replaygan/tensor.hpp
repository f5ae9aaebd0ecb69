#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <new>
#include <string>
#include <vector>

namespace replaygan {

/// 64-byte-aligned allocator. Keeping every tensor buffer identically
/// aligned pins Eigen's vectorized code paths, so repeated evaluation of
/// the same graph is bit-identical across calls and process runs.
template <typename T>
struct TensorAllocator {
    using value_type = T;
    static constexpr std::size_t kAlign = 64;

    TensorAllocator() = default;
    template <typename U>
    TensorAllocator(const TensorAllocator<U>&) {}

    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(kAlign)));
    }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t(kAlign)); }

    template <typename U>
    bool operator==(const TensorAllocator<U>&) const {
        return true;
    }
};

using TensorData = std::vector<double, TensorAllocator<double>>;

/// Dense row-major tensor of doubles. Rank 0 (scalar) through rank 3 is
/// what the networks use; the type itself is rank-agnostic.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> shape);
    Tensor(std::vector<std::int64_t> shape, TensorData data);
    Tensor(std::vector<std::int64_t> shape, const std::vector<double>& data);
    Tensor(std::vector<std::int64_t> shape, std::initializer_list<double> data);

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<std::int64_t> shape);
    static Tensor full(std::vector<std::int64_t> shape, double v);

    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    std::int64_t dim(std::int64_t axis) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    TensorData& vec() { return data_; }
    const TensorData& vec() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    /// Scalar access; requires size() == 1.
    double item() const;

    double& at3(std::int64_t i, std::int64_t j, std::int64_t k);
    double at3(std::int64_t i, std::int64_t j, std::int64_t k) const;
    double& at2(std::int64_t i, std::int64_t j);
    double at2(std::int64_t i, std::int64_t j) const;

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;

    Tensor map(const std::function<double(double)>& f) const;

    std::string shape_str() const;

  private:
    std::vector<std::int64_t> shape_;
    TensorData data_;
};

std::int64_t shape_numel(const std::vector<std::int64_t>& shape);

}  // namespace replaygan
