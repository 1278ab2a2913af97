#pragma once

#include <cassert>
#include <cmath>
#include <span>
#include <vector>

#include "seqgan/common.hpp"

namespace seqgan {

// Dense row-major tensor, rank 1 or 2. Values are real_t (double unless
// SEQGAN_REAL32 is set).
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        std::size_t n = 1;
        for (int d : shape_) {
            require(d > 0, "Tensor: dimensions must be positive");
            n *= static_cast<std::size_t>(d);
        }
        require(shape_.size() == 1 || shape_.size() == 2,
                "Tensor: rank must be 1 or 2");
        data_.assign(n, real_t{0});
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor from(std::vector<int> shape, std::vector<real_t> data) {
        Tensor t(std::move(shape));
        require(data.size() == t.data_.size(), "Tensor: shape/data size mismatch");
        t.data_ = std::move(data);
        return t;
    }

    int ndim() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t numel() const { return data_.size(); }

    int rows() const { return shape_[0]; }
    int cols() const { return ndim() == 2 ? shape_[1] : 1; }

    real_t* data() { return data_.data(); }
    const real_t* data() const { return data_.data(); }

    real_t& operator[](std::size_t i) { return data_[i]; }
    real_t operator[](std::size_t i) const { return data_[i]; }

    real_t& operator()(int i) { return data_[static_cast<std::size_t>(i)]; }
    real_t operator()(int i) const { return data_[static_cast<std::size_t>(i)]; }

    real_t& operator()(int i, int j) {
        assert(ndim() == 2);
        return data_[static_cast<std::size_t>(i) * shape_[1] + j];
    }
    real_t operator()(int i, int j) const {
        assert(ndim() == 2);
        return data_[static_cast<std::size_t>(i) * shape_[1] + j];
    }

    std::span<real_t> row(int i) {
        assert(ndim() == 2);
        return {data_.data() + static_cast<std::size_t>(i) * shape_[1],
                static_cast<std::size_t>(shape_[1])};
    }
    std::span<const real_t> row(int i) const {
        assert(ndim() == 2);
        return {data_.data() + static_cast<std::size_t>(i) * shape_[1],
                static_cast<std::size_t>(shape_[1])};
    }

    std::span<real_t> flat() { return {data_.data(), data_.size()}; }
    std::span<const real_t> flat() const { return {data_.data(), data_.size()}; }

    void fill(real_t v) { data_.assign(data_.size(), v); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const;
    // Throws DataError naming `what` if any value is NaN/Inf.
    void require_finite(const std::string& what) const;

private:
    std::vector<int> shape_;
    std::vector<real_t> data_;
};

// Matrix product of two rank-2 tensors.
Tensor matmul(const Tensor& a, const Tensor& b);

// out = m * v for rank-2 m and vector v (len == cols).
void matvec(const Tensor& m, std::span<const real_t> v, std::span<real_t> out);
// out += m^T * v (v has len == rows, out len == cols).
void matvec_transposed_add(const Tensor& m, std::span<const real_t> v,
                           std::span<real_t> out);
// grad(i,j) += u[i] * v[j].
void outer_add(Tensor& grad, std::span<const real_t> u, std::span<const real_t> v);

// Numerically stable softmax (max subtraction). Output sums to 1.
void softmax_inplace(std::span<real_t> x);
std::vector<real_t> softmax(std::span<const real_t> x);

inline real_t sigmoid(real_t x) {
    return x >= 0 ? real_t{1} / (real_t{1} + std::exp(-x))
                  : std::exp(x) / (real_t{1} + std::exp(x));
}

// Elementwise nonlinearities.
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);

}  // namespace seqgan
