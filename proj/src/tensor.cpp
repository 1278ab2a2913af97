#include "seqgan/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace seqgan {

bool Tensor::all_finite() const {
    for (real_t v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::require_finite(const std::string& what) const {
    if (!all_finite()) {
        throw DivergenceError("non-finite values in " + what);
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.ndim() == 2 && b.ndim() == 2, "matmul: operands must be rank-2");
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    const int n = a.rows(), k = a.cols(), m = b.cols();
    Tensor out({n, m});
    for (int i = 0; i < n; ++i) {
        const real_t* arow = a.data() + static_cast<std::size_t>(i) * k;
        real_t* orow = out.data() + static_cast<std::size_t>(i) * m;
        for (int p = 0; p < k; ++p) {
            const real_t av = arow[p];
            if (av == real_t{0}) continue;
            const real_t* brow = b.data() + static_cast<std::size_t>(p) * m;
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

void matvec(const Tensor& m, std::span<const real_t> v, std::span<real_t> out) {
    assert(m.ndim() == 2);
    assert(static_cast<int>(v.size()) == m.cols());
    assert(static_cast<int>(out.size()) == m.rows());
    const int rows = m.rows(), cols = m.cols();
    for (int i = 0; i < rows; ++i) {
        const real_t* mrow = m.data() + static_cast<std::size_t>(i) * cols;
        real_t acc = 0;
        for (int j = 0; j < cols; ++j) acc += mrow[j] * v[j];
        out[i] = acc;
    }
}

void matvec_transposed_add(const Tensor& m, std::span<const real_t> v,
                           std::span<real_t> out) {
    assert(m.ndim() == 2);
    assert(static_cast<int>(v.size()) == m.rows());
    assert(static_cast<int>(out.size()) == m.cols());
    const int rows = m.rows(), cols = m.cols();
    for (int i = 0; i < rows; ++i) {
        const real_t vi = v[i];
        if (vi == real_t{0}) continue;
        const real_t* mrow = m.data() + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) out[j] += vi * mrow[j];
    }
}

void outer_add(Tensor& grad, std::span<const real_t> u, std::span<const real_t> v) {
    assert(grad.ndim() == 2);
    assert(static_cast<int>(u.size()) == grad.rows());
    assert(static_cast<int>(v.size()) == grad.cols());
    const int rows = grad.rows(), cols = grad.cols();
    for (int i = 0; i < rows; ++i) {
        const real_t ui = u[i];
        if (ui == real_t{0}) continue;
        real_t* grow = grad.data() + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) grow[j] += ui * v[j];
    }
}

void softmax_inplace(std::span<real_t> x) {
    require(!x.empty(), "softmax: empty input");
    real_t mx = x[0];
    for (real_t v : x) {
        if (!std::isfinite(v)) {
            throw DivergenceError("softmax: non-finite logit");
        }
        mx = std::max(mx, v);
    }
    real_t sum = 0;
    for (real_t& v : x) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (real_t& v : x) v /= sum;
}

std::vector<real_t> softmax(std::span<const real_t> x) {
    std::vector<real_t> out(x.begin(), x.end());
    softmax_inplace(out);
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out = x;
    for (real_t& v : out.flat()) v = sigmoid(v);
    return out;
}

Tensor tanh(const Tensor& x) {
    Tensor out = x;
    for (real_t& v : out.flat()) v = std::tanh(v);
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (real_t& v : out.flat()) v = std::max(v, real_t{0});
    return out;
}

}  // namespace seqgan
