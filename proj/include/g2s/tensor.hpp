// tensor.hpp - dense 1-d/2-d tensors and the matrix kernels everything runs on.
//
// Scalar type is a template parameter: training runs float, gradient checking
// runs double. Kernels use fixed accumulation order so repeated runs are
// byte-identical regardless of thread count.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "g2s/error.hpp"
#include "g2s/parallel.hpp"
#include "g2s/rng.hpp"

namespace g2s {

template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;

    static Tensor zeros(std::initializer_list<std::size_t> s) {
        return zeros(std::vector<std::size_t>(s));
    }
    static Tensor zeros(const std::vector<std::size_t>& s) {
        Tensor t;
        t.shape = s;
        t.data.assign(count(s), T{0});
        return t;
    }
    static Tensor scalar(T v) {
        Tensor t = zeros({std::size_t{1}});
        t.data[0] = v;
        return t;
    }
    static Tensor from(std::initializer_list<std::size_t> s, std::initializer_list<T> values) {
        Tensor t;
        t.shape = s;
        t.data.assign(values);
        if (t.data.size() != count(t.shape))
            throw DimensionError("Tensor::from: " + std::to_string(t.data.size()) +
                                 " values for shape " + shape_str(t.shape));
        return t;
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    bool is_scalar() const { return data.size() == 1; }

    T& at(std::size_t i) { return data[i]; }
    T at(std::size_t i) const { return data[i]; }
    T& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    T at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    T* row_ptr(std::size_t r) { return data.data() + r * cols(); }
    const T* row_ptr(std::size_t r) const { return data.data() + r * cols(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    void add_inplace(const Tensor& o) {
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    static std::string shape_str(const std::vector<std::size_t>& s) {
        std::ostringstream os;
        os << "[";
        for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
        os << "]";
        return os.str();
    }
    std::string shape_str() const { return shape_str(shape); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

// C (m x n) += A (m x k) * B (k x n). Row-major, C preallocated.
// i-k-j order with a 4-row micro-kernel: each B row is reused across four A
// rows, and the inner j loops are contiguous axpys the compiler vectorizes
// without reassociating any reduction.
template <typename T>
void gemm_nn_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    // Partition whole 4-row blocks across workers; only fan out when there is
    // enough arithmetic to amortize the thread spawn.
    std::size_t blocks = (m + 3) / 4;
    std::size_t min_serial_blocks = blocks;
    if (m * k * n >= (std::size_t{1} << 22)) min_serial_blocks = 2;
    Parallel::for_range(blocks, [=](std::size_t blk0, std::size_t blk1) {
        for (std::size_t blk = blk0; blk < blk1; ++blk) {
            std::size_t i = blk * 4;
            std::size_t rows = (m - i < 4) ? (m - i) : 4;
            if (rows == 4) {
                const T* a0 = a + i * k;
                const T* a1 = a0 + k;
                const T* a2 = a1 + k;
                const T* a3 = a2 + k;
                T* c0 = c + i * n;
                T* c1 = c0 + n;
                T* c2 = c1 + n;
                T* c3 = c2 + n;
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const T* brow = b + kk * n;
                    T v0 = a0[kk], v1 = a1[kk], v2 = a2[kk], v3 = a3[kk];
                    for (std::size_t j = 0; j < n; ++j) {
                        T bv = brow[j];
                        c0[j] += v0 * bv;
                        c1[j] += v1 * bv;
                        c2[j] += v2 * bv;
                        c3[j] += v3 * bv;
                    }
                }
            } else {
                for (std::size_t r = 0; r < rows; ++r) {
                    const T* arow = a + (i + r) * k;
                    T* crow = c + (i + r) * n;
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        T av = arow[kk];
                        const T* brow = b + kk * n;
                        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
                    }
                }
            }
        }
    }, min_serial_blocks);
}

template <typename T>
Tensor<T> transposed(const Tensor<T>& a) {
    Tensor<T> out = Tensor<T>::zeros({a.cols(), a.rows()});
    std::size_t r = a.rows(), c = a.cols();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.data[j * r + i] = a.data[i * c + j];
    return out;
}

// out = A * B
template <typename T>
Tensor<T> matmul_nn(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: lhs " + a.shape_str() + " rhs " + b.shape_str());
    Tensor<T> out = Tensor<T>::zeros({a.rows(), b.cols()});
    gemm_nn_acc(a.data.data(), b.data.data(), out.data.data(), a.rows(), a.cols(), b.cols());
    return out;
}

}  // namespace g2s
