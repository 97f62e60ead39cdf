#pragma once

// Portable reference kernels. Row-major storage throughout.

#include <cmath>
#include <cstddef>
#include <type_traits>

namespace featfool::simd {

enum class Trans { no, yes };

// One ADAM step's scalars; bias corrections are 1 - beta^t.
struct AdamCoefficients {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double bias_correction1 = 1.0;
    double bias_correction2 = 1.0;
};

namespace scalar {

// C[m x n] (+)= op(A)[m x k] * op(B)[k x n]. A is stored m x k (or k x m when
// transposed), B is stored k x n (or n x k when transposed).
template <typename T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b,
          T* c, bool accumulate) {
    if (!accumulate) {
        for (std::size_t i = 0; i < m * n; ++i) c[i] = T(0);
    }
    auto a_at = [&](std::size_t i, std::size_t p) { return ta == Trans::no ? a[i * k + p] : a[p * m + i]; };
    if (tb == Trans::no) {
        for (std::size_t i = 0; i < m; ++i) {
            T* crow = c + i * n;
            for (std::size_t p = 0; p < k; ++p) {
                const T av = a_at(i, p);
                const T* brow = b + p * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                T sum = T(0);
                for (std::size_t p = 0; p < k; ++p) sum += a_at(i, p) * b[j * k + p];
                c[i * n + j] += sum;
            }
        }
    }
}

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    T sum = T(0);
    for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void add(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void sub(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <typename T>
void mul(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void scale(const T* x, T alpha, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

template <typename T>
void relu(const T* x, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

// grad_in += grad_out where x > 0.
template <typename T>
void relu_backward(const T* x, const T* grad_out, T* grad_in, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > T(0)) grad_in[i] += grad_out[i];
    }
}

template <typename T>
void adam_update(T* param, const T* grad, T* m, T* v, std::size_t n, const AdamCoefficients& coef) {
    const T b1 = static_cast<T>(coef.beta1);
    const T b2 = static_cast<T>(coef.beta2);
    const T step = static_cast<T>(coef.lr / coef.bias_correction1);
    const T inv_bc2 = static_cast<T>(1.0 / coef.bias_correction2);
    const T eps = static_cast<T>(coef.eps);
    for (std::size_t i = 0; i < n; ++i) {
        const T g = grad[i];
        m[i] = b1 * m[i] + (T(1) - b1) * g;
        v[i] = b2 * v[i] + (T(1) - b2) * g * g;
        param[i] -= step * m[i] / (std::sqrt(v[i] * inv_bc2) + eps);
    }
}

}  // namespace scalar
}  // namespace featfool::simd
