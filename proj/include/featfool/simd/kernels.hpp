#pragma once

// Dense float kernels behind the differentiable engine.
//
// Every kernel has a portable scalar reference (templated, so the 64-bit
// gradient-check path runs on the same code) and, for float, an AVX2/FMA
// variant picked once at startup. Set FEATFOOL_ISA=scalar in the environment
// to pin the reference path.

#include <cstddef>
#include <type_traits>

#include "featfool/simd/kernels_scalar.hpp"

namespace featfool::simd {

enum class Isa { scalar, avx2 };

const char* isa_name(Isa isa);

// True when the running CPU reports both AVX2 and FMA.
bool cpu_supports_avx2();

// True when the AVX2 variants were compiled into this binary.
bool avx2_compiled();

// ISA used by the dispatched entry points. Fixed for the process lifetime.
Isa active_isa();

struct FloatKernels {
    void (*gemm)(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const float* a,
                 const float* b, float* c, bool accumulate);
    float (*dot)(const float* a, const float* b, std::size_t n);
    void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
    void (*add)(const float* a, const float* b, float* out, std::size_t n);
    void (*sub)(const float* a, const float* b, float* out, std::size_t n);
    void (*mul)(const float* a, const float* b, float* out, std::size_t n);
    void (*scale)(const float* x, float alpha, float* out, std::size_t n);
    void (*relu)(const float* x, float* out, std::size_t n);
    void (*relu_backward)(const float* x, const float* grad_out, float* grad_in, std::size_t n);
    void (*adam_update)(float* param, const float* grad, float* m, float* v, std::size_t n,
                        const AdamCoefficients& coef);
};

// Kernel table for an explicit ISA. Throws std::invalid_argument when the
// requested variant is not available on this build or CPU.
const FloatKernels& float_kernels(Isa isa);

inline const FloatKernels& float_kernels() { return float_kernels(active_isa()); }

namespace avx2 {
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const float* a,
          const float* b, float* c, bool accumulate);
float dot(const float* a, const float* b, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);
void add(const float* a, const float* b, float* out, std::size_t n);
void sub(const float* a, const float* b, float* out, std::size_t n);
void mul(const float* a, const float* b, float* out, std::size_t n);
void scale(const float* x, float alpha, float* out, std::size_t n);
void relu(const float* x, float* out, std::size_t n);
void relu_backward(const float* x, const float* grad_out, float* grad_in, std::size_t n);
void adam_update(float* param, const float* grad, float* m, float* v, std::size_t n,
                 const AdamCoefficients& coef);
}  // namespace avx2

// Type-generic front ends. float goes through the dispatch table, double
// always runs the scalar reference.
template <typename T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b,
          T* c, bool accumulate) {
    if constexpr (std::is_same_v<T, float>) {
        float_kernels().gemm(ta, tb, m, n, k, a, b, c, accumulate);
    } else {
        scalar::gemm(ta, tb, m, n, k, a, b, c, accumulate);
    }
}

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    if constexpr (std::is_same_v<T, float>) {
        return float_kernels().dot(a, b, n);
    } else {
        return scalar::dot(a, b, n);
    }
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
    if constexpr (std::is_same_v<T, float>) {
        float_kernels().axpy(alpha, x, y, n);
    } else {
        scalar::axpy(alpha, x, y, n);
    }
}

template <typename T>
void add(const T* a, const T* b, T* out, std::size_t n) {
    if constexpr (std::is_same_v<T, float>) {
        float_kernels().add(a, b, out, n);
    } else {
        scalar::add(a, b, out, n);
    }
}

template <typename T>
void sub(const T* a, const T* b, T* out, std::size_t n) {
    if constexpr (std::is_same_v<T, float>) {
        float_kernels().sub(a, b, out, n);
    } else {
        scalar::sub(a, b, out, n);
    }
}

template <typename T>
void mul(const T* a, const T* b, T* out, std::size_t n) {
    if constexpr (std::is_same_v<T, float>) {
        float_kernels().mul(a, b, out, n);
    } else {
        scalar::mul(a, b, out, n);
    }
}

template <typename T>
void scale(const T* x, T alpha, T* out, std::size_t n) {
    if constexpr (std::is_same_v<T, float>) {
        float_kernels().scale(x, alpha, out, n);
    } else {
        scalar::scale(x, alpha, out, n);
    }
}

template <typename T>
void relu(const T* x, T* out, std::size_t n) {
    if constexpr (std::is_same_v<T, float>) {
        float_kernels().relu(x, out, n);
    } else {
        scalar::relu(x, out, n);
    }
}

template <typename T>
void relu_backward(const T* x, const T* grad_out, T* grad_in, std::size_t n) {
    if constexpr (std::is_same_v<T, float>) {
        float_kernels().relu_backward(x, grad_out, grad_in, n);
    } else {
        scalar::relu_backward(x, grad_out, grad_in, n);
    }
}

template <typename T>
void adam_update(T* param, const T* grad, T* m, T* v, std::size_t n, const AdamCoefficients& coef) {
    if constexpr (std::is_same_v<T, float>) {
        float_kernels().adam_update(param, grad, m, v, n, coef);
    } else {
        scalar::adam_update(param, grad, m, v, n, coef);
    }
}

}  // namespace featfool::simd
