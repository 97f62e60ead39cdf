// AVX2/FMA float kernels. This translation unit is the only one built with
// -mavx2 -mfma; callers reach it through the dispatch table after a cpuid check.

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "featfool/simd/kernels.hpp"

namespace featfool::simd::avx2 {

namespace {

constexpr std::size_t kLanes = 8;

inline float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
}

// Register-blocked C[rows x n] += A[rows x k] * B[k x n] for a strip of up to
// four rows. `a_at(r, p)` addresses A so the transposed layout needs no copy.
template <int Rows, typename AAt>
void gemm_strip(std::size_t n, std::size_t k, AAt a_at, const float* b, float* c) {
    std::size_t j = 0;
    for (; j + 2 * kLanes <= n; j += 2 * kLanes) {
        __m256 acc0[Rows];
        __m256 acc1[Rows];
        for (int r = 0; r < Rows; ++r) {
            acc0[r] = _mm256_loadu_ps(c + r * n + j);
            acc1[r] = _mm256_loadu_ps(c + r * n + j + kLanes);
        }
        for (std::size_t p = 0; p < k; ++p) {
            const __m256 b0 = _mm256_loadu_ps(b + p * n + j);
            const __m256 b1 = _mm256_loadu_ps(b + p * n + j + kLanes);
            for (int r = 0; r < Rows; ++r) {
                const __m256 av = _mm256_set1_ps(a_at(r, p));
                acc0[r] = _mm256_fmadd_ps(av, b0, acc0[r]);
                acc1[r] = _mm256_fmadd_ps(av, b1, acc1[r]);
            }
        }
        for (int r = 0; r < Rows; ++r) {
            _mm256_storeu_ps(c + r * n + j, acc0[r]);
            _mm256_storeu_ps(c + r * n + j + kLanes, acc1[r]);
        }
    }
    for (; j + kLanes <= n; j += kLanes) {
        __m256 acc[Rows];
        for (int r = 0; r < Rows; ++r) acc[r] = _mm256_loadu_ps(c + r * n + j);
        for (std::size_t p = 0; p < k; ++p) {
            const __m256 bv = _mm256_loadu_ps(b + p * n + j);
            for (int r = 0; r < Rows; ++r) {
                acc[r] = _mm256_fmadd_ps(_mm256_set1_ps(a_at(r, p)), bv, acc[r]);
            }
        }
        for (int r = 0; r < Rows; ++r) _mm256_storeu_ps(c + r * n + j, acc[r]);
    }
    for (; j < n; ++j) {
        for (int r = 0; r < Rows; ++r) {
            float sum = c[r * n + j];
            for (std::size_t p = 0; p < k; ++p) sum += a_at(r, p) * b[p * n + j];
            c[r * n + j] = sum;
        }
    }
}

template <typename AAt>
void gemm_rows(int rows, std::size_t n, std::size_t k, AAt a_at, const float* b, float* c) {
    switch (rows) {
        case 4: gemm_strip<4>(n, k, a_at, b, c); break;
        case 3: gemm_strip<3>(n, k, a_at, b, c); break;
        case 2: gemm_strip<2>(n, k, a_at, b, c); break;
        default: gemm_strip<1>(n, k, a_at, b, c); break;
    }
}

}  // namespace

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const float* a,
          const float* b, float* c, bool accumulate) {
    if (!accumulate) {
        for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0f;
    }
    if (m == 0 || n == 0 || k == 0) return;

    // Row-vector times matrix with B^T is a batch of dot products; everything
    // else runs through the strip kernel with B in k x n layout.
    std::vector<float> packed;
    const float* bk = b;
    if (tb == Trans::yes) {
        if (m <= 2) {
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    float sum;
                    if (ta == Trans::no) {
                        sum = dot(a + i * k, b + j * k, k);
                    } else {
                        sum = 0.0f;
                        for (std::size_t p = 0; p < k; ++p) sum += a[p * m + i] * b[j * k + p];
                    }
                    c[i * n + j] += sum;
                }
            }
            return;
        }
        packed.resize(k * n);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t p = 0; p < k; ++p) packed[p * n + j] = b[j * k + p];
        }
        bk = packed.data();
    }

    for (std::size_t i0 = 0; i0 < m; i0 += 4) {
        const int rows = static_cast<int>(m - i0 < 4 ? m - i0 : 4);
        float* cstrip = c + i0 * n;
        if (ta == Trans::no) {
            const float* astrip = a + i0 * k;
            gemm_rows(rows, n, k, [astrip, k](int r, std::size_t p) { return astrip[r * k + p]; }, bk,
                      cstrip);
        } else {
            gemm_rows(rows, n, k, [a, m, i0](int r, std::size_t p) { return a[p * m + i0 + r]; }, bk,
                      cstrip);
        }
    }
}

float dot(const float* a, const float* b, std::size_t n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + kLanes), _mm256_loadu_ps(b + i + kLanes), acc1);
    }
    for (; i + kLanes <= n; i += kLanes) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    }
    float sum = hsum(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
    const __m256 av = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void add(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(const float* x, float alpha, float* out, std::size_t n) {
    const __m256 av = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_ps(out + i, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
    }
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void relu(const float* x, float* out, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_ps(out + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* grad_out, float* grad_in, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
        const __m256 g = _mm256_and_ps(mask, _mm256_loadu_ps(grad_out + i));
        _mm256_storeu_ps(grad_in + i, _mm256_add_ps(_mm256_loadu_ps(grad_in + i), g));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0f) grad_in[i] += grad_out[i];
    }
}

void adam_update(float* param, const float* grad, float* m, float* v, std::size_t n,
                 const AdamCoefficients& coef) {
    const float b1 = static_cast<float>(coef.beta1);
    const float b2 = static_cast<float>(coef.beta2);
    const float step = static_cast<float>(coef.lr / coef.bias_correction1);
    const float inv_bc2 = static_cast<float>(1.0 / coef.bias_correction2);
    const float eps = static_cast<float>(coef.eps);

    const __m256 vb1 = _mm256_set1_ps(b1);
    const __m256 vb1c = _mm256_set1_ps(1.0f - b1);
    const __m256 vb2 = _mm256_set1_ps(b2);
    const __m256 vb2c = _mm256_set1_ps(1.0f - b2);
    const __m256 vstep = _mm256_set1_ps(step);
    const __m256 vinv = _mm256_set1_ps(inv_bc2);
    const __m256 veps = _mm256_set1_ps(eps);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256 g = _mm256_loadu_ps(grad + i);
        __m256 mv = _mm256_add_ps(_mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(vb1c, g));
        __m256 vv = _mm256_add_ps(_mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)),
                                  _mm256_mul_ps(_mm256_mul_ps(vb2c, g), g));
        _mm256_storeu_ps(m + i, mv);
        _mm256_storeu_ps(v + i, vv);
        const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vv, vinv)), veps);
        const __m256 upd = _mm256_div_ps(_mm256_mul_ps(vstep, mv), denom);
        _mm256_storeu_ps(param + i, _mm256_sub_ps(_mm256_loadu_ps(param + i), upd));
    }
    for (; i < n; ++i) {
        const float g = grad[i];
        m[i] = b1 * m[i] + (1.0f - b1) * g;
        v[i] = b2 * v[i] + (1.0f - b2) * g * g;
        param[i] -= step * m[i] / (std::sqrt(v[i] * inv_bc2) + eps);
    }
}

}  // namespace featfool::simd::avx2
