#include <cstdlib>
#include <stdexcept>
#include <string_view>

#include "featfool/simd/kernels.hpp"

namespace featfool::simd {

namespace {

void scalar_gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const float* a,
                 const float* b, float* c, bool accumulate) {
    scalar::gemm(ta, tb, m, n, k, a, b, c, accumulate);
}
float scalar_dot(const float* a, const float* b, std::size_t n) { return scalar::dot(a, b, n); }
void scalar_axpy(float alpha, const float* x, float* y, std::size_t n) { scalar::axpy(alpha, x, y, n); }
void scalar_add(const float* a, const float* b, float* out, std::size_t n) { scalar::add(a, b, out, n); }
void scalar_sub(const float* a, const float* b, float* out, std::size_t n) { scalar::sub(a, b, out, n); }
void scalar_mul(const float* a, const float* b, float* out, std::size_t n) { scalar::mul(a, b, out, n); }
void scalar_scale(const float* x, float alpha, float* out, std::size_t n) { scalar::scale(x, alpha, out, n); }
void scalar_relu(const float* x, float* out, std::size_t n) { scalar::relu(x, out, n); }
void scalar_relu_backward(const float* x, const float* g, float* gi, std::size_t n) {
    scalar::relu_backward(x, g, gi, n);
}
void scalar_adam(float* p, const float* g, float* m, float* v, std::size_t n, const AdamCoefficients& c) {
    scalar::adam_update(p, g, m, v, n, c);
}

constexpr FloatKernels kScalarTable{
    scalar_gemm, scalar_dot,  scalar_axpy, scalar_add,           scalar_sub,
    scalar_mul,  scalar_scale, scalar_relu, scalar_relu_backward, scalar_adam,
};

#ifdef FEATFOOL_HAVE_AVX2
constexpr FloatKernels kAvx2Table{
    avx2::gemm, avx2::dot,   avx2::axpy, avx2::add,           avx2::sub,
    avx2::mul,  avx2::scale, avx2::relu, avx2::relu_backward, avx2::adam_update,
};
#endif

Isa detect_isa() {
    if (const char* forced = std::getenv("FEATFOOL_ISA")) {
        if (std::string_view(forced) == "scalar") return Isa::scalar;
    }
    return (avx2_compiled() && cpu_supports_avx2()) ? Isa::avx2 : Isa::scalar;
}

}  // namespace

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

bool cpu_supports_avx2() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool avx2_compiled() {
#ifdef FEATFOOL_HAVE_AVX2
    return true;
#else
    return false;
#endif
}

Isa active_isa() {
    static const Isa isa = detect_isa();
    return isa;
}

const FloatKernels& float_kernels(Isa isa) {
    if (isa == Isa::scalar) return kScalarTable;
#ifdef FEATFOOL_HAVE_AVX2
    if (cpu_supports_avx2()) return kAvx2Table;
#endif
    throw std::invalid_argument("AVX2 kernels are not available on this build or CPU");
}

}  // namespace featfool::simd
