#include "featfool/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "featfool/errors.hpp"
#include "featfool/simd/kernels.hpp"

namespace featfool::diffcore {

using simd::Trans;

namespace {

template <typename T>
using Impl = detail::TensorImpl<T>;

template <typename T>
void require_rank(const BasicTensor<T>& x, std::size_t rank, const char* op) {
    if (x.rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(x.shape()));
    }
}

struct ConvGeometry {
    std::size_t channels, height, width;  // valid-mode input
    std::size_t kh, kw, stride;
    std::size_t out_h, out_w;             // valid-mode output
    std::size_t patch() const { return channels * kh * kw; }
    std::size_t positions() const { return out_h * out_w; }
};

// col[(c, ki, kj), (oy, ox)] = in[c, oy*s + ki, ox*s + kj]
template <typename T>
void im2col(const ConvGeometry& g, const T* in, T* col) {
    const std::size_t npos = g.positions();
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ki = 0; ki < g.kh; ++ki) {
            for (std::size_t kj = 0; kj < g.kw; ++kj) {
                T* row = col + ((c * g.kh + ki) * g.kw + kj) * npos;
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const T* src = in + (c * g.height + oy * g.stride + ki) * g.width + kj;
                    T* dst = row + oy * g.out_w;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) dst[ox] = src[ox * g.stride];
                }
            }
        }
    }
}

// Adjoint of im2col: out += scatter(col).
template <typename T>
void col2im_add(const ConvGeometry& g, const T* col, T* out) {
    const std::size_t npos = g.positions();
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ki = 0; ki < g.kh; ++ki) {
            for (std::size_t kj = 0; kj < g.kw; ++kj) {
                const T* row = col + ((c * g.kh + ki) * g.kw + kj) * npos;
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    T* dst = out + (c * g.height + oy * g.stride + ki) * g.width + kj;
                    const T* src = row + oy * g.out_w;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) dst[ox * g.stride] += src[ox];
                }
            }
        }
    }
}

template <typename T>
T strict_tanh(T x) {
    static const T kBound = std::nextafter(T(1), T(0));
    const T y = std::tanh(x);
    return std::clamp(y, -kBound, kBound);
}

template <typename T>
T stable_sigmoid(T x) {
    if (x >= T(0)) {
        const T e = std::exp(-x);
        return T(1) / (T(1) + e);
    }
    const T e = std::exp(x);
    return e / (T(1) + e);
}

}  // namespace

template <typename T>
BasicTensor<T> ewise_binary(BinaryOp op, const BasicTensor<T>& a, const BasicTensor<T>& b) {
    const std::size_t n = a.numel();
    const bool broadcast = b.numel() == 1 && a.numel() != 1;
    if (!broadcast && a.shape() != b.shape()) {
        throw ShapeError("elementwise op on incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    }
    std::vector<T> out(n);
    const T* pa = a.values().data();
    const T* pb = b.values().data();
    if (broadcast) {
        const T s = pb[0];
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = op == BinaryOp::add ? pa[i] + s : op == BinaryOp::sub ? pa[i] - s : pa[i] * s;
        }
    } else {
        switch (op) {
            case BinaryOp::add: simd::add(pa, pb, out.data(), n); break;
            case BinaryOp::sub: simd::sub(pa, pb, out.data(), n); break;
            case BinaryOp::mul: simd::mul(pa, pb, out.data(), n); break;
        }
    }
    Impl<T>* ia = a.impl();
    Impl<T>* ib = b.impl();
    const char* name = op == BinaryOp::add ? "add" : op == BinaryOp::sub ? "sub" : "mul";
    return make_result<T>(a.shape(), std::move(out), name, {a, b}, [ia, ib, op, broadcast, n](const Impl<T>& o) {
        const T* g = o.grad.data();
        if (ia->requires_grad) {
            T* ga = ia->ensure_grad().data();
            if (op == BinaryOp::mul) {
                if (broadcast) {
                    simd::axpy(ib->data[0], g, ga, n);
                } else {
                    for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * ib->data[i];
                }
            } else {
                simd::axpy(T(1), g, ga, n);
            }
        }
        if (ib->requires_grad) {
            T* gb = ib->ensure_grad().data();
            const T sign = op == BinaryOp::sub ? T(-1) : T(1);
            if (broadcast) {
                T acc = T(0);
                if (op == BinaryOp::mul) {
                    acc = simd::dot(g, ia->data.data(), n);
                } else {
                    for (std::size_t i = 0; i < n; ++i) acc += g[i];
                }
                gb[0] += sign * acc;
            } else if (op == BinaryOp::mul) {
                for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * ia->data[i];
            } else {
                simd::axpy(sign, g, gb, n);
            }
        }
    });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, T factor) {
    const std::size_t n = x.numel();
    std::vector<T> out(n);
    simd::scale(x.values().data(), factor, out.data(), n);
    Impl<T>* ix = x.impl();
    return make_result<T>(x.shape(), std::move(out), "scale", {x}, [ix, factor, n](const Impl<T>& o) {
        simd::axpy(factor, o.grad.data(), ix->ensure_grad().data(), n);
    });
}

template <typename T>
BasicTensor<T> add_scalar(const BasicTensor<T>& x, T offset) {
    const std::size_t n = x.numel();
    std::vector<T> out(x.values().begin(), x.values().end());
    for (auto& v : out) v += offset;
    Impl<T>* ix = x.impl();
    return make_result<T>(x.shape(), std::move(out), "add_scalar", {x}, [ix, n](const Impl<T>& o) {
        simd::axpy(T(1), o.grad.data(), ix->ensure_grad().data(), n);
    });
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw ShapeError("matmul inner extents differ: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    std::vector<T> out(m * n);
    simd::gemm(Trans::no, Trans::no, m, n, k, a.values().data(), b.values().data(), out.data(), false);
    Impl<T>* ia = a.impl();
    Impl<T>* ib = b.impl();
    return make_result<T>({m, n}, std::move(out), "matmul", {a, b}, [ia, ib, m, n, k](const Impl<T>& o) {
        const T* g = o.grad.data();
        if (ia->requires_grad) {
            // dA = dC * B^T
            simd::gemm(Trans::no, Trans::yes, m, k, n, g, ib->data.data(), ia->ensure_grad().data(), true);
        }
        if (ib->requires_grad) {
            // dB = A^T * dC
            simd::gemm(Trans::yes, Trans::no, k, n, m, ia->data.data(), g, ib->ensure_grad().data(), true);
        }
    });
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels, std::size_t stride,
                      ConvMode mode) {
    require_rank(input, 3, "conv2d input");
    require_rank(kernels, 4, "conv2d kernels");
    if (stride == 0) throw ShapeError("conv2d stride must be positive");
    const std::size_t nk = kernels.dim(0), kc = kernels.dim(1), kh = kernels.dim(2), kw = kernels.dim(3);
    Impl<T>* ii = input.impl();
    Impl<T>* iw = kernels.impl();

    if (mode == ConvMode::valid) {
        const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
        if (kc != c) {
            throw ShapeError("conv2d: kernels expect " + std::to_string(kc) + " channels, input has " +
                             std::to_string(c));
        }
        if (kh > h || kw > w) {
            throw ShapeError("conv2d: kernel " + shape_str(kernels.shape()) + " larger than input " +
                             shape_str(input.shape()));
        }
        const ConvGeometry g{c, h, w, kh, kw, stride, (h - kh) / stride + 1, (w - kw) / stride + 1};
        auto col = std::make_shared<std::vector<T>>(g.patch() * g.positions());
        im2col(g, input.values().data(), col->data());
        std::vector<T> out(nk * g.positions());
        simd::gemm(Trans::no, Trans::no, nk, g.positions(), g.patch(), kernels.values().data(), col->data(),
                   out.data(), false);
        return make_result<T>({nk, g.out_h, g.out_w}, std::move(out), "conv2d", {input, kernels},
                              [ii, iw, g, nk, col](const Impl<T>& o) {
                                  const T* gout = o.grad.data();
                                  if (iw->requires_grad) {
                                      simd::gemm(Trans::no, Trans::yes, nk, g.patch(), g.positions(), gout,
                                                 col->data(), iw->ensure_grad().data(), true);
                                  }
                                  if (ii->requires_grad) {
                                      std::vector<T> dcol(g.patch() * g.positions());
                                      simd::gemm(Trans::yes, Trans::no, g.patch(), g.positions(), nk,
                                                 iw->data.data(), gout, dcol.data(), false);
                                      col2im_add(g, dcol.data(), ii->ensure_grad().data());
                                  }
                              });
    }

    // Transpose mode: input has nk channels, output has kc channels.
    const std::size_t in_c = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (in_c != nk) {
        throw ShapeError("conv2d transpose: kernels expect " + std::to_string(nk) + " input channels, got " +
                         std::to_string(in_c));
    }
    const std::size_t out_h = (h - 1) * stride + kh, out_w = (w - 1) * stride + kw;
    const ConvGeometry g{kc, out_h, out_w, kh, kw, stride, h, w};
    std::vector<T> dcol(g.patch() * g.positions());
    simd::gemm(Trans::yes, Trans::no, g.patch(), g.positions(), nk, kernels.values().data(),
               input.values().data(), dcol.data(), false);
    std::vector<T> out(kc * out_h * out_w, T(0));
    col2im_add(g, dcol.data(), out.data());
    return make_result<T>({kc, out_h, out_w}, std::move(out), "conv2d_transpose", {input, kernels},
                          [ii, iw, g, nk](const Impl<T>& o) {
                              std::vector<T> gcol(g.patch() * g.positions());
                              im2col(g, o.grad.data(), gcol.data());
                              if (ii->requires_grad) {
                                  simd::gemm(Trans::no, Trans::no, nk, g.positions(), g.patch(), iw->data.data(),
                                             gcol.data(), ii->ensure_grad().data(), true);
                              }
                              if (iw->requires_grad) {
                                  simd::gemm(Trans::no, Trans::yes, nk, g.patch(), g.positions(), ii->data.data(),
                                             gcol.data(), iw->ensure_grad().data(), true);
                              }
                          });
}

template <typename T>
BasicTensor<T> pad2d(const BasicTensor<T>& x, std::size_t pad) {
    require_rank(x, 3, "pad2d");
    if (pad == 0) return x;
    const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const std::size_t ph = h + 2 * pad, pw = w + 2 * pad;
    std::vector<T> out(c * ph * pw, T(0));
    const T* src = x.values().data();
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; ++y) {
            std::copy_n(src + (ch * h + y) * w, w, out.data() + (ch * ph + y + pad) * pw + pad);
        }
    }
    Impl<T>* ix = x.impl();
    return make_result<T>({c, ph, pw}, std::move(out), "pad2d", {x}, [ix, c, h, w, ph, pw, pad](const Impl<T>& o) {
        T* g = ix->ensure_grad().data();
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t y = 0; y < h; ++y) {
                simd::axpy(T(1), o.grad.data() + (ch * ph + y + pad) * pw + pad, g + (ch * h + y) * w, w);
            }
        }
    });
}

template <typename T>
BasicTensor<T> add_channel_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias) {
    require_rank(x, 3, "add_channel_bias");
    const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
    if (bias.numel() != c) {
        throw ShapeError("add_channel_bias: " + std::to_string(bias.numel()) + " biases for " +
                         std::to_string(c) + " channels");
    }
    std::vector<T> out(x.values().begin(), x.values().end());
    for (std::size_t ch = 0; ch < c; ++ch) {
        const T b = bias.values()[ch];
        for (std::size_t i = 0; i < plane; ++i) out[ch * plane + i] += b;
    }
    Impl<T>* ix = x.impl();
    Impl<T>* ib = bias.impl();
    return make_result<T>(x.shape(), std::move(out), "add_channel_bias", {x, bias},
                          [ix, ib, c, plane](const Impl<T>& o) {
                              const T* g = o.grad.data();
                              if (ix->requires_grad) simd::axpy(T(1), g, ix->ensure_grad().data(), c * plane);
                              if (ib->requires_grad) {
                                  T* gb = ib->ensure_grad().data();
                                  for (std::size_t ch = 0; ch < c; ++ch) {
                                      T acc = T(0);
                                      for (std::size_t i = 0; i < plane; ++i) acc += g[ch * plane + i];
                                      gb[ch] += acc;
                                  }
                              }
                          });
}

template <typename T>
BasicTensor<T> activation(ActivationKind kind, const BasicTensor<T>& x) {
    const std::size_t n = x.numel();
    const T* px = x.values().data();
    std::vector<T> out(n);
    switch (kind) {
        case ActivationKind::relu: simd::relu(px, out.data(), n); break;
        case ActivationKind::tanh:
            for (std::size_t i = 0; i < n; ++i) out[i] = strict_tanh(px[i]);
            break;
        case ActivationKind::sigmoid:
            for (std::size_t i = 0; i < n; ++i) out[i] = stable_sigmoid(px[i]);
            break;
    }
    Impl<T>* ix = x.impl();
    const char* name = kind == ActivationKind::relu ? "relu" : kind == ActivationKind::tanh ? "tanh" : "sigmoid";
    // tanh and sigmoid derivatives are read back from the output values.
    return make_result<T>(x.shape(), std::move(out), name, {x}, [ix, kind, n](const Impl<T>& o) {
        const T* g = o.grad.data();
        const T* y = o.data.data();
        T* gx = ix->ensure_grad().data();
        switch (kind) {
            case ActivationKind::relu: simd::relu_backward(ix->data.data(), g, gx, n); break;
            case ActivationKind::tanh:
                for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * (T(1) - y[i] * y[i]);
                break;
            case ActivationKind::sigmoid:
                for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * y[i] * (T(1) - y[i]);
                break;
        }
    });
}

template <typename T>
BasicTensor<T> log(const BasicTensor<T>& x) {
    const std::size_t n = x.numel();
    std::vector<T> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T v = x.values()[i];
        if (!(v > T(0))) throw DomainError("log of non-positive value");
        out[i] = std::log(v);
    }
    Impl<T>* ix = x.impl();
    return make_result<T>(x.shape(), std::move(out), "log", {x}, [ix, n](const Impl<T>& o) {
        T* gx = ix->ensure_grad().data();
        for (std::size_t i = 0; i < n; ++i) gx[i] += o.grad[i] / ix->data[i];
    });
}

template <typename T>
BasicTensor<T> clamp(const BasicTensor<T>& x, T lo, T hi) {
    const std::size_t n = x.numel();
    std::vector<T> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::clamp(x.values()[i], lo, hi);
    Impl<T>* ix = x.impl();
    return make_result<T>(x.shape(), std::move(out), "clamp", {x}, [ix, n, lo, hi](const Impl<T>& o) {
        T* gx = ix->ensure_grad().data();
        for (std::size_t i = 0; i < n; ++i) {
            const T v = ix->data[i];
            if (v >= lo && v <= hi) gx[i] += o.grad[i];
        }
    });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x) {
    T acc = T(0);
    for (T v : x.values()) acc += v;
    Impl<T>* ix = x.impl();
    const std::size_t n = x.numel();
    return make_result<T>({1}, {acc}, "sum", {x}, [ix, n](const Impl<T>& o) {
        const T g = o.grad[0];
        T* gx = ix->ensure_grad().data();
        for (std::size_t i = 0; i < n; ++i) gx[i] += g;
    });
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& x) {
    const std::size_t n = x.numel();
    T acc = T(0);
    for (T v : x.values()) acc += v;
    Impl<T>* ix = x.impl();
    return make_result<T>({1}, {acc / static_cast<T>(n)}, "mean", {x}, [ix, n](const Impl<T>& o) {
        const T g = o.grad[0] / static_cast<T>(n);
        T* gx = ix->ensure_grad().data();
        for (std::size_t i = 0; i < n; ++i) gx[i] += g;
    });
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        throw ShapeError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape) + " changes size");
    }
    for (std::size_t e : shape) {
        if (e == 0) throw ShapeError("reshape to zero extent");
    }
    Impl<T>* ix = x.impl();
    const std::size_t n = x.numel();
    return make_result<T>(std::move(shape), std::vector<T>(x.values().begin(), x.values().end()), "reshape", {x},
                          [ix, n](const Impl<T>& o) { simd::axpy(T(1), o.grad.data(), ix->ensure_grad().data(), n); });
}

template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& x, std::size_t begin, std::size_t end) {
    require_rank(x, 2, "slice_cols");
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    if (begin >= end || end > cols) {
        throw ShapeError("slice_cols [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                         shape_str(x.shape()));
    }
    const std::size_t width = end - begin;
    std::vector<T> out(rows * width);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(x.values().data() + r * cols + begin, width, out.data() + r * width);
    }
    Impl<T>* ix = x.impl();
    return make_result<T>({rows, width}, std::move(out), "slice_cols", {x},
                          [ix, rows, cols, begin, width](const Impl<T>& o) {
                              T* gx = ix->ensure_grad().data();
                              for (std::size_t r = 0; r < rows; ++r) {
                                  simd::axpy(T(1), o.grad.data() + r * width, gx + r * cols + begin, width);
                              }
                          });
}

template <typename T>
BasicTensor<T> concat_rows(const std::vector<BasicTensor<T>>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows of nothing");
    const std::size_t cols = parts.front().rank() == 2 ? parts.front().dim(1) : 0;
    std::size_t rows = 0;
    for (const auto& p : parts) {
        require_rank(p, 2, "concat_rows");
        if (p.dim(1) != cols) throw ShapeError("concat_rows: column counts differ");
        rows += p.dim(0);
    }
    std::vector<T> out;
    out.reserve(rows * cols);
    std::vector<Impl<T>*> impls;
    for (const auto& p : parts) {
        out.insert(out.end(), p.values().begin(), p.values().end());
        impls.push_back(p.impl());
    }
    return make_result<T>({rows, cols}, std::move(out), "concat_rows", parts, [impls](const Impl<T>& o) {
        std::size_t offset = 0;
        for (Impl<T>* p : impls) {
            const std::size_t n = p->data.size();
            if (p->requires_grad) simd::axpy(T(1), o.grad.data() + offset, p->ensure_grad().data(), n);
            offset += n;
        }
    });
}

template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& table, std::span<const std::size_t> ids) {
    require_rank(table, 2, "gather_rows");
    if (ids.empty()) throw ShapeError("gather_rows with no ids");
    const std::size_t vocab = table.dim(0), width = table.dim(1);
    std::vector<std::size_t> rows(ids.begin(), ids.end());
    std::vector<T> out(rows.size() * width);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= vocab) {
            throw DomainError("gather_rows: id " + std::to_string(rows[r]) + " outside table of " +
                              std::to_string(vocab) + " rows");
        }
        std::copy_n(table.values().data() + rows[r] * width, width, out.data() + r * width);
    }
    Impl<T>* it = table.impl();
    const std::size_t n = rows.size();
    return make_result<T>({n, width}, std::move(out), "gather_rows", {table},
                          [it, rows = std::move(rows), width](const Impl<T>& o) {
                              T* gt = it->ensure_grad().data();
                              for (std::size_t r = 0; r < rows.size(); ++r) {
                                  simd::axpy(T(1), o.grad.data() + r * width, gt + rows[r] * width, width);
                              }
                          });
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
    require_rank(x, 3, "global_avg_pool");
    const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
    std::vector<T> out(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        T acc = T(0);
        for (std::size_t i = 0; i < plane; ++i) acc += x.values()[ch * plane + i];
        out[ch] = acc / static_cast<T>(plane);
    }
    Impl<T>* ix = x.impl();
    return make_result<T>({1, c}, std::move(out), "global_avg_pool", {x}, [ix, c, plane](const Impl<T>& o) {
        T* gx = ix->ensure_grad().data();
        for (std::size_t ch = 0; ch < c; ++ch) {
            const T g = o.grad[ch] / static_cast<T>(plane);
            for (std::size_t i = 0; i < plane; ++i) gx[ch * plane + i] += g;
        }
    });
}

template <typename T>
BasicTensor<T> softmax_xent(const BasicTensor<T>& logits, std::span<const std::size_t> targets) {
    require_rank(logits, 2, "softmax_xent");
    const std::size_t batch = logits.dim(0), classes = logits.dim(1);
    if (targets.size() != batch) {
        throw ShapeError("softmax_xent: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(batch) + " rows");
    }
    for (std::size_t t : targets) {
        if (t >= classes) {
            throw DomainError("softmax_xent: target " + std::to_string(t) + " outside [0, " +
                              std::to_string(classes) + ")");
        }
    }
    auto probs = std::make_shared<std::vector<T>>(batch * classes);
    T loss = T(0);
    for (std::size_t r = 0; r < batch; ++r) {
        const T* row = logits.values().data() + r * classes;
        const T mx = *std::max_element(row, row + classes);
        T z = T(0);
        for (std::size_t j = 0; j < classes; ++j) {
            const T e = std::exp(row[j] - mx);
            (*probs)[r * classes + j] = e;
            z += e;
        }
        for (std::size_t j = 0; j < classes; ++j) (*probs)[r * classes + j] /= z;
        loss += std::log(z) - (row[targets[r]] - mx);
    }
    loss /= static_cast<T>(batch);
    Impl<T>* il = logits.impl();
    std::vector<std::size_t> tgt(targets.begin(), targets.end());
    return make_result<T>({1}, {loss}, "softmax_xent", {logits},
                          [il, probs, tgt = std::move(tgt), batch, classes](const Impl<T>& o) {
                              const T g = o.grad[0] / static_cast<T>(batch);
                              T* gl = il->ensure_grad().data();
                              for (std::size_t r = 0; r < batch; ++r) {
                                  for (std::size_t j = 0; j < classes; ++j) {
                                      T p = (*probs)[r * classes + j];
                                      if (j == tgt[r]) p -= T(1);
                                      gl[r * classes + j] += g * p;
                                  }
                              }
                          });
}

#define FEATFOOL_INSTANTIATE_OPS(T)                                                                          \
    template BasicTensor<T> ewise_binary<T>(BinaryOp, const BasicTensor<T>&, const BasicTensor<T>&);          \
    template BasicTensor<T> scale<T>(const BasicTensor<T>&, T);                                                \
    template BasicTensor<T> add_scalar<T>(const BasicTensor<T>&, T);                                           \
    template BasicTensor<T> matmul<T>(const BasicTensor<T>&, const BasicTensor<T>&);                          \
    template BasicTensor<T> conv2d<T>(const BasicTensor<T>&, const BasicTensor<T>&, std::size_t, ConvMode);   \
    template BasicTensor<T> pad2d<T>(const BasicTensor<T>&, std::size_t);                                      \
    template BasicTensor<T> add_channel_bias<T>(const BasicTensor<T>&, const BasicTensor<T>&);                \
    template BasicTensor<T> activation<T>(ActivationKind, const BasicTensor<T>&);                             \
    template BasicTensor<T> log<T>(const BasicTensor<T>&);                                                     \
    template BasicTensor<T> clamp<T>(const BasicTensor<T>&, T, T);                                             \
    template BasicTensor<T> sum<T>(const BasicTensor<T>&);                                                     \
    template BasicTensor<T> mean<T>(const BasicTensor<T>&);                                                    \
    template BasicTensor<T> reshape<T>(const BasicTensor<T>&, Shape);                                          \
    template BasicTensor<T> slice_cols<T>(const BasicTensor<T>&, std::size_t, std::size_t);                   \
    template BasicTensor<T> concat_rows<T>(const std::vector<BasicTensor<T>>&);                               \
    template BasicTensor<T> gather_rows<T>(const BasicTensor<T>&, std::span<const std::size_t>);              \
    template BasicTensor<T> global_avg_pool<T>(const BasicTensor<T>&);                                        \
    template BasicTensor<T> softmax_xent<T>(const BasicTensor<T>&, std::span<const std::size_t>);

FEATFOOL_INSTANTIATE_OPS(float)
FEATFOOL_INSTANTIATE_OPS(double)

}  // namespace featfool::diffcore
