#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "featfool/diffcore/tensor.hpp"

namespace featfool::diffcore {

enum class BinaryOp { add, sub, mul };
enum class ActivationKind { relu, tanh, sigmoid };
enum class ConvMode { valid, transpose };

// Elementwise a (op) b. `b` may also be a one-element tensor, broadcast over a.
template <typename T>
BasicTensor<T> ewise_binary(BinaryOp op, const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return ewise_binary(BinaryOp::add, a, b);
}
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return ewise_binary(BinaryOp::sub, a, b);
}
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return ewise_binary(BinaryOp::mul, a, b);
}

// x * factor and x + offset with constant scalars.
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, T factor);
template <typename T>
BasicTensor<T> add_scalar(const BasicTensor<T>& x, T offset);

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

// Cross-correlation of a C x H x W input.
//   valid:     kernels K x C x kh x kw, output K x ((H-kh)/s+1) x ((W-kw)/s+1)
//   transpose: input has K channels, output C x ((H-1)s+kh) x ((W-1)s+kw);
//              the adjoint of the valid mode with the same kernels.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels, std::size_t stride,
                      ConvMode mode);

// Zero border of `pad` pixels around every channel of a C x H x W tensor.
template <typename T>
BasicTensor<T> pad2d(const BasicTensor<T>& x, std::size_t pad);

// x[c, :, :] + bias[c] for a C x H x W tensor.
template <typename T>
BasicTensor<T> add_channel_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias);

template <typename T>
BasicTensor<T> activation(ActivationKind kind, const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
    return activation(ActivationKind::relu, x);
}
// Output is kept strictly inside (-1, 1) even where the float result rounds to
// +-1.
template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x) {
    return activation(ActivationKind::tanh, x);
}
template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
    return activation(ActivationKind::sigmoid, x);
}

// Natural log; every input must be positive.
template <typename T>
BasicTensor<T> log(const BasicTensor<T>& x);

// Clamp into [lo, hi]; gradient passes only where the input is inside.
template <typename T>
BasicTensor<T> clamp(const BasicTensor<T>& x, T lo, T hi);

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape);

// Columns [begin, end) of a rank-2 tensor.
template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& x, std::size_t begin, std::size_t end);

// Stacks rank-2 tensors with equal column counts.
template <typename T>
BasicTensor<T> concat_rows(const std::vector<BasicTensor<T>>& parts);

// Rows `ids` of a V x E table, as an n x E tensor.
template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& table, std::span<const std::size_t> ids);

// C x H x W -> 1 x C spatial mean.
template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);

// Mean over rows of -log softmax(logits)[target], max-subtracted.
template <typename T>
BasicTensor<T> softmax_xent(const BasicTensor<T>& logits, std::span<const std::size_t> targets);

}  // namespace featfool::diffcore
