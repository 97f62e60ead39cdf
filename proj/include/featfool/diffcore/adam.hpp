#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "featfool/diffcore/tensor.hpp"

namespace featfool::diffcore {

struct AdamOptions {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Decoupled decay: p <- p * (1 - lr * weight_decay) before each update.
    double weight_decay = 0.0;
};

// Moment estimates for one parameter tensor.
template <typename T>
struct AdamState {
    std::vector<T> m;
    std::vector<T> v;
    std::uint64_t t = 0;
    AdamOptions options;

    static AdamState for_param(const BasicTensor<T>& param, AdamOptions options);
};

// One bias-corrected ADAM update per (param, state) pair, in place. Gradients
// are zeroed afterwards. Throws ContractError when a parameter has no gradient
// or its state does not match.
template <typename T>
void adam_step(std::span<BasicTensor<T>> params, std::span<AdamState<T>> states);

// Convenience owner of a parameter list and its states.
template <typename T>
class Adam {
   public:
    Adam() = default;
    Adam(std::vector<BasicTensor<T>> params, AdamOptions options);

    void step() { adam_step<T>(params_, states_); }
    void zero_grad();
    void set_lr(double lr);

    const std::vector<AdamState<T>>& states() const { return states_; }
    std::span<BasicTensor<T>> params() { return params_; }

   private:
    std::vector<BasicTensor<T>> params_;
    std::vector<AdamState<T>> states_;
};

}  // namespace featfool::diffcore
