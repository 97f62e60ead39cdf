#include "featfool/diffcore/adam.hpp"

#include <cmath>

#include "featfool/errors.hpp"
#include "featfool/simd/kernels.hpp"

namespace featfool::diffcore {

template <typename T>
AdamState<T> AdamState<T>::for_param(const BasicTensor<T>& param, AdamOptions options) {
    AdamState s;
    s.m.assign(param.numel(), T(0));
    s.v.assign(param.numel(), T(0));
    s.options = options;
    return s;
}

template <typename T>
void adam_step(std::span<BasicTensor<T>> params, std::span<AdamState<T>> states) {
    if (params.size() != states.size()) {
        throw ContractError("adam_step: " + std::to_string(params.size()) + " params but " +
                            std::to_string(states.size()) + " states");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].has_grad()) {
            throw ContractError("adam_step: parameter " + std::to_string(i) + " has no gradient");
        }
        if (states[i].m.size() != params[i].numel() || states[i].v.size() != params[i].numel()) {
            throw ContractError("adam_step: state " + std::to_string(i) + " does not match its parameter");
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        AdamState<T>& s = states[i];
        s.t += 1;
        simd::AdamCoefficients coef;
        coef.lr = s.options.lr;
        coef.beta1 = s.options.beta1;
        coef.beta2 = s.options.beta2;
        coef.eps = s.options.eps;
        coef.bias_correction1 = 1.0 - std::pow(s.options.beta1, static_cast<double>(s.t));
        coef.bias_correction2 = 1.0 - std::pow(s.options.beta2, static_cast<double>(s.t));
        auto p = params[i].values_mut();
        auto g = params[i].grad_mut();
        if (s.options.weight_decay > 0.0) {
            const T keep = static_cast<T>(1.0 - s.options.lr * s.options.weight_decay);
            simd::scale(p.data(), keep, p.data(), p.size());
        }
        simd::adam_update(p.data(), g.data(), s.m.data(), s.v.data(), p.size(), coef);
        params[i].zero_grad();
    }
}

template <typename T>
Adam<T>::Adam(std::vector<BasicTensor<T>> params, AdamOptions options) : params_(std::move(params)) {
    states_.reserve(params_.size());
    for (const auto& p : params_) states_.push_back(AdamState<T>::for_param(p, options));
}

template <typename T>
void Adam<T>::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

template <typename T>
void Adam<T>::set_lr(double lr) {
    for (auto& s : states_) s.options.lr = lr;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(std::span<BasicTensor<float>>, std::span<AdamState<float>>);
template void adam_step<double>(std::span<BasicTensor<double>>, std::span<AdamState<double>>);
template class Adam<float>;
template class Adam<double>;

}  // namespace featfool::diffcore
