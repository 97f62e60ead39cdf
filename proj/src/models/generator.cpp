#include "featfool/models/generator.hpp"

#include <algorithm>

#include "featfool/diffcore/ops.hpp"

namespace featfool::models {

namespace dc = diffcore;

Generator::Generator(GeneratorConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    dc::Rng rng(seed);
    const std::size_t hidden = cfg_.base_channels * cfg_.base_size * cfg_.base_size;
    params_.push_back({"fc.w", init_uniform(rng, {cfg_.noise, hidden}, cfg_.noise)});
    params_.push_back({"fc.b", init_uniform(rng, {1, hidden}, cfg_.noise)});
    // A transpose conv's fan-in per output pixel is in_channels (kernel == stride).
    params_.push_back(
        {"up1.w", init_uniform(rng, {cfg_.base_channels, cfg_.mid_channels, cfg_.up1, cfg_.up1}, cfg_.base_channels)});
    params_.push_back({"up1.b", init_uniform(rng, {cfg_.mid_channels}, cfg_.base_channels)});
    params_.push_back(
        {"up2.w", init_uniform(rng, {cfg_.mid_channels, cfg_.out_channels, cfg_.up2, cfg_.up2}, cfg_.mid_channels)});
    params_.push_back({"up2.b", init_uniform(rng, {cfg_.out_channels}, cfg_.mid_channels)});
    set_trainable(params_, true);
}

Tensor Generator::forward(const Tensor& noise) const {
    Tensor h = dc::relu(dc::add(dc::matmul(noise, params_[0].value), params_[1].value));
    h = dc::reshape(h, {cfg_.base_channels, cfg_.base_size, cfg_.base_size});
    h = dc::relu(dc::add_channel_bias(dc::conv2d(h, params_[2].value, cfg_.up1, dc::ConvMode::transpose),
                                      params_[3].value));
    h = dc::add_channel_bias(dc::conv2d(h, params_[4].value, cfg_.up2, dc::ConvMode::transpose), params_[5].value);
    return dc::tanh(h);
}

void Generator::zero_weights() {
    for (auto& p : params_) {
        auto v = p.value.values_mut();
        std::fill(v.begin(), v.end(), 0.0f);
    }
}

Generator Generator::clone() const {
    Generator g = *this;
    g.params_ = deep_copy(params_);
    return g;
}

Image generator_forward(const Generator& g, const NoiseSeed& n) {
    return Image::from_tensor(g.forward(n.to_tensor()).detach());
}

}  // namespace featfool::models
