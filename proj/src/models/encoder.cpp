#include "featfool/models/encoder.hpp"

#include <algorithm>
#include <numeric>

#include "featfool/diffcore/ops.hpp"
#include "featfool/errors.hpp"

namespace featfool::models {

namespace dc = diffcore;

namespace {

std::size_t conv_out(std::size_t in, const EncoderConfig& cfg) {
    return (in + 2 * cfg.padding - cfg.kernel) / cfg.stride + 1;
}

}  // namespace

Encoder::Encoder(EncoderConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    dc::Rng rng(seed);
    std::size_t in_c = cfg_.in_channels;
    std::size_t size = cfg_.image_size;
    for (std::size_t i = 0; i < 3; ++i) {
        if (size + 2 * cfg_.padding < cfg_.kernel) throw ConfigError("encoder stages shrink the image below the kernel size");
        const std::size_t out_c = cfg_.channels[i];
        const std::size_t fan_in = in_c * cfg_.kernel * cfg_.kernel;
        const std::string base = "conv" + std::to_string(i + 1);
        params_.push_back({base + ".w", init_he_uniform(rng, {out_c, in_c, cfg_.kernel, cfg_.kernel}, fan_in)});
        params_.push_back({base + ".b", Tensor::full({out_c}, 0.0f)});
        in_c = out_c;
        size = conv_out(size, cfg_);
    }
    params_.push_back({"head.w", init_uniform(rng, {in_c, cfg_.classes}, in_c)});
    params_.push_back({"head.b", init_uniform(rng, {1, cfg_.classes}, in_c)});
}

Tensor Encoder::stage(const Tensor& x, std::size_t i) const {
    const Tensor& w = params_[2 * i].value;
    const Tensor& b = params_[2 * i + 1].value;
    return dc::relu(dc::add_channel_bias(dc::conv2d(dc::pad2d(x, cfg_.padding), w, cfg_.stride, dc::ConvMode::valid), b));
}

std::size_t Encoder::tap_width(std::size_t tap) const {
    if (tap >= kTapCount) {
        throw ConfigError("encoder has no feature tap " + std::to_string(tap) + " (valid: 0.." +
                          std::to_string(kTapCount - 1) + ")");
    }
    if (tap == kPooledTap) return cfg_.channels[2];
    std::size_t size = cfg_.image_size;
    for (std::size_t i = 0; i <= tap; ++i) size = conv_out(size, cfg_);
    return cfg_.channels[tap] * size * size;
}

Tensor Encoder::tap(const Tensor& image, std::size_t tap) const {
    tap_width(tap);
    Tensor x = image;
    for (std::size_t i = 0; i < 3; ++i) {
        x = stage(x, i);
        if (i == tap) return dc::reshape(x, {1, x.numel()});
    }
    return dc::global_avg_pool(x);
}

Tensor Encoder::head(const Tensor& pooled) const {
    return dc::add(dc::matmul(pooled, params_[6].value), params_[7].value);
}

Tensor Encoder::logits(const Tensor& image) const { return head(tap(image, kPooledTap)); }

Encoder Encoder::clone() const {
    Encoder e = *this;
    e.params_ = deep_copy(params_);
    return e;
}

FeatureVector encoder_features(const Encoder& encoder, const Image& image, std::size_t layer) {
    const Tensor t = encoder.tap(image.to_tensor(), layer);
    return FeatureVector{std::vector<float>(t.values().begin(), t.values().end()), layer};
}

std::vector<float> classifier_logits(const Encoder& encoder, const Image& image) {
    const Tensor t = encoder.logits(image.to_tensor());
    return std::vector<float>(t.values().begin(), t.values().end());
}

std::vector<std::size_t> top_k(std::span<const float> scores, std::size_t k) {
    if (k > scores.size()) {
        throw DomainError("top_k: k=" + std::to_string(k) + " exceeds " + std::to_string(scores.size()) + " classes");
    }
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    idx.resize(k);
    return idx;
}

}  // namespace featfool::models
