#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "featfool/models/params.hpp"
#include "featfool/models/types.hpp"

namespace featfool::models {

struct EncoderConfig {
    std::size_t in_channels = 3;
    std::size_t image_size = 32;
    std::array<std::size_t, 3> channels{16, 32, 64};
    std::size_t kernel = 5;
    std::size_t stride = 2;
    std::size_t padding = 2;
    std::size_t classes = 4;
};

// Three stride-2 conv+relu stages, a global average pool and a linear class
// head. Feature taps: 0..2 are the flattened stage outputs, 3 the pooled
// vector that the decoder consumes.
class Encoder {
   public:
    static constexpr std::size_t kPooledTap = 3;
    static constexpr std::size_t kTapCount = 4;

    Encoder(EncoderConfig cfg, std::uint64_t seed);

    const EncoderConfig& config() const { return cfg_; }

    // 1 x width(tap). Throws ConfigError for an unknown tap.
    Tensor tap(const Tensor& image, std::size_t tap) const;
    std::size_t tap_width(std::size_t tap) const;
    // 1 x classes.
    Tensor logits(const Tensor& image) const;
    // Logits computed from an already pooled 1 x m feature row.
    Tensor head(const Tensor& pooled) const;

    ParamList& parameters() { return params_; }
    const ParamList& parameters() const { return params_; }
    void set_trainable(bool on) { models::set_trainable(params_, on); }
    Encoder clone() const;

   private:
    Tensor stage(const Tensor& x, std::size_t i) const;

    EncoderConfig cfg_;
    ParamList params_;  // conv{1,2,3}.{w,b}, head.{w,b}
};

FeatureVector encoder_features(const Encoder& encoder, const Image& image, std::size_t layer);
std::vector<float> classifier_logits(const Encoder& encoder, const Image& image);

// Indices of the k largest scores, descending, ties to the lower index.
// Throws DomainError when k exceeds the number of scores.
std::vector<std::size_t> top_k(std::span<const float> scores, std::size_t k);

}  // namespace featfool::models
