#pragma once

#include <cstdint>

#include "featfool/models/params.hpp"
#include "featfool/models/types.hpp"

namespace featfool::models {

struct GeneratorConfig {
    std::size_t noise = NoiseSeed::kLength;
    std::size_t base_channels = 32;  // dense output reshaped to base_channels x base_size^2
    std::size_t base_size = 4;
    std::size_t mid_channels = 16;
    std::size_t up1 = 4;  // first transpose-conv kernel and stride
    std::size_t up2 = 2;  // second transpose-conv kernel and stride
    std::size_t out_channels = 3;

    std::size_t output_size() const { return base_size * up1 * up2; }
};

// dense -> relu -> reshape -> convT -> relu -> convT -> tanh.
class Generator {
   public:
    Generator(GeneratorConfig cfg, std::uint64_t seed);

    const GeneratorConfig& config() const { return cfg_; }

    // noise is 1 x cfg.noise; result is out_channels x S x S in (-1, 1).
    Tensor forward(const Tensor& noise) const;

    ParamList& parameters() { return params_; }
    const ParamList& parameters() const { return params_; }
    void zero_weights();
    Generator clone() const;

   private:
    GeneratorConfig cfg_;
    ParamList params_;  // fc.{w,b}, up1.{w,b}, up2.{w,b}
};

Image generator_forward(const Generator& g, const NoiseSeed& n);

}  // namespace featfool::models
