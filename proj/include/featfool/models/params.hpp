#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "featfool/diffcore/random.hpp"
#include "featfool/diffcore/tensor.hpp"

namespace featfool::models {

struct NamedTensor {
    std::string name;
    diffcore::Tensor value;
};

using ParamList = std::vector<NamedTensor>;

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
diffcore::Tensor init_uniform(diffcore::Rng& rng, diffcore::Shape shape, std::size_t fan_in);

// Uniform in [-sqrt(6/fan_in), sqrt(6/fan_in)], for layers followed by ReLU.
diffcore::Tensor init_he_uniform(diffcore::Rng& rng, diffcore::Shape shape, std::size_t fan_in);

// Fresh storage with the same values and grad flags.
ParamList deep_copy(const ParamList& params);

void set_trainable(ParamList& params, bool on);
std::vector<diffcore::Tensor> tensors_of(const ParamList& params);

// FNV-1a over names, shapes and raw value bytes.
std::uint64_t checksum(const ParamList& params);

// Copies values by name; every destination tensor must be present with the
// same shape (ConfigError otherwise).
void assign_values(ParamList& dst, const ParamList& src);

}  // namespace featfool::models
