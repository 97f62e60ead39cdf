#include "featfool/models/params.hpp"

#include <cmath>
#include <cstring>

#include "featfool/errors.hpp"

namespace featfool::models {

using diffcore::Tensor;

Tensor init_uniform(diffcore::Rng& rng, diffcore::Shape shape, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<float> v(diffcore::shape_numel(shape));
    for (auto& x : v) x = static_cast<float>(rng.uniform(-bound, bound));
    return Tensor::from(std::move(shape), std::move(v));
}

Tensor init_he_uniform(diffcore::Rng& rng, diffcore::Shape shape, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::vector<float> v(diffcore::shape_numel(shape));
    for (auto& x : v) x = static_cast<float>(rng.uniform(-bound, bound));
    return Tensor::from(std::move(shape), std::move(v));
}

ParamList deep_copy(const ParamList& params) {
    ParamList out;
    out.reserve(params.size());
    for (const auto& p : params) {
        Tensor t = p.value.detach();
        t.set_requires_grad(p.value.requires_grad());
        out.push_back({p.name, t});
    }
    return out;
}

void set_trainable(ParamList& params, bool on) {
    for (auto& p : params) p.value.set_requires_grad(on);
}

std::vector<Tensor> tensors_of(const ParamList& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p.value);
    return out;
}

std::uint64_t checksum(const ParamList& params) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& p : params) {
        mix(p.name.data(), p.name.size());
        for (std::size_t e : p.value.shape()) mix(&e, sizeof e);
        const auto v = p.value.values();
        mix(v.data(), v.size() * sizeof(float));
    }
    return h;
}

void assign_values(ParamList& dst, const ParamList& src) {
    for (auto& d : dst) {
        const NamedTensor* match = nullptr;
        for (const auto& s : src) {
            if (s.name == d.name) {
                match = &s;
                break;
            }
        }
        if (!match) throw ConfigError("missing tensor '" + d.name + "'");
        if (match->value.shape() != d.value.shape()) {
            throw ConfigError("tensor '" + d.name + "' has shape " + diffcore::shape_str(match->value.shape()) +
                              ", expected " + diffcore::shape_str(d.value.shape()));
        }
        auto out = d.value.values_mut();
        const auto in = match->value.values();
        std::copy(in.begin(), in.end(), out.begin());
    }
}

}  // namespace featfool::models
