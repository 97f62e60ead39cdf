#include "featfool/models/types.hpp"

#include <cmath>
#include <sstream>

#include "featfool/diffcore/random.hpp"
#include "featfool/errors.hpp"

namespace featfool::models {

Image::Image(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> values)
    : channels_(channels), height_(height), width_(width), values_(std::move(values)) {
    if (channels == 0 || height == 0 || width == 0 || values_.size() != channels * height * width) {
        throw ShapeError("image " + std::to_string(channels) + "x" + std::to_string(height) + "x" +
                         std::to_string(width) + " cannot hold " + std::to_string(values_.size()) + " values");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const float v = values_[i];
        if (!(v >= -1.0f && v <= 1.0f)) {
            throw DomainError("image value " + std::to_string(v) + " at " + std::to_string(i) +
                              " is outside [-1, 1]");
        }
    }
}

Image Image::filled(std::size_t channels, std::size_t height, std::size_t width, float value) {
    return Image(channels, height, width, std::vector<float>(channels * height * width, value));
}

Image Image::from_tensor(const Tensor& t) {
    if (t.rank() != 3) throw ShapeError("image tensor must be C x H x W, got " + diffcore::shape_str(t.shape()));
    return Image(t.dim(0), t.dim(1), t.dim(2), std::vector<float>(t.values().begin(), t.values().end()));
}

Tensor Image::to_tensor(bool requires_grad) const {
    return Tensor::from({channels_, height_, width_}, values_, requires_grad);
}

NoiseSeed NoiseSeed::sample(std::uint64_t seed) {
    diffcore::Rng rng(seed);
    std::vector<float> v(kLength);
    for (auto& x : v) x = static_cast<float>(rng.uniform());
    return from_values(std::move(v));
}

NoiseSeed NoiseSeed::from_values(std::vector<float> values) {
    if (values.size() != kLength) {
        throw ShapeError("noise seed needs " + std::to_string(kLength) + " values, got " +
                         std::to_string(values.size()));
    }
    NoiseSeed n;
    n.values_ = std::move(values);
    return n;
}

Tensor NoiseSeed::to_tensor() const { return Tensor::from({1, kLength}, values_); }

Tensor FeatureVector::to_tensor() const { return Tensor::from({1, values.size()}, values); }

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
    tokens_ = {"<pad>", "<bos>", "<eos>"};
    for (const auto& w : words) tokens_.push_back(w);
    for (TokenId i = 0; i < tokens_.size(); ++i) {
        if (!ids_.emplace(tokens_[i], i).second) throw ConfigError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
}

const std::string& Vocabulary::token(TokenId id) const {
    if (id >= tokens_.size()) throw DomainError("token id " + std::to_string(id) + " outside vocabulary");
    return tokens_[id];
}

TokenId Vocabulary::id(const std::string& word) const {
    auto it = ids_.find(word);
    if (it == ids_.end()) throw DomainError("word '" + word + "' is not in the vocabulary");
    return it->second;
}

Caption::Caption(std::vector<TokenId> ids) : ids_(std::move(ids)) {
    if (ids_.size() < 2 || ids_.front() != Vocabulary::kBos || ids_.back() != Vocabulary::kEos) {
        throw DomainError("caption must start with <bos> and end with <eos>");
    }
    for (std::size_t i = 1; i + 1 < ids_.size(); ++i) {
        if (ids_[i] == Vocabulary::kBos || ids_[i] == Vocabulary::kEos) {
            throw DomainError("sentinel inside caption body at position " + std::to_string(i));
        }
    }
}

Caption Caption::encode(const Vocabulary& vocab, const std::string& text) {
    std::vector<TokenId> ids{Vocabulary::kBos};
    std::istringstream is(text);
    std::string w;
    while (is >> w) ids.push_back(vocab.id(w));
    ids.push_back(Vocabulary::kEos);
    return Caption(std::move(ids));
}

std::string Caption::text(const Vocabulary& vocab) const {
    std::string out;
    for (std::size_t i = 1; i + 1 < ids_.size(); ++i) {
        if (ids_[i] == Vocabulary::kPad) continue;
        if (!out.empty()) out += ' ';
        out += vocab.token(ids_[i]);
    }
    return out;
}

}  // namespace featfool::models
