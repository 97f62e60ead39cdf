#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "featfool/diffcore/tensor.hpp"

namespace featfool::models {

using diffcore::Tensor;

// C x H x W picture with every value in [-1, 1].
class Image {
   public:
    Image() = default;
    Image(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> values);

    static Image filled(std::size_t channels, std::size_t height, std::size_t width, float value);
    // Throws DomainError when a value leaves [-1, 1] or is not finite.
    static Image from_tensor(const Tensor& t);

    std::size_t channels() const { return channels_; }
    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return values_.size(); }
    std::span<const float> values() const { return values_; }
    float at(std::size_t c, std::size_t y, std::size_t x) const {
        return values_[(c * height_ + y) * width_ + x];
    }

    Tensor to_tensor(bool requires_grad = false) const;
    bool same_shape(const Image& other) const {
        return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
    }
    bool operator==(const Image&) const = default;

   private:
    std::size_t channels_ = 0;
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<float> values_;
};

// The generator's frozen input pattern.
class NoiseSeed {
   public:
    static constexpr std::size_t kLength = 100;

    // Draws kLength values from U[0, 1).
    static NoiseSeed sample(std::uint64_t seed);
    static NoiseSeed from_values(std::vector<float> values);

    std::span<const float> values() const { return values_; }
    Tensor to_tensor() const;

   private:
    std::vector<float> values_;
};

// Activations of one encoder tap.
struct FeatureVector {
    std::vector<float> values;
    std::size_t layer = 0;

    std::size_t size() const { return values.size(); }
    Tensor to_tensor() const;
    bool operator==(const FeatureVector&) const = default;
};

using TokenId = std::size_t;

class Vocabulary {
   public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kBos = 1;
    static constexpr TokenId kEos = 2;

    // Ids 0..2 are the reserved sentinels, words follow in the given order.
    explicit Vocabulary(const std::vector<std::string>& words);

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(TokenId id) const;
    // Throws DomainError for a word outside the vocabulary.
    TokenId id(const std::string& word) const;
    bool contains(const std::string& word) const { return ids_.count(word) != 0; }
    const std::vector<std::string>& tokens() const { return tokens_; }

   private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> ids_;
};

// Token ids framed by <bos> ... <eos>.
class Caption {
   public:
    Caption() = default;
    // Throws DomainError when the sentinel framing is broken.
    explicit Caption(std::vector<TokenId> ids);

    static Caption encode(const Vocabulary& vocab, const std::string& text);
    std::string text(const Vocabulary& vocab) const;

    const std::vector<TokenId>& ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }
    bool operator==(const Caption&) const = default;

   private:
    std::vector<TokenId> ids_;
};

struct LstmState {
    Tensor h;  // 1 x state_size
    Tensor c;  // 1 x state_size
    std::size_t t = 0;
};

}  // namespace featfool::models
