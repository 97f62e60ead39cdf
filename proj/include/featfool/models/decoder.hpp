#pragma once

#include <atomic>
#include <cstdint>
#include <utility>

#include "featfool/models/params.hpp"
#include "featfool/models/types.hpp"

namespace featfool::models {

struct DecoderConfig {
    std::size_t vocab_size = 0;
    std::size_t embed = 32;
    std::size_t state = 64;
    std::size_t feature = 64;
};

// Copyable relaxed counter.
class EvalCounter {
   public:
    EvalCounter() = default;
    EvalCounter(const EvalCounter& o) : n_(o.load()) {}
    EvalCounter& operator=(const EvalCounter& o) {
        n_.store(o.load(), std::memory_order_relaxed);
        return *this;
    }
    void bump() const { n_.fetch_add(1, std::memory_order_relaxed); }
    std::uint64_t load() const { return n_.load(std::memory_order_relaxed); }

   private:
    mutable std::atomic<std::uint64_t> n_{0};
};

// Single-layer LSTM captioner. The image feature row is projected to the
// embedding width and fed once from a zero state; words follow.
class Decoder {
   public:
    Decoder(DecoderConfig cfg, std::uint64_t seed);

    const DecoderConfig& config() const { return cfg_; }

    LstmState zero_state() const;
    // State after consuming the image features (1 x feature).
    LstmState inject(const Tensor& features) const;
    // One LSTM step on an already embedded 1 x embed input.
    LstmState advance(const LstmState& state, const Tensor& input) const;
    // Throws DomainError for a token outside the vocabulary.
    Tensor embed(TokenId token) const;
    // 1 x vocab.
    Tensor project(const LstmState& state) const;

    // Mean token cross-entropy under teacher forcing.
    Tensor caption_loss(const Tensor& features, const Caption& caption) const;

    // Every state update (inject or advance) increments this counter.
    std::uint64_t evaluations() const { return evals_.load(); }

    ParamList& parameters() { return params_; }
    const ParamList& parameters() const { return params_; }
    void set_trainable(bool on) { models::set_trainable(params_, on); }
    Decoder clone() const;

   private:
    DecoderConfig cfg_;
    ParamList params_;  // embed, feat.{w,b}, lstm.{wx,wh,b}, out.{w,b}
    EvalCounter evals_;
};

std::pair<LstmState, Tensor> lstm_step(const Decoder& decoder, const LstmState& state, TokenId token);

// Greedy decoding; the result has at most max_len ids including sentinels,
// with <eos> forced at the limit. Throws ShapeError on a feature width
// mismatch.
Caption decode_greedy(const Decoder& decoder, const FeatureVector& features, std::size_t max_len);

inline constexpr std::size_t kDefaultMaxCaptionLength = 16;

}  // namespace featfool::models
