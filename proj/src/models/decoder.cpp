#include "featfool/models/decoder.hpp"

#include "featfool/diffcore/ops.hpp"
#include "featfool/errors.hpp"

namespace featfool::models {

namespace dc = diffcore;

namespace {
enum Slot { kEmbed, kFeatW, kFeatB, kWx, kWh, kBias, kOutW, kOutB };
}

Decoder::Decoder(DecoderConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg_.vocab_size < 4) throw ConfigError("decoder vocabulary must hold the sentinels and at least one word");
    dc::Rng rng(seed);
    const std::size_t h = cfg_.state;
    params_.push_back({"embed", init_uniform(rng, {cfg_.vocab_size, cfg_.embed}, cfg_.embed)});
    params_.push_back({"feat.w", init_uniform(rng, {cfg_.feature, cfg_.embed}, cfg_.feature)});
    params_.push_back({"feat.b", init_uniform(rng, {1, cfg_.embed}, cfg_.feature)});
    params_.push_back({"lstm.wx", init_uniform(rng, {cfg_.embed, 4 * h}, cfg_.embed)});
    params_.push_back({"lstm.wh", init_uniform(rng, {h, 4 * h}, h)});
    params_.push_back({"lstm.b", init_uniform(rng, {1, 4 * h}, h)});
    params_.push_back({"out.w", init_uniform(rng, {h, cfg_.vocab_size}, h)});
    params_.push_back({"out.b", init_uniform(rng, {1, cfg_.vocab_size}, h)});
}

LstmState Decoder::zero_state() const {
    return LstmState{Tensor::full({1, cfg_.state}, 0.0f), Tensor::full({1, cfg_.state}, 0.0f), 0};
}

LstmState Decoder::advance(const LstmState& s, const Tensor& input) const {
    evals_.bump();
    const std::size_t h = cfg_.state;
    const Tensor gates = dc::add(dc::add(dc::matmul(input, params_[kWx].value), dc::matmul(s.h, params_[kWh].value)),
                                 params_[kBias].value);
    const Tensor i = dc::sigmoid(dc::slice_cols(gates, 0, h));
    const Tensor f = dc::sigmoid(dc::slice_cols(gates, h, 2 * h));
    const Tensor g = dc::tanh(dc::slice_cols(gates, 2 * h, 3 * h));
    const Tensor o = dc::sigmoid(dc::slice_cols(gates, 3 * h, 4 * h));
    const Tensor c = dc::add(dc::mul(f, s.c), dc::mul(i, g));
    return LstmState{dc::mul(o, dc::tanh(c)), c, s.t + 1};
}

LstmState Decoder::inject(const Tensor& features) const {
    if (features.rank() != 2 || features.dim(0) != 1 || features.dim(1) != cfg_.feature) {
        throw ShapeError("decoder expects 1 x " + std::to_string(cfg_.feature) + " features, got " +
                         dc::shape_str(features.shape()));
    }
    const Tensor x = dc::add(dc::matmul(features, params_[kFeatW].value), params_[kFeatB].value);
    return advance(zero_state(), x);
}

Tensor Decoder::embed(TokenId token) const {
    if (token >= cfg_.vocab_size) {
        throw DomainError("token id " + std::to_string(token) + " outside vocabulary of " +
                          std::to_string(cfg_.vocab_size));
    }
    const std::size_t ids[] = {token};
    return dc::gather_rows(params_[kEmbed].value, ids);
}

Tensor Decoder::project(const LstmState& state) const {
    return dc::add(dc::matmul(state.h, params_[kOutW].value), params_[kOutB].value);
}

Tensor Decoder::caption_loss(const Tensor& features, const Caption& caption) const {
    const auto& ids = caption.ids();
    LstmState s = inject(features);
    std::vector<Tensor> logits;
    logits.reserve(ids.size() - 1);
    for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
        s = advance(s, embed(ids[t]));
        logits.push_back(project(s));
    }
    const std::vector<std::size_t> targets(ids.begin() + 1, ids.end());
    return dc::softmax_xent(dc::concat_rows(logits), targets);
}

Decoder Decoder::clone() const {
    Decoder d = *this;
    d.params_ = deep_copy(params_);
    return d;
}

std::pair<LstmState, Tensor> lstm_step(const Decoder& decoder, const LstmState& state, TokenId token) {
    LstmState next = decoder.advance(state, decoder.embed(token));
    Tensor logits = decoder.project(next);
    return {std::move(next), std::move(logits)};
}

Caption decode_greedy(const Decoder& decoder, const FeatureVector& features, std::size_t max_len) {
    if (max_len < 2) throw DomainError("max_len must leave room for both sentinels");
    LstmState s = decoder.inject(features.to_tensor());
    std::vector<TokenId> ids{Vocabulary::kBos};
    while (ids.size() + 1 < max_len) {
        auto [next, logits] = lstm_step(decoder, s, ids.back());
        s = std::move(next);
        const auto v = logits.values();
        TokenId best = 0;
        for (TokenId k = 1; k < v.size(); ++k) {
            if (v[k] > v[best]) best = k;
        }
        if (best == Vocabulary::kEos) break;
        // A sentinel can never be emitted inside the body; pick the best word.
        if (best == Vocabulary::kBos || best == Vocabulary::kPad) {
            best = Vocabulary::kEos + 1;
            for (TokenId k = best + 1; k < v.size(); ++k) {
                if (v[k] > v[best]) best = k;
            }
        }
        ids.push_back(best);
    }
    ids.push_back(Vocabulary::kEos);
    return Caption(std::move(ids));
}

}  // namespace featfool::models
