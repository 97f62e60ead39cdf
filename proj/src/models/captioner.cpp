#include "featfool/models/captioner.hpp"

#include <numeric>

#include "featfool/diffcore/ops.hpp"
#include "featfool/errors.hpp"

namespace featfool::models {

namespace dc = diffcore;

namespace {

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    dc::Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    return order;
}

// Batch gradients are accumulated per sample and scaled to a batch mean
// before the ADAM step.
template <typename LossFn>
double run_epoch(std::size_t n, std::uint64_t seed, std::size_t batch_size, dc::Adam<float>& optimizer,
                 LossFn&& loss_of) {
    if (n == 0) throw DomainError("training set is empty");
    const auto order = shuffled_order(n, seed);
    std::vector<double> losses(n, 0.0);
    const std::size_t bs = std::max<std::size_t>(1, batch_size);
    for (std::size_t start = 0; start < n; start += bs) {
        const std::size_t end = std::min(n, start + bs);
        const float inv = 1.0f / static_cast<float>(end - start);
        for (std::size_t k = start; k < end; ++k) {
            const std::size_t idx = order[k];
            const Tensor loss = dc::scale(loss_of(idx), inv);
            losses[idx] = static_cast<double>(loss.item()) / inv;
            dc::backward(loss);
        }
        optimizer.step();
    }
    // Summed in sample order so the value does not depend on the shuffle.
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(n);
}

constexpr std::size_t kSlotCount = kDefaultMaxCaptionLength;

// Caption tokens after the begin sentinel, padded to kSlotCount.
std::vector<std::size_t> slot_targets(const Caption& caption) {
    std::vector<std::size_t> t(kSlotCount, Vocabulary::kPad);
    const auto ids = caption.ids();
    for (std::size_t i = 1; i < ids.size() && i - 1 < kSlotCount; ++i) t[i - 1] = ids[i];
    return t;
}

Tensor shifted(const Image& image, int dx, int dy) {
    const int c = static_cast<int>(image.channels());
    const int h = static_cast<int>(image.height());
    const int w = static_cast<int>(image.width());
    const auto src = image.values();
    std::vector<float> out(src.size(), -1.0f);
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < h; ++y) {
            const int sy = y - dy;
            if (sy < 0 || sy >= h) continue;
            for (int x = 0; x < w; ++x) {
                const int sx = x - dx;
                if (sx < 0 || sx >= w) continue;
                out[(ch * h + y) * w + x] = src[(ch * h + sy) * w + sx];
            }
        }
    }
    return Tensor::from({image.channels(), image.height(), image.width()}, out);
}

}  // namespace

CaptionerTrainer::CaptionerTrainer(Encoder& encoder, Decoder& decoder, CaptionerTrainOptions options)
    : encoder_(encoder), decoder_(decoder), options_(options) {
    encoder_.set_trainable(true);
    decoder_.set_trainable(true);
    auto params = tensors_of(encoder_.parameters());
    for (auto& t : tensors_of(decoder_.parameters())) params.push_back(t);
    if (options_.slot_weight > 0.0) {
        const std::size_t width = kSlotCount * decoder_.config().vocab_size;
        dc::Rng rng(options_.slot_seed);
        const std::size_t features = encoder_.tap_width(Encoder::kPooledTap);
        slot_head_ = {{"slot.w", init_uniform(rng, {features, width}, features)},
                      {"slot.b", init_uniform(rng, {1, width}, features)}};
        set_trainable(slot_head_, true);
        for (auto& t : tensors_of(slot_head_)) params.push_back(t);
    }
    optimizer_ = dc::Adam<float>(std::move(params), dc::AdamOptions{options.lr, 0.9, 0.999, 1e-8, options.weight_decay});
}

double CaptionerTrainer::epoch(std::span<const CaptionSample> samples, std::uint64_t shuffle_seed) {
    return run_epoch(samples.size(), shuffle_seed, options_.batch_size, optimizer_, [&](std::size_t i) {
        const CaptionSample& s = samples[i];
        Tensor input = s.image.to_tensor();
        if (options_.max_shift > 0) {
            dc::Rng rng(dc::derive_seed(shuffle_seed, i));
            const auto span = 2 * options_.max_shift + 1;
            const int dx = static_cast<int>(rng.below(span)) - static_cast<int>(options_.max_shift);
            const int dy = static_cast<int>(rng.below(span)) - static_cast<int>(options_.max_shift);
            input = shifted(s.image, dx, dy);
        }
        const Tensor pooled = encoder_.tap(input, Encoder::kPooledTap);
        Tensor loss = decoder_.caption_loss(pooled, s.caption);
        if (options_.class_weight > 0.0) {
            const std::size_t target[] = {s.label};
            const Tensor cls = dc::softmax_xent(encoder_.head(pooled), target);
            loss = dc::add(loss, dc::scale(cls, static_cast<float>(options_.class_weight)));
        }
        if (!slot_head_.empty()) {
            const Tensor flat = dc::add(dc::matmul(pooled, slot_head_[0].value), slot_head_[1].value);
            const Tensor logits = dc::reshape(flat, {kSlotCount, decoder_.config().vocab_size});
            const auto targets = slot_targets(s.caption);
            loss = dc::add(loss, dc::scale(dc::softmax_xent(logits, targets), static_cast<float>(options_.slot_weight)));
        }
        return loss;
    });
}

DecoderTrainer::DecoderTrainer(Decoder& decoder, CaptionerTrainOptions options) : decoder_(decoder), options_(options) {
    decoder_.set_trainable(true);
    optimizer_ = dc::Adam<float>(tensors_of(decoder_.parameters()),
                                 dc::AdamOptions{options.lr, 0.9, 0.999, 1e-8, options.weight_decay});
}

double DecoderTrainer::epoch(std::span<const FeatureSample> samples, std::uint64_t shuffle_seed) {
    return run_epoch(samples.size(), shuffle_seed, options_.batch_size, optimizer_, [&](std::size_t i) {
        return decoder_.caption_loss(samples[i].features.to_tensor(), samples[i].caption);
    });
}

double train_captioner_epoch(Encoder& encoder, Decoder& decoder, std::span<const CaptionSample> samples, double lr) {
    CaptionerTrainOptions opts;
    opts.lr = lr;
    opts.batch_size = 1;
    opts.class_weight = 0.0;
    CaptionerTrainer trainer(encoder, decoder, opts);
    return trainer.epoch(samples, 0);
}

}  // namespace featfool::models
