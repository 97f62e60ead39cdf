#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "featfool/diffcore/adam.hpp"
#include "featfool/models/decoder.hpp"
#include "featfool/models/encoder.hpp"

namespace featfool::models {

struct CaptionSample {
    Image image;
    Caption caption;
    std::size_t label = 0;
};

struct FeatureSample {
    FeatureVector features;
    Caption caption;
};

struct CaptionerTrainOptions {
    double lr = 2e-3;
    std::size_t batch_size = 16;
    // Weight of the class cross-entropy added to the caption loss.
    double class_weight = 1.0;
    double weight_decay = 0.0;
    // Weight of the slot loss: a linear head on the pooled features predicts
    // the token at every caption position. The head exists only inside the
    // trainer and is discarded with it.
    double slot_weight = 0.0;
    std::uint64_t slot_seed = 0x510751075107ULL;
    // Each sample is translated by up to this many pixels per axis, drawn
    // afresh every epoch; uncovered pixels take the background value -1.
    std::size_t max_shift = 0;
};

// Joint encoder + decoder training with teacher forcing. Holds the ADAM
// moments across epochs.
class CaptionerTrainer {
   public:
    CaptionerTrainer(Encoder& encoder, Decoder& decoder, CaptionerTrainOptions options);

    // One pass over `samples` in an order shuffled by `shuffle_seed`.
    // Returns the mean per-sample loss. Throws DomainError when empty.
    double epoch(std::span<const CaptionSample> samples, std::uint64_t shuffle_seed);
    void set_lr(double lr) { optimizer_.set_lr(lr); }

   private:
    Encoder& encoder_;
    Decoder& decoder_;
    CaptionerTrainOptions options_;
    ParamList slot_head_;
    diffcore::Adam<float> optimizer_;
};

// Decoder-only training on frozen encoder features.
class DecoderTrainer {
   public:
    DecoderTrainer(Decoder& decoder, CaptionerTrainOptions options);

    double epoch(std::span<const FeatureSample> samples, std::uint64_t shuffle_seed);
    void set_lr(double lr) { optimizer_.set_lr(lr); }

   private:
    Decoder& decoder_;
    CaptionerTrainOptions options_;
    diffcore::Adam<float> optimizer_;
};

// One epoch with a fresh optimizer and one ADAM step per sample. Use
// CaptionerTrainer to keep optimizer moments across epochs.
double train_captioner_epoch(Encoder& encoder, Decoder& decoder, std::span<const CaptionSample> samples, double lr);

}  // namespace featfool::models
