#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "featfool/models/decoder.hpp"
#include "featfool/models/encoder.hpp"
#include "featfool/models/generator.hpp"

namespace featfool::attacks {

using models::Encoder;
using models::FeatureVector;
using models::Generator;
using models::Image;
using models::Tensor;

enum class GenLossKind { remapped_cross_entropy, squared_error };
// signed: every pixel moves by lr * sign(grad); gradient: by lr * grad.
enum class RefineRule { signed_step, gradient };

const char* gen_loss_name(GenLossKind kind);
// Accepts "remapped-cross-entropy" and "squared-error"; ConfigError otherwise.
GenLossKind parse_gen_loss(const std::string& name);
const char* refine_rule_name(RefineRule rule);
// Accepts "signed" and "gradient"; ConfigError otherwise.
RefineRule parse_refine_rule(const std::string& name);

inline constexpr std::array<double, 4> kDefaultEpsilons{0.05, 0.1, 0.2, 0.3};
inline constexpr std::array<double, 3> kTaus{0.15, 0.20, 0.25};

struct AttackConfig {
    double epsilon = 0.1;
    std::size_t layer = Encoder::kPooledTap;
    std::size_t epochs = 300;
    double gen_lr = 1e-4;
    std::size_t refine_steps = 10;
    double refine_lr = 0.01;
    RefineRule refine_rule = RefineRule::signed_step;
    GenLossKind gen_loss = GenLossKind::remapped_cross_entropy;
    // Sources per generator update; the refined perturbations of a batch are
    // averaged into one target.
    std::size_t batch_size = 8;
    std::uint64_t seed = 1;

    // ConfigError unless epsilon > 0, epochs >= 1, refine_steps >= 1 and
    // batch_size >= 1.
    void validate() const;
};

// clip(I_g * eps + I_s) into [-1, 1].
Image perturb_compose(const Image& source, const Image& perturbation, double epsilon);
// Differentiable form; `perturbation` carries the graph back to the generator.
Tensor perturb_compose(const Tensor& source, const Tensor& perturbation, double epsilon);

// (1/m) * sum (v_t - v_gs)^2.
Tensor feature_loss(const Tensor& target, const Tensor& features);
double feature_loss(const FeatureVector& target, const FeatureVector& features);

struct RefineStats {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::size_t accepted_steps = 0;
};

// K descent steps on the pixels against feature_loss, clipped to [-1, 1]
// after each. A step that would not lower the loss is halved up to a fixed
// number of times; if none helps, refinement stops, so the loss never rises.
Image refine_image(const Encoder& encoder, const Image& start, const FeatureVector& target, std::size_t steps,
                   double lr, RefineRule rule = RefineRule::signed_step, RefineStats* stats = nullptr);

// clamp((I_s' - I_s) / eps, -1, 1).
Image extract_refined_perturbation(const Image& refined, const Image& source, double epsilon);

// Mean per-pixel loss between the generator output and the refined target.
Tensor generator_loss(const Tensor& perturbation, const Tensor& refined, GenLossKind kind);

struct TrainTrace {
    std::vector<double> feature_loss;    // per epoch, mean over sources before refinement
    std::vector<double> generator_loss;  // per epoch, mean over updates
};

// Mean of the last `window` entries over the first entry. A trace shorter
// than `window` uses all of it.
double windowed_ratio(std::span<const double> trace, std::size_t window);

// Trains `generator` in place for one (source set, target image) pair. The
// encoder is copied and frozen; the caller's encoder is never written.
TrainTrace train_generator_attack(Generator& generator, const Encoder& encoder, std::span<const Image> sources,
                                  const Image& target, const AttackConfig& cfg);

struct TrainedGenerator {
    Generator generator;
    models::NoiseSeed noise;
    std::size_t source_class = 0;
    std::size_t target_class = 0;
    Image target;
    AttackConfig config;
    TrainTrace trace;
};

// Builds the generator and noise from cfg.seed, then trains it.
TrainedGenerator train_class_generator(const Encoder& encoder, std::span<const Image> sources,
                                       std::size_t source_class, const Image& target, std::size_t target_class,
                                       const AttackConfig& cfg);

// Crafting phase: generator output composed onto the source. `epsilon` may be
// 0 for a null attack. ConfigError when the generator belongs to another class.
Image craft_adversarial(const TrainedGenerator& g, const Image& source, std::size_t source_class, double epsilon);

struct SuccessFlags {
    bool exact = false;
    std::array<bool, kTaus.size()> tau{};  // ordered as kTaus
};

struct AttackResult {
    Image adversarial;
    Image delta;
    double l2_norm = 0.0;
    double linf_norm = 0.0;
    models::Caption predicted;
    models::Caption target_caption;
    double meteor = 0.0;
    SuccessFlags success;
};

// Evaluation phase: decodes the adversarial and target images and scores them.
AttackResult evaluate_adversarial(const Encoder& encoder, const models::Decoder& decoder,
                                  const models::Vocabulary& vocab, const Image& source, const Image& adversarial,
                                  const Image& target, std::size_t layer = Encoder::kPooledTap);

AttackResult apply_attack(const TrainedGenerator& g, const Encoder& encoder, const models::Decoder& decoder,
                          const models::Vocabulary& vocab, const Image& source, std::size_t source_class,
                          double epsilon);

// Targeted I-FGSM on the class head: x <- proj(x - alpha * sign(grad xent)).
// DomainError when target_class is not a class of the head.
Image ifgsm_baseline(const Encoder& encoder, const Image& source, std::size_t target_class, double alpha,
                     std::size_t iters, double epsilon);

}  // namespace featfool::attacks
