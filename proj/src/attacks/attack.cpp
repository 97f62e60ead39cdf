#include "featfool/attacks/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "featfool/diffcore/adam.hpp"
#include "featfool/diffcore/ops.hpp"
#include "featfool/diffcore/random.hpp"
#include "featfool/errors.hpp"
#include "featfool/lexmetrics/metrics.hpp"

namespace featfool::attacks {

namespace dc = diffcore;

namespace {

constexpr std::size_t kMaxHalvings = 4;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;
constexpr std::uint64_t kGeneratorStream = 0x67656eULL;
constexpr std::uint64_t kShuffleStream = 0x736875ULL;

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": image shapes differ");
}

void require_epsilon(double epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be a finite value >= 0");
}

float clip_unit(double v) { return static_cast<float>(std::clamp(v, -1.0, 1.0)); }

double loss_at(const Encoder& encoder, const Tensor& target, const Image& img, std::size_t layer) {
    return feature_loss(target, encoder.tap(img.to_tensor(), layer)).item();
}

}  // namespace

const char* gen_loss_name(GenLossKind kind) {
    return kind == GenLossKind::squared_error ? "squared-error" : "remapped-cross-entropy";
}

GenLossKind parse_gen_loss(const std::string& name) {
    if (name == "remapped-cross-entropy") return GenLossKind::remapped_cross_entropy;
    if (name == "squared-error") return GenLossKind::squared_error;
    throw ConfigError("unknown generator loss '" + name + "'");
}

const char* refine_rule_name(RefineRule rule) { return rule == RefineRule::gradient ? "gradient" : "signed"; }

RefineRule parse_refine_rule(const std::string& name) {
    if (name == "signed") return RefineRule::signed_step;
    if (name == "gradient") return RefineRule::gradient;
    throw ConfigError("unknown refine rule '" + name + "'");
}

void AttackConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("attack epsilon must be > 0");
    if (epochs < 1) throw ConfigError("attack epochs must be >= 1");
    if (refine_steps < 1) throw ConfigError("refine_steps must be >= 1");
    if (batch_size < 1) throw ConfigError("attack batch_size must be >= 1");
    if (!(gen_lr >= 0.0) || !(refine_lr >= 0.0)) throw ConfigError("learning rates must be >= 0");
    if (layer >= Encoder::kTapCount) throw ConfigError("attack layer " + std::to_string(layer) + " is not a tap");
}

Image perturb_compose(const Image& source, const Image& perturbation, double epsilon) {
    require_same_shape(source, perturbation, "perturb_compose");
    require_epsilon(epsilon);
    std::vector<float> out(source.size());
    const auto s = source.values();
    const auto g = perturbation.values();
    const float e = static_cast<float>(epsilon);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(g[i] * e + s[i], -1.0f, 1.0f);
    return Image(source.channels(), source.height(), source.width(), std::move(out));
}

Tensor perturb_compose(const Tensor& source, const Tensor& perturbation, double epsilon) {
    if (source.shape() != perturbation.shape()) throw ShapeError("perturb_compose: tensor shapes differ");
    require_epsilon(epsilon);
    return dc::clamp(dc::add(dc::scale(perturbation, static_cast<float>(epsilon)), source), -1.0f, 1.0f);
}

Tensor feature_loss(const Tensor& target, const Tensor& features) {
    if (target.numel() != features.numel()) {
        throw ShapeError("feature_loss: widths " + std::to_string(target.numel()) + " and " +
                         std::to_string(features.numel()) + " differ");
    }
    const Tensor t = target.shape() == features.shape() ? target : dc::reshape(target, features.shape());
    const Tensor d = dc::sub(features, t);
    return dc::mean(dc::mul(d, d));
}

double feature_loss(const FeatureVector& target, const FeatureVector& features) {
    return feature_loss(target.to_tensor(), features.to_tensor()).item();
}

Image refine_image(const Encoder& encoder, const Image& start, const FeatureVector& target, std::size_t steps,
                   double lr, RefineRule rule, RefineStats* stats) {
    const Tensor t = target.to_tensor();
    const std::size_t layer = target.layer;
    Image x = start;
    RefineStats local;
    bool first = true;
    for (std::size_t k = 0; k < steps; ++k) {
        const Tensor xt = x.to_tensor(true);
        const Tensor loss = feature_loss(t, encoder.tap(xt, layer));
        const double current = loss.item();
        if (first) {
            local.initial_loss = current;
            local.final_loss = current;
            first = false;
        }
        dc::backward(loss);
        std::vector<float> dir(xt.grad().begin(), xt.grad().end());
        if (rule == RefineRule::signed_step) {
            for (auto& d : dir) d = d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f);
        }
        const auto base = x.values();
        double step = lr;
        bool accepted = false;
        for (std::size_t h = 0; h <= kMaxHalvings && step > 0.0; ++h, step *= 0.5) {
            std::vector<float> cand(base.size());
            for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = clip_unit(base[i] - step * dir[i]);
            Image next(x.channels(), x.height(), x.width(), std::move(cand));
            const double l = loss_at(encoder, t, next, layer);
            if (l < current) {
                x = std::move(next);
                local.final_loss = l;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        ++local.accepted_steps;
    }
    if (first) local.initial_loss = local.final_loss = loss_at(encoder, t, x, layer);
    if (stats) *stats = local;
    return x;
}

Image extract_refined_perturbation(const Image& refined, const Image& source, double epsilon) {
    require_same_shape(refined, source, "extract_refined_perturbation");
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be > 0 to invert the composition");
    std::vector<float> out(source.size());
    const auto r = refined.values();
    const auto s = source.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = clip_unit((static_cast<double>(r[i]) - s[i]) / epsilon);
    }
    return Image(source.channels(), source.height(), source.width(), std::move(out));
}

Tensor generator_loss(const Tensor& perturbation, const Tensor& refined, GenLossKind kind) {
    if (perturbation.shape() != refined.shape()) throw ShapeError("generator_loss: shapes differ");
    if (kind == GenLossKind::squared_error) {
        const Tensor d = dc::sub(perturbation, refined);
        return dc::mean(dc::mul(d, d));
    }
    if (kind != GenLossKind::remapped_cross_entropy) throw ConfigError("unknown generator loss kind");
    constexpr float kFloor = 1e-7f;
    const Tensor p = dc::scale(dc::add_scalar(perturbation, 1.0f), 0.5f);
    const Tensor q = dc::scale(dc::add_scalar(refined, 1.0f), 0.5f);
    const Tensor one_minus_p = dc::add_scalar(dc::scale(p, -1.0f), 1.0f);
    const Tensor one_minus_q = dc::add_scalar(dc::scale(q, -1.0f), 1.0f);
    const Tensor log_p = dc::log(dc::clamp(p, kFloor, 1.0f));
    const Tensor log_1p = dc::log(dc::clamp(one_minus_p, kFloor, 1.0f));
    const Tensor ll = dc::add(dc::mul(q, log_p), dc::mul(one_minus_q, log_1p));
    return dc::scale(dc::mean(ll), -1.0f);
}

double windowed_ratio(std::span<const double> trace, std::size_t window) {
    if (trace.empty()) throw DomainError("windowed_ratio of an empty trace");
    const std::size_t w = std::clamp<std::size_t>(window, 1, trace.size());
    const double tail = std::accumulate(trace.end() - static_cast<std::ptrdiff_t>(w), trace.end(), 0.0) /
                        static_cast<double>(w);
    return trace.front() > 0.0 ? tail / trace.front() : (tail > 0.0 ? INFINITY : 0.0);
}

TrainTrace train_generator_attack(Generator& generator, const Encoder& encoder, std::span<const Image> sources,
                                  const Image& target, const AttackConfig& cfg) {
    cfg.validate();
    if (sources.empty()) throw DomainError("train_generator_attack needs at least one source image");
    Encoder frozen = encoder.clone();
    frozen.set_trainable(false);
    const FeatureVector v_t = models::encoder_features(frozen, target, cfg.layer);
    const Tensor noise = models::NoiseSeed::sample(dc::derive_seed(cfg.seed, kNoiseStream)).to_tensor();

    auto& params = generator.parameters();
    models::set_trainable(params, true);
    dc::Adam<float> adam(models::tensors_of(params), dc::AdamOptions{cfg.gen_lr, 0.9, 0.999, 1e-8});

    std::vector<std::size_t> order(sources.size());
    std::iota(order.begin(), order.end(), 0);
    TrainTrace trace;
    trace.feature_loss.reserve(cfg.epochs);
    trace.generator_loss.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        dc::Rng rng(dc::derive_seed(dc::derive_seed(cfg.seed, kShuffleStream), epoch));
        rng.shuffle(std::span<std::size_t>(order));
        double feat_sum = 0.0;
        double gen_sum = 0.0;
        std::size_t updates = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const Tensor ig = generator.forward(noise);
            const Image ig_img = Image::from_tensor(ig.detach());
            std::vector<double> acc(ig_img.size(), 0.0);
            for (std::size_t k = start; k < end; ++k) {
                const Image& src = sources[order[k]];
                const Image composed = perturb_compose(src, ig_img, cfg.epsilon);
                RefineStats stats;
                const Image refined = refine_image(frozen, composed, v_t, cfg.refine_steps, cfg.refine_lr, cfg.refine_rule, &stats);
                feat_sum += stats.initial_loss;
                const Image ig_refined = extract_refined_perturbation(refined, src, cfg.epsilon);
                const auto r = ig_refined.values();
                for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += r[i];
            }
            std::vector<float> mean_target(acc.size());
            const double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t i = 0; i < acc.size(); ++i) mean_target[i] = static_cast<float>(acc[i] * inv);
            const Tensor goal = Tensor::from(ig.shape(), std::move(mean_target));
            const Tensor loss = generator_loss(ig, goal, cfg.gen_loss);
            gen_sum += loss.item();
            dc::backward(loss);
            adam.step();
            ++updates;
        }
        trace.feature_loss.push_back(feat_sum / static_cast<double>(sources.size()));
        trace.generator_loss.push_back(gen_sum / static_cast<double>(updates));
    }
    models::set_trainable(params, false);
    return trace;
}

TrainedGenerator train_class_generator(const Encoder& encoder, std::span<const Image> sources,
                                       std::size_t source_class, const Image& target, std::size_t target_class,
                                       const AttackConfig& cfg) {
    cfg.validate();
    TrainedGenerator out{Generator(models::GeneratorConfig{}, dc::derive_seed(cfg.seed, kGeneratorStream)),
                         models::NoiseSeed::sample(dc::derive_seed(cfg.seed, kNoiseStream)),
                         source_class,
                         target_class,
                         target,
                         cfg,
                         {}};
    out.trace = train_generator_attack(out.generator, encoder, sources, target, cfg);
    return out;
}

Image craft_adversarial(const TrainedGenerator& g, const Image& source, std::size_t source_class, double epsilon) {
    if (source_class != g.source_class) {
        throw ConfigError("generator was trained for class " + std::to_string(g.source_class) + ", source is class " +
                          std::to_string(source_class));
    }
    require_epsilon(epsilon);
    if (epsilon == 0.0) return source;
    return perturb_compose(source, models::generator_forward(g.generator, g.noise), epsilon);
}

AttackResult evaluate_adversarial(const Encoder& encoder, const models::Decoder& decoder,
                                  const models::Vocabulary& vocab, const Image& source, const Image& adversarial,
                                  const Image& target, std::size_t layer) {
    require_same_shape(source, adversarial, "evaluate_adversarial");
    AttackResult r;
    r.adversarial = adversarial;
    std::vector<float> delta(source.size());
    double l2 = 0.0;
    double linf = 0.0;
    const auto a = adversarial.values();
    const auto s = source.values();
    for (std::size_t i = 0; i < delta.size(); ++i) {
        delta[i] = a[i] - s[i];
        l2 += static_cast<double>(delta[i]) * delta[i];
        linf = std::max(linf, static_cast<double>(std::abs(delta[i])));
    }
    r.delta = Image(source.channels(), source.height(), source.width(), std::move(delta));
    r.l2_norm = std::sqrt(l2);
    r.linf_norm = linf;
    const std::size_t max_len = models::kDefaultMaxCaptionLength;
    r.predicted = models::decode_greedy(decoder, models::encoder_features(encoder, adversarial, layer), max_len);
    r.target_caption = models::decode_greedy(decoder, models::encoder_features(encoder, target, layer), max_len);
    const auto cand = lexmetrics::tokenize(r.predicted.text(vocab));
    const auto ref = lexmetrics::tokenize(r.target_caption.text(vocab));
    r.meteor = lexmetrics::meteor(cand, ref);
    r.success.exact = lexmetrics::exact_match(cand, ref);
    for (std::size_t i = 0; i < kTaus.size(); ++i) r.success.tau[i] = lexmetrics::success_at_tau(r.meteor, kTaus[i]);
    return r;
}

AttackResult apply_attack(const TrainedGenerator& g, const Encoder& encoder, const models::Decoder& decoder,
                          const models::Vocabulary& vocab, const Image& source, std::size_t source_class,
                          double epsilon) {
    const Image adversarial = craft_adversarial(g, source, source_class, epsilon);
    return evaluate_adversarial(encoder, decoder, vocab, source, adversarial, g.target, g.config.layer);
}

Image ifgsm_baseline(const Encoder& encoder, const Image& source, std::size_t target_class, double alpha,
                     std::size_t iters, double epsilon) {
    const std::size_t classes = encoder.config().classes;
    if (target_class >= classes) {
        throw DomainError("target class " + std::to_string(target_class) + " outside " + std::to_string(classes) +
                          " classes");
    }
    require_epsilon(epsilon);
    Encoder frozen = encoder.clone();
    frozen.set_trainable(false);
    const std::size_t targets[] = {target_class};
    const auto s = source.values();
    Image x = source;
    for (std::size_t k = 0; k < iters; ++k) {
        const Tensor xt = x.to_tensor(true);
        dc::backward(dc::softmax_xent(frozen.logits(xt), targets));
        const auto g = xt.grad();
        const auto cur = x.values();
        std::vector<float> next(cur.size());
        for (std::size_t i = 0; i < next.size(); ++i) {
            const double sign = g[i] > 0.0f ? 1.0 : (g[i] < 0.0f ? -1.0 : 0.0);
            const double stepped = cur[i] - alpha * sign;
            const double lo = std::max(-1.0, static_cast<double>(s[i]) - epsilon);
            const double hi = std::min(1.0, static_cast<double>(s[i]) + epsilon);
            next[i] = static_cast<float>(std::clamp(stepped, lo, hi));
        }
        x = Image(x.channels(), x.height(), x.width(), std::move(next));
    }
    return x;
}

}  // namespace featfool::attacks
