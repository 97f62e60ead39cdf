#include "featfool/harness/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

#include <json.hpp>

#include "featfool/errors.hpp"
#include "featfool/harness/checkpoint.hpp"
#include "featfool/scenekit/scene.hpp"

namespace featfool::harness {

namespace lm = lexmetrics;
using models::Caption;
using models::Image;
using scenekit::ManifestRecord;
using scenekit::Split;

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---- workspace ----

Workspace::Workspace(RunConfig cfg, std::ostream& log)
    : cfg_(std::move(cfg)), log_(log), vocab_(scenekit::caption_vocabulary()) {
    cfg_.validate();
    if (!fs::exists(cfg_.corpus / scenekit::kManifestName)) {
        scenekit::DatasetConfig dc{cfg_.train_size, cfg_.val_size, cfg_.test_size, cfg_.corpus_seed};
        log_ << "building corpus under " << cfg_.corpus << "\n";
        fs::create_directories(cfg_.corpus);
        scenekit::build_dataset(dc, cfg_.corpus);
    }
    corpus_ = scenekit::load_corpus(cfg_.corpus);
    for (const auto& dir : {models_dir(), results_dir(), reports_dir()}) fs::create_directories(dir);
}

fs::path Workspace::models_dir() const { return cfg_.out / "models"; }
fs::path Workspace::results_dir() const { return cfg_.out / "results"; }
fs::path Workspace::reports_dir() const { return cfg_.out / "reports"; }

const Image& Workspace::image(const ManifestRecord& r) const {
    static std::mutex mu;
    std::lock_guard lock(mu);
    auto it = images_.find(r.id);
    if (it == images_.end()) it = images_.emplace(r.id, scenekit::load_image(corpus_, r)).first;
    return it->second;
}

std::vector<const ManifestRecord*> Workspace::records(Split split) const { return corpus_.manifest.split(split); }

std::vector<const ManifestRecord*> Workspace::records(Split split, std::size_t cls) const {
    std::vector<const ManifestRecord*> out;
    for (const auto* r : records(split)) {
        if (r->class_label == cls) out.push_back(r);
    }
    return out;
}

const ManifestRecord& Workspace::record(const std::string& id) const {
    for (const auto& r : corpus_.manifest.records) {
        if (r.id == id) return r;
    }
    throw ConfigError("corpus has no record '" + id + "'");
}

// ---- captioner ----

namespace {

constexpr std::uint64_t kEncoderStream = 1;
constexpr std::uint64_t kDecoderStream = 2;
constexpr std::uint64_t kShuffleStream = 3;
constexpr std::uint64_t kTargetStream = 4;
constexpr std::uint64_t kSourceStream = 5;
constexpr std::uint64_t kCellStream = 6;
constexpr std::uint64_t kFeatureDecoderStream = 7;

double cosine_lr(double base, std::size_t epoch, std::size_t epochs) {
    return base * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(epochs)));
}

models::DecoderConfig decoder_config(const Workspace& ws, std::size_t state) {
    models::DecoderConfig dc;
    dc.vocab_size = ws.vocab().size();
    dc.state = state;
    return dc;
}

void add_decoder_meta(Checkpoint& ck, const std::string& name, const models::Decoder& d) {
    const auto& c = d.config();
    ck.add_meta(name, {double(c.vocab_size), double(c.embed), double(c.state), double(c.feature)});
}

models::Decoder decoder_from(const Checkpoint& ck, const std::string& meta, const std::string& prefix) {
    const auto m = ck.meta(meta);
    if (m.size() != 4) throw FormatError("decoder metadata '" + meta + "' must hold 4 values");
    models::DecoderConfig dc;
    dc.vocab_size = static_cast<std::size_t>(m[0]);
    dc.embed = static_cast<std::size_t>(m[1]);
    dc.state = static_cast<std::size_t>(m[2]);
    dc.feature = static_cast<std::size_t>(m[3]);
    models::Decoder d(dc, 0);
    ck.restore(prefix, d.parameters());
    d.set_trainable(false);
    return d;
}

// Decoders outside the joint training get seeds of their own, one per state
// size, so the ablation and transfer experiments share them.
std::uint64_t feature_decoder_seed(const RunConfig& cfg, std::size_t state) { return cfg.train_seed + 1000 + state; }

std::string caption_text(const Caption& c, const models::Vocabulary& v) { return c.text(v); }

}  // namespace

std::vector<models::CaptionSample> caption_samples(const Workspace& ws, Split split) {
    std::vector<models::CaptionSample> out;
    for (const auto* r : ws.records(split)) {
        out.push_back({ws.image(*r), Caption::encode(ws.vocab(), r->captions.at(0)), r->class_label});
    }
    return out;
}

CaptionerQuality evaluate_captioner(const Workspace& ws, const models::Encoder& encoder,
                                    const models::Decoder& decoder, Split split) {
    CaptionerQuality q;
    std::size_t exact = 0, cls = 0;
    for (const auto* r : ws.records(split)) {
        const Image& img = ws.image(*r);
        const auto f = models::encoder_features(encoder, img, models::Encoder::kPooledTap);
        const Caption c = models::decode_greedy(decoder, f, models::kDefaultMaxCaptionLength);
        exact += c == Caption::encode(ws.vocab(), r->captions.at(0));
        const auto logits = models::classifier_logits(encoder, img);
        cls += models::top_k(logits, 1)[0] == r->class_label;
        ++q.images;
    }
    if (q.images) {
        q.exact = double(exact) / double(q.images);
        q.classification = double(cls) / double(q.images);
    }
    return q;
}

Captioner train_captioner(const Workspace& ws) {
    const auto& cfg = ws.config();
    Captioner c{models::Encoder(models::EncoderConfig{}, diffcore::derive_seed(cfg.train_seed, kEncoderStream)),
                models::Decoder(decoder_config(ws, cfg.decoder_state), diffcore::derive_seed(cfg.train_seed, kDecoderStream))};
    const auto samples = caption_samples(ws, Split::train);
    models::CaptionerTrainer trainer(c.encoder, c.decoder, cfg.captioner_options());
    for (std::size_t e = 0; e < cfg.train_epochs; ++e) {
        trainer.set_lr(cosine_lr(cfg.train_lr, e, cfg.train_epochs));
        const double loss = trainer.epoch(samples, diffcore::derive_seed(diffcore::derive_seed(cfg.train_seed, kShuffleStream), e));
        if ((e + 1) % 10 == 0 || e + 1 == cfg.train_epochs) {
            ws.log() << "captioner epoch " << e + 1 << "/" << cfg.train_epochs << " loss " << loss << "\n";
        }
    }
    c.encoder.set_trainable(false);
    c.decoder.set_trainable(false);
    return c;
}

void save_captioner(const Captioner& c, const fs::path& path) {
    Checkpoint ck;
    ck.add("encoder.", c.encoder.parameters());
    ck.add("decoder.", c.decoder.parameters());
    add_decoder_meta(ck, "meta.decoder", c.decoder);
    save_checkpoint(ck, path);
}

Captioner load_captioner(const fs::path& path) {
    const Checkpoint ck = load_checkpoint(path);
    models::Encoder enc(models::EncoderConfig{}, 0);
    ck.restore("encoder.", enc.parameters());
    enc.set_trainable(false);
    return {std::move(enc), decoder_from(ck, "meta.decoder", "decoder.")};
}

Captioner ensure_captioner(const Workspace& ws) {
    const fs::path path = ws.models_dir() / "captioner.ffck";
    if (fs::exists(path)) return load_captioner(path);
    ws.log() << "training captioner\n";
    Captioner c = train_captioner(ws);
    save_captioner(c, path);
    return c;
}

void save_decoder(const models::Decoder& d, const fs::path& path) {
    Checkpoint ck;
    ck.add("decoder.", d.parameters());
    add_decoder_meta(ck, "meta.decoder", d);
    save_checkpoint(ck, path);
}

models::Decoder load_decoder(const fs::path& path) { return decoder_from(load_checkpoint(path), "meta.decoder", "decoder."); }

models::Decoder train_feature_decoder(const Workspace& ws, const models::Encoder& encoder, std::size_t state,
                                      std::uint64_t seed) {
    const auto& cfg = ws.config();
    std::vector<models::FeatureSample> samples;
    for (const auto* r : ws.records(Split::train)) {
        samples.push_back({models::encoder_features(encoder, ws.image(*r), models::Encoder::kPooledTap),
                           Caption::encode(ws.vocab(), r->captions.at(0))});
    }
    models::Decoder d(decoder_config(ws, state), diffcore::derive_seed(seed, kFeatureDecoderStream));
    auto opts = cfg.captioner_options();
    opts.lr = cfg.decoder_lr;
    models::DecoderTrainer trainer(d, opts);
    for (std::size_t e = 0; e < cfg.decoder_epochs; ++e) {
        trainer.set_lr(cosine_lr(cfg.decoder_lr, e, cfg.decoder_epochs));
        const double loss = trainer.epoch(samples, diffcore::derive_seed(diffcore::derive_seed(seed, kShuffleStream), e));
        if ((e + 1) % 10 == 0 || e + 1 == cfg.decoder_epochs) {
            ws.log() << "decoder(" << state << ") epoch " << e + 1 << "/" << cfg.decoder_epochs << " loss " << loss
                     << "\n";
        }
    }
    d.set_trainable(false);
    return d;
}

models::Decoder ensure_feature_decoder(const Workspace& ws, const models::Encoder& encoder, std::size_t state,
                                       std::uint64_t seed) {
    const fs::path path = ws.models_dir() / ("decoder_ss" + std::to_string(state) + "_seed" + std::to_string(seed) + ".ffck");
    if (fs::exists(path)) return load_decoder(path);
    ws.log() << "training decoder with state " << state << " on frozen features\n";
    models::Decoder d = train_feature_decoder(ws, encoder, state, seed);
    save_decoder(d, path);
    return d;
}

// ---- attack artifacts ----

TargetChoice choose_target(const Workspace& ws, std::uint64_t seed) {
    const std::size_t cls = ws.config().target_class;
    const auto pool = ws.records(Split::train, cls);
    if (pool.empty()) throw ConfigError("train split has no image of target class " + std::to_string(cls));
    diffcore::Rng rng(diffcore::derive_seed(seed, kTargetStream));
    const ManifestRecord* r = pool[rng.below(pool.size())];
    return {r->id, cls, ws.image(*r)};
}

std::vector<std::size_t> source_classes(const Workspace& ws) {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < scenekit::kShapeCount; ++c) {
        if (c != ws.config().target_class) out.push_back(c);
    }
    return out;
}

namespace {

std::string eps_tag(double eps) {
    std::string s = fmt4(eps);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

fs::path generator_path(const Workspace& ws, const GeneratorCell& cell, const std::string& target_id) {
    return ws.models_dir() / ("gen_seed" + std::to_string(cell.seed) + "_" + target_id + "_c" +
                              std::to_string(cell.source_class) + "_e" + eps_tag(cell.epsilon) + ".ffck");
}

std::uint64_t cell_seed(const GeneratorCell& cell) {
    const auto bits = static_cast<std::uint64_t>(std::llround(cell.epsilon * 1e6));
    return diffcore::derive_seed(diffcore::derive_seed(diffcore::derive_seed(cell.seed, kCellStream), cell.source_class), bits);
}

void save_generator(const GeneratorArtifact& g, const fs::path& path) {
    Checkpoint ck;
    ck.add("generator.", g.trained.generator.parameters());
    const auto noise = g.trained.noise.values();
    ck.add_meta("meta.noise", std::vector<double>(noise.begin(), noise.end()));
    save_checkpoint(ck, path);

    nlohmann::json side;
    side["target_id"] = g.target_id;
    side["source_ids"] = g.source_ids;
    side["source_class"] = g.trained.source_class;
    side["target_class"] = g.trained.target_class;
    side["epsilon"] = g.trained.config.epsilon;
    side["seed"] = g.trained.config.seed;
    side["feature_loss"] = g.trained.trace.feature_loss;
    side["generator_loss"] = g.trained.trace.generator_loss;
    fs::path sp = path;
    sp.replace_extension(".json");
    write_text(sp, side.dump(1) + "\n");
}

GeneratorArtifact load_generator(const Workspace& ws, const fs::path& path, const TargetChoice& target,
                                 const attacks::AttackConfig& acfg) {
    const Checkpoint ck = load_checkpoint(path);
    models::Generator gen(models::GeneratorConfig{}, 0);
    ck.restore("generator.", gen.parameters());
    const auto nv = ck.meta("meta.noise");
    auto noise = models::NoiseSeed::from_values(std::vector<float>(nv.begin(), nv.end()));
    fs::path sp = path;
    sp.replace_extension(".json");
    const auto side = nlohmann::json::parse(read_text(sp));
    attacks::TrainTrace trace{side["feature_loss"].get<std::vector<double>>(),
                              side["generator_loss"].get<std::vector<double>>()};
    GeneratorArtifact g{attacks::TrainedGenerator{std::move(gen), std::move(noise), side["source_class"].get<std::size_t>(),
                                                  target.cls, target.image, acfg, std::move(trace)},
                        side["target_id"].get<std::string>(), side["source_ids"].get<std::vector<std::string>>(), 0.0};
    if (g.target_id != target.id) throw ConfigError("generator " + path.string() + " was trained for another target");
    (void)ws;
    return g;
}

}  // namespace

std::vector<GeneratorArtifact> ensure_generators(const Workspace& ws, const models::Encoder& encoder,
                                                 const TargetChoice& target, const std::vector<GeneratorCell>& cells) {
    const auto& cfg = ws.config();
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!fs::exists(generator_path(ws, cells[i], target.id))) missing.push_back(i);
    }
    // Images are loaded up front so jobs only read shared state.
    for (const auto* r : ws.records(Split::train)) ws.image(*r);

    std::mutex log_mu;
    std::vector<double> seconds(cells.size(), 0.0);
    parallel_for(missing.size(), cfg.jobs, [&](std::size_t k) {
        const GeneratorCell& cell = cells[missing[k]];
        auto pool = ws.records(Split::train, cell.source_class);
        diffcore::Rng rng(diffcore::derive_seed(cell_seed(cell), kSourceStream));
        rng.shuffle(std::span<const ManifestRecord*>(pool));
        pool.resize(std::min(pool.size(), cfg.gen_sources));
        std::vector<Image> sources;
        std::vector<std::string> ids;
        for (const auto* r : pool) {
            sources.push_back(ws.image(*r));
            ids.push_back(r->id);
        }
        const auto acfg = cfg.attack_config(cell.epsilon, cell_seed(cell));
        const models::Encoder local = encoder.clone();
        const auto t0 = std::chrono::steady_clock::now();
        auto trained = attacks::train_class_generator(local, sources, cell.source_class, target.image, target.cls, acfg);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        seconds[missing[k]] = secs;
        GeneratorArtifact art{std::move(trained), target.id, std::move(ids), secs};
        save_generator(art, generator_path(ws, cell, target.id));
        std::lock_guard lock(log_mu);
        const auto& fl = art.trained.trace.feature_loss;
        ws.log() << "generator seed " << cell.seed << " class " << cell.source_class << " eps " << cell.epsilon
                 << ": feature loss " << fl.front() << " -> " << fl.back() << " in " << secs << "s\n";
    });

    std::vector<GeneratorArtifact> out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& cell = cells[i];
        out.push_back(load_generator(ws, generator_path(ws, cell, target.id), target,
                                     cfg.attack_config(cell.epsilon, cell_seed(cell))));
        out.back().train_seconds = seconds[i];
    }
    return out;
}

// ---- records ----

namespace {

nlohmann::ordered_json record_json(const ExampleRecord& r) {
    nlohmann::ordered_json j;
    j["experiment"] = r.experiment;
    j["method"] = r.method;
    j["decoder"] = r.decoder;
    j["seed"] = r.seed;
    j["epsilon"] = r.epsilon;
    j["source_id"] = r.source_id;
    j["source_class"] = r.source_class;
    j["target_id"] = r.target_id;
    j["l2"] = r.l2;
    j["linf"] = r.linf;
    j["pre_clip_linf"] = r.pre_clip_linf;
    j["in_range"] = r.in_range;
    j["meteor"] = r.meteor;
    j["exact"] = r.exact;
    j["tau"] = r.tau;
    j["predicted"] = r.predicted;
    j["target_caption"] = r.target_caption;
    return j;
}

}  // namespace

std::string to_jsonl(const std::vector<ExampleRecord>& records) {
    std::string out;
    for (const auto& r : records) out += record_json(r).dump() + "\n";
    return out;
}

std::vector<ExampleRecord> parse_jsonl(const std::string& text) {
    std::vector<ExampleRecord> out;
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        const std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ExampleRecord r;
            r.experiment = j.at("experiment");
            r.method = j.at("method");
            r.decoder = j.at("decoder");
            r.seed = j.at("seed");
            r.epsilon = j.at("epsilon");
            r.source_id = j.at("source_id");
            r.source_class = j.at("source_class");
            r.target_id = j.at("target_id");
            r.l2 = j.at("l2");
            r.linf = j.at("linf");
            r.pre_clip_linf = j.at("pre_clip_linf");
            r.in_range = j.at("in_range");
            r.meteor = j.at("meteor");
            r.exact = j.at("exact");
            r.tau = j.at("tau");
            r.predicted = j.at("predicted");
            r.target_caption = j.at("target_caption");
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("result record on line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_records(const fs::path& path, const std::vector<ExampleRecord>& records) { write_text(path, to_jsonl(records)); }

std::vector<ExampleRecord> read_records(const fs::path& path) { return parse_jsonl(read_text(path)); }

// ---- sweep ----

namespace {

ExampleRecord make_record(const std::string& experiment, const std::string& method, const std::string& decoder,
                          std::uint64_t seed, double eps, const ManifestRecord& src, const std::string& target_id,
                          const attacks::AttackResult& res, const models::Vocabulary& vocab, double pre_clip_linf) {
    ExampleRecord r;
    r.experiment = experiment;
    r.method = method;
    r.decoder = decoder;
    r.seed = seed;
    r.epsilon = eps;
    r.source_id = src.id;
    r.source_class = src.class_label;
    r.target_id = target_id;
    r.l2 = res.l2_norm;
    r.linf = res.linf_norm;
    r.pre_clip_linf = pre_clip_linf;
    const auto v = res.adversarial.values();
    r.in_range = std::all_of(v.begin(), v.end(), [](float x) { return x >= -1.0f && x <= 1.0f; });
    r.meteor = res.meteor;
    r.exact = res.success.exact;
    r.tau = res.success.tau;
    r.predicted = caption_text(res.predicted, vocab);
    r.target_caption = caption_text(res.target_caption, vocab);
    return r;
}

double max_abs(const Image& img) {
    double m = 0.0;
    for (float x : img.values()) m = std::max(m, double(std::abs(x)));
    return m;
}

std::uint64_t decoder_evals(const std::vector<const models::Decoder*>& decoders) {
    std::uint64_t n = 0;
    for (const auto* d : decoders) n += d->evaluations();
    return n;
}

std::size_t tau_index(double tau) {
    for (std::size_t i = 0; i < attacks::kTaus.size(); ++i) {
        if (std::abs(attacks::kTaus[i] - tau) < 1e-12) return i;
    }
    throw ConfigError("tau " + std::to_string(tau) + " is not a supported threshold");
}

bool same_eps(double a, double b) { return std::abs(a - b) < 1e-12; }

struct Crafted {
    Image adversarial;
    double pre_clip_linf;
};

// Crafting for every (generator, source image) pair; touches no decoder.
std::vector<Crafted> craft_all(const std::vector<const GeneratorArtifact*>& gens,
                               const std::vector<std::vector<const ManifestRecord*>>& sources, const Workspace& ws,
                               double eps) {
    std::vector<Crafted> out;
    for (std::size_t g = 0; g < gens.size(); ++g) {
        const auto& tg = gens[g]->trained;
        const double pre = max_abs(models::generator_forward(tg.generator, tg.noise)) * eps;
        for (const auto* r : sources[g]) {
            out.push_back({attacks::craft_adversarial(tg, ws.image(*r), r->class_label, eps), pre});
        }
    }
    return out;
}

}  // namespace

Table sweep_table(const std::vector<ExampleRecord>& records, const std::vector<double>& eps,
                  const std::vector<double>& taus) {
    Table t;
    t.title = "Attack accuracy (%) and mean l2 of successful perturbations";
    t.columns = {"criterion"};
    for (double e : eps) {
        t.columns.push_back("eps=" + fmt4(e) + " acc%");
        t.columns.push_back("eps=" + fmt4(e) + " l2");
    }
    std::vector<std::string> names{"exact"};
    for (double tau : taus) names.push_back("tau=" + fmt4(tau));
    for (std::size_t row = 0; row < names.size(); ++row) {
        std::vector<std::string> cells{names[row]};
        for (double e : eps) {
            std::size_t n = 0, ok = 0;
            double l2 = 0.0;
            for (const auto& r : records) {
                if (!same_eps(r.epsilon, e)) continue;
                ++n;
                const bool s = row == 0 ? r.exact : r.tau[tau_index(taus[row - 1])];
                if (s) {
                    ++ok;
                    l2 += r.l2;
                }
            }
            cells.push_back(fmt4(n ? 100.0 * double(ok) / double(n) : 0.0));
            cells.push_back(ok ? fmt4(l2 / double(ok)) : "nan");
        }
        t.add_row(std::move(cells));
    }
    return t;
}

SweepResult run_epsilon_sweep(const Workspace& ws, const Captioner& captioner) {
    const auto& cfg = ws.config();
    SweepResult res;
    const TargetChoice target = choose_target(ws, cfg.attack_seed);
    const auto classes = source_classes(ws);
    std::vector<GeneratorCell> cells;
    for (double e : cfg.eps) {
        for (auto c : classes) cells.push_back({cfg.attack_seed, c, e});
    }
    const std::uint64_t evals_before = captioner.decoder.evaluations();
    res.generators = ensure_generators(ws, captioner.encoder, target, cells);
    res.crafting_decoder_evaluations = captioner.decoder.evaluations() - evals_before;

    std::vector<std::vector<const ManifestRecord*>> sources;
    for (auto c : classes) sources.push_back(ws.records(Split::val, c));
    std::size_t gi = 0;
    for (double e : cfg.eps) {
        std::vector<const GeneratorArtifact*> gens;
        for (std::size_t k = 0; k < classes.size(); ++k) gens.push_back(&res.generators[gi++]);
        const std::uint64_t before = captioner.decoder.evaluations();
        const auto crafted = craft_all(gens, sources, ws, e);
        res.crafting_decoder_evaluations += captioner.decoder.evaluations() - before;
        std::size_t idx = 0;
        for (std::size_t k = 0; k < classes.size(); ++k) {
            for (const auto* r : sources[k]) {
                const auto& c = crafted[idx++];
                const auto ar = attacks::evaluate_adversarial(captioner.encoder, captioner.decoder, ws.vocab(),
                                                              ws.image(*r), c.adversarial, target.image, cfg.layer);
                auto rec = make_record("sweep", "internal-layer", "seen", cfg.attack_seed, e, *r, target.id, ar,
                                       ws.vocab(), c.pre_clip_linf);
                if (!rec.in_range || rec.pre_clip_linf > e + 1e-6 || rec.linf > e + 1e-6) ++res.budget_violations;
                res.records.push_back(std::move(rec));
            }
        }
    }
    res.table = sweep_table(res.records, cfg.eps, cfg.taus);
    res.table.title += " (seed " + std::to_string(cfg.attack_seed) + ", target " + target.id + ")";
    write_records(ws.results_dir() / "sweep.jsonl", res.records);
    emit_all(res.table, ws.reports_dir() / "sweep");
    return res;
}

// ---- keywords ----

std::vector<std::string> target_keywords(const models::Encoder& encoder, const Image& target,
                                         const std::string& target_caption) {
    const auto logits = models::classifier_logits(encoder, target);
    return lm::select_keywords(models::top_k(logits, 3), scenekit::class_lexicon(), lm::tokenize(target_caption));
}

Table keyword_table(const std::vector<ExampleRecord>& records, const std::vector<double>& eps,
                    const std::vector<std::string>& keywords) {
    Table t;
    t.title = "Partial success among failed attacks (tau=0.15)";
    std::string kw;
    for (const auto& k : keywords) kw += (kw.empty() ? "" : " ") + k;
    t.title += ", keywords: " + (kw.empty() ? std::string("none") : kw);
    t.columns = {"epsilon", "failed", "status", "1-keyword %", "2-keyword %", "3-keyword %", "avg l2",
                 "1-keyword l2", "2-keyword l2", "3-keyword l2"};
    const std::size_t t15 = tau_index(0.15);
    for (double e : eps) {
        std::size_t failed = 0;
        double l2_all = 0.0;
        std::array<std::size_t, 3> hits{};
        std::array<double, 3> l2{};
        for (const auto& r : records) {
            if (!same_eps(r.epsilon, e) || r.tau[t15]) continue;
            ++failed;
            l2_all += r.l2;
            const auto pred = lm::tokenize(r.predicted);
            for (std::size_t k = 1; k <= 3; ++k) {
                if (lm::keyword_success(pred, keywords, k)) {
                    ++hits[k - 1];
                    l2[k - 1] += r.l2;
                }
            }
        }
        std::vector<std::string> row{fmt4(e), std::to_string(failed), failed ? "ok" : "empty"};
        for (std::size_t k = 0; k < 3; ++k) row.push_back(fmt4(failed ? 100.0 * double(hits[k]) / double(failed) : 0.0));
        row.push_back(failed ? fmt4(l2_all / double(failed)) : "nan");
        for (std::size_t k = 0; k < 3; ++k) row.push_back(hits[k] ? fmt4(l2[k] / double(hits[k])) : "nan");
        t.add_row(std::move(row));
    }
    return t;
}

Table run_keyword_analysis(const Workspace& ws, const Captioner& captioner,
                           const std::vector<ExampleRecord>& sweep_records) {
    const TargetChoice target = choose_target(ws, ws.config().attack_seed);
    const auto f = models::encoder_features(captioner.encoder, target.image, models::Encoder::kPooledTap);
    const std::string tcap = caption_text(models::decode_greedy(captioner.decoder, f, models::kDefaultMaxCaptionLength), ws.vocab());
    Table t = keyword_table(sweep_records, ws.config().eps, target_keywords(captioner.encoder, target.image, tcap));
    emit_all(t, ws.reports_dir() / "keywords");
    return t;
}

// ---- ablation ----

namespace {

struct MetricContext {
    lm::CiderScorer cider;
    lm::CaptionGrammar grammar = lm::CaptionGrammar::scenes();
};

std::map<std::string, std::vector<lm::TokenSeq>> reference_map(const Workspace& ws, Split split) {
    std::map<std::string, std::vector<lm::TokenSeq>> refs;
    for (const auto* r : ws.records(split)) {
        for (const auto& c : r->captions) refs[r->id].push_back(lm::tokenize(c));
    }
    return refs;
}

std::array<double, kMetricNames.size()> mean_metrics(const std::vector<std::pair<std::string, std::string>>& preds,
                                                     const std::map<std::string, std::vector<lm::TokenSeq>>& refs,
                                                     const MetricContext& ctx) {
    std::array<double, kMetricNames.size()> m{};
    for (const auto& [id, text] : preds) {
        const auto rep = lm::score_pair(id, lm::tokenize(text), refs.at(id), ctx.cider, ctx.grammar);
        for (std::size_t k = 0; k < 4; ++k) m[k] += rep.bleu[k];
        m[4] += rep.meteor;
        m[5] += rep.cider;
        m[6] += rep.rouge_l;
        m[7] += rep.spice_f1;
    }
    for (auto& v : m) v /= preds.empty() ? 1.0 : double(preds.size());
    return m;
}

}  // namespace

AblationResult run_statesize_ablation(const Workspace& ws, const Captioner& captioner) {
    const auto& cfg = ws.config();
    AblationResult res;
    res.states = cfg.ablation_states;
    const TargetChoice target = choose_target(ws, cfg.attack_seed);
    const auto classes = source_classes(ws);
    std::vector<GeneratorCell> cells;
    for (double e : cfg.eps) {
        for (auto c : classes) cells.push_back({cfg.attack_seed, c, e});
    }
    const auto gens = ensure_generators(ws, captioner.encoder, target, cells);
    std::vector<std::vector<const ManifestRecord*>> sources;
    for (auto c : classes) sources.push_back(ws.records(Split::val, c));

    // Inputs per row: clean images, then the crafted images of each epsilon.
    std::vector<std::vector<Image>> inputs(1);
    std::vector<const ManifestRecord*> order;
    for (const auto& s : sources) {
        for (const auto* r : s) {
            order.push_back(r);
            inputs[0].push_back(ws.image(*r));
        }
    }
    std::size_t gi = 0;
    for (double e : cfg.eps) {
        std::vector<const GeneratorArtifact*> g;
        for (std::size_t k = 0; k < classes.size(); ++k) g.push_back(&gens[gi++]);
        std::vector<Image> row;
        for (auto& c : craft_all(g, sources, ws, e)) row.push_back(std::move(c.adversarial));
        inputs.push_back(std::move(row));
    }

    const auto refs = reference_map(ws, Split::val);
    const MetricContext ctx{lm::CiderScorer(refs)};
    for (std::size_t v = 0; v < res.states.size(); ++v) {
        const auto dec = ensure_feature_decoder(ws, captioner.encoder, res.states[v], feature_decoder_seed(cfg, res.states[v]));
        std::vector<std::array<double, kMetricNames.size()>> rows;
        for (const auto& imgs : inputs) {
            std::vector<std::pair<std::string, std::string>> preds;
            for (std::size_t i = 0; i < imgs.size(); ++i) {
                const auto f = models::encoder_features(captioner.encoder, imgs[i], models::Encoder::kPooledTap);
                preds.emplace_back(order[i]->id, caption_text(models::decode_greedy(dec, f, models::kDefaultMaxCaptionLength), ws.vocab()));
            }
            rows.push_back(mean_metrics(preds, refs, ctx));
        }
        res.metrics.push_back(std::move(rows));
    }

    res.table.title = "Caption metrics on clean and attacked validation images per decoder state size";
    res.table.columns = {"setting"};
    for (auto s : res.states) {
        for (const char* m : kMetricNames) res.table.columns.push_back("SS" + std::to_string(s) + " " + m);
    }
    for (std::size_t row = 0; row < inputs.size(); ++row) {
        std::vector<std::string> cells{row == 0 ? std::string("clean") : "eps=" + fmt4(cfg.eps[row - 1])};
        for (const auto& variant : res.metrics) {
            for (double x : variant[row]) cells.push_back(fmt4(x));
        }
        res.table.add_row(std::move(cells));
    }
    emit_all(res.table, ws.reports_dir() / "ablation_statesize");
    return res;
}

// ---- baseline ----

BaselineResult run_baseline_comparison(const Workspace& ws, const Captioner& captioner) {
    const auto& cfg = ws.config();
    BaselineResult res;
    const double eps = cfg.baseline_eps;
    const auto classes = source_classes(ws);
    const std::size_t t15 = tau_index(0.15);
    res.table.title = "Internal-layer attack vs I-FGSM on the class head at eps=" + fmt4(eps);
    res.table.columns = {"seed", "method", "images", "exact %", "tau=0.15 %", "mean l2 (tau=0.15 successes)", "mean l2 (all)"};
    for (std::size_t s = 0; s < cfg.baseline_seeds; ++s) {
        const std::uint64_t seed = cfg.attack_seed + s;
        const TargetChoice target = choose_target(ws, seed);
        std::vector<GeneratorCell> cells;
        for (auto c : classes) cells.push_back({seed, c, eps});
        const auto gens = ensure_generators(ws, captioner.encoder, target, cells);
        std::vector<ExampleRecord> internal, ifgsm;
        for (std::size_t k = 0; k < classes.size(); ++k) {
            const auto& tg = gens[k].trained;
            const double pre = max_abs(models::generator_forward(tg.generator, tg.noise)) * eps;
            for (const auto* r : ws.records(Split::val, classes[k])) {
                const Image& src = ws.image(*r);
                const Image adv = attacks::craft_adversarial(tg, src, r->class_label, eps);
                internal.push_back(make_record("baseline", "internal-layer", "seen", seed, eps, *r, target.id,
                                               attacks::evaluate_adversarial(captioner.encoder, captioner.decoder,
                                                                             ws.vocab(), src, adv, target.image, cfg.layer),
                                               ws.vocab(), pre));
                const Image adv2 = attacks::ifgsm_baseline(captioner.encoder, src, target.cls, eps / 10.0, cfg.ifgsm_iters, eps);
                ifgsm.push_back(make_record("baseline", "i-fgsm", "seen", seed, eps, *r, target.id,
                                            attacks::evaluate_adversarial(captioner.encoder, captioner.decoder,
                                                                          ws.vocab(), src, adv2, target.image, cfg.layer),
                                            ws.vocab(), eps));
            }
        }
        std::array<double, 2> rates{};
        std::size_t mi = 0;
        for (auto* set : {&internal, &ifgsm}) {
            std::size_t ex = 0, ok = 0;
            double l2_ok = 0.0, l2_all = 0.0;
            for (const auto& r : *set) {
                ex += r.exact;
                l2_all += r.l2;
                if (r.tau[t15]) {
                    ++ok;
                    l2_ok += r.l2;
                }
            }
            const double n = double(set->size());
            rates[mi++] = n ? double(ok) / n : 0.0;
            res.table.add_row({std::to_string(seed), set->front().method, std::to_string(set->size()),
                               fmt4(n ? 100.0 * double(ex) / n : 0.0), fmt4(n ? 100.0 * double(ok) / n : 0.0),
                               ok ? fmt4(l2_ok / double(ok)) : "nan", fmt4(n ? l2_all / n : 0.0)});
            res.records.insert(res.records.end(), set->begin(), set->end());
        }
        res.tau15.push_back(rates);
    }
    write_records(ws.results_dir() / "baseline.jsonl", res.records);
    emit_all(res.table, ws.reports_dir() / "baseline");
    return res;
}

// ---- transfer ----

TransferResult run_graybox_transfer(const Workspace& ws, const Captioner& captioner) {
    const auto& cfg = ws.config();
    TransferResult res;
    const double eps = cfg.transfer_eps;
    const TargetChoice target = choose_target(ws, cfg.attack_seed);
    const auto classes = source_classes(ws);

    struct Named {
        std::string name;
        const models::Decoder* decoder;
    };
    const auto unseen64 = ensure_feature_decoder(ws, captioner.encoder, 64, feature_decoder_seed(cfg, 64));
    const auto unseen256 = ensure_feature_decoder(ws, captioner.encoder, 256, feature_decoder_seed(cfg, 256));
    const std::vector<Named> decoders{{"seen", &captioner.decoder}, {"unseen-64", &unseen64}, {"unseen-256", &unseen256}};
    std::vector<const models::Decoder*> all;
    for (const auto& d : decoders) all.push_back(d.decoder);

    // Crafting: generator training (when not cached) and composition.
    const std::uint64_t before = decoder_evals(all);
    std::vector<GeneratorCell> cells;
    for (auto c : classes) cells.push_back({cfg.attack_seed, c, eps});
    const auto gens = ensure_generators(ws, captioner.encoder, target, cells);
    std::vector<std::vector<const ManifestRecord*>> sources;
    std::vector<const GeneratorArtifact*> gp;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        sources.push_back(ws.records(Split::val, classes[k]));
        gp.push_back(&gens[k]);
    }
    const auto crafted = craft_all(gp, sources, ws, eps);
    res.crafting_decoder_evaluations = decoder_evals(all) - before;

    const std::size_t t15 = tau_index(0.15);
    res.table.title = "Gray-box transfer across decoders sharing the encoder, eps=" + fmt4(eps);
    res.table.columns = {"decoder", "state", "images", "tau=0.15 %", "control tau=0.15 %", "exact %", "crafting decoder evaluations"};
    for (const auto& d : decoders) {
        std::size_t ok = 0, ctrl = 0, ex = 0, idx = 0;
        for (std::size_t k = 0; k < classes.size(); ++k) {
            for (const auto* r : sources[k]) {
                const auto& c = crafted[idx++];
                const Image& src = ws.image(*r);
                const auto ar = attacks::evaluate_adversarial(captioner.encoder, *d.decoder, ws.vocab(), src,
                                                              c.adversarial, target.image, cfg.layer);
                const auto ar0 = attacks::evaluate_adversarial(captioner.encoder, *d.decoder, ws.vocab(), src, src,
                                                               target.image, cfg.layer);
                ok += ar.success.tau[t15];
                ctrl += ar0.success.tau[t15];
                ex += ar.success.exact;
                res.records.push_back(make_record("transfer", "internal-layer", d.name, cfg.attack_seed, eps, *r,
                                                  target.id, ar, ws.vocab(), c.pre_clip_linf));
                res.records.push_back(make_record("transfer", "control", d.name, cfg.attack_seed, 0.0, *r, target.id,
                                                  ar0, ws.vocab(), 0.0));
            }
        }
        const double n = double(idx);
        res.tau15.push_back({ok / n, ctrl / n});
        res.table.add_row({d.name, std::to_string(d.decoder->config().state), std::to_string(idx),
                           fmt4(100.0 * ok / n), fmt4(100.0 * ctrl / n), fmt4(100.0 * ex / n),
                           std::to_string(res.crafting_decoder_evaluations)});
    }
    write_records(ws.results_dir() / "transfer.jsonl", res.records);
    emit_all(res.table, ws.reports_dir() / "transfer");
    return res;
}

// ---- contamination ----

Table contamination_table(const Workspace& ws) {
    std::set<std::string> used;
    for (const auto* r : ws.records(Split::train)) used.insert(r->id);
    for (const auto& entry : fs::directory_iterator(ws.models_dir())) {
        if (entry.path().extension() != ".json") continue;
        const auto side = nlohmann::json::parse(read_text(entry.path()));
        used.insert(side["target_id"].get<std::string>());
        for (const auto& id : side["source_ids"]) used.insert(id.get<std::string>());
    }
    Table t;
    t.title = "Training ids intersected with held-out splits";
    t.columns = {"split", "held-out ids", "training ids", "intersection"};
    for (Split s : {Split::val, Split::test}) {
        std::size_t hit = 0;
        const auto recs = ws.records(s);
        for (const auto* r : recs) hit += used.count(r->id);
        t.add_row({scenekit::split_name(s), std::to_string(recs.size()), std::to_string(used.size()), std::to_string(hit)});
    }
    emit_all(t, ws.reports_dir() / "contamination");
    return t;
}

// ---- offline rebuild ----

std::vector<std::string> rebuild_reports(const Workspace& ws) {
    std::vector<std::string> done;
    const auto& cfg = ws.config();
    const fs::path sweep = ws.results_dir() / "sweep.jsonl";
    if (fs::exists(sweep)) {
        const auto records = read_records(sweep);
        Table t = sweep_table(records, cfg.eps, cfg.taus);
        if (!records.empty()) {
            t.title += " (seed " + std::to_string(records.front().seed) + ", target " + records.front().target_id + ")";
        }
        emit_all(t, ws.reports_dir() / "sweep");
        done.push_back("sweep");
        if (!records.empty()) {
            const auto& first = records.front();
            const Captioner c = load_captioner(ws.models_dir() / "captioner.ffck");
            const Table k = keyword_table(records, cfg.eps,
                                          target_keywords(c.encoder, ws.image(ws.record(first.target_id)), first.target_caption));
            emit_all(k, ws.reports_dir() / "keywords");
            done.push_back("keywords");
        }
    }
    return done;
}

}  // namespace featfool::harness
