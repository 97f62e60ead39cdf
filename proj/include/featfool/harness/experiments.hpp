#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "featfool/attacks/attack.hpp"
#include "featfool/harness/config.hpp"
#include "featfool/harness/report.hpp"
#include "featfool/lexmetrics/metrics.hpp"
#include "featfool/models/captioner.hpp"
#include "featfool/scenekit/dataset.hpp"

namespace featfool::harness {

namespace fs = std::filesystem;

// Runs fn(0..n-1) on up to `jobs` threads. Results must be written by index;
// the first exception by index is rethrown after every job has finished.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

// Shared state of one run: configuration, corpus and the artifact layout
//   <out>/models   checkpoints and generator sidecars
//   <out>/results  per-example records, one JSON object per line
//   <out>/reports  CSV and markdown tables
class Workspace {
   public:
    // Builds the corpus under cfg.corpus when no manifest exists there.
    Workspace(RunConfig cfg, std::ostream& log);

    const RunConfig& config() const { return cfg_; }
    const scenekit::Corpus& corpus() const { return corpus_; }
    const models::Vocabulary& vocab() const { return vocab_; }
    std::ostream& log() const { return log_; }

    fs::path models_dir() const;
    fs::path results_dir() const;
    fs::path reports_dir() const;

    // Cached by record id.
    const models::Image& image(const scenekit::ManifestRecord& r) const;
    std::vector<const scenekit::ManifestRecord*> records(scenekit::Split split) const;
    std::vector<const scenekit::ManifestRecord*> records(scenekit::Split split, std::size_t cls) const;
    const scenekit::ManifestRecord& record(const std::string& id) const;

   private:
    RunConfig cfg_;
    std::ostream& log_;
    scenekit::Corpus corpus_;
    models::Vocabulary vocab_;
    mutable std::map<std::string, models::Image> images_;
};

// ---- captioner ----

struct Captioner {
    models::Encoder encoder;
    models::Decoder decoder;
};

struct CaptionerQuality {
    double exact = 0.0;           // greedy caption equals the canonical reference
    double classification = 0.0;  // top-1 of the encoder head
    std::size_t images = 0;
};

std::vector<models::CaptionSample> caption_samples(const Workspace& ws, scenekit::Split split);
CaptionerQuality evaluate_captioner(const Workspace& ws, const models::Encoder& encoder,
                                    const models::Decoder& decoder, scenekit::Split split);

// Joint training on the train split with a cosine learning-rate schedule.
Captioner train_captioner(const Workspace& ws);
void save_captioner(const Captioner& c, const fs::path& path);
Captioner load_captioner(const fs::path& path);
// Loads <models>/captioner.ffck or trains and saves it.
Captioner ensure_captioner(const Workspace& ws);

// A decoder trained on features of the frozen encoder; cached by state size
// and seed.
models::Decoder train_feature_decoder(const Workspace& ws, const models::Encoder& encoder, std::size_t state,
                                      std::uint64_t seed);
models::Decoder ensure_feature_decoder(const Workspace& ws, const models::Encoder& encoder, std::size_t state,
                                       std::uint64_t seed);
void save_decoder(const models::Decoder& d, const fs::path& path);
models::Decoder load_decoder(const fs::path& path);

// ---- attack artifacts ----

struct TargetChoice {
    std::string id;
    std::size_t cls = 0;
    models::Image image = models::Image::filled(1, 1, 1, 0.0f);
};

// A random train image of cfg.target_class, drawn from `seed`.
TargetChoice choose_target(const Workspace& ws, std::uint64_t seed);
std::vector<std::size_t> source_classes(const Workspace& ws);

struct GeneratorArtifact {
    attacks::TrainedGenerator trained;
    std::string target_id;
    std::vector<std::string> source_ids;
    double train_seconds = 0.0;  // 0 when loaded from disk
};

struct GeneratorCell {
    std::uint64_t seed = 0;
    std::size_t source_class = 0;
    double epsilon = 0.0;
};

// Trains the generators of every cell that has no checkpoint yet, in
// parallel over cfg.jobs, and loads them all. Each cell's randomness derives
// from (seed, class, epsilon) alone, so serial and parallel runs match.
std::vector<GeneratorArtifact> ensure_generators(const Workspace& ws, const models::Encoder& encoder,
                                                 const TargetChoice& target, const std::vector<GeneratorCell>& cells);

// ---- per-example records ----

struct ExampleRecord {
    std::string experiment;
    std::string method;
    std::string decoder;
    std::uint64_t seed = 0;
    double epsilon = 0.0;
    std::string source_id;
    std::size_t source_class = 0;
    std::string target_id;
    double l2 = 0.0;
    double linf = 0.0;
    double pre_clip_linf = 0.0;  // max |I_g * eps| before clipping
    bool in_range = true;
    double meteor = 0.0;
    bool exact = false;
    std::array<bool, attacks::kTaus.size()> tau{};
    std::string predicted;
    std::string target_caption;

    bool operator==(const ExampleRecord&) const = default;
};

std::string to_jsonl(const std::vector<ExampleRecord>& records);
std::vector<ExampleRecord> parse_jsonl(const std::string& text);
void write_records(const fs::path& path, const std::vector<ExampleRecord>& records);
std::vector<ExampleRecord> read_records(const fs::path& path);

// ---- experiments ----

struct SweepResult {
    Table table;
    std::vector<ExampleRecord> records;
    std::size_t budget_violations = 0;
    std::uint64_t crafting_decoder_evaluations = 0;
    std::vector<GeneratorArtifact> generators;
};

// Rows: exact, then one per tau; per epsilon an accuracy % column and a mean
// l2 column over that row's successes ("nan" when there are none).
Table sweep_table(const std::vector<ExampleRecord>& records, const std::vector<double>& eps,
                  const std::vector<double>& taus);
SweepResult run_epsilon_sweep(const Workspace& ws, const Captioner& captioner);

// Keywords: the target caption's class words among the head's top-3 on the
// target image.
std::vector<std::string> target_keywords(const models::Encoder& encoder, const models::Image& target,
                                         const std::string& target_caption);
// Failure is no success at tau = 0.15. Rows per epsilon; an epsilon without
// failures gets status "empty" and zero rates.
Table keyword_table(const std::vector<ExampleRecord>& records, const std::vector<double>& eps,
                    const std::vector<std::string>& keywords);
Table run_keyword_analysis(const Workspace& ws, const Captioner& captioner,
                           const std::vector<ExampleRecord>& sweep_records);

inline constexpr std::array<const char*, 8> kMetricNames{"B-1", "B-2", "B-3", "B-4", "METEOR", "CIDEr", "ROUGE-L",
                                                         "SPICE"};

struct AblationResult {
    Table table;
    std::vector<std::size_t> states;
    // [variant][row][metric]; row 0 is the clean set, then one per epsilon.
    std::vector<std::vector<std::array<double, kMetricNames.size()>>> metrics;
};

AblationResult run_statesize_ablation(const Workspace& ws, const Captioner& captioner);

struct BaselineResult {
    Table table;
    std::vector<ExampleRecord> records;
    // Per seed: tau = 0.15 success rate of the internal-layer attack and of
    // I-FGSM.
    std::vector<std::array<double, 2>> tau15;
};

BaselineResult run_baseline_comparison(const Workspace& ws, const Captioner& captioner);

struct TransferResult {
    Table table;
    std::vector<ExampleRecord> records;
    std::uint64_t crafting_decoder_evaluations = 0;
    // Per decoder row: tau = 0.15 success on adversarial images and at eps = 0.
    std::vector<std::array<double, 2>> tau15;
};

TransferResult run_graybox_transfer(const Workspace& ws, const Captioner& captioner);

// Id sets used by training (captioner train split, generator sources and
// targets) intersected with validation and test ids.
Table contamination_table(const Workspace& ws);

// Rebuilds every table whose records exist under <out>/results.
std::vector<std::string> rebuild_reports(const Workspace& ws);

}  // namespace featfool::harness
