#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "featfool/attacks/attack.hpp"
#include "featfool/models/captioner.hpp"

namespace featfool::harness {

// Every setting of a run. Text form is one `key = value` per line; `#`
// starts a comment; lists are comma separated. Precedence when the CLI
// builds one: defaults, then the config file, then flags.
struct RunConfig {
    std::filesystem::path corpus = "corpus";
    std::filesystem::path out = "out";

    std::uint64_t corpus_seed = 1;
    std::uint64_t train_seed = 1;
    std::uint64_t attack_seed = 1;

    std::size_t train_size = 2000;
    std::size_t val_size = 200;
    std::size_t test_size = 200;

    // Captioner (encoder + seen decoder), trained jointly.
    std::size_t train_epochs = 200;
    double train_lr = 2e-3;
    std::size_t train_batch = 8;
    double class_weight = 1.0;
    double slot_weight = 1.0;
    double weight_decay = 0.0;
    std::size_t max_shift = 2;
    std::size_t decoder_state = 64;
    // Decoders trained later on frozen encoder features.
    std::size_t decoder_epochs = 60;
    double decoder_lr = 2e-3;

    std::vector<double> eps{attacks::kDefaultEpsilons.begin(), attacks::kDefaultEpsilons.end()};
    std::vector<double> taus{attacks::kTaus.begin(), attacks::kTaus.end()};
    std::size_t target_class = 0;
    std::size_t layer = models::Encoder::kPooledTap;
    std::size_t attack_epochs = 300;
    double gen_lr = 1e-4;
    std::size_t refine_steps = 10;
    double refine_lr = 0.01;
    std::string refine_rule = "signed";
    std::string gen_loss = "remapped-cross-entropy";
    std::size_t attack_batch = 8;
    // Training images per source class fed to each generator.
    std::size_t gen_sources = 64;

    double baseline_eps = 0.2;
    std::size_t ifgsm_iters = 20;
    std::size_t baseline_seeds = 3;
    double transfer_eps = 0.2;
    std::vector<std::size_t> ablation_states{64, 256};

    std::size_t jobs = 1;

    // ConfigError naming the offending key.
    void validate() const;
    attacks::AttackConfig attack_config(double epsilon, std::uint64_t seed) const;
    models::CaptionerTrainOptions captioner_options() const;
};

std::vector<std::string> config_keys();
// ConfigError for an unknown key or an unparsable value.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

// Every key in declaration order.
std::string format_run_config(const RunConfig& cfg);
// ParseError naming the line for malformed lines; ConfigError for bad values.
void apply_config_text(RunConfig& cfg, const std::string& text);

std::vector<double> parse_double_list(const std::string& text);

}  // namespace featfool::harness
