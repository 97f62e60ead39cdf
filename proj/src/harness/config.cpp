#include "featfool/harness/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "featfool/errors.hpp"

namespace featfool::harness {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string show(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) {
        throw ConfigError("setting '" + key + "' expects a number, got '" + text + "'");
    }
    return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::uint64_t v = 0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) {
        throw ConfigError("setting '" + key + "' expects a non-negative integer, got '" + text + "'");
    }
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
Field uint_field(const char* key, T RunConfig::*m) {
    return {key, [m](const RunConfig& c) { return std::to_string(c.*m); },
            [m, key](RunConfig& c, const std::string& v) { c.*m = static_cast<T>(to_uint(key, v)); }};
}

Field double_field(const char* key, double RunConfig::*m) {
    return {key, [m](const RunConfig& c) { return show(c.*m); },
            [m, key](RunConfig& c, const std::string& v) { c.*m = to_double(key, v); }};
}

Field string_field(const char* key, std::string RunConfig::*m) {
    return {key, [m](const RunConfig& c) { return c.*m; },
            [m](RunConfig& c, const std::string& v) { c.*m = trim(v); }};
}

Field path_field(const char* key, std::filesystem::path RunConfig::*m) {
    return {key, [m](const RunConfig& c) { return (c.*m).string(); },
            [m](RunConfig& c, const std::string& v) { c.*m = trim(v); }};
}

Field double_list_field(const char* key, std::vector<double> RunConfig::*m) {
    return {key,
            [m](const RunConfig& c) {
                std::string out;
                for (double v : c.*m) out += (out.empty() ? "" : ",") + show(v);
                return out;
            },
            [m, key](RunConfig& c, const std::string& v) {
                std::vector<double> out;
                for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
                c.*m = out;
            }};
}

Field size_list_field(const char* key, std::vector<std::size_t> RunConfig::*m) {
    return {key,
            [m](const RunConfig& c) {
                std::string out;
                for (auto v : c.*m) out += (out.empty() ? "" : ",") + std::to_string(v);
                return out;
            },
            [m, key](RunConfig& c, const std::string& v) {
                std::vector<std::size_t> out;
                for (const auto& item : split_list(v)) out.push_back(static_cast<std::size_t>(to_uint(key, item)));
                c.*m = out;
            }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        path_field("corpus", &RunConfig::corpus),
        path_field("out", &RunConfig::out),
        uint_field("corpus_seed", &RunConfig::corpus_seed),
        uint_field("train_seed", &RunConfig::train_seed),
        uint_field("attack_seed", &RunConfig::attack_seed),
        uint_field("train_size", &RunConfig::train_size),
        uint_field("val_size", &RunConfig::val_size),
        uint_field("test_size", &RunConfig::test_size),
        uint_field("train_epochs", &RunConfig::train_epochs),
        double_field("train_lr", &RunConfig::train_lr),
        uint_field("train_batch", &RunConfig::train_batch),
        double_field("class_weight", &RunConfig::class_weight),
        double_field("slot_weight", &RunConfig::slot_weight),
        double_field("weight_decay", &RunConfig::weight_decay),
        uint_field("max_shift", &RunConfig::max_shift),
        uint_field("decoder_state", &RunConfig::decoder_state),
        uint_field("decoder_epochs", &RunConfig::decoder_epochs),
        double_field("decoder_lr", &RunConfig::decoder_lr),
        double_list_field("eps", &RunConfig::eps),
        double_list_field("tau", &RunConfig::taus),
        uint_field("target_class", &RunConfig::target_class),
        uint_field("layer", &RunConfig::layer),
        uint_field("attack_epochs", &RunConfig::attack_epochs),
        double_field("gen_lr", &RunConfig::gen_lr),
        uint_field("refine_steps", &RunConfig::refine_steps),
        double_field("refine_lr", &RunConfig::refine_lr),
        string_field("refine_rule", &RunConfig::refine_rule),
        string_field("gen_loss", &RunConfig::gen_loss),
        uint_field("attack_batch", &RunConfig::attack_batch),
        uint_field("gen_sources", &RunConfig::gen_sources),
        double_field("baseline_eps", &RunConfig::baseline_eps),
        uint_field("ifgsm_iters", &RunConfig::ifgsm_iters),
        uint_field("baseline_seeds", &RunConfig::baseline_seeds),
        double_field("transfer_eps", &RunConfig::transfer_eps),
        size_list_field("ablation_states", &RunConfig::ablation_states),
        uint_field("jobs", &RunConfig::jobs),
    };
    return table;
}

const Field& field(const std::string& key) {
    for (const auto& f : fields()) {
        if (f.key == key) return f;
    }
    throw ConfigError("unknown setting '" + key + "'");
}

}  // namespace

void RunConfig::validate() const {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("invalid setting: " + what);
    };
    need(train_size > 0 && val_size > 0, "train_size and val_size must be positive");
    need(train_epochs > 0 && train_batch > 0, "train_epochs and train_batch must be positive");
    need(train_lr > 0 && decoder_lr > 0, "learning rates must be positive");
    need(decoder_state > 0, "decoder_state must be positive");
    need(!eps.empty(), "eps grid is empty");
    for (double e : eps) need(e > 0 && e <= 1, "eps values must lie in (0, 1]");
    need(taus.size() == attacks::kTaus.size(), "tau grid must hold " + std::to_string(attacks::kTaus.size()) + " values");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        need(taus[i] == attacks::kTaus[i], "tau grid is fixed at 0.15,0.2,0.25");
    }
    need(target_class < 4, "target_class must name one of the 4 classes");
    need(gen_sources > 0, "gen_sources must be positive");
    need(baseline_seeds > 0, "baseline_seeds must be positive");
    need(baseline_eps > 0 && transfer_eps > 0, "baseline_eps and transfer_eps must be positive");
    need(!ablation_states.empty(), "ablation_states is empty");
    need(jobs > 0, "jobs must be positive");
    attacks::parse_refine_rule(refine_rule);
    attacks::parse_gen_loss(gen_loss);
    attack_config(eps.front(), attack_seed).validate();
}

attacks::AttackConfig RunConfig::attack_config(double epsilon, std::uint64_t seed) const {
    attacks::AttackConfig a;
    a.epsilon = epsilon;
    a.layer = layer;
    a.epochs = attack_epochs;
    a.gen_lr = gen_lr;
    a.refine_steps = refine_steps;
    a.refine_lr = refine_lr;
    a.refine_rule = attacks::parse_refine_rule(refine_rule);
    a.gen_loss = attacks::parse_gen_loss(gen_loss);
    a.batch_size = attack_batch;
    a.seed = seed;
    return a;
}

models::CaptionerTrainOptions RunConfig::captioner_options() const {
    models::CaptionerTrainOptions o;
    o.lr = train_lr;
    o.batch_size = train_batch;
    o.class_weight = class_weight;
    o.slot_weight = slot_weight;
    o.weight_decay = weight_decay;
    o.max_shift = max_shift;
    return o;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& f : fields()) keys.push_back(f.key);
    return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    field(key).set(cfg, value);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) { return field(key).get(cfg); }

std::string format_run_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
    return out;
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("config line " + std::to_string(n) + " has no '='");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError("config line " + std::to_string(n) + " has an empty key");
        set_config_value(cfg, key, line.substr(eq + 1));
    }
}

std::vector<double> parse_double_list(const std::string& text) {
    RunConfig tmp;
    set_config_value(tmp, "eps", text);
    return tmp.eps;
}

}  // namespace featfool::harness
