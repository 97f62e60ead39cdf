#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "featfool/errors.hpp"
#include "featfool/harness/config.hpp"
#include "featfool/harness/experiments.hpp"
#include "featfool/harness/report.hpp"
#include "featfool/lexmetrics/metrics.hpp"

namespace fs = std::filesystem;
using namespace featfool;
using namespace featfool::harness;

namespace {

constexpr const char* kCorpusEnv = "FEATFOOL_CORPUS";

struct Flags {
    std::string config_file;
    std::string corpus;
    std::string out;
    std::string seed;
    std::string train_seed;
    std::string corpus_seed;
    std::string eps;
    std::string tau;
    std::string jobs;
    std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config_file, "key = value run configuration file");
    sub->add_option("--corpus", f.corpus, std::string("corpus root (also ") + kCorpusEnv + ")");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--seed", f.seed, "attack seed");
    sub->add_option("--train-seed", f.train_seed, "captioner training seed");
    sub->add_option("--corpus-seed", f.corpus_seed, "corpus generation seed");
    sub->add_option("--eps", f.eps, "comma separated epsilon grid");
    sub->add_option("--tau", f.tau, "comma separated METEOR thresholds");
    sub->add_option("--jobs", f.jobs, "parallel generator jobs (default 1)");
    sub->add_option("--set", f.sets, "override any setting, key=value (repeatable)");
}

// Defaults, then the config file, then the environment, then flags.
RunConfig resolve(const Flags& f) {
    RunConfig cfg;
    if (!f.config_file.empty()) apply_config_text(cfg, read_text(f.config_file));
    if (const char* env = std::getenv(kCorpusEnv); env && *env) cfg.corpus = env;
    auto set = [&](const char* key, const std::string& v) {
        if (!v.empty()) set_config_value(cfg, key, v);
    };
    set("corpus", f.corpus);
    set("out", f.out);
    set("attack_seed", f.seed);
    set("train_seed", f.train_seed);
    set("corpus_seed", f.corpus_seed);
    set("eps", f.eps);
    set("tau", f.tau);
    set("jobs", f.jobs);
    for (const auto& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

void echo_config(const RunConfig& cfg, const std::string& subcommand) {
    fs::create_directories(cfg.out);
    write_text(cfg.out / ("run_config_" + subcommand + ".txt"), "# " + subcommand + "\n" + format_run_config(cfg));
}

int run(const std::string& name, const Flags& flags, const std::string& pairs, const std::string& synonyms,
        const std::string& metrics_out) {
    if (name == "metrics") {
        const auto records = lexmetrics::load_pairs(pairs);
        lexmetrics::SynonymTable syn;
        if (!synonyms.empty()) syn = lexmetrics::SynonymTable::load(synonyms);
        std::map<std::string, std::vector<lexmetrics::TokenSeq>> corpus;
        for (const auto& r : records) {
            for (const auto& ref : r.references) corpus[r.id].push_back(lexmetrics::tokenize(ref));
        }
        const lexmetrics::CiderScorer cider(corpus);
        const auto grammar = lexmetrics::CaptionGrammar::scenes();
        Table t;
        t.title = "Per-pair caption metrics";
        t.columns = {"id", "B-1", "B-2", "B-3", "B-4", "METEOR", "ROUGE-L", "CIDEr", "SPICE", "exact"};
        for (const auto& r : records) {
            const auto rep = lexmetrics::score_pair(r.id, lexmetrics::tokenize(r.candidate), corpus.at(r.id), cider,
                                                    grammar, syn.empty() ? nullptr : &syn);
            t.add_row({r.id, fmt4(rep.bleu[0]), fmt4(rep.bleu[1]), fmt4(rep.bleu[2]), fmt4(rep.bleu[3]), fmt4(rep.meteor),
                       fmt4(rep.rouge_l), fmt4(rep.cider), fmt4(rep.spice_f1), rep.exact ? "1" : "0"});
        }
        const fs::path out = metrics_out.empty() ? fs::path(pairs).replace_extension(".metrics.csv") : fs::path(metrics_out);
        write_text(out, to_csv(t));
        std::cerr << "wrote " << out << "\n";
        return 0;
    }

    const RunConfig cfg = resolve(flags);
    echo_config(cfg, name);
    if (name == "dataset-gen") {
        scenekit::DatasetConfig dc{cfg.train_size, cfg.val_size, cfg.test_size, cfg.corpus_seed};
        fs::create_directories(cfg.corpus);
        const auto m = scenekit::build_dataset(dc, cfg.corpus);
        std::cerr << "wrote " << m.records.size() << " records under " << cfg.corpus << "\n";
        return 0;
    }

    Workspace ws(cfg, std::cerr);
    if (name == "train") {
        const Captioner c = ensure_captioner(ws);
        Table t;
        t.title = "Captioner quality";
        t.columns = {"split", "images", "exact %", "classification %"};
        for (auto split : {scenekit::Split::val, scenekit::Split::test}) {
            const auto q = evaluate_captioner(ws, c.encoder, c.decoder, split);
            t.add_row({scenekit::split_name(split), std::to_string(q.images), fmt4(100 * q.exact),
                       fmt4(100 * q.classification)});
        }
        emit_all(t, ws.reports_dir() / "captioner");
        return 0;
    }
    const Captioner c = ensure_captioner(ws);
    if (name == "attack") {
        const auto target = choose_target(ws, cfg.attack_seed);
        std::vector<GeneratorCell> cells;
        for (double e : cfg.eps) {
            for (auto cls : source_classes(ws)) cells.push_back({cfg.attack_seed, cls, e});
        }
        const auto gens = ensure_generators(ws, c.encoder, target, cells);
        Table t;
        t.title = "Generator training traces, target " + target.id;
        t.columns = {"source class", "epsilon", "sources", "feature loss epoch 1", "feature loss last", "windowed ratio"};
        for (const auto& g : gens) {
            const auto& fl = g.trained.trace.feature_loss;
            t.add_row({std::to_string(g.trained.source_class), fmt4(g.trained.config.epsilon),
                       std::to_string(g.source_ids.size()), fmt4(fl.front()), fmt4(fl.back()),
                       fmt4(attacks::windowed_ratio(fl, 10))});
        }
        emit_all(t, ws.reports_dir() / "generators");
        return 0;
    }
    if (name == "sweep") {
        const auto res = run_epsilon_sweep(ws, c);
        if (res.budget_violations) throw DomainError(std::to_string(res.budget_violations) + " budget violations");
        return 0;
    }
    if (name == "keyword-analysis") {
        const fs::path path = ws.results_dir() / "sweep.jsonl";
        if (!fs::exists(path)) throw ConfigError("no sweep records at " + path.string() + "; run sweep first");
        run_keyword_analysis(ws, c, read_records(path));
        return 0;
    }
    if (name == "ablate-statesize") {
        run_statesize_ablation(ws, c);
        return 0;
    }
    if (name == "baseline-compare") {
        run_baseline_comparison(ws, c);
        return 0;
    }
    if (name == "transfer") {
        const auto res = run_graybox_transfer(ws, c);
        if (res.crafting_decoder_evaluations) throw ContractError("crafting evaluated a decoder");
        return 0;
    }
    if (name == "report") {
        for (const auto& r : rebuild_reports(ws)) std::cerr << "rebuilt " << r << "\n";
        contamination_table(ws);
        return 0;
    }
    throw ConfigError("unhandled subcommand " + name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"featfool: gray-box feature-space attacks on a toy captioner"};
    app.require_subcommand(1);
    Flags flags;
    std::string pairs, synonyms, metrics_out;
    const std::vector<std::pair<const char*, const char*>> commands = {
        {"dataset-gen", "render the toy corpus"},
        {"train", "train the captioner (encoder + decoder)"},
        {"attack", "train per-class generators for every epsilon"},
        {"sweep", "epsilon x tau success sweep"},
        {"keyword-analysis", "partial success of failed sweep attacks"},
        {"ablate-statesize", "caption metrics for decoder state sizes"},
        {"baseline-compare", "internal-layer attack vs I-FGSM"},
        {"transfer", "transfer of crafted images across decoders"},
        {"report", "rebuild reports from stored records"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags);
    auto* metrics = app.add_subcommand("metrics", "score candidate/reference pairs");
    metrics->add_option("--pairs", pairs, "id<TAB>candidate<TAB>ref... file")->required();
    metrics->add_option("--synonyms", synonyms, "two-column synonym table");
    metrics->add_option("--output", metrics_out, "CSV path (default <pairs>.metrics.csv)");

    if (argc <= 1) {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cerr << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return 2;
    }
    try {
        return run(app.get_subcommands().front()->get_name(), flags, pairs, synonyms, metrics_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
