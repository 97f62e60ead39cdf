// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
//
//   featfool_acceptance [workdir]
//
// The corpus, models and reports live under workdir (default
// ./acceptance_run). Models are retrained from scratch on every run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "featfool/attacks/attack.hpp"
#include "featfool/diffcore/gradcheck.hpp"
#include "featfool/diffcore/ops.hpp"
#include "featfool/diffcore/random.hpp"
#include "featfool/errors.hpp"
#include "featfool/harness/checkpoint.hpp"
#include "featfool/harness/experiments.hpp"
#include "featfool/harness/report.hpp"
#include "featfool/lexmetrics/metrics.hpp"
#include "featfool/scenekit/dataset.hpp"

namespace fs = std::filesystem;
using namespace featfool;
using namespace featfool::harness;
namespace dc = featfool::diffcore;
namespace lm = featfool::lexmetrics;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    int id;
    bool pass;
    std::string detail;
};

std::vector<Verdict> verdicts;

void report(int id, bool pass, const std::string& detail) {
    verdicts.push_back({id, pass, detail});
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

std::string num(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

// ---- 1: gradient suite ----

dc::Tensor64 rand_t(dc::Rng& rng, dc::Shape shape, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(dc::shape_numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return dc::Tensor64::from(std::move(shape), std::move(v));
}

dc::Tensor64 off_kink(dc::Rng& rng, dc::Shape shape, double edge) {
    std::vector<double> v(dc::shape_numel(shape));
    for (auto& x : v) {
        const double mag = rng.uniform(0.05, 1.0);
        x = rng.uniform() < 0.5 ? -mag : mag;
        if (edge > 0 && std::abs(std::abs(x) - edge) < 0.05) x *= 0.8;
    }
    return dc::Tensor64::from(std::move(shape), std::move(v));
}

using Fn = std::function<dc::Tensor64(const dc::Tensor64&)>;

struct GradCase {
    const char* name;
    std::function<std::pair<Fn, dc::Tensor64>(dc::Rng&)> make;
};

dc::Tensor64 wsum(const dc::Tensor64& y, dc::Rng& rng) { return dc::sum(dc::mul(y, rand_t(rng, y.shape(), 0.5, 1.5))); }

std::vector<GradCase> grad_cases() {
    using dc::Tensor64;
    std::vector<GradCase> cases;
    for (auto [op, name] : {std::pair{dc::BinaryOp::add, "add"}, {dc::BinaryOp::sub, "sub"}, {dc::BinaryOp::mul, "mul"}}) {
        cases.push_back({name, [op](dc::Rng& rng) {
                             const Tensor64 o = rand_t(rng, {3, 4}), w = rand_t(rng, {3, 4}, 0.5, 1.5);
                             Fn f = [=](const Tensor64& x) { return dc::sum(dc::mul(dc::ewise_binary(op, x, o), w)); };
                             return std::pair{f, rand_t(rng, {3, 4})};
                         }});
    }
    cases.push_back({"scale+offset", [](dc::Rng& rng) {
                         const Tensor64 w = rand_t(rng, {7}, 0.5, 1.5);
                         Fn f = [=](const Tensor64& x) { return dc::sum(dc::mul(dc::add_scalar(dc::scale(x, -1.7), 0.3), w)); };
                         return std::pair{f, rand_t(rng, {7})};
                     }});
    cases.push_back({"matmul", [](dc::Rng& rng) {
                         const Tensor64 b = rand_t(rng, {4, 3}), w = rand_t(rng, {2, 3}, 0.5, 1.5);
                         Fn f = [=](const Tensor64& a) { return dc::sum(dc::mul(dc::matmul(a, b), w)); };
                         return std::pair{f, rand_t(rng, {2, 4})};
                     }});
    for (auto mode : {dc::ConvMode::valid, dc::ConvMode::transpose}) {
        cases.push_back({mode == dc::ConvMode::valid ? "conv2d" : "conv2d-transpose", [mode](dc::Rng& rng) {
                             const dc::Shape in = mode == dc::ConvMode::valid ? dc::Shape{2, 7, 7} : dc::Shape{3, 3, 3};
                             const Tensor64 k = rand_t(rng, {3, 2, 3, 3});
                             dc::Rng wr(rng.next_u64());
                             Fn f = [=](const Tensor64& x) {
                                 dc::Rng r = wr;
                                 return wsum(dc::conv2d(x, k, 2, mode), r);
                             };
                             return std::pair{f, rand_t(rng, in)};
                         }});
    }
    cases.push_back({"pad2d", [](dc::Rng& rng) {
                         dc::Rng wr(rng.next_u64());
                         Fn f = [=](const Tensor64& x) {
                             dc::Rng r = wr;
                             return wsum(dc::pad2d(x, 2), r);
                         };
                         return std::pair{f, rand_t(rng, {2, 3, 4})};
                     }});
    cases.push_back({"channel-bias", [](dc::Rng& rng) {
                         const Tensor64 x = rand_t(rng, {3, 4, 4});
                         dc::Rng wr(rng.next_u64());
                         Fn f = [=](const Tensor64& b) {
                             dc::Rng r = wr;
                             return wsum(dc::add_channel_bias(x, b), r);
                         };
                         return std::pair{f, rand_t(rng, {3})};
                     }});
    for (auto kind : {dc::ActivationKind::relu, dc::ActivationKind::tanh, dc::ActivationKind::sigmoid}) {
        cases.push_back({"activation", [kind](dc::Rng& rng) {
                             const Tensor64 w = rand_t(rng, {9}, 0.5, 1.5);
                             Fn f = [=](const Tensor64& x) { return dc::sum(dc::mul(dc::activation(kind, dc::scale(x, 2.0)), w)); };
                             return std::pair{f, off_kink(rng, {9}, 0.0)};
                         }});
    }
    cases.push_back({"log", [](dc::Rng& rng) {
                         const Tensor64 w = rand_t(rng, {6}, 0.5, 1.5);
                         Fn f = [=](const Tensor64& x) { return dc::sum(dc::mul(dc::log(x), w)); };
                         return std::pair{f, rand_t(rng, {6}, 0.2, 2.0)};
                     }});
    cases.push_back({"clamp", [](dc::Rng& rng) {
                         const Tensor64 w = rand_t(rng, {8}, 0.5, 1.5);
                         Fn f = [=](const Tensor64& x) { return dc::sum(dc::mul(dc::clamp(x, -0.5, 0.5), w)); };
                         return std::pair{f, off_kink(rng, {8}, 0.5)};
                     }});
    cases.push_back({"mean", [](dc::Rng& rng) {
                         Fn f = [](const Tensor64& x) { return dc::mean(dc::mul(x, x)); };
                         return std::pair{f, rand_t(rng, {2, 5})};
                     }});
    cases.push_back({"global-avg-pool", [](dc::Rng& rng) {
                         dc::Rng wr(rng.next_u64());
                         Fn f = [=](const Tensor64& x) {
                             dc::Rng r = wr;
                             return wsum(dc::global_avg_pool(x), r);
                         };
                         return std::pair{f, rand_t(rng, {3, 4, 5})};
                     }});
    cases.push_back({"reshape+slice", [](dc::Rng& rng) {
                         Fn f = [](const Tensor64& x) {
                             const Tensor64 m = dc::reshape(x, {3, 4});
                             return dc::sum(dc::mul(dc::slice_cols(m, 1, 3), dc::slice_cols(m, 2, 4)));
                         };
                         return std::pair{f, rand_t(rng, {12})};
                     }});
    cases.push_back({"concat", [](dc::Rng& rng) {
                         const Tensor64 o = rand_t(rng, {1, 3}), w = rand_t(rng, {5, 3}, 0.5, 1.5);
                         Fn f = [=](const Tensor64& x) { return dc::sum(dc::mul(dc::concat_rows<double>({x, o, x}), w)); };
                         return std::pair{f, rand_t(rng, {2, 3})};
                     }});
    cases.push_back({"gather", [](dc::Rng& rng) {
                         const Tensor64 w = rand_t(rng, {4, 3}, 0.5, 1.5);
                         Fn f = [=](const Tensor64& t) {
                             const std::size_t ids[] = {2, 0, 2, 3};
                             return dc::sum(dc::mul(dc::gather_rows(t, ids), w));
                         };
                         return std::pair{f, rand_t(rng, {4, 3})};
                     }});
    cases.push_back({"softmax-xent", [](dc::Rng& rng) {
                         Fn f = [](const Tensor64& logits) {
                             const std::size_t targets[] = {1, 3, 0};
                             return dc::softmax_xent(logits, targets);
                         };
                         return std::pair{f, rand_t(rng, {3, 5}, -3.0, 3.0)};
                     }});
    return cases;
}

void criterion_gradients() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string worst_name = "-";
    std::size_t checks = 0;
    for (const auto& c : grad_cases()) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            dc::Rng rng(dc::derive_seed(4242, seed));
            auto [f, x] = c.make(rng);
            const auto r = dc::finite_diff_check<double>(f, x, 1e-5);
            ++checks;
            if (r.max_rel_error > worst) {
                worst = r.max_rel_error;
                worst_name = c.name;
            }
        }
    }
    const double secs = seconds_since(t0);
    report(1, worst < 1e-4 && secs < 60.0,
           std::to_string(checks) + " checks, max rel error " + sci(worst) + " (" + worst_name + "), " +
               num(secs, 2) + "s");
}

// ---- 2: metric oracle fixture ----

void criterion_metrics(const fs::path& fixtures) {
    const auto pairs = lm::load_pairs((fixtures / "metric_pairs.tsv").string());
    const auto syn = lm::SynonymTable::load((fixtures / "synonyms.txt").string());
    std::map<std::string, std::vector<double>> expected;
    {
        std::ifstream is(fixtures / "metric_expected.tsv");
        std::string line;
        while (std::getline(is, line)) {
            std::istringstream ls(line);
            std::string id;
            ls >> id;
            double v;
            while (ls >> v) expected[id].push_back(v);
        }
    }
    std::map<std::string, std::vector<lm::TokenSeq>> corpus;
    for (const auto& p : pairs) {
        for (const auto& r : p.references) corpus[p.id].push_back(lm::tokenize(r));
    }
    const lm::CiderScorer cider(corpus);
    const auto grammar = lm::CaptionGrammar::scenes();
    double worst = 0.0;
    for (const auto& p : pairs) {
        const auto m = lm::score_pair(p.id, lm::tokenize(p.candidate), corpus[p.id], cider, grammar, &syn);
        const std::vector<double> got{m.bleu[0], m.bleu[1], m.bleu[2], m.bleu[3], m.meteor,
                                      m.rouge_l, m.cider,   m.spice_f1, m.exact ? 1.0 : 0.0};
        const auto& e = expected.at(p.id);
        for (std::size_t k = 0; k < got.size(); ++k) worst = std::max(worst, std::abs(got[k] - e.at(k)));
    }
    const lm::TokenSeq c = lm::tokenize("a red circle above a blue square");
    const double b1 = lm::bleu_n(lm::tokenize("a red circle"), {c}, 1);
    const double rl = lm::rouge_l(lm::tokenize("a red circle"), lm::tokenize("a blue circle"));
    const double me = lm::meteor(c, c);
    const lm::TokenSeq other = lm::tokenize("one green cross beside two yellow triangles");
    const lm::CiderScorer two({{"x", {c}}, {"y", {other}}});
    const double ci = two.score("x", c);
    const bool worked = std::abs(b1 - 0.2636) < 1e-4 && std::abs(rl - 2.0 / 3.0) < 1e-6 && std::abs(me - 0.99854) < 1e-5 &&
                        std::abs(ci - 10.0) < 1e-6;
    report(2, pairs.size() == 20 && expected.size() == 20 && worst < 1e-6 && worked,
           std::to_string(pairs.size()) + " pairs, max abs deviation " + sci(worst) + "; BLEU-1 " + num(b1, 5) +
               ", ROUGE-L " + num(rl, 5) + ", METEOR " + num(me, 5) + ", CIDEr " + num(ci, 5));
}

bool non_decreasing_with_one_small_inversion(const std::vector<double>& xs, double allowed) {
    int inversions = 0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (xs[i] < xs[i - 1]) {
            ++inversions;
            if (xs[i - 1] - xs[i] > allowed) return false;
        }
    }
    return inversions <= 1;
}

std::string join(const std::vector<double>& xs, int prec = 2) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? " " : "") + num(xs[i], prec);
    return s;
}

std::string file_bytes(const fs::path& p) { return read_text(p); }

}  // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_run");
    const fs::path fixtures = FEATFOOL_FIXTURE_DIR;
    std::ofstream logfile;
    fs::create_directories(work);
    logfile.open(work / "acceptance.log");

    try {
        criterion_gradients();
        criterion_metrics(fixtures);

        RunConfig cfg;
        cfg.corpus = work / "corpus";
        cfg.out = work / "out";
        cfg.validate();
        fs::remove_all(cfg.out);
        Workspace ws(cfg, logfile);

        // 3: captioner
        auto t0 = Clock::now();
        const Captioner cap = ensure_captioner(ws);
        const double train_secs = seconds_since(t0);
        const auto q = evaluate_captioner(ws, cap.encoder, cap.decoder, scenekit::Split::val);
        report(3, q.exact >= 0.95 && q.classification >= 0.90 && train_secs < 1800.0,
               "val exact " + num(100 * q.exact, 1) + "%, head accuracy " + num(100 * q.classification, 1) + "% on " +
                   std::to_string(q.images) + " images, training " + num(train_secs, 0) + "s");

        // sweep
        t0 = Clock::now();
        const SweepResult sweep = run_epsilon_sweep(ws, cap);
        const double sweep_secs = seconds_since(t0);

        // 4: generator learning at the largest sweep epsilon, three seeds
        const double eps4 = *std::max_element(cfg.eps.begin(), cfg.eps.end());
        std::string detail4;
        std::size_t seeds_ok = 0;
        for (std::uint64_t s = 0; s < 3; ++s) {
            const std::uint64_t seed = cfg.attack_seed + s;
            std::vector<GeneratorCell> cells;
            for (auto c : source_classes(ws)) cells.push_back({seed, c, eps4});
            const auto gens = ensure_generators(ws, cap.encoder, choose_target(ws, seed), cells);
            double worst = 0.0;
            for (const auto& g : gens) {
                const auto& fl = g.trained.trace.feature_loss;
                worst = std::max(worst, attacks::windowed_ratio(fl, 10));
            }
            seeds_ok += worst < 0.5;
            detail4 += (s ? ", " : "") + std::string("seed ") + std::to_string(seed) + " worst ratio " + num(worst, 3);
        }
        report(4, seeds_ok == 3,
               std::to_string(seeds_ok) + "/3 seeds below 0.5 at eps=" + num(eps4, 2) + " after " +
                   std::to_string(cfg.attack_epochs) + " epochs (" + detail4 + ")");

        // 5: budget over every crafted sweep image
        std::size_t range_bad = 0, budget_bad = 0;
        for (const auto& r : sweep.records) {
            range_bad += !r.in_range;
            budget_bad += r.pre_clip_linf > r.epsilon + 1e-6 || r.linf > r.epsilon + 1e-6;
        }
        report(5, sweep.budget_violations == 0 && range_bad == 0 && budget_bad == 0 && !sweep.records.empty(),
               std::to_string(sweep.records.size()) + " images, " + std::to_string(range_bad) + " out of range, " +
                   std::to_string(budget_bad) + " over budget");

        // 6: epsilon trends
        std::vector<double> acc15, l2s;
        std::size_t min_images = SIZE_MAX;
        for (double e : cfg.eps) {
            acc15.push_back(sweep.table.number(1, "eps=" + fmt4(e) + " acc%"));
            l2s.push_back(sweep.table.number(1, "eps=" + fmt4(e) + " l2"));
            std::size_t n = 0;
            for (const auto& r : sweep.records) n += r.epsilon == e;
            min_images = std::min(min_images, n);
        }
        bool l2_ok = true;
        for (std::size_t i = 1; i < l2s.size(); ++i) l2_ok = l2_ok && !(l2s[i] < l2s[i - 1]);
        for (double v : l2s) l2_ok = l2_ok && !std::isnan(v);
        report(6, non_decreasing_with_one_small_inversion(acc15, 2.0) && l2_ok && min_images >= 100 && sweep_secs < 7200,
               "tau=0.15 acc% [" + join(acc15) + "], mean l2 [" + join(l2s, 3) + "], " + std::to_string(min_images) +
                   " images per eps, " + num(sweep_secs, 0) + "s");

        // 7: ordering in the sweep and keyword tables
        bool order_ok = true;
        for (std::size_t c = 1; c < sweep.table.columns.size(); c += 2) {
            std::vector<double> col;
            for (std::size_t r = 0; r < sweep.table.rows.size(); ++r) col.push_back(sweep.table.number(r, sweep.table.columns[c]));
            // rows: exact, tau=0.15, tau=0.20, tau=0.25
            order_ok = order_ok && col[0] <= col[3] && col[3] <= col[2] && col[2] <= col[1];
        }
        const Table kw = run_keyword_analysis(ws, cap, sweep.records);
        bool kw_ok = true;
        for (std::size_t r = 0; r < kw.rows.size(); ++r) {
            const double k1 = kw.number(r, "1-keyword %"), k2 = kw.number(r, "2-keyword %"), k3 = kw.number(r, "3-keyword %");
            kw_ok = kw_ok && k3 <= k2 && k2 <= k1;
        }
        report(7, order_ok && kw_ok,
               std::string("sweep columns ") + (order_ok ? "ordered" : "out of order") + ", keyword rows " +
                   (kw_ok ? "monotone" : "not monotone") + " (" + std::to_string(kw.rows.size()) + " rows)");

        // 8: baseline
        const BaselineResult base = run_baseline_comparison(ws, cap);
        std::size_t wins = 0;
        std::string d8;
        for (std::size_t s = 0; s < base.tau15.size(); ++s) {
            wins += base.tau15[s][0] > base.tau15[s][1];
            d8 += (s ? ", " : "") + num(100 * base.tau15[s][0], 1) + " vs " + num(100 * base.tau15[s][1], 1);
        }
        report(8, wins >= 2, std::to_string(wins) + "/" + std::to_string(base.tau15.size()) +
                                 " seeds internal > I-FGSM at tau=0.15 (" + d8 + ")");

        // 9: state-size ablation
        const AblationResult abl = run_statesize_ablation(ws, cap);
        const std::size_t row03 = static_cast<std::size_t>(
            std::find_if(cfg.eps.begin(), cfg.eps.end(), [](double e) { return std::abs(e - 0.3) < 1e-12; }) - cfg.eps.begin()) + 1;
        bool below = row03 <= cfg.eps.size();
        bool agree = abl.metrics.size() == 2;
        std::size_t disagreements = 0;
        if (below) {
            for (const auto& v : abl.metrics) {
                for (std::size_t m = 0; m < kMetricNames.size(); ++m) below = below && v[row03][m] < v[0][m];
            }
        }
        if (agree) {
            for (std::size_t row = 1; row < abl.metrics[0].size(); ++row) {
                for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
                    auto dir = [&](std::size_t v) {
                        const double d = abl.metrics[v][row][m] - abl.metrics[v][0][m];
                        return std::abs(d) < 1e-12 ? 0 : (d < 0 ? -1 : 1);
                    };
                    disagreements += dir(0) != dir(1);
                }
            }
            agree = disagreements == 0;
        }
        std::string d9;
        for (std::size_t v = 0; v < abl.metrics.size(); ++v) {
            d9 += (v ? "; " : "") + std::string("SS") + std::to_string(abl.states[v]) + " METEOR clean " +
                  num(abl.metrics[v][0][4], 3) + " -> eps=0.3 " + num(below || row03 <= cfg.eps.size() ? abl.metrics[v][row03][4] : 0.0, 3);
        }
        report(9, below && agree,
               std::string("all metrics below clean at eps=0.3: ") + (below ? "yes" : "no") + ", direction disagreements " +
                   std::to_string(disagreements) + " (" + d9 + ")");

        // 10: gray-box purity and transfer
        const TransferResult tr = run_graybox_transfer(ws, cap);
        bool transfer_ok = true;
        std::string d10;
        for (std::size_t i = 0; i < tr.tau15.size(); ++i) {
            if (i > 0) transfer_ok = transfer_ok && tr.tau15[i][0] > tr.tau15[i][1];
            d10 += (i ? ", " : "") + tr.table.rows[i][0] + " " + num(100 * tr.tau15[i][0], 1) + "% vs control " +
                   num(100 * tr.tau15[i][1], 1) + "%";
        }
        const std::uint64_t evals = tr.crafting_decoder_evaluations + sweep.crafting_decoder_evaluations;
        report(10, evals == 0 && transfer_ok,
               std::to_string(evals) + " decoder evaluations while crafting; " + d10);

        // 11: determinism and persistence
        const Table contamination = contamination_table(ws);
        std::size_t leaked = 0;
        for (const auto& row : contamination.rows) leaked += std::stoul(row[3]);

        const fs::path cap_path = ws.models_dir() / "captioner.ffck";
        const bool ckpt_ok = encode_checkpoint(load_checkpoint(cap_path)) == file_bytes(cap_path);
        const fs::path manifest_path = cfg.corpus / scenekit::kManifestName;
        const auto manifest = scenekit::read_manifest(manifest_path);
        const bool manifest_ok = scenekit::format_manifest(manifest) == file_bytes(manifest_path) &&
                                 scenekit::parse_manifest(scenekit::format_manifest(manifest)) == manifest;

        // Second run: the captioner and the smallest-epsilon generators are
        // retrained from scratch, the rest is copied.
        RunConfig cfg2 = cfg;
        cfg2.out = work / "out_repeat";
        fs::remove_all(cfg2.out);
        Workspace ws2(cfg2, logfile);
        const std::string skip = "_e" + [&] {
            std::string e = fmt4(cfg.eps.front());
            std::replace(e.begin(), e.end(), '.', 'p');
            return e;
        }();
        std::size_t retrained = 0;
        for (const auto& entry : fs::directory_iterator(ws.models_dir())) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("gen_", 0) != 0) continue;
            if (name.find(skip) != std::string::npos && name.find("_seed" + std::to_string(cfg.attack_seed) + "_") != std::string::npos) {
                retrained += entry.path().extension() == ".ffck";
                continue;
            }
            fs::copy_file(entry.path(), ws2.models_dir() / name);
        }
        const Captioner cap2 = ensure_captioner(ws2);
        const SweepResult sweep2 = run_epsilon_sweep(ws2, cap2);
        run_keyword_analysis(ws2, cap2, sweep2.records);
        std::size_t differing = 0, compared = 0;
        for (const auto& sub : {"reports", "results", "models"}) {
            for (const auto& entry : fs::directory_iterator(cfg2.out / sub)) {
                const fs::path other = cfg.out / sub / entry.path().filename();
                ++compared;
                if (!fs::exists(other) || file_bytes(other) != file_bytes(entry.path())) {
                    ++differing;
                    logfile << "differs: " << entry.path() << "\n";
                }
            }
        }
        // Reports rebuilt from stored records match the originals.
        const std::string before = file_bytes(ws.reports_dir() / "sweep.csv") + file_bytes(ws.reports_dir() / "keywords.csv");
        rebuild_reports(ws);
        const std::string after = file_bytes(ws.reports_dir() / "sweep.csv") + file_bytes(ws.reports_dir() / "keywords.csv");
        report(11, ckpt_ok && manifest_ok && differing == 0 && compared > 0 && before == after && leaked == 0,
               std::to_string(compared) + " artifacts compared after retraining (captioner + " + std::to_string(retrained) +
                   " generators), " + std::to_string(differing) + " differ; checkpoint round trip " + (ckpt_ok ? "exact" : "differs") +
                   ", manifest round trip " + (manifest_ok ? "exact" : "differs") + ", held-out ids in training " +
                   std::to_string(leaked));
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 2;
    }

    std::size_t passed = 0;
    for (const auto& v : verdicts) passed += v.pass;
    std::printf("%zu/%zu criteria passed\n", passed, verdicts.size());
    return passed == verdicts.size() ? 0 : 1;
}
