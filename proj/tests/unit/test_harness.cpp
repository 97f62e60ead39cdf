#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "featfool/errors.hpp"
#include "featfool/harness/checkpoint.hpp"
#include "featfool/harness/config.hpp"
#include "featfool/harness/experiments.hpp"
#include "featfool/harness/report.hpp"
#include "featfool/models/decoder.hpp"
#include "featfool/models/encoder.hpp"

using namespace featfool;
using namespace featfool::harness;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("featfool_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Checkpoint sample_checkpoint() {
    models::Encoder enc(models::EncoderConfig{}, 3);
    Checkpoint ck;
    ck.add("encoder.", enc.parameters());
    ck.add_meta("meta.x", {1, 2, 3});
    return ck;
}

ExampleRecord record(double eps, bool exact, std::array<bool, 3> tau, double l2, std::string predicted = "a red circle") {
    ExampleRecord r;
    r.experiment = "sweep";
    r.method = "internal-layer";
    r.decoder = "seen";
    r.seed = 7;
    r.epsilon = eps;
    r.source_id = "val-0001";
    r.source_class = 1;
    r.target_id = "train-0002";
    r.l2 = l2;
    r.linf = eps;
    r.pre_clip_linf = eps * 0.9;
    r.meteor = tau[0] ? 0.5 : 0.1;
    r.exact = exact;
    r.tau = tau;
    r.predicted = std::move(predicted);
    r.target_caption = "a blue circle above a red square";
    return r;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
    const fs::path dir = temp_dir("ckpt");
    const Checkpoint ck = sample_checkpoint();
    save_checkpoint(ck, dir / "a.ffck");
    const Checkpoint back = load_checkpoint(dir / "a.ffck");
    EXPECT_EQ(back, ck);

    models::Encoder other(models::EncoderConfig{}, 99);
    back.restore("encoder.", other.parameters());
    models::Encoder ref(models::EncoderConfig{}, 3);
    EXPECT_EQ(models::checksum(other.parameters()), models::checksum(ref.parameters()));
    EXPECT_EQ(back.meta("meta.x"), (std::vector<double>{1, 2, 3}));
}

TEST(Checkpoint, HeaderLayout) {
    const std::string bytes = encode_checkpoint(sample_checkpoint());
    ASSERT_GE(bytes.size(), 12u);
    EXPECT_EQ(bytes.substr(0, 4), "FFCK");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), kCheckpointVersion);
    EXPECT_EQ(bytes[5], 0);
}

TEST(Checkpoint, CorruptMagicRejected) {
    std::string bytes = encode_checkpoint(sample_checkpoint());
    bytes[0] = 'X';
    try {
        decode_checkpoint(bytes);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("offset 0"), std::string::npos);
    }
}

TEST(Checkpoint, NextVersionRejected) {
    std::string bytes = encode_checkpoint(sample_checkpoint());
    bytes[4] = static_cast<char>(kCheckpointVersion + 1);
    try {
        decode_checkpoint(bytes);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("offset 4"), std::string::npos);
    }
}

TEST(Checkpoint, TruncationNamesOffset) {
    const std::string bytes = encode_checkpoint(sample_checkpoint());
    for (std::size_t cut : {std::size_t{6}, std::size_t{13}, bytes.size() - 1}) {
        try {
            decode_checkpoint(bytes.substr(0, cut));
            FAIL() << "expected FormatError at cut " << cut;
        } catch (const FormatError& e) {
            EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
        }
    }
    EXPECT_THROW(decode_checkpoint(bytes + "x"), FormatError);
}

TEST(Checkpoint, RestoreChecksNamesAndShapes) {
    const Checkpoint ck = sample_checkpoint();
    models::DecoderConfig dc;
    dc.vocab_size = 10;
    models::Decoder dec(dc, 1);
    EXPECT_THROW(ck.restore("encoder.", dec.parameters()), ConfigError);
    EXPECT_THROW(ck.meta("missing"), ConfigError);
    EXPECT_THROW(load_checkpoint("/nonexistent/x.ffck"), IoError);
}

TEST(Report, Fmt4) {
    EXPECT_EQ(fmt4(0.0), "0.0000");
    EXPECT_EQ(fmt4(-0.0), "0.0000");
    EXPECT_EQ(fmt4(-1e-9), "0.0000");
    EXPECT_EQ(fmt4(1.23456), "1.2346");
    EXPECT_EQ(fmt4(100.0), "100.0000");
    EXPECT_EQ(fmt4(std::nan("")), "nan");
}

TEST(Report, CsvRoundTripIsByteIdentical) {
    Table t;
    t.title = "x";
    t.columns = {"name", "value", "note"};
    t.add_row({"a", fmt4(1.5), "plain"});
    t.add_row({"b,c", fmt4(2.0), "say \"hi\""});
    t.add_row({"", fmt4(0.25), "multi\nline"});
    const std::string csv = to_csv(t);
    const Table back = parse_csv(csv);
    EXPECT_EQ(back.columns, t.columns);
    EXPECT_EQ(back.rows, t.rows);
    EXPECT_EQ(to_csv(back), csv);
    EXPECT_DOUBLE_EQ(back.number(1, "value"), 2.0);
    EXPECT_THROW(back.number(0, "note"), ParseError);
    EXPECT_THROW(back.column("nope"), DomainError);
}

TEST(Report, CsvErrors) {
    EXPECT_THROW(parse_csv(""), ParseError);
    EXPECT_THROW(parse_csv("a,b\n1\n"), ParseError);
    EXPECT_THROW(parse_csv("a,b\n\"1,2\n"), ParseError);
    Table t;
    t.columns = {"a"};
    EXPECT_THROW(t.add_row({"1", "2"}), ShapeError);
}

TEST(Report, MarkdownLayout) {
    Table t;
    t.title = "Sweep";
    t.columns = {"criterion", "eps=0.1000 acc%"};
    t.add_row({"exact", "12.5000"});
    const std::string md = to_markdown(t);
    EXPECT_EQ(md, "### Sweep\n\n| criterion | eps=0.1000 acc% |\n| --- | ---: |\n| exact | 12.5000 |\n");
}

TEST(Report, UnwritablePathIsIoError) {
    Table t;
    t.columns = {"a"};
    EXPECT_THROW(emit_report(t, "/nonexistent-dir/sub/report", ReportFormat::csv), IoError);
}

TEST(RunConfigText, RoundTripAndPrecedence) {
    RunConfig cfg;
    const std::string text = format_run_config(cfg);
    RunConfig back;
    back.train_epochs = 3;
    apply_config_text(back, text);
    EXPECT_EQ(format_run_config(back), text);

    apply_config_text(back, "# comment\n eps = 0.05, 0.25 \nattack_seed=9  # trailing\n\n");
    EXPECT_EQ(back.eps, (std::vector<double>{0.05, 0.25}));
    EXPECT_EQ(back.attack_seed, 9u);
    set_config_value(back, "attack_seed", "11");
    EXPECT_EQ(get_config_value(back, "attack_seed"), "11");
}

TEST(RunConfigText, EveryKeyHasADefault) {
    const RunConfig cfg;
    for (const auto& key : config_keys()) EXPECT_FALSE(get_config_value(cfg, key).empty()) << key;
    EXPECT_NO_THROW(cfg.validate());
}

TEST(RunConfigText, Errors) {
    RunConfig cfg;
    EXPECT_THROW(apply_config_text(cfg, "no equals sign\n"), ParseError);
    EXPECT_THROW(apply_config_text(cfg, " = 3\n"), ParseError);
    EXPECT_THROW(set_config_value(cfg, "bogus", "1"), ConfigError);
    EXPECT_THROW(set_config_value(cfg, "jobs", "-1"), ConfigError);
    EXPECT_THROW(set_config_value(cfg, "gen_lr", "fast"), ConfigError);
    cfg.refine_rule = "newton";
    EXPECT_THROW(cfg.validate(), ConfigError);
    RunConfig c2;
    c2.eps = {0.0};
    EXPECT_THROW(c2.validate(), ConfigError);
    RunConfig c3;
    c3.taus = {0.1, 0.2, 0.3};
    EXPECT_THROW(c3.validate(), ConfigError);
}

TEST(RunConfigText, MapsOntoAttackAndTrainerOptions) {
    RunConfig cfg;
    cfg.gen_loss = "squared-error";
    const auto a = cfg.attack_config(0.3, 5);
    EXPECT_EQ(a.epsilon, 0.3);
    EXPECT_EQ(a.seed, 5u);
    EXPECT_EQ(a.epochs, 300u);
    EXPECT_EQ(a.gen_lr, 1e-4);
    EXPECT_EQ(a.gen_loss, attacks::GenLossKind::squared_error);
    EXPECT_EQ(cfg.captioner_options().max_shift, cfg.max_shift);
}

TEST(Records, JsonlRoundTrip) {
    std::vector<ExampleRecord> rs{record(0.1, true, {true, true, true}, 1.25, "a \"quoted\" caption"),
                                  record(0.2, false, {true, false, false}, 0.1 + 0.2)};
    const std::string text = to_jsonl(rs);
    EXPECT_EQ(parse_jsonl(text), rs);
    EXPECT_EQ(to_jsonl(parse_jsonl(text)), text);
    EXPECT_THROW(parse_jsonl("{\"experiment\": 1}\n"), ParseError);
    EXPECT_THROW(parse_jsonl("not json\n"), ParseError);
}

TEST(SweepTable, LayoutAndMeans) {
    std::vector<ExampleRecord> rs{record(0.1, true, {true, true, true}, 2.0), record(0.1, false, {true, false, false}, 4.0),
                                  record(0.1, false, {false, false, false}, 9.0), record(0.2, false, {false, false, false}, 1.0)};
    const Table t = sweep_table(rs, {0.1, 0.2}, {0.15, 0.2, 0.25});
    ASSERT_EQ(t.rows.size(), 4u);
    ASSERT_EQ(t.columns.size(), 5u);
    EXPECT_EQ(t.rows[0][0], "exact");
    EXPECT_EQ(t.rows[1][0], "tau=0.1500");
    EXPECT_NEAR(t.number(0, "eps=0.1000 acc%"), 100.0 / 3.0, 1e-4);
    EXPECT_NEAR(t.number(0, "eps=0.1000 l2"), 2.0, 1e-12);
    EXPECT_NEAR(t.number(1, "eps=0.1000 acc%"), 200.0 / 3.0, 1e-4);
    EXPECT_NEAR(t.number(1, "eps=0.1000 l2"), 3.0, 1e-12);
    EXPECT_EQ(t.rows[1][4], "nan");
    EXPECT_EQ(t.number(2, "eps=0.2000 acc%"), 0.0);
}

TEST(SweepTable, ExactNeverExceedsTauRows) {
    // Flags are monotone per record, so the table rows are ordered columnwise.
    std::vector<ExampleRecord> rs;
    for (int i = 0; i < 40; ++i) {
        const bool t25 = i % 5 == 0, t20 = t25 || i % 4 == 0, t15 = t20 || i % 3 == 0;
        rs.push_back(record(0.05 * (1 + i % 4), t25 && i % 2 == 0, {t15, t20, t25}, 0.5 + i));
    }
    const Table t = sweep_table(rs, {0.05, 0.1, 0.15, 0.2}, {0.15, 0.2, 0.25});
    for (std::size_t c = 1; c < t.columns.size(); c += 2) {
        const double exact = std::stod(t.rows[0][c]);
        const double a15 = std::stod(t.rows[1][c]), a20 = std::stod(t.rows[2][c]), a25 = std::stod(t.rows[3][c]);
        EXPECT_LE(exact, a25);
        EXPECT_LE(a25, a20);
        EXPECT_LE(a20, a15);
    }
}

TEST(KeywordTable, MonotoneAndEmptyRowFlagged) {
    std::vector<ExampleRecord> rs{record(0.1, false, {false, false, false}, 1.0, "a blue circle"),
                                  record(0.1, false, {false, false, false}, 3.0, "a blue circle above a red square"),
                                  record(0.1, false, {false, false, false}, 5.0, "a green cross"),
                                  record(0.1, true, {true, true, true}, 7.0, "a blue circle above a red square")};
    const Table t = keyword_table(rs, {0.1, 0.2}, {"circle", "square"});
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0][1], "3");
    EXPECT_EQ(t.rows[0][2], "ok");
    EXPECT_NEAR(t.number(0, "1-keyword %"), 200.0 / 3.0, 1e-4);
    EXPECT_NEAR(t.number(0, "2-keyword %"), 100.0 / 3.0, 1e-4);
    EXPECT_EQ(t.number(0, "3-keyword %"), 0.0);
    EXPECT_NEAR(t.number(0, "avg l2"), 3.0, 1e-12);
    EXPECT_NEAR(t.number(0, "1-keyword l2"), 2.0, 1e-12);
    EXPECT_EQ(t.rows[1][2], "empty");
    EXPECT_EQ(t.number(1, "1-keyword %"), 0.0);
    EXPECT_EQ(t.rows[1][6], "nan");
}

TEST(ParallelFor, CoversEveryIndexAndRethrowsFirstError) {
    std::vector<int> hits(50, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, 3,
                              [](std::size_t i) {
                                  if (i == 7) throw DomainError("seven");
                              }),
                 DomainError);
    parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

// Whole-pipeline determinism on a miniature corpus: identical seeds give
// byte-identical reports regardless of the job count.
TEST(Pipeline, TinyRunIsDeterministicAcrossJobCounts) {
    auto run = [](const std::string& name, std::size_t jobs) {
        RunConfig cfg;
        const fs::path dir = temp_dir(name);
        cfg.corpus = dir / "corpus";
        cfg.out = dir / "out";
        cfg.train_size = 24;
        cfg.val_size = 8;
        cfg.test_size = 4;
        cfg.train_epochs = 2;
        cfg.attack_epochs = 2;
        cfg.gen_sources = 4;
        cfg.refine_steps = 2;
        cfg.eps = {0.1, 0.3};
        cfg.jobs = jobs;
        std::ostringstream log;
        Workspace ws(cfg, log);
        const Captioner c = ensure_captioner(ws);
        const auto sweep = run_epsilon_sweep(ws, c);
        EXPECT_EQ(sweep.budget_violations, 0u);
        EXPECT_EQ(sweep.crafting_decoder_evaluations, 0u);
        run_keyword_analysis(ws, c, sweep.records);
        const Table contamination = contamination_table(ws);
        for (std::size_t r = 0; r < contamination.rows.size(); ++r) EXPECT_EQ(contamination.rows[r][3], "0");
        return std::make_pair(read_text(ws.reports_dir() / "sweep.csv") + read_text(ws.reports_dir() / "keywords.csv"),
                              read_text(ws.results_dir() / "sweep.jsonl"));
    };
    const auto a = run("det_a", 1);
    const auto b = run("det_b", 3);
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
}
