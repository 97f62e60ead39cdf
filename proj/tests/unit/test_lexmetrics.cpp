#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "featfool/errors.hpp"
#include "featfool/lexmetrics/metrics.hpp"

using namespace featfool;
using namespace featfool::lexmetrics;

namespace {

const std::string kFixtures = FEATFOOL_FIXTURE_DIR;

TokenSeq T(const char* s) { return tokenize(s); }

struct Expected {
    std::array<double, 4> bleu;
    double meteor, rouge, cider, spice;
    bool exact;
};

std::map<std::string, Expected> load_expected() {
    std::ifstream is(kFixtures + "/metric_expected.tsv");
    std::map<std::string, Expected> out;
    std::string id;
    Expected e;
    int exact = 0;
    while (is >> id >> e.bleu[0] >> e.bleu[1] >> e.bleu[2] >> e.bleu[3] >> e.meteor >> e.rouge >> e.cider >> e.spice >>
           exact) {
        e.exact = exact != 0;
        out[id] = e;
    }
    return out;
}

}  // namespace

TEST(Tokenize, Examples) {
    EXPECT_EQ(T("A red Circle."), (TokenSeq{"a", "red", "circle"}));
    EXPECT_TRUE(T("").empty());
    EXPECT_EQ(T("<bos> a cross <eos>"), (TokenSeq{"a", "cross"}));
    const TokenSeq once = T("  Hello,  World!!  ... x ");
    EXPECT_EQ(tokenize(join(once)), once);
    for (const auto& t : T("; , . a")) EXPECT_FALSE(t.empty());
}

TEST(Bleu, Examples) {
    const TokenSeq c = T("a red circle above a blue square");
    for (int n = 1; n <= 4; ++n) EXPECT_DOUBLE_EQ(bleu_n(c, {c}, n), 1.0);
    EXPECT_NEAR(bleu_n(T("a red circle"), {c}, 1), std::exp(1.0 - 7.0 / 3.0), 1e-12);
    EXPECT_NEAR(bleu_n(T("a red circle"), {c}, 1), 0.2636, 1e-4);
    EXPECT_EQ(bleu_n(T("x y z"), {c}, 1), 0.0);
    EXPECT_EQ(bleu_n(T("a red"), {c}, 3), 0.0);
    EXPECT_THROW(bleu_n(c, {}, 1), DomainError);
}

TEST(Meteor, Examples) {
    const TokenSeq c = T("a red circle above a blue square");
    EXPECT_NEAR(meteor(c, c), 0.99854, 1e-5);
    EXPECT_NEAR(meteor(c, c), 1.0 - 0.5 / 343.0, 1e-12);
    EXPECT_EQ(meteor(T("x y"), c), 0.0);

    SynonymTable syn;
    syn.add("picture", "photo");
    EXPECT_EQ(meteor(T("picture"), T("photo")), 0.0);
    const auto a = meteor_align(T("a picture"), T("a photo"), &syn);
    EXPECT_EQ(a.pairs.size(), 2u);
    EXPECT_GT(meteor(T("a picture"), T("a photo"), &syn), meteor(T("a picture"), T("a photo")));
}

TEST(Meteor, StemStage) {
    EXPECT_EQ(stem("circles"), "circle");
    EXPECT_EQ(stem("crosses"), "cross");
    EXPECT_EQ(stem("cross"), "cross");
    EXPECT_EQ(meteor_align(T("circles"), T("circle"), nullptr).pairs.size(), 1u);
}

TEST(Meteor, AsymmetricOverall) {
    // Same matches, different lengths: precision and recall trade places.
    const TokenSeq shorter = T("a red circle");
    const TokenSeq longer = T("a red circle above a blue square");
    EXPECT_NE(meteor(shorter, longer), meteor(longer, shorter));
    EXPECT_EQ(meteor_align(shorter, longer, nullptr).pairs.size(), meteor_align(longer, shorter, nullptr).pairs.size());
}

TEST(Meteor, FewestCrossingsWins) {
    // Both "a" tokens could go either way; the uncrossed alignment has one chunk.
    const auto a = meteor_align(T("a b a"), T("a b a"), nullptr);
    EXPECT_EQ(a.chunks, 1u);
}

TEST(RougeL, Examples) {
    const TokenSeq c = T("a red circle");
    EXPECT_DOUBLE_EQ(rouge_l(c, c), 1.0);
    EXPECT_NEAR(rouge_l(c, T("a blue circle")), 2.0 / 3.0, 1e-12);
    EXPECT_EQ(rouge_l(c, T("x y z")), 0.0);
}

TEST(Cider, Examples) {
    const std::map<std::string, std::vector<TokenSeq>> corpus{
        {"img1", {T("a red circle above a blue square")}},
        {"img2", {T("one green cross below yellow triangles")}},
    };
    const CiderScorer scorer(corpus);
    EXPECT_NEAR(scorer.score("img1", T("a red circle above a blue square")), 10.0, 1e-12);
    EXPECT_EQ(scorer.score("img1", T("zebra")), 0.0);
    EXPECT_THROW(scorer.score("img3", T("a")), DomainError);

    const CiderScorer single({{"only", {T("a red circle above a blue square")}}});
    EXPECT_EQ(single.score("only", T("a red circle above a blue square")), 0.0);
}

TEST(ExactMatch, Examples) {
    EXPECT_TRUE(exact_match(T("a red circle"), T("a red circle")));
    EXPECT_TRUE(exact_match(T("A Red circle."), T("a red CIRCLE")));
    EXPECT_FALSE(exact_match(T("a red circle"), T("a blue circle")));
}

TEST(SuccessAtTau, Examples) {
    EXPECT_TRUE(success_at_tau(0.18, 0.15));
    EXPECT_FALSE(success_at_tau(0.15, 0.15));
    EXPECT_THROW(success_at_tau(0.5, -0.1), DomainError);
}

TEST(Keywords, SelectAndSucceed) {
    const std::vector<std::string> lexicon{"dog", "frisbee", "grass", "cat"};
    const auto kw = select_keywords({0, 1, 2}, lexicon, T("a dog catches a frisbee"));
    EXPECT_EQ(kw, (std::vector<std::string>{"dog", "frisbee"}));
    EXPECT_TRUE(select_keywords({3}, lexicon, T("a dog")).empty());
    EXPECT_EQ(select_keywords({0, 1, 2}, lexicon, T("dog frisbee grass")).size(), 3u);
    EXPECT_THROW(select_keywords({7}, lexicon, T("dog")), ConfigError);
    EXPECT_THROW(select_keywords({0, 1, 2, 3}, lexicon, T("dog")), DomainError);

    EXPECT_TRUE(keyword_success(T("a dog runs"), kw, 1));
    EXPECT_FALSE(keyword_success(T("a dog runs"), kw, 2));
    for (std::size_t k = 1; k <= 3; ++k) EXPECT_FALSE(keyword_success(T("a dog"), {}, k));
    for (std::size_t k = 2; k <= 3; ++k) {
        if (keyword_success(T("dog frisbee"), kw, k)) EXPECT_TRUE(keyword_success(T("dog frisbee"), kw, k - 1));
    }
}

TEST(MiniSpice, ParseExamples) {
    const auto g = CaptionGrammar::scenes();
    const auto full = parse_caption(T("a red circle above a blue square"), g);
    EXPECT_TRUE(full.complete);
    const std::set<SemTuple> want{{TupleKind::object, {"circle"}},
                                  {TupleKind::object, {"square"}},
                                  {TupleKind::attribute, {"red", "circle"}},
                                  {TupleKind::attribute, {"blue", "square"}},
                                  {TupleKind::relation, {"circle", "above", "square"}}};
    EXPECT_EQ(full.tuples, want);
    EXPECT_EQ(parse_caption_tuples(T("a blue square below a red circle"), g), want);
    EXPECT_EQ(parse_caption_tuples(T("a circle"), g), (std::set<SemTuple>{{TupleKind::object, {"circle"}}}));
    EXPECT_TRUE(parse_caption_tuples(T("zebra quux"), g).empty());
    EXPECT_FALSE(parse_caption(T("circle circle above"), g).complete);
    EXPECT_EQ(parse_caption_tuples(T("a green square right of a red cross"), g),
              parse_caption_tuples(T("a red cross left of a green square"), g));
}

TEST(MiniSpice, F1Examples) {
    const std::set<SemTuple> a{{TupleKind::object, {"a"}}, {TupleKind::object, {"b"}}, {TupleKind::object, {"c"}},
                               {TupleKind::object, {"d"}}};
    const std::set<SemTuple> b{{TupleKind::object, {"a"}}, {TupleKind::object, {"b"}}, {TupleKind::object, {"e"}},
                               {TupleKind::object, {"f"}}};
    EXPECT_DOUBLE_EQ(spice_f1(a, a), 1.0);
    EXPECT_DOUBLE_EQ(spice_f1(a, b), 0.5);
    EXPECT_EQ(spice_f1(a, {{TupleKind::object, {"z"}}}), 0.0);
    EXPECT_EQ(spice_f1({}, {}), 0.0);
}

TEST(Metrics, RangesOnArbitraryInput) {
    const std::vector<const char*> texts{"",        "a",          "a a a a a",        "red circle a above",
                                         "x y z w", "a red cross", "of of of left of", "a blue square below a red"};
    std::map<std::string, std::vector<TokenSeq>> corpus;
    for (std::size_t i = 0; i < texts.size(); ++i) corpus["i" + std::to_string(i)] = {T(texts[i])};
    const CiderScorer cider(corpus);
    const auto g = CaptionGrammar::scenes();
    for (std::size_t i = 0; i < texts.size(); ++i) {
        for (std::size_t j = 0; j < texts.size(); ++j) {
            const auto m = score_pair("i" + std::to_string(j), T(texts[i]), {T(texts[j])}, cider, g);
            for (double b : m.bleu) {
                EXPECT_GE(b, 0.0);
                EXPECT_LE(b, 1.0 + 1e-12);
            }
            EXPECT_GE(m.meteor, 0.0);
            EXPECT_LE(m.meteor, 1.0);
            EXPECT_GE(m.rouge_l, 0.0);
            EXPECT_LE(m.rouge_l, 1.0 + 1e-12);
            EXPECT_GE(m.cider, 0.0);
            EXPECT_LE(m.cider, 10.0 + 1e-9);
            EXPECT_GE(m.spice_f1, 0.0);
            EXPECT_LE(m.spice_f1, 1.0);
        }
    }
}

TEST(Metrics, CaseAndPunctuationInvariance) {
    const std::map<std::string, std::vector<TokenSeq>> corpus{{"x", {T("a red circle above a blue square")}},
                                                              {"y", {T("one cross")}}};
    const CiderScorer cider(corpus);
    const auto g = CaptionGrammar::scenes();
    const auto a = score_pair("x", T("a red circle above a square"), corpus.at("x"), cider, g);
    const auto b = score_pair("x", T("A Red Circle above a SQUARE."), corpus.at("x"), cider, g);
    EXPECT_EQ(a.bleu, b.bleu);
    EXPECT_EQ(a.meteor, b.meteor);
    EXPECT_EQ(a.rouge_l, b.rouge_l);
    EXPECT_EQ(a.cider, b.cider);
    EXPECT_EQ(a.spice_f1, b.spice_f1);
}

TEST(Metrics, FrozenFixtureMatchesOracle) {
    const auto pairs = load_pairs(kFixtures + "/metric_pairs.tsv");
    const auto expected = load_expected();
    const auto syn = SynonymTable::load(kFixtures + "/synonyms.txt");
    ASSERT_EQ(pairs.size(), 20u);
    ASSERT_EQ(expected.size(), 20u);
    std::map<std::string, std::vector<TokenSeq>> corpus;
    for (const auto& p : pairs) {
        for (const auto& r : p.references) corpus[p.id].push_back(tokenize(r));
    }
    const CiderScorer cider(corpus);
    const auto g = CaptionGrammar::scenes();
    for (const auto& p : pairs) {
        const auto m = score_pair(p.id, tokenize(p.candidate), corpus[p.id], cider, g, &syn);
        const Expected& e = expected.at(p.id);
        for (std::size_t n = 0; n < 4; ++n) EXPECT_NEAR(m.bleu[n], e.bleu[n], 1e-6) << p.id << " bleu" << n + 1;
        EXPECT_NEAR(m.meteor, e.meteor, 1e-6) << p.id;
        EXPECT_NEAR(m.rouge_l, e.rouge, 1e-6) << p.id;
        EXPECT_NEAR(m.cider, e.cider, 1e-6) << p.id;
        EXPECT_NEAR(m.spice_f1, e.spice, 1e-6) << p.id;
        EXPECT_EQ(m.exact, e.exact) << p.id;
    }
}
