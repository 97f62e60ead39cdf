#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace featfool::lexmetrics {

using TokenSeq = std::vector<std::string>;

// Whitespace split, sentinels (<bos>, <eos>, <pad>) dropped, ASCII lowercase,
// punctuation removed, empty tokens dropped.
TokenSeq tokenize(std::string_view text);
std::string join(const TokenSeq& tokens);

// Sentence BLEU up to order n: clipped n-gram precisions, geometric mean,
// brevity penalty against the closest reference length (shorter on ties).
double bleu_n(const TokenSeq& candidate, const std::vector<TokenSeq>& references, int n);

// Symmetric word relation used by the third METEOR stage.
class SynonymTable {
   public:
    void add(const std::string& a, const std::string& b);
    bool related(const std::string& a, const std::string& b) const;
    bool empty() const { return pairs_.empty(); }
    // Two whitespace-separated columns per line; '#' starts a comment.
    static SynonymTable load(const std::string& path);
    static SynonymTable parse(std::string_view text);

   private:
    std::set<std::pair<std::string, std::string>> pairs_;
};

// Suffix stripping with the shipped rule table.
std::string stem(const std::string& word);

struct MeteorAlignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (candidate, reference), by candidate index
    std::size_t chunks = 0;
};

MeteorAlignment meteor_align(const TokenSeq& candidate, const TokenSeq& reference, const SynonymTable* synonyms);

double meteor(const TokenSeq& candidate, const TokenSeq& reference, const SynonymTable* synonyms = nullptr);
// Best score over references; 0 for an empty list.
double meteor_multi(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
                    const SynonymTable* synonyms = nullptr);

// LCS-based F-measure with beta = 1.2.
double rouge_l(const TokenSeq& candidate, const TokenSeq& reference);
double rouge_l_multi(const TokenSeq& candidate, const std::vector<TokenSeq>& references);

// Plain CIDEr (n = 1..4, x10) with document frequencies taken once from the
// corpus references.
class CiderScorer {
   public:
    explicit CiderScorer(const std::map<std::string, std::vector<TokenSeq>>& corpus);

    // Throws DomainError when the image id is not part of the corpus.
    double score(const std::string& image_id, const TokenSeq& candidate) const;
    std::size_t image_count() const { return refs_.size(); }

   private:
    using Vec = std::map<std::string, double>;
    std::array<Vec, 4> vectorize(const TokenSeq& tokens) const;

    std::map<std::string, std::vector<TokenSeq>> refs_;
    std::unordered_map<std::string, std::size_t> df_;
    double log_images_ = 0.0;
};

bool exact_match(const TokenSeq& candidate, const TokenSeq& target);

// METEOR strictly above tau. Throws DomainError for a negative tau.
bool success_at_tau(double meteor_score, double tau);

// Class words of the top predictions that also occur in the target caption,
// in prediction order. Throws DomainError for more than three predictions
// and ConfigError for a class without a lexicon entry.
std::vector<std::string> select_keywords(const std::vector<std::size_t>& top3,
                                         const std::vector<std::string>& class_lexicon,
                                         const TokenSeq& target_caption);

// True iff at least k keywords appear in the prediction; false whenever
// k exceeds the keyword count. Throws DomainError for k == 0.
bool keyword_success(const TokenSeq& predicted, const std::vector<std::string>& keywords, std::size_t k);

// ---- mini-SPICE ----

enum class TupleKind { object, attribute, relation };

struct SemTuple {
    TupleKind kind = TupleKind::object;
    std::vector<std::string> args;

    auto operator<=>(const SemTuple&) const = default;
    bool operator==(const SemTuple&) const = default;
};

std::string to_string(const SemTuple& t);

struct CaptionGrammar {
    std::set<std::string> determiners;
    std::set<std::string> attributes;
    std::set<std::string> objects;
    // Relation phrases (one or more tokens) and their canonical form; a
    // reversed relation swaps its arguments.
    struct RelationRule {
        TokenSeq words;
        std::string canonical;
        bool reversed = false;
    };
    std::vector<RelationRule> relations;

    // The scene-caption language.
    static CaptionGrammar scenes();
};

struct ParseResult {
    std::set<SemTuple> tuples;
    bool complete = false;  // the whole caption matched NP [REL NP]
};

ParseResult parse_caption(const TokenSeq& caption, const CaptionGrammar& grammar);
std::set<SemTuple> parse_caption_tuples(const TokenSeq& caption, const CaptionGrammar& grammar);

// F1 of exact tuple matches; 0 when either set is empty.
double spice_f1(const std::set<SemTuple>& candidate, const std::set<SemTuple>& reference);

// ---- combined report ----

struct MetricReport {
    std::array<double, 4> bleu{};
    double meteor = 0.0;
    double rouge_l = 0.0;
    double cider = 0.0;
    double spice_f1 = 0.0;
    bool exact = false;
};

// Every metric for one candidate against its references. Exact match holds
// when any reference matches; mini-SPICE uses the union of reference tuples.
MetricReport score_pair(const std::string& image_id, const TokenSeq& candidate, const std::vector<TokenSeq>& references,
                        const CiderScorer& cider, const CaptionGrammar& grammar,
                        const SynonymTable* synonyms = nullptr);

struct PairRecord {
    std::string id;
    std::string candidate;
    std::vector<std::string> references;
};

// Lines of "id <TAB> candidate <TAB> ref1 [<TAB> ref2 ...]".
std::vector<PairRecord> parse_pairs(std::string_view text);
std::vector<PairRecord> load_pairs(const std::string& path);

}  // namespace featfool::lexmetrics
