#include "featfool/lexmetrics/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "featfool/errors.hpp"

namespace featfool::lexmetrics {

namespace {

bool is_sentinel(std::string_view w) { return w == "<bos>" || w == "<eos>" || w == "<pad>"; }

using NgramCounts = std::map<TokenSeq, std::size_t>;

NgramCounts ngrams(const TokenSeq& t, std::size_t n) {
    NgramCounts out;
    if (t.size() < n) return out;
    for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[TokenSeq(t.begin() + i, t.begin() + i + n)];
    return out;
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
    TokenSeq out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            const std::string_view raw = text.substr(i, j - i);
            if (!is_sentinel(raw)) {
                std::string w;
                for (char ch : raw) {
                    const auto c = static_cast<unsigned char>(ch);
                    if (std::ispunct(c)) continue;
                    w += static_cast<char>(std::tolower(c));
                }
                if (!w.empty()) out.push_back(std::move(w));
            }
        }
        i = j;
    }
    return out;
}

std::string join(const TokenSeq& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

double bleu_n(const TokenSeq& candidate, const std::vector<TokenSeq>& references, int n) {
    if (references.empty()) throw DomainError("bleu_n needs at least one reference");
    if (n < 1) throw DomainError("bleu_n order must be >= 1");
    if (candidate.empty()) return 0.0;
    double log_sum = 0.0;
    for (int k = 1; k <= n; ++k) {
        const auto cand = ngrams(candidate, static_cast<std::size_t>(k));
        if (cand.empty()) return 0.0;
        NgramCounts max_ref;
        for (const auto& r : references) {
            for (const auto& [g, c] : ngrams(r, static_cast<std::size_t>(k))) max_ref[g] = std::max(max_ref[g], c);
        }
        std::size_t clipped = 0;
        std::size_t total = 0;
        for (const auto& [g, c] : cand) {
            total += c;
            auto it = max_ref.find(g);
            if (it != max_ref.end()) clipped += std::min(c, it->second);
        }
        if (clipped == 0) return 0.0;
        log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total));
    }
    const double c = static_cast<double>(candidate.size());
    std::size_t best_len = references.front().size();
    for (const auto& r : references) {
        const auto d = [&](std::size_t len) { return std::abs(static_cast<double>(len) - c); };
        if (d(r.size()) < d(best_len) || (d(r.size()) == d(best_len) && r.size() < best_len)) best_len = r.size();
    }
    const double r = static_cast<double>(best_len);
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_sum / n);
}

// ---- METEOR ----

void SynonymTable::add(const std::string& a, const std::string& b) {
    pairs_.emplace(a, b);
    pairs_.emplace(b, a);
}

bool SynonymTable::related(const std::string& a, const std::string& b) const { return pairs_.count({a, b}) != 0; }

SynonymTable SynonymTable::parse(std::string_view text) {
    SynonymTable t;
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string a, b, extra;
        if (!(ls >> a)) continue;
        if (!(ls >> b) || (ls >> extra)) {
            throw ParseError("synonym table line " + std::to_string(lineno) + ": expected two columns");
        }
        t.add(join(tokenize(a)), join(tokenize(b)));
    }
    return t;
}

SynonymTable SynonymTable::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read synonym table " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

namespace {

struct StemRule {
    const char* suffix;
    const char* replacement;
    std::size_t min_stem;
};

constexpr StemRule kStemRules[] = {
#include "stem_rules.inc"
};

enum class Stage { exact, stem, synonym };

using Pair = std::pair<std::size_t, std::size_t>;

std::size_t crossings_with(const Pair& p, const std::vector<Pair>& others) {
    std::size_t n = 0;
    for (const auto& q : others) {
        if ((p.first < q.first && p.second > q.second) || (p.first > q.first && p.second < q.second)) ++n;
    }
    return n;
}

// Maximum matching size between the open candidate and reference positions
// (Kuhn's augmenting paths).
std::size_t max_matching(const std::vector<std::vector<std::size_t>>& adj, std::size_t ref_size) {
    std::vector<std::size_t> owner(ref_size, std::numeric_limits<std::size_t>::max());
    std::size_t size = 0;
    for (std::size_t u = 0; u < adj.size(); ++u) {
        std::vector<bool> seen(ref_size, false);
        std::function<bool(std::size_t)> augment = [&](std::size_t v) {
            for (std::size_t r : adj[v]) {
                if (seen[r]) continue;
                seen[r] = true;
                if (owner[r] == std::numeric_limits<std::size_t>::max() || augment(owner[r])) {
                    owner[r] = v;
                    return true;
                }
            }
            return false;
        };
        if (augment(u)) ++size;
    }
    return size;
}

// Among maximum matchings of one stage, the one with the fewest crossings
// (against itself and the pairs fixed by earlier stages); remaining ties go
// to the lexicographically smallest reference assignment in candidate order.
class StageSearch {
   public:
    StageSearch(const std::vector<std::size_t>& cand_pos, const std::vector<std::vector<std::size_t>>& adj,
                const std::vector<Pair>& fixed, std::size_t target)
        : cand_pos_(cand_pos), adj_(adj), fixed_(fixed), target_(target) {}

    std::vector<Pair> run() {
        std::vector<bool> used_ref;
        for (const auto& a : adj_) {
            for (std::size_t r : a) used_ref.resize(std::max(used_ref.size(), r + 1), false);
        }
        used_ = used_ref;
        dfs(0, 0, 0);
        return best_;
    }

   private:
    void dfs(std::size_t idx, std::size_t matched, std::size_t crossings) {
        if (found_ && crossings >= best_crossings_) return;
        if (matched + (cand_pos_.size() - idx) < target_) return;
        if (idx == cand_pos_.size()) {
            if (matched == target_) {
                found_ = true;
                best_crossings_ = crossings;
                best_ = current_;
            }
            return;
        }
        for (std::size_t r : adj_[idx]) {
            if (used_[r]) continue;
            const Pair p{cand_pos_[idx], r};
            const std::size_t add = crossings_with(p, fixed_) + crossings_with(p, current_);
            used_[r] = true;
            current_.push_back(p);
            dfs(idx + 1, matched + 1, crossings + add);
            current_.pop_back();
            used_[r] = false;
        }
        dfs(idx + 1, matched, crossings);
    }

    const std::vector<std::size_t>& cand_pos_;
    const std::vector<std::vector<std::size_t>>& adj_;
    const std::vector<Pair>& fixed_;
    std::size_t target_;
    std::vector<bool> used_;
    std::vector<Pair> current_;
    std::vector<Pair> best_;
    std::size_t best_crossings_ = 0;
    bool found_ = false;
};

bool stage_match(Stage stage, const std::string& c, const std::string& r, const SynonymTable* syn) {
    switch (stage) {
        case Stage::exact: return c == r;
        case Stage::stem: return stem(c) == stem(r);
        case Stage::synonym: return syn != nullptr && syn->related(c, r);
    }
    return false;
}

}  // namespace

std::string stem(const std::string& word) {
    for (const auto& rule : kStemRules) {
        const std::string_view suffix(rule.suffix);
        if (word.size() >= suffix.size() + rule.min_stem &&
            word.compare(word.size() - suffix.size(), suffix.size(), suffix) == 0) {
            return word.substr(0, word.size() - suffix.size()) + rule.replacement;
        }
    }
    return word;
}

MeteorAlignment meteor_align(const TokenSeq& candidate, const TokenSeq& reference, const SynonymTable* synonyms) {
    std::vector<Pair> pairs;
    std::vector<bool> cand_used(candidate.size(), false);
    std::vector<bool> ref_used(reference.size(), false);
    for (Stage stage : {Stage::exact, Stage::stem, Stage::synonym}) {
        if (stage == Stage::synonym && (synonyms == nullptr || synonyms->empty())) break;
        std::vector<std::size_t> cand_pos;
        std::vector<std::vector<std::size_t>> adj;
        for (std::size_t i = 0; i < candidate.size(); ++i) {
            if (cand_used[i]) continue;
            std::vector<std::size_t> row;
            for (std::size_t j = 0; j < reference.size(); ++j) {
                if (!ref_used[j] && stage_match(stage, candidate[i], reference[j], synonyms)) row.push_back(j);
            }
            if (row.empty()) continue;
            cand_pos.push_back(i);
            adj.push_back(std::move(row));
        }
        if (cand_pos.empty()) continue;
        const std::size_t target = max_matching(adj, reference.size());
        StageSearch search(cand_pos, adj, pairs, target);
        for (const auto& p : search.run()) {
            cand_used[p.first] = true;
            ref_used[p.second] = true;
            pairs.push_back(p);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    MeteorAlignment out;
    out.pairs = pairs;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const bool continues = k > 0 && pairs[k].first == pairs[k - 1].first + 1 &&
                               pairs[k].second == pairs[k - 1].second + 1;
        if (!continues) ++out.chunks;
    }
    return out;
}

double meteor(const TokenSeq& candidate, const TokenSeq& reference, const SynonymTable* synonyms) {
    if (candidate.empty() || reference.empty()) return 0.0;
    const MeteorAlignment a = meteor_align(candidate, reference, synonyms);
    const double m = static_cast<double>(a.pairs.size());
    if (m == 0.0) return 0.0;
    const double p = m / static_cast<double>(candidate.size());
    const double r = m / static_cast<double>(reference.size());
    const double fmean = 10.0 * p * r / (r + 9.0 * p);
    const double frag = static_cast<double>(a.chunks) / m;
    return fmean * (1.0 - 0.5 * frag * frag * frag);
}

double meteor_multi(const TokenSeq& candidate, const std::vector<TokenSeq>& references, const SynonymTable* synonyms) {
    double best = 0.0;
    for (const auto& r : references) best = std::max(best, meteor(candidate, r, synonyms));
    return best;
}

// ---- ROUGE-L ----

double rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    std::vector<std::size_t> prev(reference.size() + 1, 0), cur(reference.size() + 1, 0);
    for (std::size_t i = 1; i <= candidate.size(); ++i) {
        for (std::size_t j = 1; j <= reference.size(); ++j) {
            cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    const double lcs = static_cast<double>(prev[reference.size()]);
    if (lcs == 0.0) return 0.0;
    const double p = lcs / static_cast<double>(candidate.size());
    const double r = lcs / static_cast<double>(reference.size());
    constexpr double beta2 = 1.2 * 1.2;
    return (1.0 + beta2) * r * p / (r + beta2 * p);
}

double rouge_l_multi(const TokenSeq& candidate, const std::vector<TokenSeq>& references) {
    double best = 0.0;
    for (const auto& r : references) best = std::max(best, rouge_l(candidate, r));
    return best;
}

// ---- CIDEr ----

namespace {

std::string ngram_key(const TokenSeq& g) {
    std::string k = std::to_string(g.size());
    for (const auto& w : g) {
        k += '\x1f';
        k += w;
    }
    return k;
}

double cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [k, v] : a) {
        na += v * v;
        auto it = b.find(k);
        if (it != b.end()) dot += v * it->second;
    }
    for (const auto& [k, v] : b) nb += v * v;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

CiderScorer::CiderScorer(const std::map<std::string, std::vector<TokenSeq>>& corpus) : refs_(corpus) {
    if (refs_.empty()) throw DomainError("CIDEr corpus must contain at least one image");
    for (const auto& [id, refs] : refs_) {
        std::set<std::string> present;
        for (const auto& r : refs) {
            for (std::size_t n = 1; n <= 4; ++n) {
                for (const auto& [g, c] : ngrams(r, n)) present.insert(ngram_key(g));
            }
        }
        for (const auto& k : present) ++df_[k];
    }
    log_images_ = std::log(static_cast<double>(refs_.size()));
}

std::array<CiderScorer::Vec, 4> CiderScorer::vectorize(const TokenSeq& tokens) const {
    std::array<Vec, 4> out;
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto counts = ngrams(tokens, n);
        std::size_t total = 0;
        for (const auto& [g, c] : counts) total += c;
        for (const auto& [g, c] : counts) {
            const std::string key = ngram_key(g);
            auto it = df_.find(key);
            const double df = it == df_.end() ? 1.0 : static_cast<double>(it->second);
            const double tf = static_cast<double>(c) / static_cast<double>(total);
            out[n - 1][key] = tf * (log_images_ - std::log(df));
        }
    }
    return out;
}

double CiderScorer::score(const std::string& image_id, const TokenSeq& candidate) const {
    auto it = refs_.find(image_id);
    if (it == refs_.end()) throw DomainError("image '" + image_id + "' is not in the CIDEr corpus");
    if (it->second.empty()) return 0.0;
    const auto cv = vectorize(candidate);
    double total = 0.0;
    for (const auto& ref : it->second) {
        const auto rv = vectorize(ref);
        double per_ref = 0.0;
        for (std::size_t n = 0; n < 4; ++n) per_ref += cosine(cv[n], rv[n]);
        total += per_ref / 4.0;
    }
    return 10.0 * total / static_cast<double>(it->second.size());
}

// ---- match criteria ----

bool exact_match(const TokenSeq& candidate, const TokenSeq& target) { return candidate == target; }

bool success_at_tau(double meteor_score, double tau) {
    if (tau < 0.0) throw DomainError("tau must be non-negative");
    return meteor_score > tau;
}

std::vector<std::string> select_keywords(const std::vector<std::size_t>& top3,
                                         const std::vector<std::string>& class_lexicon,
                                         const TokenSeq& target_caption) {
    if (top3.size() > 3) throw DomainError("keyword selection takes at most three predictions");
    std::vector<std::string> out;
    for (std::size_t cls : top3) {
        if (cls >= class_lexicon.size() || class_lexicon[cls].empty()) {
            throw ConfigError("class " + std::to_string(cls) + " has no lexicon entry");
        }
        const std::string& word = class_lexicon[cls];
        const bool in_caption = std::find(target_caption.begin(), target_caption.end(), word) != target_caption.end();
        if (in_caption && std::find(out.begin(), out.end(), word) == out.end()) out.push_back(word);
    }
    return out;
}

bool keyword_success(const TokenSeq& predicted, const std::vector<std::string>& keywords, std::size_t k) {
    if (k == 0) throw DomainError("keyword_success needs k >= 1");
    if (k > keywords.size()) return false;
    std::size_t hits = 0;
    for (const auto& w : keywords) {
        if (std::find(predicted.begin(), predicted.end(), w) != predicted.end()) ++hits;
    }
    return hits >= k;
}

// ---- mini-SPICE ----

std::string to_string(const SemTuple& t) {
    std::string out = t.kind == TupleKind::object ? "obj(" : t.kind == TupleKind::attribute ? "attr(" : "rel(";
    for (std::size_t i = 0; i < t.args.size(); ++i) {
        if (i) out += ',';
        out += t.args[i];
    }
    return out + ')';
}

CaptionGrammar CaptionGrammar::scenes() {
    CaptionGrammar g;
    g.determiners = {"a", "an", "one", "the"};
    g.attributes = {"red", "blue", "green", "yellow"};
    g.objects = {"circle", "square", "triangle", "cross"};
    g.relations = {
        {{"above"}, "above", false},
        {{"below"}, "above", true},
        {{"left", "of"}, "left of", false},
        {{"right", "of"}, "left of", true},
    };
    return g;
}

namespace {

struct NounPhrase {
    std::string attribute;  // empty when absent
    std::string object;
};

// Recursive-descent pieces over a token cursor; each returns false without
// consuming input when it does not match.
class Parser {
   public:
    Parser(const TokenSeq& t, const CaptionGrammar& g) : t_(t), g_(g) {}

    bool noun_phrase(std::size_t& pos, NounPhrase& np) const {
        std::size_t p = pos;
        if (p < t_.size() && g_.determiners.count(t_[p])) ++p;
        NounPhrase out;
        if (p < t_.size() && g_.attributes.count(t_[p])) out.attribute = t_[p++];
        if (p >= t_.size() || !g_.objects.count(t_[p])) return false;
        out.object = t_[p++];
        pos = p;
        np = std::move(out);
        return true;
    }

    bool relation(std::size_t& pos, const CaptionGrammar::RelationRule*& rule) const {
        for (const auto& r : g_.relations) {
            if (pos + r.words.size() > t_.size()) continue;
            if (std::equal(r.words.begin(), r.words.end(), t_.begin() + static_cast<std::ptrdiff_t>(pos))) {
                pos += r.words.size();
                rule = &r;
                return true;
            }
        }
        return false;
    }

    const TokenSeq& tokens() const { return t_; }

   private:
    const TokenSeq& t_;
    const CaptionGrammar& g_;
};

void add_np(std::set<SemTuple>& out, const NounPhrase& np) {
    out.insert({TupleKind::object, {np.object}});
    if (!np.attribute.empty()) out.insert({TupleKind::attribute, {np.attribute, np.object}});
}

}  // namespace

ParseResult parse_caption(const TokenSeq& caption, const CaptionGrammar& grammar) {
    ParseResult res;
    const Parser parser(caption, grammar);

    // Full sentence: NP [REL NP].
    {
        std::size_t pos = 0;
        NounPhrase a, b;
        const CaptionGrammar::RelationRule* rule = nullptr;
        if (parser.noun_phrase(pos, a)) {
            if (pos == caption.size()) {
                add_np(res.tuples, a);
                res.complete = true;
                return res;
            }
            std::size_t after = pos;
            if (parser.relation(after, rule) && parser.noun_phrase(after, b) && after == caption.size()) {
                add_np(res.tuples, a);
                add_np(res.tuples, b);
                const auto& lhs = rule->reversed ? b.object : a.object;
                const auto& rhs = rule->reversed ? a.object : b.object;
                res.tuples.insert({TupleKind::relation, {lhs, rule->canonical, rhs}});
                res.complete = true;
                return res;
            }
        }
    }

    // Fragments: every noun phrase found while scanning, and relations only
    // where NP REL NP appears contiguously.
    std::size_t pos = 0;
    bool have_prev = false;
    NounPhrase prev;
    while (pos < caption.size()) {
        NounPhrase np;
        std::size_t p = pos;
        if (parser.noun_phrase(p, np)) {
            add_np(res.tuples, np);
            prev = np;
            have_prev = true;
            pos = p;
            continue;
        }
        const CaptionGrammar::RelationRule* rule = nullptr;
        std::size_t q = pos;
        if (have_prev && parser.relation(q, rule)) {
            NounPhrase next;
            std::size_t r = q;
            if (parser.noun_phrase(r, next)) {
                add_np(res.tuples, next);
                const auto& lhs = rule->reversed ? next.object : prev.object;
                const auto& rhs = rule->reversed ? prev.object : next.object;
                res.tuples.insert({TupleKind::relation, {lhs, rule->canonical, rhs}});
                prev = next;
                pos = r;
                continue;
            }
        }
        have_prev = false;
        ++pos;
    }
    return res;
}

std::set<SemTuple> parse_caption_tuples(const TokenSeq& caption, const CaptionGrammar& grammar) {
    return parse_caption(caption, grammar).tuples;
}

double spice_f1(const std::set<SemTuple>& candidate, const std::set<SemTuple>& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& t : candidate) common += reference.count(t);
    if (common == 0) return 0.0;
    const double p = static_cast<double>(common) / static_cast<double>(candidate.size());
    const double r = static_cast<double>(common) / static_cast<double>(reference.size());
    return 2.0 * p * r / (p + r);
}

// ---- combined ----

MetricReport score_pair(const std::string& image_id, const TokenSeq& candidate, const std::vector<TokenSeq>& references,
                        const CiderScorer& cider, const CaptionGrammar& grammar, const SynonymTable* synonyms) {
    MetricReport m;
    for (int n = 1; n <= 4; ++n) m.bleu[static_cast<std::size_t>(n - 1)] = bleu_n(candidate, references, n);
    m.meteor = meteor_multi(candidate, references, synonyms);
    m.rouge_l = rouge_l_multi(candidate, references);
    m.cider = cider.score(image_id, candidate);
    std::set<SemTuple> ref_tuples;
    for (const auto& r : references) {
        for (const auto& t : parse_caption_tuples(r, grammar)) ref_tuples.insert(t);
        m.exact = m.exact || exact_match(candidate, r);
    }
    m.spice_f1 = spice_f1(parse_caption_tuples(candidate, grammar), ref_tuples);
    return m;
}

std::vector<PairRecord> parse_pairs(std::string_view text) {
    std::vector<PairRecord> out;
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() < 3) {
            throw ParseError("pairs line " + std::to_string(lineno) + ": need id, candidate and a reference");
        }
        PairRecord r;
        r.id = fields[0];
        r.candidate = fields[1];
        r.references.assign(fields.begin() + 2, fields.end());
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<PairRecord> load_pairs(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read pairs file " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_pairs(ss.str());
}

}  // namespace featfool::lexmetrics
