#include "atntopo/scoring.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "atntopo/graph.hpp"
#include "atntopo/parallel.hpp"
#include "atntopo/persistence.hpp"

namespace atntopo {

std::string_view rule_name(Rule r) { return r == Rule::H0M ? "h0m" : "rtd"; }

Rule parse_rule(std::string_view s) {
    if (s == "h0m") return Rule::H0M;
    if (s == "rtd") return Rule::RTD;
    throw std::invalid_argument("unknown scoring rule '" + std::string(s) + "' (expected h0m or rtd)");
}

std::string_view mode_name(HeadMode m) {
    switch (m) {
        case HeadMode::Top: return "top";
        case HeadMode::Phenomenon: return "phenomenon";
        case HeadMode::Ensemble: return "ensemble";
        case HeadMode::All: return "all";
    }
    return "top";
}

HeadMode parse_mode(std::string_view s) {
    if (s == "top") return HeadMode::Top;
    if (s == "phenomenon") return HeadMode::Phenomenon;
    if (s == "ensemble") return HeadMode::Ensemble;
    if (s == "all") return HeadMode::All;
    throw std::invalid_argument("unknown head mode '" + std::string(s) + "'");
}

std::string to_string(const Candidate& c) {
    return "(layer " + std::to_string(c.head.layer) + ", head " + std::to_string(c.head.head) + ", " +
           std::string(rule_name(c.rule)) + ")";
}

void HeadConfig::validate() const {
    if (members.empty()) throw std::invalid_argument("head config has no members");
    if ((mode == HeadMode::Top || mode == HeadMode::Phenomenon) && members.size() != 1)
        throw std::invalid_argument("top/phenomenon head config must have exactly one member");
    if (mode == HeadMode::Ensemble && members.size() % 2 == 0)
        throw std::invalid_argument("ensemble size must be odd");
}

MinimalPair MinimalPair::flipped() const {
    MinimalPair f = *this;
    std::swap(f.a, f.b);
    f.acceptable = other(acceptable);
    return f;
}

Choice h0m_choice(const DistanceMatrix& ga, const DistanceMatrix& gb) {
    return h0_mean(ga) < h0_mean(gb) ? Choice::A : Choice::B;
}

Choice rtd_choice(const DistanceMatrix& ga, const DistanceMatrix& gb) {
    return rtd(ga, gb) < rtd(gb, ga) ? Choice::A : Choice::B;
}

Choice head_choice(const MinimalPair& pair, const Candidate& c, AttentionDirection direction) {
    const AttentionMap& a = pair.a.attention.at(c.head);
    const AttentionMap& b = pair.b.attention.at(c.head);
    if (c.rule == Rule::H0M) return h0m_choice(symmetrize_distance(a), symmetrize_distance(b));
    const auto [da, db] = aligned_distances(a, b, direction);
    return rtd_choice(da, db);
}

Choice tie_break(std::uint64_t seed, std::size_t pair_index) {
    const auto idx = static_cast<std::uint64_t>(pair_index);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
    std::mt19937_64 gen(seq);
    return (gen() >> 63) != 0 ? Choice::A : Choice::B;
}

namespace {

Choice majority(std::size_t votes_a, std::size_t votes_b, std::uint64_t seed, std::size_t pair_index) {
    if (votes_a > votes_b) return Choice::A;
    if (votes_b > votes_a) return Choice::B;
    return tie_break(seed, pair_index);
}

}  // namespace

Choice vote(const MinimalPair& pair, const HeadConfig& config, std::uint64_t seed, std::size_t pair_index,
            AttentionDirection direction) {
    config.validate();
    std::size_t votes_a = 0;
    for (const Candidate& c : config.members) votes_a += head_choice(pair, c, direction) == Choice::A;
    return majority(votes_a, config.members.size() - votes_a, seed, pair_index);
}

AccuracyReport accuracy(std::span<const MinimalPair> pairs, const HeadConfig& config, std::uint64_t seed,
                        AttentionDirection direction) {
    if (pairs.empty()) throw std::invalid_argument("accuracy: empty pair set");
    config.validate();
    AccuracyReport r;
    r.choices.resize(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) { r.choices[i] = vote(pairs[i], config, seed, i, direction); });
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const bool ok = r.choices[i] == pairs[i].acceptable;
        auto& ph = r.by_phenomenon[pairs[i].phenomenon];
        ph.total++;
        ph.correct += ok;
        r.correct += ok;
    }
    r.total = pairs.size();
    r.overall = static_cast<double>(r.correct) / static_cast<double>(r.total);
    return r;
}

std::vector<Candidate> candidate_universe(std::size_t layers, std::size_t heads, std::span<const Rule> rules) {
    std::vector<Rule> sorted(rules.begin(), rules.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<Candidate> out;
    for (std::size_t l = 0; l < layers; ++l)
        for (std::size_t h = 0; h < heads; ++h)
            for (Rule r : sorted) out.push_back({HeadId{static_cast<int>(l), static_cast<int>(h)}, r});
    return out;
}

VoteTable::VoteTable(std::vector<Candidate> candidates, std::vector<std::string> phenomena,
                     std::vector<Choice> acceptable)
    : candidates_(std::move(candidates)), phenomena_(std::move(phenomena)), acceptable_(std::move(acceptable)) {
    if (phenomena_.size() != acceptable_.size())
        throw std::invalid_argument("vote table: phenomena and labels differ in length");
    words_ = (acceptable_.size() + 63) / 64;
    correct_.assign(candidates_.size() * words_, 0);
}

VoteTable VoteTable::build(std::span<const MinimalPair> pairs, std::vector<Candidate> candidates,
                           AttentionDirection direction) {
    std::vector<std::string> phenomena;
    std::vector<Choice> labels;
    for (const auto& p : pairs) {
        phenomena.push_back(p.phenomenon);
        labels.push_back(p.acceptable);
    }
    VoteTable table(std::move(candidates), std::move(phenomena), std::move(labels));
    std::vector<Choice> choices(pairs.size() * table.candidate_count());
    const std::size_t nc = table.candidate_count();
    parallel_for(pairs.size(), [&](std::size_t i) {
        for (std::size_t c = 0; c < nc; ++c) choices[i * nc + c] = head_choice(pairs[i], table.candidates_[c], direction);
    });
    for (std::size_t i = 0; i < pairs.size(); ++i)
        for (std::size_t c = 0; c < nc; ++c) table.set_choice(c, i, choices[i * nc + c]);
    return table;
}

void VoteTable::set_choice(std::size_t candidate, std::size_t pair, Choice c) {
    std::uint64_t& word = correct_[candidate * words_ + pair / 64];
    const std::uint64_t mask = std::uint64_t{1} << (pair % 64);
    if (c == acceptable_[pair]) word |= mask;
    else word &= ~mask;
}

bool VoteTable::correct(std::size_t candidate, std::size_t pair) const {
    return (correct_[candidate * words_ + pair / 64] >> (pair % 64)) & 1u;
}

Choice VoteTable::choice(std::size_t candidate, std::size_t pair) const {
    return correct(candidate, pair) ? acceptable_[pair] : other(acceptable_[pair]);
}

std::size_t VoteTable::correct_count(std::size_t candidate) const {
    std::size_t total = 0;
    for (std::size_t w = 0; w < words_; ++w) total += static_cast<std::size_t>(std::popcount(bits(candidate)[w]));
    return total;
}

std::size_t VoteTable::index_of(const Candidate& c) const {
    auto it = std::find(candidates_.begin(), candidates_.end(), c);
    if (it == candidates_.end()) throw std::out_of_range("no votes recorded for head " + to_string(c));
    return static_cast<std::size_t>(it - candidates_.begin());
}

VoteTable VoteTable::restricted_to(std::string_view phenomenon) const {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < pair_count(); ++i)
        if (phenomena_[i] == phenomenon) keep.push_back(i);
    if (keep.empty()) throw std::invalid_argument("no pairs for phenomenon '" + std::string(phenomenon) + "'");
    std::vector<std::string> ph;
    std::vector<Choice> labels;
    for (std::size_t i : keep) {
        ph.push_back(phenomena_[i]);
        labels.push_back(acceptable_[i]);
    }
    VoteTable sub(candidates_, std::move(ph), std::move(labels));
    for (std::size_t c = 0; c < candidate_count(); ++c)
        for (std::size_t k = 0; k < keep.size(); ++k) sub.set_choice(c, k, choice(c, keep[k]));
    return sub;
}

AccuracyReport VoteTable::report(std::span<const std::size_t> members, std::uint64_t seed) const {
    if (members.empty()) throw std::invalid_argument("vote table: empty member set");
    if (pair_count() == 0) throw std::invalid_argument("vote table: no pairs");
    AccuracyReport r;
    r.total = pair_count();
    r.choices.resize(pair_count());
    for (std::size_t i = 0; i < pair_count(); ++i) {
        std::size_t votes_a = 0;
        for (std::size_t m : members) votes_a += choice(m, i) == Choice::A;
        r.choices[i] = majority(votes_a, members.size() - votes_a, seed, i);
        const bool ok = r.choices[i] == acceptable_[i];
        auto& ph = r.by_phenomenon[phenomena_[i]];
        ph.total++;
        ph.correct += ok;
        r.correct += ok;
    }
    r.overall = static_cast<double>(r.correct) / static_cast<double>(r.total);
    return r;
}

double VoteTable::accuracy(std::span<const std::size_t> members, std::uint64_t seed) const {
    return report(members, seed).overall;
}

ScoredCandidate select_top_head(const VoteTable& table) {
    if (table.candidate_count() == 0 || table.pair_count() == 0)
        throw std::invalid_argument("select_top_head: empty candidate or pair set");
    std::size_t best = 0, best_count = table.correct_count(0);
    for (std::size_t c = 1; c < table.candidate_count(); ++c) {
        const std::size_t count = table.correct_count(c);
        if (count > best_count) {
            best = c;
            best_count = count;
        }
    }
    return {table.candidates()[best], best,
            static_cast<double>(best_count) / static_cast<double>(table.pair_count())};
}

ScoredCandidate select_top_head(std::span<const MinimalPair> pairs, std::vector<Candidate> candidates) {
    return select_top_head(VoteTable::build(pairs, std::move(candidates)));
}

ScoredCandidate select_phenomenon_head(const VoteTable& table, std::string_view phenomenon) {
    return select_top_head(table.restricted_to(phenomenon));
}

namespace {

using Members = std::vector<std::uint32_t>;

struct BeamEntry {
    std::size_t correct;
    Members members;
};

// Better entries first: more correct pairs, then lexicographically smaller members.
struct BeamOrder {
    bool operator()(const BeamEntry& a, const BeamEntry& b) const {
        if (a.correct != b.correct) return a.correct > b.correct;
        return a.members < b.members;
    }
};

// Keeps the `cap` best distinct entries offered to it.
class BoundedBeam {
public:
    explicit BoundedBeam(std::size_t cap) : cap_(cap) {}

    void offer(BeamEntry e) {
        if (cap_ != 0 && entries_.size() >= cap_ && !BeamOrder{}(e, *entries_.rbegin())) return;
        entries_.insert(std::move(e));
        if (cap_ != 0 && entries_.size() > cap_) entries_.erase(std::prev(entries_.end()));
    }

    bool empty() const { return entries_.empty(); }
    const std::set<BeamEntry, BeamOrder>& entries() const { return entries_; }

private:
    std::size_t cap_;
    std::set<BeamEntry, BeamOrder> entries_;
};

std::size_t popcount_words(const std::vector<std::uint64_t>& v) {
    std::size_t total = 0;
    for (std::uint64_t w : v) total += static_cast<std::size_t>(std::popcount(w));
    return total;
}

// Offers every strictly improving two-candidate extension of `q` to `next`.
// For |q| = k the extension has k + 2 members and needs m = (k + 3) / 2
// correct votes; pairs already at >= m, m - 1, m - 2 need zero, one, two of
// the new members to be correct.
bool extend(const VoteTable& table, const BeamEntry& q, BoundedBeam& next) {
    const std::size_t words = table.words();
    const std::size_t pairs = table.pair_count();
    const std::size_t k = q.members.size();
    const std::size_t need = (k + 3) / 2;

    std::vector<std::uint16_t> counts(pairs, 0);
    for (std::uint32_t m : q.members) {
        const std::uint64_t* b = table.bits(m);
        for (std::size_t i = 0; i < pairs; ++i) counts[i] += (b[i / 64] >> (i % 64)) & 1u;
    }
    std::vector<std::uint64_t> sure(words, 0), one(words, 0), two(words, 0);
    for (std::size_t i = 0; i < pairs; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << (i % 64);
        if (counts[i] >= need) sure[i / 64] |= bit;
        else if (static_cast<std::size_t>(counts[i]) + 1 == need) one[i / 64] |= bit;
        else if (static_cast<std::size_t>(counts[i]) + 2 == need) two[i / 64] |= bit;
    }
    const std::size_t base = popcount_words(sure);

    const std::size_t nc = table.candidate_count();
    std::vector<char> used(nc, 0);
    for (std::uint32_t m : q.members) used[m] = 1;
    bool improved = false;
    for (std::size_t c1 = 0; c1 < nc; ++c1) {
        if (used[c1]) continue;
        const std::uint64_t* b1 = table.bits(c1);
        for (std::size_t c2 = c1 + 1; c2 < nc; ++c2) {
            if (used[c2]) continue;
            const std::uint64_t* b2 = table.bits(c2);
            std::size_t correct = base;
            for (std::size_t w = 0; w < words; ++w)
                correct += static_cast<std::size_t>(std::popcount((one[w] & (b1[w] | b2[w])) | (two[w] & b1[w] & b2[w])));
            if (correct <= q.correct) continue;
            Members m = q.members;
            m.push_back(static_cast<std::uint32_t>(c1));
            m.push_back(static_cast<std::uint32_t>(c2));
            std::sort(m.begin(), m.end());
            next.offer({correct, std::move(m)});
            improved = true;
        }
    }
    return improved;
}

}  // namespace

EnsembleResult select_ensemble(const VoteTable& table, const EnsembleOptions& options) {
    const std::size_t nc = table.candidate_count();
    if (nc == 0 || table.pair_count() == 0) throw std::invalid_argument("select_ensemble: empty candidate or pair set");
    if (options.beam_cap == 0) throw std::invalid_argument("select_ensemble: beam cap must be >= 1");

    std::vector<BeamEntry> singles;
    for (std::size_t c = 0; c < nc; ++c) singles.push_back({table.correct_count(c), {static_cast<std::uint32_t>(c)}});
    std::stable_sort(singles.begin(), singles.end(), BeamOrder{});
    if (options.initial_top_k > 0 && options.initial_top_k < singles.size()) singles.resize(options.initial_top_k);

    BeamEntry best = singles.front();
    std::vector<BeamEntry> beam = std::move(singles);
    while (true) {
        BoundedBeam next(options.beam_cap);
        bool improved = false;
        for (const BeamEntry& q : beam) improved |= extend(table, q, next);
        if (!improved) break;
        beam.assign(next.entries().begin(), next.entries().end());
        if (beam.front().correct > best.correct) best = beam.front();
    }

    EnsembleResult r;
    r.config.mode = HeadMode::Ensemble;
    for (std::uint32_t m : best.members) {
        r.members.push_back(m);
        r.config.members.push_back(table.candidates()[m]);
    }
    r.accuracy = static_cast<double>(best.correct) / static_cast<double>(table.pair_count());
    return r;
}

std::vector<HeadScore> rank_heads_by_correlation(std::span<const HeadFeatureTable> heads, std::span<const int> labels) {
    std::vector<int> distinct(labels.begin(), labels.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw std::invalid_argument("rank_heads_by_correlation: need at least two distinct labels");

    const std::size_t rows = labels.size();
    double ly_mean = 0.0;
    for (int y : labels) ly_mean += y;
    ly_mean /= static_cast<double>(rows);
    double syy = 0.0;
    for (int y : labels) syy += (y - ly_mean) * (y - ly_mean);

    std::vector<HeadScore> out;
    for (const HeadFeatureTable& h : heads) {
        if (h.rows != rows) throw std::invalid_argument("rank_heads_by_correlation: row count mismatch for head " + to_string(h.head));
        double best = 0.0;
        for (std::size_t c = 0; c < h.cols; ++c) {
            double mean = 0.0;
            for (std::size_t r = 0; r < rows; ++r) mean += h.at(r, c);
            mean /= static_cast<double>(rows);
            double sxx = 0.0, sxy = 0.0;
            for (std::size_t r = 0; r < rows; ++r) {
                const double dx = h.at(r, c) - mean;
                sxx += dx * dx;
                sxy += dx * (labels[r] - ly_mean);
            }
            if (sxx <= 0.0) continue;
            best = std::max(best, std::abs(sxy / std::sqrt(sxx * syy)));
        }
        out.push_back({h.head, best});
    }
    std::stable_sort(out.begin(), out.end(), [](const HeadScore& a, const HeadScore& b) { return a.score > b.score; });
    return out;
}

}  // namespace atntopo
