#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "atntopo/rtd.hpp"
#include "atntopo/types.hpp"

namespace atntopo {

/// Scoring rule used by one head: H0M comparison or RTD comparison.
enum class Rule { H0M, RTD };
enum class Choice { A, B };
enum class HeadMode { Top, Phenomenon, Ensemble, All };

std::string_view rule_name(Rule r);
Rule parse_rule(std::string_view s);
std::string_view mode_name(HeadMode m);
HeadMode parse_mode(std::string_view s);
inline Choice other(Choice c) { return c == Choice::A ? Choice::B : Choice::A; }

struct Candidate {
    HeadId head;
    Rule rule = Rule::H0M;
    auto operator<=>(const Candidate&) const = default;
};

std::string to_string(const Candidate& c);

/// Heads with voting semantics. Top/Phenomenon hold one member, Ensemble an odd number.
struct HeadConfig {
    std::vector<Candidate> members;
    HeadMode mode = HeadMode::Top;

    void validate() const;
};

struct SentenceSide {
    std::string text;
    AttentionGrid attention;
};

/// A forced choice between sentences a and b; `acceptable` names the good one.
struct MinimalPair {
    SentenceSide a;
    SentenceSide b;
    std::string phenomenon;
    std::string pair_type;
    Choice acceptable = Choice::A;

    /// Same pair presented in the opposite order.
    MinimalPair flipped() const;
};

/// A when H0M(ga) < H0M(gb), otherwise B.
Choice h0m_choice(const DistanceMatrix& ga, const DistanceMatrix& gb);
/// A when RTD(ga, gb) < RTD(gb, ga), otherwise B.
Choice rtd_choice(const DistanceMatrix& ga, const DistanceMatrix& gb);

/// Choice of one head under one rule. RTD aligns the two token sequences first.
Choice head_choice(const MinimalPair& pair, const Candidate& c,
                   AttentionDirection direction = AttentionDirection::Both);

/// Fair coin drawn from a generator seeded by (seed, pair_index) only.
Choice tie_break(std::uint64_t seed, std::size_t pair_index);

/// Majority over member choices; exact ties use tie_break(seed, pair_index).
Choice vote(const MinimalPair& pair, const HeadConfig& config, std::uint64_t seed, std::size_t pair_index = 0,
            AttentionDirection direction = AttentionDirection::Both);

struct PhenomenonAccuracy {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct AccuracyReport {
    double overall = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
    std::map<std::string, PhenomenonAccuracy> by_phenomenon;
    std::vector<Choice> choices;
};

/// Fraction of pairs where the configuration prefers the acceptable sentence.
/// Throws std::invalid_argument on an empty pair set.
AccuracyReport accuracy(std::span<const MinimalPair> pairs, const HeadConfig& config, std::uint64_t seed,
                        AttentionDirection direction = AttentionDirection::Both);

/// Every (layer, head, rule) combination in scan order.
std::vector<Candidate> candidate_universe(std::size_t layers, std::size_t heads, std::span<const Rule> rules);

/// Per-candidate choices on a fixed pair set, stored as correctness bitsets.
/// Selection algorithms only ever look at this table.
class VoteTable {
public:
    VoteTable() = default;
    VoteTable(std::vector<Candidate> candidates, std::vector<std::string> phenomena, std::vector<Choice> acceptable);

    static VoteTable build(std::span<const MinimalPair> pairs, std::vector<Candidate> candidates,
                           AttentionDirection direction = AttentionDirection::Both);

    std::size_t pair_count() const { return acceptable_.size(); }
    std::size_t candidate_count() const { return candidates_.size(); }
    const std::vector<Candidate>& candidates() const { return candidates_; }
    const std::string& phenomenon(std::size_t pair) const { return phenomena_[pair]; }
    Choice acceptable(std::size_t pair) const { return acceptable_[pair]; }

    void set_choice(std::size_t candidate, std::size_t pair, Choice c);
    Choice choice(std::size_t candidate, std::size_t pair) const;
    bool correct(std::size_t candidate, std::size_t pair) const;
    std::size_t correct_count(std::size_t candidate) const;

    /// Index of `c`; throws std::out_of_range naming the head when absent.
    std::size_t index_of(const Candidate& c) const;

    /// Pairs of one phenomenon; throws std::invalid_argument when there are none.
    VoteTable restricted_to(std::string_view phenomenon) const;

    /// Majority-vote accuracy of a member set (indices into candidates()).
    double accuracy(std::span<const std::size_t> members, std::uint64_t seed = 0) const;
    AccuracyReport report(std::span<const std::size_t> members, std::uint64_t seed = 0) const;

    const std::uint64_t* bits(std::size_t candidate) const { return correct_.data() + candidate * words_; }
    std::size_t words() const { return words_; }

private:
    std::vector<Candidate> candidates_;
    std::vector<std::string> phenomena_;
    std::vector<Choice> acceptable_;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> correct_;  // candidate-major bitsets
};

struct ScoredCandidate {
    Candidate candidate;
    std::size_t index = 0;
    double accuracy = 0.0;
};

/// Brute-force argmax of single-head accuracy; first maximum in scan order wins.
ScoredCandidate select_top_head(const VoteTable& table);
ScoredCandidate select_top_head(std::span<const MinimalPair> pairs, std::vector<Candidate> candidates);
/// select_top_head on the pairs of one phenomenon.
ScoredCandidate select_phenomenon_head(const VoteTable& table, std::string_view phenomenon);

struct EnsembleOptions {
    std::size_t beam_cap = 40;
    std::size_t initial_top_k = 0;  // 0 = start from every singleton
};

struct EnsembleResult {
    HeadConfig config;
    std::vector<std::size_t> members;
    double accuracy = 0.0;
};

/// Beam search over odd-sized member sets. Each step extends every beam
/// member by two unused candidates and keeps strict improvements only.
EnsembleResult select_ensemble(const VoteTable& table, const EnsembleOptions& options = {});

struct HeadFeatureTable {
    HeadId head;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major, one row per sample

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct HeadScore {
    HeadId head;
    double score = 0.0;
};

/// Heads ordered by the largest absolute Pearson correlation between any of
/// their feature columns and the labels. Constant columns score 0.
/// Throws std::invalid_argument when labels have fewer than two distinct values.
std::vector<HeadScore> rank_heads_by_correlation(std::span<const HeadFeatureTable> heads, std::span<const int> labels);

}  // namespace atntopo
