#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "atntopo/graph.hpp"
#include "atntopo/persistence.hpp"
#include "atntopo/types.hpp"

namespace atntopo {

enum class PatternKind { PrevToken, CurrentToken, NextToken, ClsToken, SepToken, Punctuation, Comma, Dot, FirstToken };

inline constexpr std::array<PatternKind, 9> kAllPatterns{
    PatternKind::PrevToken, PatternKind::CurrentToken, PatternKind::NextToken,
    PatternKind::ClsToken,  PatternKind::SepToken,     PatternKind::Punctuation,
    PatternKind::Comma,     PatternKind::Dot,          PatternKind::FirstToken,
};

std::string_view pattern_name(PatternKind kind);

/// Binary matrix: row i holds ones at the pattern targets of token i.
SquareMatrix pattern_matrix(PatternKind kind, const TokenMeta& meta);

/// ||A - P||_F / (||A||_F + ||P||_F); 0 when both are zero.
double pattern_distance(const SquareMatrix& a, const SquareMatrix& p);

inline constexpr std::string_view kFeatureSchema = "atntopo-features/1";

struct FeatureConfig {
    std::vector<double> thresholds{0.025, 0.05, 0.1, 0.25, 0.5, 0.75};
    std::vector<double> bar_thresholds = kDefaultBarThresholds;
    std::size_t cycle_cap = kDefaultCycleCap;
    bool drop_special = false;

    /// Throws std::invalid_argument unless thresholds are ascending and within [0, 1].
    void validate() const;
};

struct FeatureVector {
    HeadId head{-1, -1};
    std::vector<std::string> names;
    std::vector<double> values;
    std::string schema_version{kFeatureSchema};

    std::size_t size() const { return values.size(); }
    void append(const FeatureVector& other, std::string_view prefix = {});
    void push(std::string name, double value);
};

/// Per-head names, in the order head_features produces them:
/// "t{tau}_{stat}" per threshold, "bar_h{0,1}_{stat}", then "pat_{kind}".
std::vector<std::string> head_feature_names(const FeatureConfig& cfg = {});
std::size_t head_feature_count(const FeatureConfig& cfg = {});

/// Threshold graph features, barcode statistics and pattern distances of one head.
FeatureVector head_features(const AttentionMap& a, const FeatureConfig& cfg = {});

/// head_features of every head, concatenated in (layer, head) row-major order,
/// names prefixed "l{layer}_h{head}_".
FeatureVector model_features(const AttentionGrid& grid, const FeatureConfig& cfg = {});

/// model_features plus the sentence-level "n_tokens" feature.
FeatureVector sentence_features(const AttentionGrid& grid, const FeatureConfig& cfg = {});

/// Shortest round-trip decimal form of a threshold, as used in feature names.
std::string format_threshold(double t);

}  // namespace atntopo
