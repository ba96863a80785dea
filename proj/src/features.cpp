#include "atntopo/features.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace atntopo {

std::string_view pattern_name(PatternKind kind) {
    switch (kind) {
        case PatternKind::PrevToken: return "prev";
        case PatternKind::CurrentToken: return "current";
        case PatternKind::NextToken: return "next";
        case PatternKind::ClsToken: return "cls";
        case PatternKind::SepToken: return "sep";
        case PatternKind::Punctuation: return "punct";
        case PatternKind::Comma: return "comma";
        case PatternKind::Dot: return "dot";
        case PatternKind::FirstToken: return "first";
    }
    return "unknown";
}

SquareMatrix pattern_matrix(PatternKind kind, const TokenMeta& meta) {
    const std::size_t n = meta.size();
    SquareMatrix p(n);
    auto column = [&](std::size_t j) {
        for (std::size_t i = 0; i < n; ++i) p(i, j) = 1.0;
    };
    auto flagged = [&](const std::vector<bool>& flags) {
        for (std::size_t j = 0; j < n && j < flags.size(); ++j)
            if (flags[j]) column(j);
    };
    switch (kind) {
        case PatternKind::PrevToken:
            for (std::size_t i = 1; i < n; ++i) p(i, i - 1) = 1.0;
            break;
        case PatternKind::CurrentToken:
            for (std::size_t i = 0; i < n; ++i) p(i, i) = 1.0;
            break;
        case PatternKind::NextToken:
            for (std::size_t i = 0; i + 1 < n; ++i) p(i, i + 1) = 1.0;
            break;
        case PatternKind::ClsToken:
            if (meta.cls_index && *meta.cls_index < n) column(*meta.cls_index);
            break;
        case PatternKind::SepToken:
            for (std::size_t s : meta.sep_indices)
                if (s < n) column(s);
            break;
        case PatternKind::Punctuation: flagged(meta.punct_flags); break;
        case PatternKind::Comma: flagged(meta.comma_flags); break;
        case PatternKind::Dot: flagged(meta.dot_flags); break;
        case PatternKind::FirstToken:
            if (n > 0) column(meta.first_index < n ? meta.first_index : 0);
            break;
    }
    return p;
}

double pattern_distance(const SquareMatrix& a, const SquareMatrix& p) {
    if (a.size() != p.size()) throw std::invalid_argument("pattern_distance: shape mismatch");
    double diff = 0.0, na = 0.0, np = 0.0;
    const auto av = a.values();
    const auto pv = p.values();
    for (std::size_t k = 0; k < av.size(); ++k) {
        diff += (av[k] - pv[k]) * (av[k] - pv[k]);
        na += av[k] * av[k];
        np += pv[k] * pv[k];
    }
    const double denom = std::sqrt(na) + std::sqrt(np);
    if (denom == 0.0) return 0.0;
    return std::sqrt(diff) / denom;
}

void FeatureConfig::validate() const {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] >= 0.0 && thresholds[i] <= 1.0))
            throw std::invalid_argument("feature thresholds must lie in [0, 1]");
        if (i > 0 && thresholds[i] <= thresholds[i - 1])
            throw std::invalid_argument("feature thresholds must be strictly ascending");
    }
    if (cycle_cap == 0) throw std::invalid_argument("cycle cap must be >= 1");
}

void FeatureVector::push(std::string name, double value) {
    names.push_back(std::move(name));
    values.push_back(value);
}

void FeatureVector::append(const FeatureVector& other, std::string_view prefix) {
    for (std::size_t k = 0; k < other.size(); ++k) push(std::string(prefix) + other.names[k], other.values[k]);
}

std::string format_threshold(double t) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), t);
    if (ec != std::errc{}) throw std::runtime_error("format_threshold: conversion failed");
    return std::string(buf, end);
}

namespace {

constexpr std::array<std::string_view, 7> kThresholdStats{"b0", "b1", "edges", "avg_degree", "scc", "dir_edges", "cycles"};
constexpr std::array<std::string_view, 5> kBarScalars{"count", "sum", "mean", "var", "entropy"};

void push_dimension(FeatureVector& fv, std::string_view dim, const DimensionStats& s,
                    const std::vector<double>& thresholds) {
    const std::string prefix = "bar_" + std::string(dim) + "_";
    fv.push(prefix + "count", static_cast<double>(s.count));
    fv.push(prefix + "sum", s.sum);
    fv.push(prefix + "mean", s.mean);
    fv.push(prefix + "var", s.variance);
    fv.push(prefix + "entropy", s.entropy);
    for (std::size_t t = 0; t < thresholds.size(); ++t)
        fv.push(prefix + "born_after_" + format_threshold(thresholds[t]), static_cast<double>(s.born_after[t]));
    for (std::size_t t = 0; t < thresholds.size(); ++t)
        fv.push(prefix + "dead_before_" + format_threshold(thresholds[t]), static_cast<double>(s.dead_before[t]));
}

std::vector<std::size_t> non_special(const TokenMeta& meta) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < meta.size(); ++i)
        if (!meta.is_special(i)) idx.push_back(i);
    return idx;
}

}  // namespace

std::vector<std::string> head_feature_names(const FeatureConfig& cfg) {
    std::vector<std::string> names;
    for (double t : cfg.thresholds)
        for (auto stat : kThresholdStats) names.push_back("t" + format_threshold(t) + "_" + std::string(stat));
    for (std::string_view dim : {"h0", "h1"}) {
        for (auto s : kBarScalars) names.push_back("bar_" + std::string(dim) + "_" + std::string(s));
        for (double t : cfg.bar_thresholds) names.push_back("bar_" + std::string(dim) + "_born_after_" + format_threshold(t));
        for (double t : cfg.bar_thresholds) names.push_back("bar_" + std::string(dim) + "_dead_before_" + format_threshold(t));
    }
    for (PatternKind k : kAllPatterns) names.push_back("pat_" + std::string(pattern_name(k)));
    return names;
}

std::size_t head_feature_count(const FeatureConfig& cfg) {
    return kThresholdStats.size() * cfg.thresholds.size() +
           2 * (kBarScalars.size() + 2 * cfg.bar_thresholds.size()) + kAllPatterns.size();
}

FeatureVector head_features(const AttentionMap& input, const FeatureConfig& cfg) {
    cfg.validate();
    const AttentionMap a = cfg.drop_special ? input.restricted(non_special(input.meta)) : input;
    FeatureVector fv;
    fv.names.reserve(head_feature_count(cfg));
    fv.values.reserve(head_feature_count(cfg));

    const WeightedGraph full = graph_from_attention(a.weights);
    for (double tau : cfg.thresholds) {
        const WeightedGraph g = filter_graph(full, tau);
        const std::string p = "t" + format_threshold(tau) + "_";
        fv.push(p + "b0", static_cast<double>(betti0(g)));
        fv.push(p + "b1", static_cast<double>(betti1(g)));
        fv.push(p + "edges", static_cast<double>(g.edges.size()));
        fv.push(p + "avg_degree", average_vertex_degree(g));
        fv.push(p + "scc", static_cast<double>(strongly_connected_count(g)));
        fv.push(p + "dir_edges", static_cast<double>(g.arcs.size()));
        fv.push(p + "cycles", static_cast<double>(count_simple_cycles(g, true, cfg.cycle_cap)));
    }

    const BarcodeStats stats = barcode_stats(full_barcode(symmetrize_distance(a)), cfg.bar_thresholds);
    push_dimension(fv, "h0", stats.h0, cfg.bar_thresholds);
    push_dimension(fv, "h1", stats.h1, cfg.bar_thresholds);

    for (PatternKind k : kAllPatterns)
        fv.push("pat_" + std::string(pattern_name(k)), pattern_distance(a.weights, pattern_matrix(k, a.meta)));
    return fv;
}

FeatureVector model_features(const AttentionGrid& grid, const FeatureConfig& cfg) {
    FeatureVector out;
    for (std::size_t l = 0; l < grid.layers; ++l)
        for (std::size_t h = 0; h < grid.heads; ++h) {
            const FeatureVector fv = head_features(grid.at(l, h), cfg);
            out.append(fv, "l" + std::to_string(l) + "_h" + std::to_string(h) + "_");
        }
    return out;
}

FeatureVector sentence_features(const AttentionGrid& grid, const FeatureConfig& cfg) {
    FeatureVector out = model_features(grid, cfg);
    out.head = HeadId{-1, -1};
    out.push("n_tokens", static_cast<double>(grid.tokens()));
    return out;
}

}  // namespace atntopo
