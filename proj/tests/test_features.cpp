#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "atntopo/features.hpp"
#include "atntopo/graph.hpp"
#include "oracles.hpp"

using namespace atntopo;

namespace {

double value_of(const FeatureVector& fv, const std::string& name) {
    for (std::size_t k = 0; k < fv.size(); ++k)
        if (fv.names[k] == name) return fv.values[k];
    FAIL("missing feature " << name);
    return 0.0;
}

TokenMeta punctuated(std::size_t n) {
    TokenMeta m = TokenMeta::plain(n);
    m.punct_flags[n - 2] = true;
    m.dot_flags[n - 2] = true;
    m.punct_flags[2] = true;
    m.comma_flags[2] = true;
    return m;
}

}  // namespace

TEST_CASE("pattern matrices") {
    const TokenMeta m = TokenMeta::plain(4);
    CHECK(pattern_matrix(PatternKind::CurrentToken, m) == SquareMatrix::identity(4));
    const SquareMatrix next = pattern_matrix(PatternKind::NextToken, TokenMeta::plain(3));
    CHECK(next == SquareMatrix(3, {0, 1, 0, 0, 0, 1, 0, 0, 0}));
    const SquareMatrix prev = pattern_matrix(PatternKind::PrevToken, TokenMeta::plain(3));
    CHECK(prev == SquareMatrix(3, {0, 0, 0, 1, 0, 0, 0, 1, 0}));
    const SquareMatrix cls = pattern_matrix(PatternKind::ClsToken, m);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(cls(i, j) == (j == 0 ? 1.0 : 0.0));
    const SquareMatrix sep = pattern_matrix(PatternKind::SepToken, m);
    for (std::size_t i = 0; i < 4; ++i) CHECK(sep(i, 3) == 1.0);

    const TokenMeta p = punctuated(6);
    const SquareMatrix comma = pattern_matrix(PatternKind::Comma, p);
    const SquareMatrix punct = pattern_matrix(PatternKind::Punctuation, p);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(comma(i, 2) == 1.0);
        CHECK(punct(i, 2) == 1.0);
        CHECK(punct(i, 4) == 1.0);
        CHECK(pattern_matrix(PatternKind::Dot, p)(i, 4) == 1.0);
    }
    SUBCASE("binary with bounded row sums") {
        for (PatternKind k : kAllPatterns) {
            const SquareMatrix pm = pattern_matrix(k, p);
            for (std::size_t i = 0; i < 6; ++i) {
                double row = 0.0;
                for (double v : pm.row(i)) {
                    CHECK((v == 0.0 || v == 1.0));
                    row += v;
                }
                const bool positional = k == PatternKind::PrevToken || k == PatternKind::CurrentToken ||
                                        k == PatternKind::NextToken || k == PatternKind::ClsToken ||
                                        k == PatternKind::FirstToken;
                if (positional) CHECK(row <= 1.0);
            }
        }
    }
}

TEST_CASE("pattern distance") {
    const SquareMatrix id = SquareMatrix::identity(4);
    CHECK(pattern_distance(id, id) == 0.0);
    CHECK(pattern_distance(id, SquareMatrix(4)) == 1.0);
    CHECK(pattern_distance(SquareMatrix(4), SquareMatrix(4)) == 0.0);
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const SquareMatrix a = oracle::random_attention(5, rng);
        const SquareMatrix p = pattern_matrix(kAllPatterns[trial % 9], punctuated(5));
        double diff = 0.0, na = 0.0, np = 0.0;
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) {
                diff += (a(i, j) - p(i, j)) * (a(i, j) - p(i, j));
                na += a(i, j) * a(i, j);
                np += p(i, j) * p(i, j);
            }
        const double expect = std::sqrt(diff) / (std::sqrt(na) + std::sqrt(np));
        CHECK(pattern_distance(a, p) == doctest::Approx(expect).epsilon(1e-14));
        CHECK(pattern_distance(p, a) == doctest::Approx(pattern_distance(a, p)).epsilon(1e-15));
        CHECK(pattern_distance(a, p) >= 0.0);
        CHECK(pattern_distance(a, p) <= 1.0);
    }
    CHECK_THROWS_AS(pattern_distance(SquareMatrix(2), SquareMatrix(3)), std::invalid_argument);
}

TEST_CASE("head feature schema") {
    const FeatureConfig cfg;
    CHECK(head_feature_count(cfg) == 73);
    const std::vector<std::string> names = head_feature_names(cfg);
    CHECK(names.size() == 73);
    CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
    CHECK(names.front() == "t0.025_b0");
    CHECK(names.back() == "pat_first");
    FeatureConfig small;
    small.thresholds = {0.5};
    small.bar_thresholds = {0.1};
    CHECK(head_feature_count(small) == 7 + 2 * (5 + 2) + 9);

    std::mt19937_64 rng(42);
    const FeatureVector fv = head_features(AttentionMap{oracle::random_attention(7, rng), TokenMeta::plain(7)}, cfg);
    CHECK(fv.names == names);
    CHECK(fv.schema_version == kFeatureSchema);
    for (double v : fv.values) CHECK(std::isfinite(v));
}

TEST_CASE("head features on the worked example") {
    FeatureConfig cfg;
    cfg.thresholds = {0.0, 0.4, 1.0};
    const FeatureVector fv = head_features(AttentionMap{oracle::toy_weights(), TokenMeta::plain(4)}, cfg);
    CHECK(value_of(fv, "t0_b0") == 1);
    CHECK(value_of(fv, "t0_b1") == 3);
    CHECK(value_of(fv, "t0.4_b0") == 1);
    CHECK(value_of(fv, "t0.4_b1") == 0);
    CHECK(value_of(fv, "t1_b0") == 4);
    CHECK(value_of(fv, "t1_b1") == 0);
    CHECK(value_of(fv, "t0_avg_degree") == 3.0);
    CHECK(value_of(fv, "bar_h0_sum") == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(value_of(fv, "bar_h0_mean") == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("identity attention above zero threshold has no edges") {
    FeatureConfig cfg;
    cfg.thresholds = {0.5};
    const FeatureVector fv = head_features(AttentionMap{SquareMatrix::identity(5), TokenMeta::plain(5)}, cfg);
    CHECK(value_of(fv, "t0.5_edges") == 0);
    CHECK(value_of(fv, "t0.5_b0") == 5);
    CHECK(value_of(fv, "pat_current") == 0.0);
}

TEST_CASE("head features are the concatenation of their parts") {
    std::mt19937_64 rng(43);
    const AttentionMap a{oracle::random_attention(8, rng), punctuated(8)};
    const FeatureConfig cfg;
    const FeatureVector fv = head_features(a, cfg);
    const WeightedGraph g = graph_from_attention(a.weights);
    std::size_t k = 0;
    for (double tau : cfg.thresholds) {
        const WeightedGraph f = filter_graph(g, tau);
        CHECK(fv.values[k++] == betti0(f));
        CHECK(fv.values[k++] == betti1(f));
        CHECK(fv.values[k++] == f.edges.size());
        CHECK(fv.values[k++] == average_vertex_degree(f));
        CHECK(fv.values[k++] == strongly_connected_count(f));
        CHECK(fv.values[k++] == f.arcs.size());
        CHECK(fv.values[k++] == count_simple_cycles(f, true, cfg.cycle_cap));
    }
    const BarcodeStats s = barcode_stats(full_barcode(symmetrize_distance(a.weights)), cfg.bar_thresholds);
    for (const DimensionStats* d : {&s.h0, &s.h1}) {
        CHECK(fv.values[k++] == d->count);
        CHECK(fv.values[k++] == d->sum);
        CHECK(fv.values[k++] == d->mean);
        CHECK(fv.values[k++] == d->variance);
        CHECK(fv.values[k++] == d->entropy);
        for (std::size_t c : d->born_after) CHECK(fv.values[k++] == c);
        for (std::size_t c : d->dead_before) CHECK(fv.values[k++] == c);
    }
    for (PatternKind kind : kAllPatterns) CHECK(fv.values[k++] == pattern_distance(a.weights, pattern_matrix(kind, a.meta)));
    CHECK(k == fv.size());
    CHECK(head_features(a, cfg).values == fv.values);
}

TEST_CASE("drop_special removes special-token vertices") {
    std::mt19937_64 rng(44);
    const AttentionMap a{oracle::random_attention(6, rng), TokenMeta::plain(6)};
    FeatureConfig cfg;
    cfg.drop_special = true;
    const FeatureVector fv = head_features(a, cfg);
    CHECK(value_of(fv, "bar_h0_count") == 3);
}

TEST_CASE("model and sentence features") {
    std::mt19937_64 rng(45);
    AttentionGrid grid{2, 3, {}};
    for (int k = 0; k < 6; ++k) grid.maps.push_back({oracle::random_attention(5, rng), TokenMeta::plain(5)});
    const FeatureVector mf = model_features(grid);
    CHECK(mf.size() == 6 * head_feature_count());
    CHECK(mf.names.front() == "l0_h0_t0.025_b0");
    CHECK(mf.names.back() == "l1_h2_pat_first");
    const FeatureVector second = head_features(grid.at(0, 1));
    for (std::size_t k = 0; k < second.size(); ++k) CHECK(mf.values[head_feature_count() + k] == second.values[k]);

    const FeatureVector sf = sentence_features(grid);
    CHECK(sf.size() == mf.size() + 1);
    CHECK(sf.names.back() == "n_tokens");
    CHECK(sf.values.back() == 5.0);

    SUBCASE("single head equals head_features") {
        AttentionGrid one{1, 1, {grid.maps[0]}};
        CHECK(model_features(one).values == head_features(grid.maps[0]).values);
    }
    SUBCASE("head order matters") {
        AttentionGrid swapped = grid;
        std::swap(swapped.maps[0], swapped.maps[1]);
        CHECK(model_features(swapped).values != mf.values);
    }
    SUBCASE("missing head names the head") {
        AttentionGrid broken = grid;
        broken.maps.pop_back();
        CHECK_THROWS_WITH_AS(model_features(broken), doctest::Contains("(layer 1, head 2)"), std::out_of_range);
    }
}

TEST_CASE("feature config validation") {
    FeatureConfig cfg;
    cfg.thresholds = {0.5, 0.25};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.thresholds = {0.5, 1.5};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK(format_threshold(0.025) == "0.025");
    CHECK(format_threshold(1.0) == "1");
}
