#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "atntopo/graph.hpp"
#include "atntopo/persistence.hpp"
#include "oracles.hpp"

using namespace atntopo;

namespace {

std::vector<double> sorted_deaths(const std::vector<Bar>& bars) {
    std::vector<double> out;
    for (const Bar& b : bars) out.push_back(b.death);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<double, double>> sorted_pairs(const std::vector<Bar>& bars) {
    std::vector<std::pair<double, double>> out;
    for (const Bar& b : bars) out.emplace_back(b.birth, b.death);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<double, double>> sorted_pairs(const std::vector<oracle::NaiveBar>& bars) {
    std::vector<std::pair<double, double>> out;
    for (const auto& b : bars) out.emplace_back(b.birth, b.death);
    std::sort(out.begin(), out.end());
    return out;
}

SquareMatrix square_metric() {
    // 0-1-2-3 around a square: sides 0.5, diagonals 1.0.
    SquareMatrix d(4);
    auto set = [&](std::size_t i, std::size_t j, double v) { d(i, j) = d(j, i) = v; };
    set(0, 1, 0.5);
    set(1, 2, 0.5);
    set(2, 3, 0.5);
    set(3, 0, 0.5);
    set(0, 2, 1.0);
    set(1, 3, 1.0);
    return d;
}

}  // namespace

TEST_CASE("h0 barcode of the worked example") {
    const Barcode b = h0_barcode(symmetrize_distance(oracle::toy_weights()));
    REQUIRE(b.bars.size() == 3);
    CHECK(b.bars[0].death == doctest::Approx(0.5));
    CHECK(b.bars[1].death == doctest::Approx(0.4));
    CHECK(b.bars[2].death == doctest::Approx(0.3));
    for (const Bar& bar : b.bars) {
        CHECK(bar.birth == 0.0);
        CHECK(bar.dim == 0);
    }
    const DistanceMatrix d = symmetrize_distance(oracle::toy_weights());
    CHECK(h0_sum(d) == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(h0_mean(d) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("h0 degenerate inputs") {
    const Barcode b = h0_barcode(DistanceMatrix(SquareMatrix(5)));
    CHECK(b.bars.size() == 4);
    for (const Bar& bar : b.bars) CHECK(bar.length() == 0.0);
    CHECK(h0_barcode(DistanceMatrix(SquareMatrix(1))).bars.empty());
    CHECK(h0_mean(DistanceMatrix(SquareMatrix(1))) == 0.0);
    const Barcode e = h0_barcode(DistanceMatrix(SquareMatrix(3)), true);
    CHECK(e.bars.size() == 3);
    CHECK_FALSE(e.bars.back().finite());
}

TEST_CASE("h1 barcode of the square metric") {
    const Barcode b = h1_barcode(DistanceMatrix(square_metric()));
    REQUIRE(b.bars.size() == 1);
    CHECK(b.bars[0].birth == 0.5);
    CHECK(b.bars[0].death == 1.0);
    CHECK(b.bars[0].dim == 1);
}

TEST_CASE("tree metric has no H1") {
    // Path metric 0-1-2-3-4 with unit steps scaled to [0, 1].
    SquareMatrix d(5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) d(i, j) = std::abs(static_cast<double>(i) - static_cast<double>(j)) / 4.0;
    CHECK(h1_barcode(DistanceMatrix(d)).bars.empty());
}

TEST_CASE("barcodes match the naive boundary reduction") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t n = 2 + rng() % 7;
        SquareMatrix m = oracle::random_distance(n, rng);
        if (trial % 3 == 0)  // coarse values force ties in the filtration
            for (double& v : m.values()) v = std::round(v * 4.0) / 4.0;
        const DistanceMatrix d(m);
        const oracle::NaiveBarcode ref = oracle::naive_barcode(m);
        const Barcode h0 = h0_barcode(d);
        REQUIRE(h0.bars.size() == ref.h0.size());
        const auto got0 = sorted_deaths(h0.bars);
        std::vector<double> want0;
        for (const auto& b : ref.h0) want0.push_back(b.death);
        std::sort(want0.begin(), want0.end());
        for (std::size_t k = 0; k < got0.size(); ++k) CHECK(got0[k] == want0[k]);
        CHECK(sorted_pairs(h1_barcode(d).bars) == sorted_pairs(ref.h1));
    }
}

TEST_CASE("bar count law and MST identity") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng() % 30;
        const SquareMatrix a = oracle::random_attention(n, rng);
        const DistanceMatrix d = symmetrize_distance(a);
        CHECK(h0_barcode(d).bars.size() == n - 1);
        double mst = 0.0;
        for (const Edge& e : minimum_spanning_forest(d)) mst += e.w;
        CHECK(std::abs(h0_sum(d) - mst) <= 1e-12);
        if (n > 1) {
            SquareMatrix sym(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) sym(i, j) = std::max(a(i, j), a(j, i));
            CHECK(std::abs(h0_mean(d) - (1.0 - oracle::max_spanning_tree_mean(sym))) <= 1e-12);
        }
    }
}

TEST_CASE("barcodes are permutation invariant") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 3 + rng() % 6;
        const SquareMatrix m = oracle::random_distance(n, rng);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        const SquareMatrix p = m.submatrix(perm);
        CHECK(sorted_pairs(h1_barcode(DistanceMatrix(m)).bars) == sorted_pairs(h1_barcode(DistanceMatrix(p)).bars));
        CHECK(sorted_deaths(h0_barcode(DistanceMatrix(m)).bars) == sorted_deaths(h0_barcode(DistanceMatrix(p)).bars));
    }
}

TEST_CASE("barcode statistics") {
    SUBCASE("worked example") {
        const BarcodeStats s = barcode_stats(full_barcode(symmetrize_distance(oracle::toy_weights())));
        CHECK(s.h0.count == 3);
        CHECK(s.h0.sum == doctest::Approx(1.2).epsilon(1e-12));
        CHECK(s.h0.mean == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(s.h0.variance == doctest::Approx(0.02 / 3.0).epsilon(1e-12));
        // deaths 0.3, 0.4, 0.5: below 0.25 none, below 0.5 two, below 0.75 three
        CHECK(s.h0.dead_before == std::vector<std::size_t>{0, 2, 3});
        CHECK(s.h0.born_after == std::vector<std::size_t>{0, 0, 0});
    }
    SUBCASE("entropy") {
        Barcode one{{{0.0, 0.7, 0}}};
        CHECK(barcode_stats(one).h0.entropy == 0.0);
        Barcode two{{{0.0, 0.3, 1}, {0.2, 0.5, 1}}};
        CHECK(barcode_stats(two).h1.entropy == doctest::Approx(std::log(2.0)));
        CHECK(barcode_stats(two).h1.born_after == std::vector<std::size_t>{0, 0, 0});
        Barcode empty;
        const BarcodeStats e = barcode_stats(empty);
        CHECK(e.h0.count == 0);
        CHECK(e.h0.mean == 0.0);
        CHECK(e.h0.entropy == 0.0);
    }
    SUBCASE("infinite bars are ignored") {
        Barcode b{{{0.0, 0.5, 0}, {0.0, std::numeric_limits<double>::infinity(), 0}}};
        CHECK(barcode_stats(b).h0.count == 1);
        CHECK(barcode_stats(b).h0.sum == 0.5);
    }
    SUBCASE("entropy is nonnegative on random barcodes") {
        std::mt19937_64 rng(24);
        for (int trial = 0; trial < 30; ++trial) {
            const BarcodeStats s = barcode_stats(full_barcode(symmetrize_distance(oracle::random_attention(9, rng))));
            CHECK(s.h0.entropy >= 0.0);
            CHECK(s.h1.entropy >= 0.0);
            CHECK(s.h0.mean == doctest::Approx(s.h0.sum / static_cast<double>(s.h0.count)));
        }
    }
}
