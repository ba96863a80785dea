#pragma once

// Slow, independent reference implementations used only by tests.

#include <Eigen/Dense>
#include <cstddef>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "atntopo/types.hpp"

namespace oracle {

struct NaiveBar {
    double birth;
    double death;
};

struct NaiveBarcode {
    std::vector<NaiveBar> h0;  // finite bars only, zero-length included
    std::vector<NaiveBar> h1;  // positive-length bars only
};

/// Full boundary-matrix reduction of the 2-skeleton of the flag complex,
/// simplices ordered by (value, dimension, vertex tuple).
NaiveBarcode naive_barcode(const atntopo::SquareMatrix& d);

/// Minimum total weight over every spanning tree (exhaustive; n <= 7).
double brute_force_mst_weight(const atntopo::SquareMatrix& d);

/// Mean edge weight of a maximum spanning tree of w (Kruskal, descending, label relabeling).
double max_spanning_tree_mean(const atntopo::SquareMatrix& w);

/// |E| - rank_GF2(incidence matrix): the cycle-space dimension.
std::size_t cycle_space_dimension(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

/// Strongly connected components via the transitive closure.
std::size_t scc_count_by_reachability(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& arcs);

/// Simple cycles by exhaustive DFS from each smallest vertex. Undirected
/// cycles (length >= 3) are found twice and halved.
std::size_t enumerate_cycles(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                             bool directed);

/// Union-graph RTD written straight from the definition, reduced with naive_barcode.
double naive_rtd(const atntopo::SquareMatrix& da, const atntopo::SquareMatrix& db);

/// Newton/IRLS minimizer of mean NLL + reg/2 |w|^2 (bias unpenalized); returns (w, b).
std::pair<Eigen::VectorXd, double> irls_logreg(const Eigen::MatrixXd& x, std::span<const int> y, double reg);

/// Row-wise softmax of scaled normal logits.
atntopo::SquareMatrix random_attention(std::size_t n, std::mt19937_64& rng, double sharpness = 2.0);

/// Symmetric matrix with zero diagonal and uniform [0, 1) entries.
atntopo::SquareMatrix random_distance(std::size_t n, std::mt19937_64& rng);

/// The four-vertex graph used throughout the worked example:
/// (1,2)=0.7, (2,3)=0.6, (3,4)=0.5, (1,3)=0.3, (1,4)=0.2, (2,4)=0.1 (0-based here).
atntopo::SquareMatrix toy_weights();

}  // namespace oracle
