#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "atntopo/types.hpp"

namespace atntopo {

using Vertex = std::uint32_t;

struct Edge {
    Vertex u = 0;
    Vertex v = 0;
    double w = 0.0;
    bool operator==(const Edge&) const = default;
};

/// Attention graph with an undirected view (u < v, one edge per pair) and a
/// directed view keeping both orientations. No self-loops.
struct WeightedGraph {
    std::size_t n = 0;
    std::vector<Edge> edges;
    std::vector<Edge> arcs;
};

inline constexpr std::size_t kDefaultCycleCap = 500;

/// Disjoint-set forest with path halving and union by size.
class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1), components_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    /// Returns false when x and y were already joined.
    bool unite(std::size_t x, std::size_t y) {
        x = find(x);
        y = find(y);
        if (x == y) return false;
        if (size_[x] < size_[y]) std::swap(x, y);
        parent_[y] = x;
        size_[x] += size_[y];
        --components_;
        return true;
    }

    std::size_t components() const { return components_; }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
    std::size_t components_;
};

/// d[i][j] = 1 - max(a[i][j], a[j][i]) off the diagonal, 0 on it.
DistanceMatrix symmetrize_distance(const SquareMatrix& a);
DistanceMatrix symmetrize_distance(const AttentionMap& a);

/// Complete graph on the tokens: undirected weight max(a[i][j], a[j][i]),
/// directed arc i -> j with weight a[i][j]. The diagonal is ignored.
WeightedGraph graph_from_attention(const SquareMatrix& a);

/// Drops every edge and arc with weight < tau; weight == tau is kept.
WeightedGraph filter_graph(const WeightedGraph& g, double tau);

/// Connected components of the undirected view.
std::size_t betti0(const WeightedGraph& g);
/// |E| + betti0 - |V| of the undirected view.
std::size_t betti1(const WeightedGraph& g);

/// Simple cycles, counted up to `cap`. Undirected cycles have length >= 3 and
/// are counted once regardless of orientation; directed cycles include 2-cycles.
std::size_t count_simple_cycles(const WeightedGraph& g, bool directed, std::size_t cap = kDefaultCycleCap);

/// Strongly connected components of the directed view.
std::size_t strongly_connected_count(const WeightedGraph& g);

/// Kruskal over all pairs i < j. Ties go to the lexicographically smaller (u, v).
std::vector<Edge> minimum_spanning_forest(const DistanceMatrix& d);

/// 2|E| / |V| for the undirected view; 0 for the empty graph.
double average_vertex_degree(const WeightedGraph& g);

}  // namespace atntopo
