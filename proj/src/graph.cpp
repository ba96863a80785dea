#include "atntopo/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace atntopo {

DistanceMatrix symmetrize_distance(const SquareMatrix& a) {
    const std::size_t n = a.size();
    SquareMatrix d(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 1.0 - std::max(a(i, j), a(j, i));
            d(i, j) = v;
            d(j, i) = v;
        }
    return DistanceMatrix(std::move(d));
}

DistanceMatrix symmetrize_distance(const AttentionMap& a) { return symmetrize_distance(a.weights); }

WeightedGraph graph_from_attention(const SquareMatrix& a) {
    const std::size_t n = a.size();
    WeightedGraph g;
    g.n = n;
    g.edges.reserve(n * (n - (n > 0 ? 1 : 0)) / 2);
    g.arcs.reserve(n * (n - (n > 0 ? 1 : 0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto u = static_cast<Vertex>(i);
            const auto v = static_cast<Vertex>(j);
            g.arcs.push_back({u, v, a(i, j)});
            if (i < j) g.edges.push_back({u, v, std::max(a(i, j), a(j, i))});
        }
    return g;
}

WeightedGraph filter_graph(const WeightedGraph& g, double tau) {
    WeightedGraph out;
    out.n = g.n;
    auto keep = [tau](const Edge& e) { return e.w >= tau; };
    std::copy_if(g.edges.begin(), g.edges.end(), std::back_inserter(out.edges), keep);
    std::copy_if(g.arcs.begin(), g.arcs.end(), std::back_inserter(out.arcs), keep);
    return out;
}

std::size_t betti0(const WeightedGraph& g) {
    DisjointSets sets(g.n);
    for (const Edge& e : g.edges) sets.unite(e.u, e.v);
    return sets.components();
}

std::size_t betti1(const WeightedGraph& g) {
    // |E| + |C| >= |V| always holds for a simple graph, so this never underflows.
    return g.edges.size() + betti0(g) - g.n;
}

namespace {

using Adjacency = std::vector<std::vector<Vertex>>;

Adjacency adjacency(const WeightedGraph& g, bool directed) {
    Adjacency adj(g.n);
    if (directed) {
        for (const Edge& e : g.arcs) adj[e.u].push_back(e.v);
    } else {
        for (const Edge& e : g.edges) {
            adj[e.u].push_back(e.v);
            adj[e.v].push_back(e.u);
        }
    }
    for (auto& list : adj) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return adj;
}

// Johnson's circuit enumeration. For the undirected view the adjacency is
// symmetric, so every cycle is met twice (once per orientation) plus the
// spurious 2-cycles of each edge; `undirected_` keeps one orientation of
// cycles with at least three vertices.
class CycleCounter {
public:
    CycleCounter(const Adjacency& adj, bool undirected, std::size_t cap)
        : adj_(adj), undirected_(undirected), cap_(cap), n_(adj.size()), in_scope_(n_), blocked_(n_),
          blocked_by_(n_) {}

    std::size_t run() {
        for (std::size_t s = 0; s < n_ && count_ < cap_; ++s) {
            if (!restrict_to_component(static_cast<Vertex>(s))) continue;
            start_ = static_cast<Vertex>(s);
            path_.clear();
            circuit(start_);
        }
        return std::min(count_, cap_);
    }

private:
    // Scope = strongly connected component of s within vertices >= s.
    bool restrict_to_component(Vertex s) {
        std::vector<char> fwd(n_, 0), bwd(n_, 0);
        std::vector<Vertex> stack{s};
        fwd[s] = 1;
        while (!stack.empty()) {
            Vertex v = stack.back();
            stack.pop_back();
            for (Vertex w : adj_[v])
                if (w >= s && !fwd[w]) {
                    fwd[w] = 1;
                    stack.push_back(w);
                }
        }
        if (reverse_.empty()) {
            reverse_.assign(n_, {});
            for (std::size_t v = 0; v < n_; ++v)
                for (Vertex w : adj_[v]) reverse_[w].push_back(static_cast<Vertex>(v));
        }
        stack.push_back(s);
        bwd[s] = 1;
        while (!stack.empty()) {
            Vertex v = stack.back();
            stack.pop_back();
            for (Vertex w : reverse_[v])
                if (w >= s && !bwd[w]) {
                    bwd[w] = 1;
                    stack.push_back(w);
                }
        }
        std::size_t members = 0;
        for (std::size_t v = 0; v < n_; ++v) {
            in_scope_[v] = fwd[v] && bwd[v];
            members += in_scope_[v];
            blocked_[v] = 0;
            blocked_by_[v].clear();
        }
        return members > 1;
    }

    void unblock(Vertex v) {
        std::vector<Vertex> work{v};
        while (!work.empty()) {
            Vertex x = work.back();
            work.pop_back();
            if (!blocked_[x]) continue;
            blocked_[x] = 0;
            for (Vertex y : blocked_by_[x]) work.push_back(y);
            blocked_by_[x].clear();
        }
    }

    bool accept_closing_path() const {
        if (!undirected_) return true;
        return path_.size() >= 3 && path_[1] < path_.back();
    }

    bool circuit(Vertex v) {
        bool found = false;
        path_.push_back(v);
        blocked_[v] = 1;
        for (Vertex w : adj_[v]) {
            if (count_ >= cap_) break;
            if (!in_scope_[w]) continue;
            if (w == start_) {
                if (accept_closing_path()) ++count_;
                found = true;
            } else if (!blocked_[w] && circuit(w)) {
                found = true;
            }
        }
        if (found) {
            unblock(v);
        } else {
            for (Vertex w : adj_[v]) {
                if (!in_scope_[w]) continue;
                auto& list = blocked_by_[w];
                if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
            }
        }
        path_.pop_back();
        return found;
    }

    const Adjacency& adj_;
    Adjacency reverse_;
    bool undirected_;
    std::size_t cap_;
    std::size_t n_;
    std::size_t count_ = 0;
    Vertex start_ = 0;
    std::vector<Vertex> path_;
    std::vector<char> in_scope_;
    std::vector<char> blocked_;
    std::vector<std::vector<Vertex>> blocked_by_;
};

}  // namespace

std::size_t count_simple_cycles(const WeightedGraph& g, bool directed, std::size_t cap) {
    if (cap == 0) throw std::invalid_argument("count_simple_cycles: cap must be >= 1");
    const Adjacency adj = adjacency(g, directed);
    return CycleCounter(adj, !directed, cap).run();
}

std::size_t strongly_connected_count(const WeightedGraph& g) {
    const Adjacency adj = adjacency(g, true);
    const std::size_t n = g.n;
    constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<Vertex> stack;
    std::size_t next_index = 0, components = 0;

    struct Frame {
        Vertex v;
        std::size_t child;
    };
    std::vector<Frame> call;
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != kUnvisited) continue;
        call.push_back({static_cast<Vertex>(root), 0});
        while (!call.empty()) {
            Frame& f = call.back();
            const Vertex v = f.v;
            if (f.child == 0) {
                index[v] = low[v] = next_index++;
                stack.push_back(v);
                on_stack[v] = 1;
            }
            if (f.child < adj[v].size()) {
                const Vertex w = adj[v][f.child++];
                if (index[w] == kUnvisited) {
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                Vertex w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                } while (w != v);
                ++components;
            }
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
        }
    }
    return components;
}

std::vector<Edge> minimum_spanning_forest(const DistanceMatrix& d) {
    const std::size_t n = d.size();
    std::vector<Edge> all;
    all.reserve(n * (n > 0 ? n - 1 : 0) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            all.push_back({static_cast<Vertex>(i), static_cast<Vertex>(j), d(i, j)});
    std::sort(all.begin(), all.end(), [](const Edge& a, const Edge& b) {
        if (a.w != b.w) return a.w < b.w;
        if (a.u != b.u) return a.u < b.u;
        return a.v < b.v;
    });
    DisjointSets sets(n);
    std::vector<Edge> tree;
    tree.reserve(n > 0 ? n - 1 : 0);
    for (const Edge& e : all) {
        if (sets.unite(e.u, e.v)) tree.push_back(e);
        if (tree.size() + 1 >= n) break;
    }
    return tree;
}

double average_vertex_degree(const WeightedGraph& g) {
    if (g.n == 0) return 0.0;
    return 2.0 * static_cast<double>(g.edges.size()) / static_cast<double>(g.n);
}

}  // namespace atntopo
