#include "atntopo/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <unordered_map>

#include "atntopo/graph.hpp"

namespace atntopo {

std::vector<Bar> Barcode::dimension(int dim) const {
    std::vector<Bar> out;
    for (const Bar& b : bars)
        if (b.dim == dim) out.push_back(b);
    return out;
}

std::size_t Barcode::count(int dim) const {
    return static_cast<std::size_t>(std::count_if(bars.begin(), bars.end(), [dim](const Bar& b) { return b.dim == dim; }));
}

namespace {

void sort_longest_first(std::vector<Bar>& bars) {
    std::stable_sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) {
        if (a.length() != b.length()) return a.length() > b.length();
        return a.birth < b.birth;
    });
}

// Dense Prim, O(n^2). The multiset of MST weights does not depend on ties.
std::vector<double> mst_weights(const DistanceMatrix& d) {
    const std::size_t n = d.size();
    std::vector<double> out;
    if (n < 2) return out;
    out.reserve(n - 1);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<char> in_tree(n, 0);
    std::size_t current = 0;
    in_tree[0] = 1;
    for (std::size_t step = 1; step < n; ++step) {
        const auto row = d.matrix().row(current);
        std::size_t next = n;
        double next_w = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (in_tree[j]) continue;
            if (row[j] < best[j]) best[j] = row[j];
            if (next == n || best[j] < next_w) {
                next = j;
                next_w = best[j];
            }
        }
        in_tree[next] = 1;
        out.push_back(next_w);
        current = next;
    }
    return out;
}

struct FiltrationEdge {
    double diam;
    Vertex u;
    Vertex v;
};

struct Triangle {
    double diam;
    std::uint64_t code;  // lexicographic rank of the sorted vertex triple

    bool operator==(const Triangle&) const = default;
    bool operator>(const Triangle& o) const { return diam != o.diam ? diam > o.diam : code > o.code; }
};

// Cohomology reduction of the edge -> triangle coboundary matrix, columns in
// reverse filtration order, with clearing of H0 death edges. The pivot of a
// column is its earliest coface.
class H1Reducer {
public:
    explicit H1Reducer(const DistanceMatrix& d) : d_(d), n_(d.size()) {}

    std::vector<Bar> run() {
        std::vector<Bar> bars;
        if (n_ < 3) return bars;
        build_edges();
        const std::vector<char> cleared = h0_death_edges();

        reduction_.assign(edges_.size(), {});
        pivot_owner_.reserve(edges_.size());
        std::vector<Triangle> cofaces;
        for (std::size_t k = edges_.size(); k-- > 0;) {
            if (cleared[k]) continue;
            const FiltrationEdge& e = edges_[k];
            coboundary(e, cofaces);
            auto first = std::min_element(cofaces.begin(), cofaces.end(),
                                          [](const Triangle& a, const Triangle& b) { return b > a; });
            if (first == cofaces.end()) continue;
            std::vector<std::uint32_t> combination{static_cast<std::uint32_t>(k)};
            std::optional<Triangle> pivot = *first;
            if (pivot_owner_.contains(pivot->code)) pivot = reduce(cofaces, combination);
            if (!pivot) continue;  // essential class; cannot occur on a complete 2-skeleton
            pivot_owner_.emplace(pivot->code, static_cast<std::uint32_t>(k));
            reduction_[k] = std::move(combination);
            if (pivot->diam > e.diam) bars.push_back({e.diam, pivot->diam, 1});
        }
        return bars;
    }

private:
    using Heap = std::priority_queue<Triangle, std::vector<Triangle>, std::greater<Triangle>>;

    void build_edges() {
        edges_.reserve(n_ * (n_ - 1) / 2);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j)
                edges_.push_back({d_(i, j), static_cast<Vertex>(i), static_cast<Vertex>(j)});
        std::sort(edges_.begin(), edges_.end(), [](const FiltrationEdge& a, const FiltrationEdge& b) {
            if (a.diam != b.diam) return a.diam < b.diam;
            if (a.u != b.u) return a.u < b.u;
            return a.v < b.v;
        });
    }

    std::vector<char> h0_death_edges() const {
        std::vector<char> cleared(edges_.size(), 0);
        DisjointSets sets(n_);
        std::size_t merges = 0;
        for (std::size_t k = 0; k < edges_.size() && merges + 1 < n_; ++k)
            if (sets.unite(edges_[k].u, edges_[k].v)) {
                cleared[k] = 1;
                ++merges;
            }
        return cleared;
    }

    void coboundary(const FiltrationEdge& e, std::vector<Triangle>& out) const {
        out.clear();
        const auto ru = d_.matrix().row(e.u);
        const auto rv = d_.matrix().row(e.v);
        const std::uint64_t n = n_;
        for (std::size_t w = 0; w < n_; ++w) {
            if (w == e.u || w == e.v) continue;
            const double diam = std::max({e.diam, ru[w], rv[w]});
            std::uint64_t a = e.u, b = e.v, c = w;
            if (w < e.u) {
                a = w, b = e.u, c = e.v;
            } else if (w < e.v) {
                b = w, c = e.v;
            }
            out.push_back({diam, (a * n + b) * n + c});
        }
    }

    static std::optional<Triangle> pop_pivot(Heap& heap) {
        while (!heap.empty()) {
            Triangle top = heap.top();
            heap.pop();
            if (heap.empty() || !(heap.top() == top)) return top;
            heap.pop();  // GF(2): equal entries cancel
        }
        return std::nullopt;
    }

    std::optional<Triangle> reduce(const std::vector<Triangle>& initial, std::vector<std::uint32_t>& combination) {
        Heap heap(std::greater<Triangle>{}, initial);
        std::vector<Triangle> scratch;
        std::optional<Triangle> pivot = pop_pivot(heap);
        while (pivot) {
            auto owner = pivot_owner_.find(pivot->code);
            if (owner == pivot_owner_.end()) break;
            heap.push(*pivot);
            for (std::uint32_t k : reduction_[owner->second]) {
                coboundary(edges_[k], scratch);
                for (const Triangle& t : scratch) heap.push(t);
                combination.push_back(k);
            }
            pivot = pop_pivot(heap);
        }
        std::sort(combination.begin(), combination.end());
        std::vector<std::uint32_t> reduced;
        for (std::size_t i = 0; i < combination.size();) {
            std::size_t j = i;
            while (j < combination.size() && combination[j] == combination[i]) ++j;
            if ((j - i) % 2 == 1) reduced.push_back(combination[i]);
            i = j;
        }
        combination = std::move(reduced);
        return pivot;
    }

    const DistanceMatrix& d_;
    std::size_t n_;
    std::vector<FiltrationEdge> edges_;
    std::vector<std::vector<std::uint32_t>> reduction_;
    std::unordered_map<std::uint64_t, std::uint32_t> pivot_owner_;
};

DimensionStats dimension_stats(const std::vector<Bar>& bars, std::span<const double> thresholds) {
    DimensionStats s;
    s.born_after.assign(thresholds.size(), 0);
    s.dead_before.assign(thresholds.size(), 0);
    std::vector<double> lengths;
    for (const Bar& b : bars) {
        if (!b.finite()) continue;
        lengths.push_back(b.length());
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            if (b.birth > thresholds[t]) ++s.born_after[t];
            if (b.death < thresholds[t]) ++s.dead_before[t];
        }
    }
    s.count = lengths.size();
    if (lengths.empty()) return s;
    for (double l : lengths) s.sum += l;
    s.mean = s.sum / static_cast<double>(lengths.size());
    for (double l : lengths) s.variance += (l - s.mean) * (l - s.mean);
    s.variance /= static_cast<double>(lengths.size());
    if (s.sum > 0.0) {
        for (double l : lengths) {
            if (l <= 0.0) continue;
            const double p = l / s.sum;
            s.entropy -= p * std::log(p);
        }
        s.entropy = std::max(s.entropy, 0.0);
    }
    return s;
}

}  // namespace

Barcode h0_barcode(const DistanceMatrix& d, bool include_essential) {
    Barcode b;
    for (double w : mst_weights(d)) b.bars.push_back({0.0, w, 0});
    sort_longest_first(b.bars);
    if (include_essential && d.size() > 0)
        b.bars.push_back({0.0, std::numeric_limits<double>::infinity(), 0});
    return b;
}

Barcode h1_barcode(const DistanceMatrix& d) {
    Barcode b;
    b.bars = H1Reducer(d).run();
    sort_longest_first(b.bars);
    return b;
}

Barcode full_barcode(const DistanceMatrix& d) {
    Barcode b = h0_barcode(d);
    Barcode h1 = h1_barcode(d);
    b.bars.insert(b.bars.end(), h1.bars.begin(), h1.bars.end());
    return b;
}

double h0_sum(const DistanceMatrix& d) {
    double s = 0.0;
    for (double w : mst_weights(d)) s += w;
    return s;
}

double h0_mean(const DistanceMatrix& d) {
    if (d.size() < 2) return 0.0;
    return h0_sum(d) / static_cast<double>(d.size() - 1);
}

BarcodeStats barcode_stats(const Barcode& b, std::span<const double> thresholds) {
    BarcodeStats s;
    s.thresholds.assign(thresholds.begin(), thresholds.end());
    s.h0 = dimension_stats(b.dimension(0), thresholds);
    s.h1 = dimension_stats(b.dimension(1), thresholds);
    return s;
}

}  // namespace atntopo
