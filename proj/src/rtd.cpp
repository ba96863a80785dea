#include "atntopo/rtd.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "atntopo/graph.hpp"

namespace atntopo {

namespace {

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

std::vector<std::size_t> shrink(const TokenMeta& meta, std::size_t target) {
    const std::size_t n = meta.size();
    std::vector<char> keep(n, 1);
    std::size_t excess = n - target;
    const std::size_t final_sep = meta.final_separator().value_or(n);
    for (std::size_t i = final_sep; i-- > 0 && excess > 0;) {
        if (meta.is_special(i)) continue;
        keep[i] = 0;
        --excess;
    }
    // Anything after the final separator (padding) goes next, from the end.
    for (std::size_t i = n; i-- > final_sep + 1 && excess > 0;) {
        if (meta.is_special(i) || !keep[i]) continue;
        keep[i] = 0;
        --excess;
    }
    if (excess > 0)
        throw std::invalid_argument("align_pair: cannot truncate " + std::to_string(n) + " tokens to " +
                                    std::to_string(target) + " without dropping special tokens");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) out.push_back(i);
    return out;
}

bool only_special(const TokenMeta& m) {
    for (std::size_t i = 0; i < m.size(); ++i)
        if (!m.is_special(i)) return false;
    return true;
}

}  // namespace

Alignment align_pair(const TokenMeta& a, const TokenMeta& b) {
    if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("align_pair: empty token sequence");
    if (only_special(a) || only_special(b))
        throw std::invalid_argument("align_pair: sequence consists only of special tokens");
    if (a.size() == b.size()) return {iota_indices(a.size()), iota_indices(b.size())};
    if (a.size() > b.size()) return {shrink(a, b.size()), iota_indices(b.size())};
    return {iota_indices(a.size()), shrink(b, a.size())};
}

UnionGraph build_union_graph(const DistanceMatrix& da, const DistanceMatrix& db) {
    if (da.size() != db.size())
        throw std::invalid_argument("build_union_graph: size mismatch " + std::to_string(da.size()) + " vs " +
                                    std::to_string(db.size()));
    const std::size_t n = da.size();
    UnionGraph g{n, SquareMatrix(2 * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            g.w(n + i, n + j) = db(i, j);
            const double cross = std::max(da(i, j), db(i, j));
            g.w(i, n + j) = cross;
            g.w(n + j, i) = cross;
        }
    return g;
}

Barcode rtd_barcode(const DistanceMatrix& da, const DistanceMatrix& db) {
    return h1_barcode(build_union_graph(da, db).distances());
}

double rtd(const DistanceMatrix& da, const DistanceMatrix& db) {
    double total = 0.0;
    for (const Bar& b : rtd_barcode(da, db).bars) total += b.length();
    return total;
}

SquareMatrix mask_direction(const SquareMatrix& a, AttentionDirection direction) {
    if (direction == AttentionDirection::Both) return a;
    SquareMatrix out = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (direction == AttentionDirection::Forward && j < i) out(i, j) = 0.0;
            if (direction == AttentionDirection::Backward && j > i) out(i, j) = 0.0;
        }
    return out;
}

std::pair<DistanceMatrix, DistanceMatrix> aligned_distances(const AttentionMap& a, const AttentionMap& b,
                                                            AttentionDirection direction) {
    const Alignment al = align_pair(a.meta, b.meta);
    return {symmetrize_distance(mask_direction(a.weights.submatrix(al.a), direction)),
            symmetrize_distance(mask_direction(b.weights.submatrix(al.b), direction))};
}

double rtd_from_attention(const AttentionMap& a, const AttentionMap& b, AttentionDirection direction) {
    const auto [da, db] = aligned_distances(a, b, direction);
    return rtd(da, db);
}

}  // namespace atntopo
