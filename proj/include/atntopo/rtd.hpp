#pragma once

#include <cstddef>
#include <vector>

#include "atntopo/persistence.hpp"
#include "atntopo/types.hpp"

namespace atntopo {

/// Equal-length index lists giving the one-to-one token correspondence.
struct Alignment {
    std::vector<std::size_t> a;
    std::vector<std::size_t> b;
};

/// Matches two token sequences position by position. The longer sequence
/// loses its trailing non-special tokens just before the final separator
/// until the lengths agree; special tokens are always kept.
/// Throws std::invalid_argument when a side has no non-special token or the
/// longer side cannot shrink enough.
Alignment align_pair(const TokenMeta& a, const TokenMeta& b);

/// Complete graph on {v_1..v_n, u_1..u_n} (v_i at index i, u_i at n + i).
struct UnionGraph {
    std::size_t n = 0;
    SquareMatrix w;

    DistanceMatrix distances() const { return DistanceMatrix(w); }
};

/// w(v_i, v_j) = 0, w(v_i, u_i) = 0, w(u_i, u_j) = db(i, j),
/// w(v_i, u_j) = max(da(i, j), db(i, j)). Throws std::invalid_argument on size mismatch.
UnionGraph build_union_graph(const DistanceMatrix& da, const DistanceMatrix& db);

/// H1 barcode of the union graph's flag complex.
Barcode rtd_barcode(const DistanceMatrix& da, const DistanceMatrix& db);

/// Representation Topology Divergence: total H1 bar length of the union graph.
double rtd(const DistanceMatrix& da, const DistanceMatrix& db);

/// Which part of an attention matrix enters the distance transform.
enum class AttentionDirection {
    Both,      // full matrix
    Forward,   // a[i][j] for j >= i only (lower triangle zeroed)
    Backward,  // a[i][j] for j <= i only (upper triangle zeroed)
};

SquareMatrix mask_direction(const SquareMatrix& a, AttentionDirection direction);

/// align_pair, restriction of both maps, symmetrize_distance, rtd.
double rtd_from_attention(const AttentionMap& a, const AttentionMap& b,
                          AttentionDirection direction = AttentionDirection::Both);

/// The aligned distance matrices used by rtd_from_attention.
std::pair<DistanceMatrix, DistanceMatrix> aligned_distances(const AttentionMap& a, const AttentionMap& b,
                                                            AttentionDirection direction = AttentionDirection::Both);

}  // namespace atntopo
