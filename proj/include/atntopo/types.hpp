#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace atntopo {

/// Dense row-major n x n matrix of doubles.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
    SquareMatrix(std::size_t n, std::vector<double> data);

    std::size_t size() const { return n_; }
    bool empty() const { return n_ == 0; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
    std::span<const double> values() const { return data_; }
    std::span<double> values() { return data_; }

    SquareMatrix transposed() const;
    /// Principal submatrix on the given indices, in the given order.
    SquareMatrix submatrix(std::span<const std::size_t> indices) const;

    static SquareMatrix identity(std::size_t n);

    bool operator==(const SquareMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Per-token metadata written by the attention extractor.
struct TokenMeta {
    std::vector<std::string> tokens;
    std::optional<std::size_t> cls_index;
    std::vector<std::size_t> sep_indices;
    std::vector<bool> punct_flags;
    std::vector<bool> comma_flags;
    std::vector<bool> dot_flags;
    std::size_t first_index = 0;

    std::size_t size() const { return tokens.size(); }
    bool is_special(std::size_t i) const;
    /// Largest separator index, if any.
    std::optional<std::size_t> final_separator() const;

    /// Throws std::invalid_argument when per-token lists disagree in length
    /// or a special index is out of range.
    void validate() const;

    /// Meta restricted to `indices` (kept in order); special positions that
    /// are not kept disappear, first_index becomes 0.
    TokenMeta restricted(std::span<const std::size_t> indices) const;

    /// "[CLS] t1 ... [SEP]" style meta with no punctuation.
    static TokenMeta plain(std::size_t n);
};

/// One head's attention matrix; row i is the distribution of token i.
struct AttentionMap {
    SquareMatrix weights;
    TokenMeta meta;

    std::size_t size() const { return weights.size(); }
    AttentionMap restricted(std::span<const std::size_t> indices) const;
};

/// Problems found in an attention map: out-of-range or non-finite entries,
/// rows not summing to one within `row_tol`, meta length mismatch.
std::vector<std::string> check_attention(const AttentionMap& a, double row_tol = 1e-4);

/// Throws std::invalid_argument with the first problem reported by check_attention.
void validate_attention(const AttentionMap& a, double row_tol = 1e-4);

struct HeadId {
    int layer = 0;
    int head = 0;
    auto operator<=>(const HeadId&) const = default;
};

std::string to_string(HeadId id);

/// All L x H attention maps for one sentence, stored in (layer, head) row-major order.
struct AttentionGrid {
    std::size_t layers = 0;
    std::size_t heads = 0;
    std::vector<AttentionMap> maps;

    /// Throws std::out_of_range naming the (layer, head) when it is absent.
    const AttentionMap& at(std::size_t layer, std::size_t head) const;
    const AttentionMap& at(HeadId id) const;
    /// Token count shared by all heads; 0 for an empty grid.
    std::size_t tokens() const;
};

/// Symmetric matrix with zero diagonal; the input of every persistence computation.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    /// Throws std::invalid_argument when `d` is not symmetric with zero diagonal.
    explicit DistanceMatrix(SquareMatrix d);

    std::size_t size() const { return d_.size(); }
    double operator()(std::size_t i, std::size_t j) const { return d_(i, j); }
    const SquareMatrix& matrix() const { return d_; }

private:
    SquareMatrix d_;
};

}  // namespace atntopo
