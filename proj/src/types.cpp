#include "atntopo/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace atntopo {

SquareMatrix::SquareMatrix(std::size_t n, std::vector<double> data) : n_(n), data_(std::move(data)) {
    if (data_.size() != n * n)
        throw std::invalid_argument("SquareMatrix: expected " + std::to_string(n * n) + " values, got " +
                                    std::to_string(data_.size()));
}

SquareMatrix SquareMatrix::transposed() const {
    SquareMatrix t(n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

SquareMatrix SquareMatrix::submatrix(std::span<const std::size_t> indices) const {
    SquareMatrix s(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= n_) throw std::out_of_range("submatrix index out of range");
        for (std::size_t j = 0; j < indices.size(); ++j) s(i, j) = (*this)(indices[i], indices[j]);
    }
    return s;
}

SquareMatrix SquareMatrix::identity(std::size_t n) {
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool TokenMeta::is_special(std::size_t i) const {
    if (cls_index && *cls_index == i) return true;
    return std::find(sep_indices.begin(), sep_indices.end(), i) != sep_indices.end();
}

std::optional<std::size_t> TokenMeta::final_separator() const {
    if (sep_indices.empty()) return std::nullopt;
    return *std::max_element(sep_indices.begin(), sep_indices.end());
}

void TokenMeta::validate() const {
    const std::size_t n = size();
    auto check_len = [n](const std::vector<bool>& flags, const char* name) {
        if (flags.size() != n)
            throw std::invalid_argument(std::string("token meta: ") + name + " has " +
                                        std::to_string(flags.size()) + " entries, expected " + std::to_string(n));
    };
    check_len(punct_flags, "punct_flags");
    check_len(comma_flags, "comma_flags");
    check_len(dot_flags, "dot_flags");
    if (cls_index && *cls_index >= n) throw std::invalid_argument("token meta: cls_index out of range");
    for (std::size_t s : sep_indices)
        if (s >= n) throw std::invalid_argument("token meta: sep index " + std::to_string(s) + " out of range");
    if (n > 0 && first_index >= n) throw std::invalid_argument("token meta: first_index out of range");
}

TokenMeta TokenMeta::restricted(std::span<const std::size_t> indices) const {
    TokenMeta out;
    std::vector<std::ptrdiff_t> remap(size(), -1);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        if (i >= size()) throw std::out_of_range("token meta restriction index out of range");
        remap[i] = static_cast<std::ptrdiff_t>(k);
        out.tokens.push_back(tokens[i]);
        out.punct_flags.push_back(punct_flags[i]);
        out.comma_flags.push_back(comma_flags[i]);
        out.dot_flags.push_back(dot_flags[i]);
    }
    if (cls_index && remap[*cls_index] >= 0) out.cls_index = static_cast<std::size_t>(remap[*cls_index]);
    for (std::size_t s : sep_indices)
        if (remap[s] >= 0) out.sep_indices.push_back(static_cast<std::size_t>(remap[s]));
    std::sort(out.sep_indices.begin(), out.sep_indices.end());
    out.first_index = 0;
    return out;
}

TokenMeta TokenMeta::plain(std::size_t n) {
    TokenMeta m;
    m.tokens.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.tokens[i] = "t" + std::to_string(i);
    if (n > 0) {
        m.tokens.front() = "[CLS]";
        m.cls_index = 0;
    }
    if (n > 1) {
        m.tokens.back() = "[SEP]";
        m.sep_indices = {n - 1};
    }
    m.punct_flags.assign(n, false);
    m.comma_flags.assign(n, false);
    m.dot_flags.assign(n, false);
    return m;
}

AttentionMap AttentionMap::restricted(std::span<const std::size_t> indices) const {
    return AttentionMap{weights.submatrix(indices), meta.restricted(indices)};
}

std::vector<std::string> check_attention(const AttentionMap& a, double row_tol) {
    std::vector<std::string> problems;
    const std::size_t n = a.size();
    if (a.meta.size() != n)
        problems.push_back("token count " + std::to_string(a.meta.size()) + " does not match matrix size " +
                           std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double w = a.weights(i, j);
            if (!std::isfinite(w)) {
                problems.push_back("non-finite weight at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
                return problems;
            }
            if (w < 0.0 || w > 1.0)
                problems.push_back("weight outside [0,1] at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
            sum += w;
        }
        if (std::abs(sum - 1.0) > row_tol)
            problems.push_back("row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
    return problems;
}

void validate_attention(const AttentionMap& a, double row_tol) {
    auto problems = check_attention(a, row_tol);
    if (!problems.empty()) throw std::invalid_argument("invalid attention map: " + problems.front());
    a.meta.validate();
}

std::string to_string(HeadId id) {
    return "(layer " + std::to_string(id.layer) + ", head " + std::to_string(id.head) + ")";
}

const AttentionMap& AttentionGrid::at(std::size_t layer, std::size_t head) const {
    const std::size_t k = layer * heads + head;
    if (layer >= layers || head >= heads || k >= maps.size() || maps[k].size() == 0)
        throw std::out_of_range("missing attention map for " +
                                to_string(HeadId{static_cast<int>(layer), static_cast<int>(head)}));
    return maps[k];
}

const AttentionMap& AttentionGrid::at(HeadId id) const {
    if (id.layer < 0 || id.head < 0) throw std::out_of_range("missing attention map for " + to_string(id));
    return at(static_cast<std::size_t>(id.layer), static_cast<std::size_t>(id.head));
}

std::size_t AttentionGrid::tokens() const { return maps.empty() ? 0 : maps.front().size(); }

DistanceMatrix::DistanceMatrix(SquareMatrix d) : d_(std::move(d)) {
    const std::size_t n = d_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (d_(i, i) != 0.0) throw std::invalid_argument("distance matrix: nonzero diagonal at " + std::to_string(i));
        for (std::size_t j = i + 1; j < n; ++j)
            if (d_(i, j) != d_(j, i) || std::isnan(d_(i, j)))
                throw std::invalid_argument("distance matrix: asymmetric or NaN entry at (" + std::to_string(i) +
                                            ", " + std::to_string(j) + ")");
    }
}

}  // namespace atntopo
