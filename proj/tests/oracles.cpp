#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>

namespace oracle {

using atntopo::SquareMatrix;

namespace {

struct Simplex {
    std::vector<std::size_t> v;  // sorted vertices
    double value;
};

}  // namespace

NaiveBarcode naive_barcode(const SquareMatrix& d) {
    const std::size_t n = d.size();
    std::vector<Simplex> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back({{i}, 0.0});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) s.push_back({{i, j}, d(i, j)});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k)
                s.push_back({{i, j, k}, std::max({d(i, j), d(i, k), d(j, k)})});
    std::stable_sort(s.begin(), s.end(), [](const Simplex& a, const Simplex& b) {
        if (a.value != b.value) return a.value < b.value;
        if (a.v.size() != b.v.size()) return a.v.size() < b.v.size();
        return a.v < b.v;
    });
    std::map<std::vector<std::size_t>, std::size_t> index;
    for (std::size_t k = 0; k < s.size(); ++k) index[s[k].v] = k;

    // Columns as sorted sets of row indices; standard left-to-right reduction.
    std::vector<std::set<std::size_t>> col(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k].v.size() < 2) continue;
        for (std::size_t drop = 0; drop < s[k].v.size(); ++drop) {
            std::vector<std::size_t> face;
            for (std::size_t t = 0; t < s[k].v.size(); ++t)
                if (t != drop) face.push_back(s[k].v[t]);
            col[k].insert(index.at(face));
        }
    }
    std::map<std::size_t, std::size_t> low_owner;
    NaiveBarcode out;
    for (std::size_t k = 0; k < s.size(); ++k) {
        while (!col[k].empty()) {
            const std::size_t low = *col[k].rbegin();
            auto it = low_owner.find(low);
            if (it == low_owner.end()) break;
            for (std::size_t r : col[it->second]) {
                if (col[k].count(r)) col[k].erase(r);
                else col[k].insert(r);
            }
        }
        if (col[k].empty()) continue;
        const std::size_t low = *col[k].rbegin();
        low_owner[low] = k;
        const double birth = s[low].value, death = s[k].value;
        if (s[low].v.size() == 1) out.h0.push_back({birth, death});
        else if (death > birth) out.h1.push_back({birth, death});
    }
    return out;
}

double brute_force_mst_weight(const SquareMatrix& d) {
    const std::size_t n = d.size();
    if (n < 2) return 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> pick(edges.size(), false);
    std::fill(pick.end() - static_cast<std::ptrdiff_t>(n - 1), pick.end(), true);
    do {
        std::vector<std::size_t> label(n);
        for (std::size_t i = 0; i < n; ++i) label[i] = i;
        double total = 0.0;
        bool tree = true;
        for (std::size_t e = 0; e < edges.size() && tree; ++e) {
            if (!pick[e]) continue;
            const std::size_t a = label[edges[e].first], b = label[edges[e].second];
            if (a == b) tree = false;
            for (auto& l : label)
                if (l == b) l = a;
            total += d(edges[e].first, edges[e].second);
        }
        if (tree) best = std::min(best, total);
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

double max_spanning_tree_mean(const SquareMatrix& w) {
    const std::size_t n = w.size();
    struct E {
        double w;
        std::size_t i, j;
    };
    std::vector<E> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) edges.push_back({w(i, j), i, j});
    std::sort(edges.begin(), edges.end(), [](const E& a, const E& b) { return a.w > b.w; });
    std::vector<std::size_t> label(n);
    for (std::size_t i = 0; i < n; ++i) label[i] = i;
    double total = 0.0;
    std::size_t used = 0;
    for (const E& e : edges) {
        const std::size_t a = label[e.i], b = label[e.j];
        if (a == b) continue;
        for (auto& l : label)
            if (l == b) l = a;
        total += e.w;
        ++used;
    }
    return used == 0 ? 0.0 : total / static_cast<double>(used);
}

std::size_t cycle_space_dimension(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    // Rows are edges over GF(2); rank via Gaussian elimination on bit rows.
    std::vector<std::vector<bool>> rows;
    for (const auto& [u, v] : edges) {
        std::vector<bool> r(n, false);
        r[u] = true;
        r[v] = true;
        rows.push_back(r);
    }
    std::size_t rank = 0;
    for (std::size_t c = 0; c < n && rank < rows.size(); ++c) {
        std::size_t piv = rank;
        while (piv < rows.size() && !rows[piv][c]) ++piv;
        if (piv == rows.size()) continue;
        std::swap(rows[piv], rows[rank]);
        for (std::size_t r = 0; r < rows.size(); ++r)
            if (r != rank && rows[r][c])
                for (std::size_t k = 0; k < n; ++k) rows[r][k] = rows[r][k] != rows[rank][k];
        ++rank;
    }
    return edges.size() - rank;
}

std::size_t scc_count_by_reachability(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& arcs) {
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) reach[i][i] = true;
    for (const auto& [u, v] : arcs) reach[u][v] = true;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (reach[i][k])
                for (std::size_t j = 0; j < n; ++j)
                    if (reach[k][j]) reach[i][j] = true;
    std::vector<bool> seen(n, false);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (seen[i]) continue;
        ++count;
        for (std::size_t j = 0; j < n; ++j)
            if (reach[i][j] && reach[j][i]) seen[j] = true;
    }
    return count;
}

std::size_t enumerate_cycles(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                             bool directed) {
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& [u, v] : edges) {
        adj[u].push_back(v);
        if (!directed) adj[v].push_back(u);
    }
    std::size_t closed = 0;
    std::vector<bool> on_path(n, false);
    for (std::size_t s = 0; s < n; ++s) {
        std::function<void(std::size_t, std::size_t)> dfs = [&](std::size_t v, std::size_t depth) {
            for (std::size_t w : adj[v]) {
                if (w == s) {
                    if (directed || depth >= 3) ++closed;
                } else if (w > s && !on_path[w]) {
                    on_path[w] = true;
                    dfs(w, depth + 1);
                    on_path[w] = false;
                }
            }
        };
        on_path[s] = true;
        dfs(s, 1);
        on_path[s] = false;
    }
    return directed ? closed : closed / 2;
}

double naive_rtd(const SquareMatrix& da, const SquareMatrix& db) {
    const std::size_t n = da.size();
    SquareMatrix w(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            w(n + i, n + j) = db(i, j);
            w(i, n + j) = w(n + j, i) = std::max(da(i, j), db(i, j));
        }
    double total = 0.0;
    for (const NaiveBar& b : naive_barcode(w).h1) total += b.death - b.birth;
    return total;
}

std::pair<Eigen::VectorXd, double> irls_logreg(const Eigen::MatrixXd& x, std::span<const int> y, double reg) {
    const Eigen::Index m = x.rows(), d = x.cols();
    Eigen::MatrixXd xb(m, d + 1);
    xb << x, Eigen::VectorXd::Ones(m);
    Eigen::VectorXd yv(m);
    for (Eigen::Index i = 0; i < m; ++i) yv(i) = y[static_cast<std::size_t>(i)];
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
    Eigen::MatrixXd penalty = Eigen::MatrixXd::Identity(d + 1, d + 1) * reg;
    penalty(d, d) = 0.0;
    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd prob = (1.0 + (-(xb * theta)).array().exp()).inverse();
        const Eigen::VectorXd grad = xb.transpose() * (prob - yv) / static_cast<double>(m) + penalty * theta;
        const Eigen::VectorXd wdiag = prob.array() * (1.0 - prob.array());
        const Eigen::MatrixXd h = xb.transpose() * wdiag.asDiagonal() * xb / static_cast<double>(m) + penalty +
                                  1e-12 * Eigen::MatrixXd::Identity(d + 1, d + 1);
        const Eigen::VectorXd step = h.ldlt().solve(grad);
        theta -= step;
        if (step.norm() < 1e-14) break;
    }
    return {theta.head(d), theta(d)};
}

SquareMatrix random_attention(std::size_t n, std::mt19937_64& rng, double sharpness) {
    std::normal_distribution<double> z(0.0, 1.0);
    SquareMatrix a(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> logits(n);
        double mx = -1e300;
        for (auto& l : logits) mx = std::max(mx, l = sharpness * z(rng));
        double total = 0.0;
        for (auto& l : logits) total += l = std::exp(l - mx);
        for (std::size_t j = 0; j < n; ++j) a(i, j) = logits[j] / total;
    }
    return a;
}

SquareMatrix random_distance(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SquareMatrix d(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = u(rng);
    return d;
}

SquareMatrix toy_weights() {
    SquareMatrix w(4);
    auto set = [&](std::size_t i, std::size_t j, double v) { w(i - 1, j - 1) = w(j - 1, i - 1) = v; };
    set(1, 2, 0.7);
    set(2, 3, 0.6);
    set(3, 4, 0.5);
    set(1, 3, 0.3);
    set(1, 4, 0.2);
    set(2, 4, 0.1);
    return w;
}

}  // namespace oracle
