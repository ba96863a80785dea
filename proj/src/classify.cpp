#include "atntopo/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "atntopo/parallel.hpp"

namespace atntopo {

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::DevInDomain: return "dev_in_domain";
        case Split::DevOutOfDomain: return "dev_out_of_domain";
        case Split::Test: return "test";
    }
    return "train";
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "dev_in_domain" || s == "dev") return Split::DevInDomain;
    if (s == "dev_out_of_domain") return Split::DevOutOfDomain;
    if (s == "test") return Split::Test;
    throw std::invalid_argument("unknown split '" + std::string(s) + "'");
}

void LabeledDataset::validate() const {
    if (static_cast<std::size_t>(x.rows()) != labels.size() || ids.size() != labels.size())
        throw std::invalid_argument("dataset: ids, rows and labels differ in length");
    if (!feature_names.empty() && static_cast<std::size_t>(x.cols()) != feature_names.size())
        throw std::invalid_argument("dataset: feature name count does not match column count");
    for (int y : labels)
        if (y != 0 && y != 1) throw std::invalid_argument("dataset: label " + std::to_string(y) + " is not 0 or 1");
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
    if (x.rows() < 2) throw std::invalid_argument("standardize: need at least two rows");
    Standardizer s;
    s.mean = x.colwise().mean().transpose();
    s.scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double var = (x.col(j).array() - s.mean(j)).square().mean();
        s.scale(j) = var > 0.0 ? std::sqrt(var) : 0.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size()) throw std::invalid_argument("standardize: column count mismatch");
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (scale(j) == 0.0) out.col(j).setZero();
        else out.col(j) = (x.col(j).array() - mean(j)) / scale(j);
    }
    return out;
}

namespace {

// Largest-magnitude coordinate positive; first index wins ties.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    if (v(arg) < 0.0) v = -v;
}

// Orthonormalizes columns in order; a column that collapses is replaced by
// the first standard basis vector that survives.
void orthonormalize(Eigen::MatrixXd& v) {
    const Eigen::Index d = v.rows();
    Eigen::Index next_basis = 0;
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
        const double original = v.col(k).norm();
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index j = 0; j < k; ++j) v.col(k) -= v.col(j).dot(v.col(k)) * v.col(j);
        double norm = v.col(k).norm();
        while (!(norm > 1e-10 * std::max(1.0, original)) && next_basis < d) {
            v.col(k).setZero();
            v(next_basis++, k) = 1.0;
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index j = 0; j < k; ++j) v.col(k) -= v.col(j).dot(v.col(k)) * v.col(j);
            norm = v.col(k).norm();
        }
        v.col(k) /= norm;
    }
}

}  // namespace

PcaModel PcaModel::fit(const Eigen::MatrixXd& x, std::size_t n_comp) {
    const auto rows = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    if (rows < 2) throw std::invalid_argument("pca: need at least two rows");
    if (n_comp == 0 || n_comp > std::min(rows - 1, d))
        throw std::invalid_argument("pca: n_comp " + std::to_string(n_comp) + " outside [1, " +
                                    std::to_string(std::min(rows - 1, d)) + "]");
    PcaModel m;
    m.mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd xc = x.rowwise() - m.mean.transpose();
    const double denom = static_cast<double>(rows - 1);
    const auto k = static_cast<Eigen::Index>(n_comp);

    Eigen::MatrixXd v(d, n_comp);
    Eigen::VectorXd lambda(k);
    if (rows >= d) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((xc.transpose() * xc) / denom);
        if (es.info() != Eigen::Success) throw std::runtime_error("pca: eigendecomposition failed");
        const auto dd = static_cast<Eigen::Index>(d);
        for (Eigen::Index c = 0; c < k; ++c) {
            v.col(c) = es.eigenvectors().col(dd - 1 - c);
            lambda(c) = es.eigenvalues()(dd - 1 - c);
        }
    } else {
        // Gram trick: eigenvectors u of Xc Xc^T map to Xc^T u.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((xc * xc.transpose()) / denom);
        if (es.info() != Eigen::Success) throw std::runtime_error("pca: eigendecomposition failed");
        const auto rr = static_cast<Eigen::Index>(rows);
        for (Eigen::Index c = 0; c < k; ++c) {
            v.col(c) = xc.transpose() * es.eigenvectors().col(rr - 1 - c);
            lambda(c) = es.eigenvalues()(rr - 1 - c);
        }
    }
    orthonormalize(v);
    for (Eigen::Index c = 0; c < k; ++c) fix_sign(v.col(c));
    m.components = v.transpose();
    for (Eigen::Index c = 0; c < k; ++c) m.explained_variance.push_back(std::max(0.0, lambda(c)));
    m.active_mask.assign(n_comp, true);
    return m;
}

void PcaModel::set_active(std::span<const std::size_t> active) {
    if (active.empty()) {
        active_mask.assign(n_components(), true);
        return;
    }
    std::vector<bool> mask(n_components(), false);
    for (std::size_t c : active) {
        if (c >= n_components())
            throw std::invalid_argument("pca mask: component " + std::to_string(c) + " out of range for " +
                                        std::to_string(n_components()) + " components");
        mask[c] = true;
    }
    active_mask = std::move(mask);
}

Eigen::MatrixXd PcaModel::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size()) throw std::invalid_argument("pca: column count mismatch");
    Eigen::MatrixXd z = (x.rowwise() - mean.transpose()) * components.transpose();
    for (std::size_t c = 0; c < active_mask.size(); ++c)
        if (!active_mask[c]) z.col(static_cast<Eigen::Index>(c)).setZero();
    return z;
}

Eigen::MatrixXd PcaModel::reconstruct(const Eigen::MatrixXd& z) const {
    return (z * components).rowwise() + mean.transpose();
}

std::string_view penalty_name(Penalty p) { return p == Penalty::L2 ? "l2" : "l1"; }

Penalty parse_penalty(std::string_view s) {
    if (s == "l2") return Penalty::L2;
    if (s == "l1") return Penalty::L1;
    throw std::invalid_argument("unknown penalty '" + std::string(s) + "' (expected l1 or l2)");
}

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_shapes(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw std::invalid_argument("logreg: row/label count mismatch");
    if (x.cols() != w.size()) throw std::invalid_argument("logreg: weight length mismatch");
    if (y.empty()) throw std::invalid_argument("logreg: empty dataset");
}

double mean_nll(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w, double b) {
    const Eigen::VectorXd z = (x * w).array() + b;
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z(i)) - y[static_cast<std::size_t>(i)] * z(i);
    return total / static_cast<double>(z.size());
}

// Gradient of mean NLL (plus L2 term when smooth_reg > 0).
Eigen::VectorXd smooth_gradient(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w, double b,
                                double smooth_reg) {
    const Eigen::VectorXd z = (x * w).array() + b;
    Eigen::VectorXd r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) r(i) = sigmoid(z(i)) - y[static_cast<std::size_t>(i)];
    const double m = static_cast<double>(z.size());
    Eigen::VectorXd g(w.size() + 1);
    g.head(w.size()) = x.transpose() * r / m + smooth_reg * w;
    g(w.size()) = r.sum() / m;
    return g;
}

double smooth_objective(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& theta,
                        double smooth_reg) {
    const Eigen::Index d = theta.size() - 1;
    const Eigen::VectorXd w = theta.head(d);
    return mean_nll(x, y, w, theta(d)) + 0.5 * smooth_reg * w.squaredNorm();
}

void soft_threshold(Eigen::VectorXd& theta, double amount) {
    for (Eigen::Index j = 0; j + 1 < theta.size(); ++j)
        theta(j) = std::copysign(std::max(0.0, std::abs(theta(j)) - amount), theta(j));
}

}  // namespace

double logreg_objective(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w, double b,
                        double reg, Penalty penalty) {
    check_shapes(x, y, w);
    const double pen = penalty == Penalty::L2 ? 0.5 * reg * w.squaredNorm() : reg * w.lpNorm<1>();
    return mean_nll(x, y, w, b) + pen;
}

Eigen::VectorXd logreg_gradient(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w, double b,
                                double reg, Penalty penalty) {
    check_shapes(x, y, w);
    return smooth_gradient(x, y, w, b, penalty == Penalty::L2 ? reg : 0.0);
}

LogRegModel logreg_train(const Eigen::MatrixXd& x, std::span<const int> y, const LogRegOptions& options) {
    if (static_cast<std::size_t>(x.rows()) != y.size() || y.empty())
        throw std::invalid_argument("logreg: row/label count mismatch");
    bool has0 = false, has1 = false;
    for (int v : y) {
        if (v != 0 && v != 1) throw std::invalid_argument("logreg: labels must be 0 or 1");
        (v == 1 ? has1 : has0) = true;
    }
    if (!has0 || !has1) throw std::invalid_argument("logreg: training data contains a single class");
    if (!(options.reg >= 0.0)) throw std::invalid_argument("logreg: regularization must be >= 0");

    const bool l1 = options.penalty == Penalty::L1;
    const double smooth_reg = l1 ? 0.0 : options.reg;
    const Eigen::Index d = x.cols();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
    Eigen::VectorXd g = smooth_gradient(x, y, theta.head(d), 0.0, smooth_reg);
    double f = smooth_objective(x, y, theta, smooth_reg);
    double step = 1.0;
    Eigen::VectorXd prev_theta, prev_g;

    LogRegModel model;
    model.reg = options.reg;
    model.penalty = options.penalty;

    // Stationarity measure: gradient norm for L2, gradient-mapping norm for L1.
    auto measure = [&](const Eigen::VectorXd& th, const Eigen::VectorXd& gr) {
        if (!l1) return gr.norm();
        Eigen::VectorXd p = th - gr;
        soft_threshold(p, options.reg);
        return (th - p).norm();
    };

    std::size_t it = 0;
    double gnorm = measure(theta, g);
    for (; it < options.max_iter && gnorm > options.tol; ++it) {
        if (prev_theta.size() > 0) {
            const Eigen::VectorXd s = theta - prev_theta;
            const Eigen::VectorXd yy = g - prev_g;
            const double sy = s.dot(yy);
            if (sy > 0.0) step = s.squaredNorm() / sy;
        }
        Eigen::VectorXd next;
        double f_next = 0.0;
        while (true) {
            next = theta - step * g;
            if (l1) soft_threshold(next, step * options.reg);
            f_next = smooth_objective(x, y, next, smooth_reg);
            const Eigen::VectorXd delta = next - theta;
            const double bound = l1 ? f + g.dot(delta) + delta.squaredNorm() / (2.0 * step)
                                    : f - 1e-4 * step * g.squaredNorm();
            if (f_next <= bound) break;
            step *= 0.5;
            if (step < 1e-30) break;
        }
        if (step < 1e-30) break;
        prev_theta = theta;
        prev_g = g;
        theta = next;
        f = f_next;
        g = smooth_gradient(x, y, theta.head(d), theta(d), smooth_reg);
        gnorm = measure(theta, g);
    }
    model.weights = theta.head(d);
    model.bias = theta(d);
    model.iterations = it;
    model.gradient_norm = gnorm;
    model.converged = gnorm <= options.tol;
    if (!model.weights.allFinite() || !std::isfinite(model.bias))
        throw std::runtime_error("logreg: optimization produced non-finite parameters");
    return model;
}

Eigen::VectorXd LogRegModel::predict_proba(const Eigen::MatrixXd& x) const {
    if (x.cols() != weights.size()) throw std::invalid_argument("logreg: feature count mismatch");
    Eigen::VectorXd z = (x * weights).array() + bias;
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = sigmoid(z(i));
    return z;
}

std::vector<int> LogRegModel::predict(const Eigen::MatrixXd& x) const {
    const Eigen::VectorXd p = predict_proba(x);
    std::vector<int> out(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p(i) >= 0.5 ? 1 : 0;
    return out;
}

Confusion confusion(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) throw std::invalid_argument("metrics: length mismatch");
    if (labels.empty()) throw std::invalid_argument("metrics: empty input");
    Confusion c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool p = predictions[i] != 0, t = labels[i] != 0;
        if (p && t) ++c.tp;
        else if (!p && !t) ++c.tn;
        else if (p) ++c.fp;
        else ++c.fn;
    }
    return c;
}

double mcc(const Confusion& c) {
    const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
    const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0.0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(denom);
}

double mcc(std::span<const int> predictions, std::span<const int> labels) {
    return mcc(confusion(predictions, labels));
}

double accuracy_score(std::span<const int> predictions, std::span<const int> labels) {
    const Confusion c = confusion(predictions, labels);
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(labels.size());
}

std::string PipelineParams::describe() const {
    std::ostringstream os;
    os << "n_comp=" << (n_comp ? std::to_string(*n_comp) : "none") << " reg=" << logreg.reg
       << " penalty=" << penalty_name(logreg.penalty);
    if (!active_components.empty()) {
        os << " mask=";
        for (std::size_t i = 0; i < active_components.size(); ++i) os << (i ? "," : "") << active_components[i];
    }
    return os.str();
}

Pipeline Pipeline::fit(const Eigen::MatrixXd& x, std::span<const int> y, const PipelineParams& params) {
    Pipeline p;
    p.params = params;
    p.standardizer = Standardizer::fit(x);
    Eigen::MatrixXd z = p.standardizer.apply(x);
    if (params.n_comp) {
        p.pca = PcaModel::fit(z, *params.n_comp);
        p.pca->set_active(params.active_components);
        z = p.pca->apply(z);
    }
    p.model = logreg_train(z, y, params.logreg);
    return p;
}

Eigen::MatrixXd Pipeline::transform(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd z = standardizer.apply(x);
    if (pca) z = pca->apply(z);
    return z;
}

Eigen::VectorXd Pipeline::predict_proba(const Eigen::MatrixXd& x) const { return model.predict_proba(transform(x)); }

std::vector<int> Pipeline::predict(const Eigen::MatrixXd& x) const { return model.predict(transform(x)); }

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("stratified_folds: need at least two folds");
    std::vector<std::size_t> assignment(labels.size(), 0);
    std::mt19937_64 gen(seed);
    std::size_t offset = 0;
    for (int cls : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), gen);
        // Continue dealing where the previous class stopped so fold sizes stay balanced.
        for (std::size_t k = 0; k < idx.size(); ++k) assignment[idx[k]] = (offset + k) % folds;
        offset = (offset + idx.size()) % folds;
    }
    return assignment;
}

GridResult grid_search(const Eigen::MatrixXd& x, std::span<const int> y, std::span<const PipelineParams> grid,
                       std::size_t folds, std::uint64_t seed) {
    if (grid.empty()) throw std::invalid_argument("grid_search: empty parameter grid");
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw std::invalid_argument("grid_search: row/label mismatch");
    std::size_t n0 = 0, n1 = 0;
    for (int v : y) (v ? n1 : n0)++;
    if (n0 < folds || n1 < folds)
        throw std::invalid_argument("grid_search: each class needs at least " + std::to_string(folds) + " rows");

    const std::vector<std::size_t> fold = stratified_folds(y, folds, seed);
    struct Split {
        Eigen::MatrixXd xtr, xte;
        std::vector<int> ytr, yte;
    };
    std::vector<Split> splits(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> tr, te;
        for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
        splits[f].xtr = x(tr, Eigen::all);
        splits[f].xte = x(te, Eigen::all);
        for (auto i : tr) splits[f].ytr.push_back(y[static_cast<std::size_t>(i)]);
        for (auto i : te) splits[f].yte.push_back(y[static_cast<std::size_t>(i)]);
    }

    GridResult r;
    r.scores.assign(grid.size(), 0.0);
    parallel_for(grid.size(), [&](std::size_t g) {
        double total = 0.0;
        for (const Split& s : splits) {
            PipelineParams p = grid[g];
            if (p.n_comp) {
                const std::size_t limit =
                    std::min(static_cast<std::size_t>(s.xtr.rows()) - 1, static_cast<std::size_t>(s.xtr.cols()));
                p.n_comp = std::min(*p.n_comp, limit);
                std::erase_if(p.active_components, [&](std::size_t c) { return c >= *p.n_comp; });
            }
            const Pipeline pipe = Pipeline::fit(s.xtr, s.ytr, p);
            total += mcc(pipe.predict(s.xte), s.yte);
        }
        r.scores[g] = total / static_cast<double>(folds);
    });
    r.best_index = 0;
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (r.scores[g] > r.scores[r.best_index]) r.best_index = g;
    r.best = grid[r.best_index];
    r.best_score = r.scores[r.best_index];
    return r;
}

std::vector<PipelineParams> standard_grid() {
    std::vector<PipelineParams> grid;
    for (std::size_t n = 10; n <= 100; n += 10)
        for (int k = 1; k <= 10; ++k) {
            PipelineParams p;
            p.n_comp = n;
            p.logreg.reg = 0.01 * k;
            grid.push_back(p);
        }
    return grid;
}

}  // namespace atntopo
