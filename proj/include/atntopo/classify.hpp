#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace atntopo {

enum class Split { Train, DevInDomain, DevOutOfDomain, Test };

std::string_view split_name(Split s);
Split parse_split(std::string_view s);

/// Feature rows with binary labels and a shared schema.
struct LabeledDataset {
    std::vector<std::string> ids;
    std::vector<std::string> feature_names;
    Eigen::MatrixXd x;
    std::vector<int> labels;
    Split split = Split::Train;

    std::size_t rows() const { return labels.size(); }
    /// Throws std::invalid_argument on shape mismatch or a label outside {0, 1}.
    void validate() const;
};

/// Per-column z-scoring with population standard deviation.
/// Zero-variance columns map to 0.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;  // 0 marks a constant column

    static Standardizer fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;  // n_comp x d, orthonormal rows
    std::vector<double> explained_variance;
    std::vector<bool> active_mask;

    /// Top n_comp eigenvectors of the sample covariance, largest first.
    /// Requires 1 <= n_comp <= min(rows - 1, d).
    static PcaModel fit(const Eigen::MatrixXd& x, std::size_t n_comp);

    std::size_t n_components() const { return static_cast<std::size_t>(components.rows()); }
    /// Keeps only the listed components; an empty list activates all.
    void set_active(std::span<const std::size_t> active);
    /// Projection with inactive coordinates zeroed.
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& z) const;
};

enum class Penalty { L2, L1 };

std::string_view penalty_name(Penalty p);
Penalty parse_penalty(std::string_view s);

struct LogRegOptions {
    double reg = 0.1;
    Penalty penalty = Penalty::L2;
    std::size_t max_iter = 5000;
    double tol = 1e-6;
};

struct LogRegModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    double reg = 0.0;
    Penalty penalty = Penalty::L2;
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;

    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const;
    std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

/// Mean negative log-likelihood plus the penalty on the weights (the bias is not penalized).
double logreg_objective(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w, double b,
                        double reg, Penalty penalty = Penalty::L2);

/// Gradient of the smooth part (mean NLL + L2 term when penalty is L2) with
/// respect to (w, b); the last entry is the bias component.
Eigen::VectorXd logreg_gradient(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w, double b,
                                double reg, Penalty penalty = Penalty::L2);

/// Full-batch gradient descent with backtracking. L1 uses the proximal step.
/// Throws std::invalid_argument unless both classes are present.
LogRegModel logreg_train(const Eigen::MatrixXd& x, std::span<const int> y, const LogRegOptions& options = {});

struct Confusion {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

Confusion confusion(std::span<const int> predictions, std::span<const int> labels);
double mcc(const Confusion& c);
double mcc(std::span<const int> predictions, std::span<const int> labels);
double accuracy_score(std::span<const int> predictions, std::span<const int> labels);

struct PipelineParams {
    std::optional<std::size_t> n_comp;
    std::vector<std::size_t> active_components;  // empty = all
    LogRegOptions logreg;

    std::string describe() const;
};

/// standardize -> optional PCA -> logistic regression.
struct Pipeline {
    PipelineParams params;
    Standardizer standardizer;
    std::optional<PcaModel> pca;
    LogRegModel model;

    static Pipeline fit(const Eigen::MatrixXd& x, std::span<const int> y, const PipelineParams& params);
    Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const;
    std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

/// Fold index per row. Each class is shuffled with the seed and dealt round-robin.
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed);

struct GridResult {
    PipelineParams best;
    std::size_t best_index = 0;
    double best_score = 0.0;
    std::vector<double> scores;  // mean held-out MCC per grid entry
};

/// Cross-validated selection by mean MCC; the first best entry in grid order wins.
/// n_comp larger than a fold allows is clipped to min(train_rows - 1, d).
GridResult grid_search(const Eigen::MatrixXd& x, std::span<const int> y, std::span<const PipelineParams> grid,
                       std::size_t folds = 3, std::uint64_t seed = 0);

/// N_comp in {10, 20, ..., 100} crossed with reg in {0.01, 0.02, ..., 0.1}.
std::vector<PipelineParams> standard_grid();

}  // namespace atntopo
