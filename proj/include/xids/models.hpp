#ifndef XIDS_MODELS_HPP
#define XIDS_MODELS_HPP

#include "xids/types.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace xids {

enum class ModelKind { LinearRegression, LogisticRegression, LinearSVM, KNN, DecisionTree, RandomForest, MLP };

inline constexpr std::array<ModelKind, 7> kAllModelKinds = {
    ModelKind::LinearRegression, ModelKind::LogisticRegression, ModelKind::LinearSVM, ModelKind::KNN,
    ModelKind::DecisionTree,     ModelKind::RandomForest,       ModelKind::MLP,
};

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);
bool is_iterative(ModelKind k);

/// Training knobs. Zero-valued "auto" fields resolve to the per-kind defaults
/// listed in the README.
struct TrainConfig {
    std::uint64_t seed = 42;
    int max_epochs = 0;  // 0: 500 for linear/logistic, 200 for SVM and MLP
    double target_accuracy = 0.90;
    double min_improvement = 0.01;  // absolute accuracy gain over the best earlier epoch
    // Consecutive epochs without that gain before stopping. 1 stops at the first
    // stalled epoch.
    int plateau_patience = 10;

    double learning_rate = 0.0;  // 0: 0.1 for linear, 1.0 for logistic, 1e-3 for MLP
    int batch_size = 200;
    double svm_lambda = 1e-4;

    int knn_k = 5;

    int forest_trees = 100;
    bool forest_bootstrap = true;
    int forest_max_features = 0;  // 0: floor(sqrt(n_features)), at least 1

    int mlp_hidden = 100;
    double l2_mlp = 1e-4;

    int threads = 1;  // forest construction and KNN inference
};

enum class StopReason { target_reached, plateau, max_epochs, noniterative };
std::string to_string(StopReason r);
StopReason stop_reason_from_string(const std::string& s);

// Linear scores: one row of weights per output (1 output for binary tasks,
// one per class otherwise).
struct LinearParams {
    Eigen::MatrixXd weights;  // outputs x features
    Eigen::VectorXd bias;     // outputs
};

struct KnnParams {
    Matrix points;
    Labels labels;
    int k = 5;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // rows with x[feature] <= threshold go left
    int left = -1;
    int right = -1;
    int prediction = 0;  // majority class of the node's training rows (lowest index on ties)
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    int predict_row(const double* x) const;
    int depth() const;
};

struct ForestParams {
    std::vector<Tree> trees;
};

struct MlpParams {
    Eigen::MatrixXd w1;  // features x hidden
    Eigen::RowVectorXd b1;
    Eigen::MatrixXd w2;  // hidden x outputs
    Eigen::RowVectorXd b2;
};

using ModelParams = std::variant<LinearParams, KnnParams, Tree, ForestParams, MlpParams>;

struct TrainMetadata {
    int epochs_run = 0;
    StopReason stop_reason = StopReason::noniterative;
    double train_seconds = 0.0;
    std::vector<double> epoch_accuracy;  // training accuracy after each epoch
};

struct TrainedModel {
    ModelKind kind = ModelKind::KNN;
    int class_count = 2;
    std::vector<std::string> feature_names;
    ModelParams params;
    TrainMetadata meta;

    Eigen::Index n_features() const { return static_cast<Eigen::Index>(feature_names.size()); }
};

/// Trains one classifier. Iterative kinds (linear, logistic, SVM, MLP) measure
/// training accuracy after every epoch and stop at target_accuracy, after
/// plateau_patience epochs that each fail to beat the best earlier epoch by
/// min_improvement, or at max_epochs.
TrainedModel train(ModelKind kind, const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg,
                   std::vector<std::string> feature_names = {});

Labels predict(const TrainedModel& m, const Matrix& x);

struct Metrics {
    double accuracy = 0.0;
    Eigen::MatrixXi confusion;  // rows: truth, cols: prediction
};

Metrics accuracy(const Labels& pred, const Labels& truth, int class_count);

/// Central finite-difference check of a training gradient at a random
/// parameter state (seeded). Returns the largest relative error over all
/// parameters: |analytic - numeric| / max(|analytic| + |numeric|, 1e-6).
struct GradCheckSample {
    Matrix x;
    Labels y;
    int class_count = 2;
    std::uint64_t seed = 1;
    int hidden = 100;
    double l2 = 1e-4;
    double step = 1e-5;
};

double grad_check(ModelKind kind, const GradCheckSample& sample);

/// Versioned JSON document with exact float round-trip.
std::string save_model_json(const TrainedModel& m);
TrainedModel load_model_json(const std::string& text);
void save_model(const TrainedModel& m, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace xids

#endif  // XIDS_MODELS_HPP
