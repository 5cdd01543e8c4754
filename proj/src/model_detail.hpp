#ifndef XIDS_MODEL_DETAIL_HPP
#define XIDS_MODEL_DETAIL_HPP

// Per-kind trainers and loss/gradient routines shared by train() and grad_check().

#include "xids/models.hpp"
#include "xids/rng.hpp"

#include <Eigen/Core>

namespace xids::detail {

// Tracks the stopping rule for iterative learners.
class EpochMonitor {
public:
    EpochMonitor(const TrainConfig& cfg, int max_epochs) : cfg_(cfg), max_epochs_(max_epochs) {}

    // Records one epoch's training accuracy; true when training must stop.
    bool after_epoch(double train_accuracy);
    void finish(TrainMetadata& meta) const;

private:
    const TrainConfig& cfg_;
    int max_epochs_;
    std::vector<double> history_;
    int stalled_ = 0;
    StopReason reason_ = StopReason::max_epochs;
};

inline int output_count(int class_count) { return class_count == 2 ? 1 : class_count; }

// Target matrix (n x outputs) with entries in {0,1}.
Eigen::MatrixXd indicator_targets(const Labels& y, int class_count);

// Labels from a score matrix: binary uses `score >= threshold`, multi-class the
// row argmax (lowest index on ties).
Labels decide(const Eigen::MatrixXd& scores, double threshold);

Eigen::MatrixXd linear_scores(const LinearParams& p, const Matrix& x);

// Mean squared error (halved) summed over outputs.
double squared_loss_grad(const LinearParams& p, const Matrix& x, const Eigen::MatrixXd& targets, LinearParams* grad);
// Mean binary cross-entropy summed over one-vs-rest outputs.
double logistic_loss_grad(const LinearParams& p, const Matrix& x, const Eigen::MatrixXd& targets, LinearParams* grad);
// lambda/2 ||[w b]||^2 + mean hinge, labels in {-1,+1}; bias is regularised.
double hinge_loss_grad(const LinearParams& p, const Matrix& x, const Eigen::MatrixXd& signs, double lambda,
                       LinearParams* grad);

LinearParams train_least_squares(const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg,
                                 TrainMetadata& meta);
LinearParams train_logistic(const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg,
                            TrainMetadata& meta);
LinearParams train_svm(const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg, TrainMetadata& meta);

Labels predict_knn(const KnnParams& p, const Matrix& x, int class_count, int threads);

struct TreeOptions {
    int max_features = 0;  // 0 or >= n_features: consider every feature
};

Tree build_tree(const Matrix& x, const Labels& y, int class_count, const std::vector<Eigen::Index>& rows,
                const TreeOptions& opt, Rng* rng);
ForestParams train_forest(const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg);
Labels predict_forest(const ForestParams& f, const Matrix& x, int class_count);

MlpParams init_mlp(Eigen::Index n_features, int hidden, int outputs, Rng& rng);
Eigen::MatrixXd mlp_output(const MlpParams& p, const Matrix& x);  // pre-activation logits
// Mean cross-entropy + l2/(2 n) * sum of squared weights (biases excluded).
double mlp_loss_grad(const MlpParams& p, const Matrix& x, const Labels& y, int class_count, double l2, MlpParams* grad);
MlpParams train_mlp(const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg, TrainMetadata& meta);

Matrix take_rows(const Matrix& x, const std::vector<Eigen::Index>& rows);
Labels take_rows(const Labels& y, const std::vector<Eigen::Index>& rows);

}  // namespace xids::detail

#endif  // XIDS_MODEL_DETAIL_HPP
