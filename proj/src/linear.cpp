#include "model_detail.hpp"

#include <cmath>

namespace xids::detail {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double train_accuracy(const Labels& pred, const Labels& y) {
    return static_cast<double>((pred.array() == y.array()).count()) / static_cast<double>(y.size());
}

using LossFn = double (*)(const LinearParams&, const Matrix&, const Eigen::MatrixXd&, LinearParams*);

// Shuffled mini-batch gradient descent; one epoch is one pass over the rows.
LinearParams minibatch_descent(const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg,
                               TrainMetadata& meta, LossFn loss, double threshold, double default_lr) {
    const int outputs = output_count(class_count);
    const Eigen::MatrixXd targets = indicator_targets(y, class_count);
    LinearParams p{Eigen::MatrixXd::Zero(outputs, x.cols()), Eigen::VectorXd::Zero(outputs)};
    const double lr = cfg.learning_rate > 0 ? cfg.learning_rate : default_lr;
    const int max_epochs = cfg.max_epochs > 0 ? cfg.max_epochs : 500;
    const auto batch = static_cast<Eigen::Index>(std::max(1, cfg.batch_size));

    Rng rng(cfg.seed);
    EpochMonitor monitor(cfg, max_epochs);
    LinearParams grad;
    while (true) {
        const IndexList order = rng.permutation(x.rows());
        for (Eigen::Index start = 0; start < x.rows(); start += batch) {
            const auto stop = std::min(x.rows(), start + batch);
            const std::vector<Eigen::Index> rows(order.begin() + start, order.begin() + stop);
            Eigen::MatrixXd bt(rows.size(), targets.cols());
            for (std::size_t i = 0; i < rows.size(); ++i) bt.row(static_cast<Eigen::Index>(i)) = targets.row(rows[i]);
            loss(p, take_rows(x, rows), bt, &grad);
            p.weights -= lr * grad.weights;
            p.bias -= lr * grad.bias;
        }
        if (monitor.after_epoch(train_accuracy(decide(linear_scores(p, x), threshold), y))) break;
    }
    monitor.finish(meta);
    return p;
}

}  // namespace

Eigen::MatrixXd indicator_targets(const Labels& y, int class_count) {
    const int outputs = output_count(class_count);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(y.size(), outputs);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (outputs == 1) t(i, 0) = y(i) == 1 ? 1.0 : 0.0;
        else t(i, y(i)) = 1.0;
    }
    return t;
}

Labels decide(const Eigen::MatrixXd& scores, double threshold) {
    Labels out(scores.rows());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        if (scores.cols() == 1) {
            out(i) = scores(i, 0) >= threshold ? 1 : 0;
        } else {
            Eigen::Index best = 0;
            for (Eigen::Index c = 1; c < scores.cols(); ++c)
                if (scores(i, c) > scores(i, best)) best = c;
            out(i) = static_cast<int>(best);
        }
    }
    return out;
}

Eigen::MatrixXd linear_scores(const LinearParams& p, const Matrix& x) {
    Eigen::MatrixXd s = x * p.weights.transpose();
    s.rowwise() += p.bias.transpose();
    return s;
}

double squared_loss_grad(const LinearParams& p, const Matrix& x, const Eigen::MatrixXd& targets, LinearParams* grad) {
    const double n = static_cast<double>(x.rows());
    const Eigen::MatrixXd resid = linear_scores(p, x) - targets;
    if (grad) {
        grad->weights = resid.transpose() * x / n;
        grad->bias = resid.colwise().sum().transpose() / n;
    }
    return 0.5 * resid.squaredNorm() / n;
}

double logistic_loss_grad(const LinearParams& p, const Matrix& x, const Eigen::MatrixXd& targets, LinearParams* grad) {
    const double n = static_cast<double>(x.rows());
    const Eigen::MatrixXd z = linear_scores(p, x);
    double loss = 0.0;
    Eigen::MatrixXd err(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            // -[t log s + (1-t) log(1-s)] = softplus(z) - t z
            loss += softplus(z(i, c)) - targets(i, c) * z(i, c);
            err(i, c) = sigmoid(z(i, c)) - targets(i, c);
        }
    if (grad) {
        grad->weights = err.transpose() * x / n;
        grad->bias = err.colwise().sum().transpose() / n;
    }
    return loss / n;
}

double hinge_loss_grad(const LinearParams& p, const Matrix& x, const Eigen::MatrixXd& signs, double lambda,
                       LinearParams* grad) {
    const double n = static_cast<double>(x.rows());
    const Eigen::MatrixXd z = linear_scores(p, x);
    double loss = 0.5 * lambda * (p.weights.squaredNorm() + p.bias.squaredNorm());
    Eigen::MatrixXd active = Eigen::MatrixXd::Zero(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            const double margin = signs(i, c) * z(i, c);
            if (margin < 1.0) {
                loss += (1.0 - margin) / n;
                active(i, c) = -signs(i, c);
            }
        }
    if (grad) {
        grad->weights = lambda * p.weights + active.transpose() * x / n;
        grad->bias = lambda * p.bias + active.colwise().sum().transpose() / n;
    }
    return loss;
}

LinearParams train_least_squares(const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg,
                                 TrainMetadata& meta) {
    return minibatch_descent(x, y, class_count, cfg, meta, &squared_loss_grad, 0.5, 0.1);
}

LinearParams train_logistic(const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg,
                            TrainMetadata& meta) {
    // sigmoid(z) >= 0.5 <=> z >= 0
    return minibatch_descent(x, y, class_count, cfg, meta, &logistic_loss_grad, 0.0, 1.0);
}

// Pegasos: per-sample sub-gradient steps with eta_t = 1 / (lambda t). The bias
// rides along as a weight on a constant input of 1.
LinearParams train_svm(const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg, TrainMetadata& meta) {
    const int outputs = output_count(class_count);
    const Eigen::MatrixXd signs = 2.0 * indicator_targets(y, class_count).array() - 1.0;
    const double lambda = cfg.svm_lambda;
    const int max_epochs = cfg.max_epochs > 0 ? cfg.max_epochs : 200;

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(outputs, x.cols() + 1);
    Eigen::VectorXd xa(x.cols() + 1);
    xa(x.cols()) = 1.0;

    // The reported model after each epoch is the mean of that epoch's iterates.
    Eigen::MatrixXd avg(outputs, x.cols() + 1);
    LinearParams p;

    Rng rng(cfg.seed);
    EpochMonitor monitor(cfg, max_epochs);
    double t = 0.0;
    while (true) {
        avg.setZero();
        for (auto i : rng.permutation(x.rows())) {
            t += 1.0;
            const double eta = 1.0 / (lambda * t);
            xa.head(x.cols()) = x.row(i).transpose();
            for (int c = 0; c < outputs; ++c) {
                const double margin = signs(i, c) * w.row(c).dot(xa);
                w.row(c) *= 1.0 - eta * lambda;
                if (margin < 1.0) w.row(c) += eta * signs(i, c) * xa.transpose();
            }
            avg += w;
        }
        avg /= static_cast<double>(x.rows());
        p = {avg.leftCols(x.cols()), avg.col(x.cols())};
        if (monitor.after_epoch(train_accuracy(decide(linear_scores(p, x), 0.0), y))) break;
    }
    monitor.finish(meta);
    return p;
}

}  // namespace xids::detail
