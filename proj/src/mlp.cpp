#include "model_detail.hpp"

#include <cmath>

namespace xids::detail {

namespace {

struct Forward {
    Eigen::MatrixXd pre;     // n x hidden
    Eigen::MatrixXd hidden;  // relu(pre)
    Eigen::MatrixXd logits;  // n x outputs
};

Forward forward(const MlpParams& p, const Matrix& x) {
    Forward f;
    f.pre = x * p.w1;
    f.pre.rowwise() += p.b1;
    f.hidden = f.pre.cwiseMax(0.0);
    f.logits = f.hidden * p.w2;
    f.logits.rowwise() += p.b2;
    return f;
}

void uniform_fill(Eigen::MatrixXd& m, double bound, Rng& rng) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

struct AdamState {
    Eigen::MatrixXd m, v;
    explicit AdamState(const Eigen::MatrixXd& like)
        : m(Eigen::MatrixXd::Zero(like.rows(), like.cols())), v(Eigen::MatrixXd::Zero(like.rows(), like.cols())) {}

    template <typename P, typename G>
    void step(P& param, const G& grad, double lr, double c1, double c2) {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
        param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
};

}  // namespace

MlpParams init_mlp(Eigen::Index n_features, int hidden, int outputs, Rng& rng) {
    // Glorot-uniform weights and biases.
    MlpParams p;
    p.w1.resize(n_features, hidden);
    p.b1.resize(hidden);
    p.w2.resize(hidden, outputs);
    p.b2.resize(outputs);
    const double bound1 = std::sqrt(6.0 / static_cast<double>(n_features + hidden));
    const double bound2 = std::sqrt((outputs == 1 ? 2.0 : 6.0) / static_cast<double>(hidden + outputs));
    uniform_fill(p.w1, bound1, rng);
    Eigen::MatrixXd b1(1, hidden);
    uniform_fill(b1, bound1, rng);
    p.b1 = b1.row(0);
    uniform_fill(p.w2, bound2, rng);
    Eigen::MatrixXd b2(1, outputs);
    uniform_fill(b2, bound2, rng);
    p.b2 = b2.row(0);
    return p;
}

Eigen::MatrixXd mlp_output(const MlpParams& p, const Matrix& x) { return forward(p, x).logits; }

double mlp_loss_grad(const MlpParams& p, const Matrix& x, const Labels& y, int class_count, double l2,
                     MlpParams* grad) {
    if (p.w2.cols() != output_count(class_count)) throw InputError("mlp: output width does not match class count");
    const double n = static_cast<double>(x.rows());
    const Forward f = forward(p, x);
    Eigen::MatrixXd delta(f.logits.rows(), f.logits.cols());
    double loss = 0.0;
    if (f.logits.cols() == 1) {
        for (Eigen::Index i = 0; i < f.logits.rows(); ++i) {
            const double z = f.logits(i, 0);
            const double t = y(i) == 1 ? 1.0 : 0.0;
            loss += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - t * z;
            delta(i, 0) = (z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z))) - t;
        }
    } else {
        for (Eigen::Index i = 0; i < f.logits.rows(); ++i) {
            const double mx = f.logits.row(i).maxCoeff();
            const Eigen::RowVectorXd e = (f.logits.row(i).array() - mx).exp();
            const double sum = e.sum();
            loss += std::log(sum) + mx - f.logits(i, y(i));
            delta.row(i) = e / sum;
            delta(i, y(i)) -= 1.0;
        }
    }
    loss /= n;
    loss += 0.5 * l2 / n * (p.w1.squaredNorm() + p.w2.squaredNorm());
    if (grad) {
        delta /= n;
        grad->w2 = f.hidden.transpose() * delta + (l2 / n) * p.w2;
        grad->b2 = delta.colwise().sum();
        const Eigen::MatrixXd dh = (delta * p.w2.transpose()).array() * (f.pre.array() > 0.0).cast<double>();
        grad->w1 = x.transpose() * dh + (l2 / n) * p.w1;
        grad->b1 = dh.colwise().sum();
    }
    return loss;
}

MlpParams train_mlp(const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg, TrainMetadata& meta) {
    const int outputs = output_count(class_count);
    Rng rng(cfg.seed);
    MlpParams p = init_mlp(x.cols(), std::max(1, cfg.mlp_hidden), outputs, rng);
    const double lr = cfg.learning_rate > 0 ? cfg.learning_rate : 1e-3;
    const int max_epochs = cfg.max_epochs > 0 ? cfg.max_epochs : 200;
    const auto batch = static_cast<Eigen::Index>(std::max(1, cfg.batch_size));

    AdamState s_w1(p.w1), s_b1(p.b1), s_w2(p.w2), s_b2(p.b2);
    EpochMonitor monitor(cfg, max_epochs);
    MlpParams g;
    long step = 0;
    while (true) {
        const IndexList order = rng.permutation(x.rows());
        for (Eigen::Index start = 0; start < x.rows(); start += batch) {
            const std::vector<Eigen::Index> rows(order.begin() + start, order.begin() + std::min(x.rows(), start + batch));
            mlp_loss_grad(p, take_rows(x, rows), take_rows(y, rows), class_count, cfg.l2_mlp, &g);
            ++step;
            const double c1 = 1.0 - std::pow(0.9, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(0.999, static_cast<double>(step));
            s_w1.step(p.w1, g.w1, lr, c1, c2);
            s_b1.step(p.b1, g.b1, lr, c1, c2);
            s_w2.step(p.w2, g.w2, lr, c1, c2);
            s_b2.step(p.b2, g.b2, lr, c1, c2);
        }
        const Labels pred = decide(mlp_output(p, x), 0.0);
        const double acc = static_cast<double>((pred.array() == y.array()).count()) / static_cast<double>(y.size());
        if (monitor.after_epoch(acc)) break;
    }
    monitor.finish(meta);
    return p;
}

}  // namespace xids::detail
