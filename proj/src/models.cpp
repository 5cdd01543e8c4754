#include "model_detail.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

namespace xids {

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::LinearRegression: return "LinearRegression";
        case ModelKind::LogisticRegression: return "LogisticRegression";
        case ModelKind::LinearSVM: return "LinearSVM";
        case ModelKind::KNN: return "KNN";
        case ModelKind::DecisionTree: return "DecisionTree";
        case ModelKind::RandomForest: return "RandomForest";
        case ModelKind::MLP: return "MLP";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    for (auto k : kAllModelKinds)
        if (to_string(k) == s) return k;
    throw InputError("unknown model kind '" + s + "'");
}

bool is_iterative(ModelKind k) {
    return k == ModelKind::LinearRegression || k == ModelKind::LogisticRegression || k == ModelKind::LinearSVM ||
           k == ModelKind::MLP;
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::target_reached: return "target_reached";
        case StopReason::plateau: return "plateau";
        case StopReason::max_epochs: return "max_epochs";
        case StopReason::noniterative: return "noniterative";
    }
    return "?";
}

StopReason stop_reason_from_string(const std::string& s) {
    for (auto r : {StopReason::target_reached, StopReason::plateau, StopReason::max_epochs, StopReason::noniterative})
        if (to_string(r) == s) return r;
    throw InputError("unknown stop reason '" + s + "'");
}

namespace detail {

bool EpochMonitor::after_epoch(double train_accuracy) {
    history_.push_back(train_accuracy);
    if (train_accuracy >= cfg_.target_accuracy) {
        reason_ = StopReason::target_reached;
        return true;
    }
    if (history_.size() >= 2) {
        const double best_before = *std::max_element(history_.begin(), history_.end() - 1);
        stalled_ = train_accuracy - best_before < cfg_.min_improvement ? stalled_ + 1 : 0;
        if (stalled_ >= std::max(1, cfg_.plateau_patience)) {
            reason_ = StopReason::plateau;
            return true;
        }
    }
    if (static_cast<int>(history_.size()) >= max_epochs_) {
        reason_ = StopReason::max_epochs;
        return true;
    }
    return false;
}

void EpochMonitor::finish(TrainMetadata& meta) const {
    meta.epochs_run = static_cast<int>(history_.size());
    meta.stop_reason = reason_;
    meta.epoch_accuracy = history_;
}

Matrix take_rows(const Matrix& x, const std::vector<Eigen::Index>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    return out;
}

Labels take_rows(const Labels& y, const std::vector<Eigen::Index>& rows) {
    Labels out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
    return out;
}

}  // namespace detail

TrainedModel train(ModelKind kind, const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg,
                   std::vector<std::string> feature_names) {
    if (x.rows() == 0 || x.cols() == 0) throw InputError("cannot train " + to_string(kind) + " on an empty matrix");
    if (x.rows() != y.size()) throw InputError("feature matrix and label vector differ in length");
    if (class_count < 2) throw InputError("need at least two classes");
    if (y.minCoeff() < 0 || y.maxCoeff() >= class_count) throw InputError("labels outside [0, class_count)");
    if (is_iterative(kind) && y.minCoeff() == y.maxCoeff())
        throw InputError(to_string(kind) + " needs at least two distinct classes in the training labels");
    if (!(cfg.target_accuracy > 0.0 && cfg.target_accuracy <= 1.0) || cfg.min_improvement < 0.0)
        throw InputError("invalid stopping criteria");
    if (feature_names.empty())
        for (Eigen::Index c = 0; c < x.cols(); ++c) feature_names.push_back("f" + std::to_string(c));
    if (static_cast<Eigen::Index>(feature_names.size()) != x.cols())
        throw LayoutError("feature name count does not match matrix width");

    TrainedModel m;
    m.kind = kind;
    m.class_count = class_count;
    m.feature_names = std::move(feature_names);

    const auto start = std::chrono::steady_clock::now();
    switch (kind) {
        case ModelKind::LinearRegression: m.params = detail::train_least_squares(x, y, class_count, cfg, m.meta); break;
        case ModelKind::LogisticRegression: m.params = detail::train_logistic(x, y, class_count, cfg, m.meta); break;
        case ModelKind::LinearSVM: m.params = detail::train_svm(x, y, class_count, cfg, m.meta); break;
        case ModelKind::KNN: m.params = KnnParams{x, y, std::max(1, cfg.knn_k)}; break;
        case ModelKind::DecisionTree: {
            std::vector<Eigen::Index> rows(static_cast<std::size_t>(x.rows()));
            for (Eigen::Index i = 0; i < x.rows(); ++i) rows[static_cast<std::size_t>(i)] = i;
            m.params = detail::build_tree(x, y, class_count, rows, {}, nullptr);
            break;
        }
        case ModelKind::RandomForest: m.params = detail::train_forest(x, y, class_count, cfg); break;
        case ModelKind::MLP: m.params = detail::train_mlp(x, y, class_count, cfg, m.meta); break;
    }
    m.meta.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!is_iterative(kind)) {
        m.meta.epochs_run = 1;
        m.meta.stop_reason = StopReason::noniterative;
    }
    return m;
}

Labels predict(const TrainedModel& m, const Matrix& x) {
    if (x.cols() != m.n_features())
        throw LayoutError(to_string(m.kind) + " expects " + std::to_string(m.n_features()) + " features, got " +
                          std::to_string(x.cols()));
    switch (m.kind) {
        case ModelKind::LinearRegression:
            return detail::decide(detail::linear_scores(std::get<LinearParams>(m.params), x), 0.5);
        case ModelKind::LogisticRegression:
        case ModelKind::LinearSVM:
            return detail::decide(detail::linear_scores(std::get<LinearParams>(m.params), x), 0.0);
        case ModelKind::KNN: return detail::predict_knn(std::get<KnnParams>(m.params), x, m.class_count, 1);
        case ModelKind::DecisionTree: {
            const auto& t = std::get<Tree>(m.params);
            Labels out(x.rows());
            for (Eigen::Index r = 0; r < x.rows(); ++r) out(r) = t.predict_row(x.row(r).data());
            return out;
        }
        case ModelKind::RandomForest: return detail::predict_forest(std::get<ForestParams>(m.params), x, m.class_count);
        case ModelKind::MLP: return detail::decide(detail::mlp_output(std::get<MlpParams>(m.params), x), 0.0);
    }
    throw InputError("unknown model kind");
}

Metrics accuracy(const Labels& pred, const Labels& truth, int class_count) {
    if (pred.size() != truth.size()) throw InputError("accuracy: prediction and truth lengths differ");
    Metrics m;
    m.confusion = Eigen::MatrixXi::Zero(class_count, class_count);
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        if (truth(i) < 0 || truth(i) >= class_count || pred(i) < 0 || pred(i) >= class_count)
            throw InputError("accuracy: label outside [0, class_count)");
        ++m.confusion(truth(i), pred(i));
    }
    m.accuracy = pred.size() == 0 ? 0.0 : static_cast<double>(m.confusion.trace()) / static_cast<double>(pred.size());
    return m;
}

namespace {

// Walks every scalar of `params` (through `slots`), comparing the analytic
// gradient against central differences of `loss`.
double compare_gradients(const std::vector<std::pair<double*, const double*>>& slots, const std::function<double()>& loss,
                         double h) {
    double worst = 0.0;
    for (const auto& [param, analytic] : slots) {
        const double saved = *param;
        *param = saved + h;
        const double up = loss();
        *param = saved - h;
        const double down = loss();
        *param = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double err = std::abs(*analytic - numeric) / std::max(std::abs(*analytic) + std::abs(numeric), 1e-6);
        worst = std::max(worst, err);
    }
    return worst;
}

template <typename M>
void add_slots(M& param, const M& grad, std::vector<std::pair<double*, const double*>>& slots) {
    for (Eigen::Index i = 0; i < param.size(); ++i) slots.emplace_back(param.data() + i, grad.data() + i);
}

LinearParams random_linear(Eigen::Index d, int outputs, Rng& rng) {
    LinearParams p{Eigen::MatrixXd(outputs, d), Eigen::VectorXd(outputs)};
    for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = 0.5 * rng.normal();
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias(i) = 0.5 * rng.normal();
    return p;
}

}  // namespace

double grad_check(ModelKind kind, const GradCheckSample& s) {
    if (s.x.rows() != s.y.size() || s.x.rows() == 0) throw InputError("grad_check: sample shape mismatch");
    const int outputs = detail::output_count(s.class_count);
    std::vector<std::pair<double*, const double*>> slots;

    switch (kind) {
        case ModelKind::LinearRegression:
        case ModelKind::LogisticRegression: {
            Rng rng(s.seed);
            LinearParams p = random_linear(s.x.cols(), outputs, rng);
            const Eigen::MatrixXd t = detail::indicator_targets(s.y, s.class_count);
            auto fn = kind == ModelKind::LogisticRegression ? &detail::logistic_loss_grad : &detail::squared_loss_grad;
            LinearParams g;
            fn(p, s.x, t, &g);
            add_slots(p.weights, g.weights, slots);
            add_slots(p.bias, g.bias, slots);
            return compare_gradients(slots, [&] { return fn(p, s.x, t, nullptr); }, s.step);
        }
        case ModelKind::LinearSVM: {
            const Eigen::MatrixXd signs = 2.0 * detail::indicator_targets(s.y, s.class_count).array() - 1.0;
            // Redraw until no margin sits near the hinge kink.
            for (std::uint64_t attempt = 0;; ++attempt) {
                Rng rng(derive_seed(s.seed, attempt));
                LinearParams p = random_linear(s.x.cols(), outputs, rng);
                const Eigen::MatrixXd margins = signs.array() * detail::linear_scores(p, s.x).array();
                if (((margins.array() - 1.0).abs() < 1e-3).any()) continue;
                constexpr double lambda = 1e-4;
                LinearParams g;
                detail::hinge_loss_grad(p, s.x, signs, lambda, &g);
                add_slots(p.weights, g.weights, slots);
                add_slots(p.bias, g.bias, slots);
                return compare_gradients(slots, [&] { return detail::hinge_loss_grad(p, s.x, signs, lambda, nullptr); },
                                         s.step);
            }
        }
        case ModelKind::MLP: {
            for (std::uint64_t attempt = 0;; ++attempt) {
                Rng rng(derive_seed(s.seed, attempt));
                MlpParams p = detail::init_mlp(s.x.cols(), s.hidden, outputs, rng);
                Eigen::MatrixXd pre = s.x * p.w1;
                pre.rowwise() += p.b1;
                if ((pre.array().abs() < 1e-3).any()) continue;  // ReLU kink
                MlpParams g;
                detail::mlp_loss_grad(p, s.x, s.y, s.class_count, s.l2, &g);
                add_slots(p.w1, g.w1, slots);
                add_slots(p.b1, g.b1, slots);
                add_slots(p.w2, g.w2, slots);
                add_slots(p.b2, g.b2, slots);
                return compare_gradients(
                    slots, [&] { return detail::mlp_loss_grad(p, s.x, s.y, s.class_count, s.l2, nullptr); }, s.step);
            }
        }
        default: throw InputError("grad_check supports LinearRegression, LogisticRegression, LinearSVM and MLP");
    }
}

}  // namespace xids
