#include "test_util.hpp"
#include "xids/models.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

using namespace xids;

namespace {

// Brute-force KNN: full scan, (distance, row) order, vote ties to the lowest class.
Labels knn_oracle(const Matrix& train_x, const Labels& train_y, const Matrix& q, int k, int classes) {
    Labels out(q.rows());
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        std::vector<std::pair<double, Eigen::Index>> d;
        for (Eigen::Index j = 0; j < train_x.rows(); ++j) {
            double s = 0;
            for (Eigen::Index c = 0; c < q.cols(); ++c) s += (q(i, c) - train_x(j, c)) * (q(i, c) - train_x(j, c));
            d.emplace_back(s, j);
        }
        std::sort(d.begin(), d.end());
        std::vector<int> votes(static_cast<std::size_t>(classes), 0);
        for (int n = 0; n < k; ++n) ++votes[static_cast<std::size_t>(train_y(d[static_cast<std::size_t>(n)].second))];
        out(i) = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
    return out;
}

struct Xy {
    Matrix x;
    Labels y;
};

Xy xor_data(int n, std::uint64_t seed) {
    Rng rng(seed);
    Xy d{Matrix(n, 2), Labels(n)};
    for (int i = 0; i < n; ++i) {
        const int a = static_cast<int>(rng.below(2)), b = static_cast<int>(rng.below(2));
        d.x(i, 0) = a + 0.05 * rng.uniform();
        d.x(i, 1) = b + 0.05 * rng.uniform();
        d.y(i) = a ^ b;
    }
    return d;
}

Xy blobs(int n, int classes, Eigen::Index d, std::uint64_t seed) {
    Rng rng(seed);
    Xy out{Matrix(n, d), Labels(n)};
    for (int i = 0; i < n; ++i) {
        const int c = i % classes;
        for (Eigen::Index k = 0; k < d; ++k) out.x(i, k) = 0.15 * rng.normal() + (k % classes == c ? 1.0 : 0.0);
        out.y(i) = c;
    }
    return out;
}

double acc(const TrainedModel& m, const Matrix& x, const Labels& y) { return accuracy(predict(m, x), y, m.class_count).accuracy; }

}  // namespace

TEST_CASE("KNN equals the brute-force scan on 200 random instances") {
    Rng rng(7);
    const Matrix x = test::random_matrix(500, 6, rng);
    Labels y(500);
    for (Eigen::Index i = 0; i < 500; ++i) y(i) = static_cast<int>(rng.below(3));
    const Matrix q = test::random_matrix(200, 6, rng);
    TrainConfig cfg;
    const TrainedModel m = train(ModelKind::KNN, x, y, 3, cfg);
    CHECK((predict(m, q).array() == knn_oracle(x, y, q, 5, 3).array()).all());
}

TEST_CASE("KNN breaks distance ties by row index and vote ties by class index") {
    Matrix x(4, 1);
    x << 0.0, 0.0, 0.0, 0.0;
    Labels y(4);
    y << 1, 0, 1, 0;
    TrainConfig cfg;
    cfg.knn_k = 2;
    Matrix q(1, 1);
    q << 0.0;
    // Nearest two by row order are rows 0 and 1: one vote each, tie to class 0.
    CHECK(predict(train(ModelKind::KNN, x, y, 2, cfg), q)(0) == 0);
    cfg.knn_k = 3;
    CHECK(predict(train(ModelKind::KNN, x, y, 2, cfg), q)(0) == 1);
}

TEST_CASE("RandomForest with one tree, no bootstrap and all features equals DecisionTree") {
    const PreparedData p = test::synthetic_data(1500, 8, 3, 4, 1);
    const DataTable tr = p.train(), te = p.test();
    TrainConfig cfg;
    cfg.forest_trees = 1;
    cfg.forest_bootstrap = false;
    cfg.forest_max_features = static_cast<int>(tr.n_features());
    for (auto task : {Task::binary, Task::multiclass}) {
        const auto rf = train(ModelKind::RandomForest, tr.matrix, tr.labels(task), tr.class_count(task), cfg);
        const auto dt = train(ModelKind::DecisionTree, tr.matrix, tr.labels(task), tr.class_count(task), cfg);
        CHECK((predict(rf, te.matrix).array() == predict(dt, te.matrix).array()).all());
        CHECK((predict(rf, tr.matrix).array() == predict(dt, tr.matrix).array()).all());
    }
}

TEST_CASE("property: DecisionTree reaches 100% training accuracy on conflict-free data") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        Rng rng(seed);
        const Matrix x = test::random_matrix(300, 4, rng);
        Labels y(300);
        for (Eigen::Index i = 0; i < 300; ++i) y(i) = static_cast<int>(rng.below(4));
        const auto m = train(ModelKind::DecisionTree, x, y, 4, TrainConfig{});
        CHECK(acc(m, x, y) == 1.0);
    }
}

TEST_CASE("XOR is learned by the non-linear models") {
    const Xy d = xor_data(400, 5);
    TrainConfig cfg;
    cfg.target_accuracy = 0.99;
    cfg.max_epochs = 400;
    cfg.plateau_patience = 50;
    cfg.learning_rate = 0.01;
    for (auto k : {ModelKind::DecisionTree, ModelKind::RandomForest, ModelKind::KNN, ModelKind::MLP}) {
        CAPTURE(to_string(k));
        CHECK(acc(train(k, d.x, d.y, 2, cfg), d.x, d.y) >= 0.99);
    }
    // A linear boundary cannot do much better than chance here.
    TrainConfig lin;
    CHECK(acc(train(ModelKind::LogisticRegression, d.x, d.y, 2, lin), d.x, d.y) < 0.8);
}

TEST_CASE("every model separates well-spread blobs, binary and multiclass") {
    for (int classes : {2, 4}) {
        const Xy tr = blobs(800, classes, 6, 10 + static_cast<std::uint64_t>(classes));
        const Xy te = blobs(400, classes, 6, 20 + static_cast<std::uint64_t>(classes));
        for (auto k : kAllModelKinds) {
            CAPTURE(to_string(k));
            CAPTURE(classes);
            const auto m = train(k, tr.x, tr.y, classes, TrainConfig{});
            CHECK(acc(m, te.x, te.y) >= 0.9);
        }
    }
}

TEST_CASE("gradient checks: analytic gradients match central differences") {
    for (auto kind : {ModelKind::LogisticRegression, ModelKind::MLP, ModelKind::LinearRegression}) {
        CAPTURE(to_string(kind));
        double worst = 0;
        for (std::uint64_t s = 1; s <= 50; ++s) {
            Rng rng(s);
            GradCheckSample g;
            g.class_count = s % 2 ? 2 : 3;
            g.x = test::random_matrix(12, 5, rng);
            g.y = Labels(12);
            for (Eigen::Index i = 0; i < 12; ++i) g.y(i) = static_cast<int>(i % g.class_count);
            g.seed = s;
            g.hidden = 7;
            worst = std::max(worst, grad_check(kind, g));
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("stopping rule: target, plateau and epoch cap") {
    const PreparedData p = test::synthetic_data(3000, 2);
    const DataTable tr = p.train();
    TrainConfig cfg;
    cfg.target_accuracy = 0.5;
    auto m = train(ModelKind::LogisticRegression, tr.matrix, tr.y_binary, 2, cfg);
    CHECK(m.meta.stop_reason == StopReason::target_reached);
    CHECK(m.meta.epoch_accuracy.back() >= 0.5);
    CHECK(static_cast<int>(m.meta.epoch_accuracy.size()) == m.meta.epochs_run);

    cfg.target_accuracy = 1.0;
    cfg.max_epochs = 3;
    cfg.min_improvement = 0.0;
    m = train(ModelKind::MLP, tr.matrix, tr.y_binary, 2, cfg);
    CHECK(m.meta.epochs_run == 3);
    CHECK(m.meta.stop_reason == StopReason::max_epochs);

    cfg.max_epochs = 500;
    cfg.min_improvement = 0.5;
    cfg.plateau_patience = 1;
    m = train(ModelKind::LinearSVM, tr.matrix, tr.y_binary, 2, cfg);
    CHECK(m.meta.stop_reason == StopReason::plateau);
    CHECK(m.meta.epochs_run == 2);

    m = train(ModelKind::KNN, tr.matrix, tr.y_binary, 2, cfg);
    CHECK(m.meta.stop_reason == StopReason::noniterative);
}

TEST_CASE("training is deterministic and the forest ignores the thread count") {
    const PreparedData p = test::synthetic_data(1500, 6);
    const DataTable tr = p.train(), te = p.test();
    for (auto k : kAllModelKinds) {
        CAPTURE(to_string(k));
        TrainConfig a, b;
        b.threads = 3;
        const auto ma = train(k, tr.matrix, tr.y_multi, tr.class_count(Task::multiclass), a);
        const auto mb = train(k, tr.matrix, tr.y_multi, tr.class_count(Task::multiclass), b);
        CHECK(save_model_json(ma).size() > 0);
        CHECK((predict(ma, te.matrix).array() == predict(mb, te.matrix).array()).all());
    }
}

TEST_CASE("save and load round-trips every model exactly") {
    const PreparedData p = test::synthetic_data(800, 12, 3, 2, 1);
    const DataTable tr = p.train(), te = p.test();
    const auto dir = test::scratch("models_roundtrip");
    for (auto k : kAllModelKinds) {
        CAPTURE(to_string(k));
        const auto m = train(k, tr.matrix, tr.y_multi, tr.class_count(Task::multiclass), TrainConfig{}, tr.feature_names());
        const auto path = (dir / (to_string(k) + ".json")).string();
        save_model(m, path);
        const auto back = load_model(path);
        CHECK(back.kind == m.kind);
        CHECK(back.feature_names == m.feature_names);
        CHECK(back.meta.epochs_run == m.meta.epochs_run);
        CHECK((predict(back, te.matrix).array() == predict(m, te.matrix).array()).all());
        CHECK(save_model_json(back) == save_model_json(m));
    }
    CHECK_THROWS_AS(load_model_json("{\"format\": \"other\"}"), InputError);
    CHECK_THROWS_AS(load_model_json("not json"), InputError);
    CHECK_THROWS_AS(load_model((dir / "absent.json").string()), InputError);
}

TEST_CASE("input validation") {
    Matrix x(4, 2);
    x.setRandom();
    Labels y(4);
    y << 0, 1, 0, 1;
    TrainConfig cfg;
    CHECK_THROWS_AS(train(ModelKind::KNN, Matrix(0, 2), Labels(0), 2, cfg), InputError);
    CHECK_THROWS_AS(train(ModelKind::KNN, x, y, 1, cfg), InputError);
    Labels bad = y;
    bad(0) = 5;
    CHECK_THROWS_AS(train(ModelKind::KNN, x, bad, 2, cfg), InputError);
    CHECK_THROWS_AS(train(ModelKind::MLP, x, Labels::Zero(4), 2, cfg), InputError);
    CHECK_THROWS_AS(train(ModelKind::KNN, x, y, 2, cfg, {"only_one"}), LayoutError);
    const auto m = train(ModelKind::DecisionTree, x, y, 2, cfg);
    CHECK_THROWS_AS(predict(m, Matrix(3, 5)), LayoutError);
    CHECK_THROWS_AS(model_kind_from_string("SVM"), InputError);
}

TEST_CASE("accuracy and confusion matrix") {
    Labels pred(5), truth(5);
    pred << 0, 1, 2, 2, 0;
    truth << 0, 1, 1, 2, 2;
    const Metrics m = accuracy(pred, truth, 3);
    CHECK(m.accuracy == doctest::Approx(0.6));
    CHECK(m.confusion(1, 2) == 1);
    CHECK(m.confusion(2, 0) == 1);
    CHECK(m.confusion.sum() == 5);
    CHECK(m.confusion.trace() == 3);
}
