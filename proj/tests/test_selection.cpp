#include "test_util.hpp"
#include "xids/selection.hpp"

#include <doctest.h>

#include <cmath>

using namespace xids;

namespace {

// Textbook two-pass formula, independent of the library's expression code.
double naive_pearson(const Vector& x, const Vector& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        mx += x(i);
        my += y(i);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        sxy += (x(i) - mx) * (y(i) - my);
        sxx += (x(i) - mx) * (x(i) - mx);
        syy += (y(i) - my) * (y(i) - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

Vector random_vector(Eigen::Index n, Rng& rng) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

CorrelationReport scores_report(const std::vector<std::pair<std::string, double>>& scores) {
    CorrelationReport r;
    for (const auto& [name, s] : scores) {
        r.feature_names.push_back(name);
        r.label_scores.push_back({name, s, s});
    }
    r.matrix = Matrix::Identity(static_cast<Eigen::Index>(scores.size()), static_cast<Eigen::Index>(scores.size()));
    return r;
}

}  // namespace

TEST_CASE("pearson matches the two-pass oracle") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const Vector x = random_vector(40, rng);
        const Vector y = 0.3 * x + random_vector(40, rng);
        CHECK(pearson(x, y) == doctest::Approx(naive_pearson(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("pearson edge cases") {
    Vector x(4), c(4);
    x << 1, 2, 3, 4;
    c << 5, 5, 5, 5;
    CHECK(pearson(x, c) == 0.0);
    CHECK(pearson(x, x) == doctest::Approx(1.0));
    CHECK(pearson(x, (-x).eval()) == doctest::Approx(-1.0));
    CHECK(std::abs(pearson(x, (3.0 * x).eval())) <= 1.0);
    Labels y(4);
    y << 0, 0, 1, 1;
    CHECK(pearson(x, y) > 0.8);
    Vector shorter(3);
    shorter << 1, 2, 3;
    CHECK_THROWS_AS(pearson(x, shorter), InputError);
}

TEST_CASE("property: pearson is invariant under positive affine maps and flips sign under negative ones") {
    Rng rng(17);
    for (int t = 0; t < 100; ++t) {
        const Vector x = random_vector(30, rng);
        const Vector y = random_vector(30, rng) + 0.5 * x;
        const double a = rng.uniform(0.1, 50.0);
        const double b = rng.uniform(-100.0, 100.0);
        const double r = pearson(x, y);
        const Vector shifted = (a * x.array() + b).matrix();
        CHECK(pearson(shifted, y) == doctest::Approx(r).epsilon(1e-9));
        const Vector flipped = (-a * x.array() + b).matrix();
        CHECK(pearson(flipped, y) == doctest::Approx(-r).epsilon(1e-9));
    }
}

TEST_CASE("property: correlation matrix is symmetric with a unit diagonal") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const PreparedData p = test::synthetic_data(800, seed, 3, 5, 2);
        const CorrelationReport rep = correlation_matrix(p.train());
        const Matrix& m = rep.matrix;
        REQUIRE(m.rows() == p.table.n_features());
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const bool constant = p.train().matrix.col(i).maxCoeff() == p.train().matrix.col(i).minCoeff();
            if (!constant) CHECK(m(i, i) == doctest::Approx(1.0).epsilon(1e-12));
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                CHECK(m(i, j) == m(j, i));
                CHECK(std::abs(m(i, j)) <= 1.0);
            }
        }
        // Spot-check entries against the oracle.
        const DataTable tr = p.train();
        CHECK(m(0, 1) == doctest::Approx(naive_pearson(tr.matrix.col(0), tr.matrix.col(1))).epsilon(1e-9));
    }
}

TEST_CASE("group scores take the strongest member against the label") {
    const PreparedData p = test::synthetic_data(2000, 4, 3, 3, 1);
    const DataTable tr = p.train();
    const CorrelationReport rep = correlation_matrix(tr);
    const Vector yb = tr.y_binary.cast<double>();
    for (const auto& g : tr.groups()) {
        double best = 0;
        for (auto c : g.columns) best = std::max(best, std::abs(naive_pearson(tr.matrix.col(c), yb)));
        const auto it = std::find_if(rep.label_scores.begin(), rep.label_scores.end(),
                                     [&](const GroupScore& s) { return s.group == g.name; });
        REQUIRE(it != rep.label_scores.end());
        if (tr.matrix.col(g.columns[0]).maxCoeff() > tr.matrix.col(g.columns[0]).minCoeff() || g.onehot)
            CHECK(it->binary == doctest::Approx(best).epsilon(1e-9));
        CHECK(it->multiclass >= 0.0);
    }
    // Informative groups beat noise groups under both modes.
    const auto score = [&](const std::string& n, Task t) {
        for (const auto& s : rep.label_scores)
            if (s.group == n) return s.score(t);
        return -1.0;
    };
    for (auto t : {Task::binary, Task::multiclass}) CHECK(score("inf1", t) > score("noise0", t));
}

TEST_CASE("selection threshold boundary: exactly 0.30 is kept, anything below is removed") {
    const auto rep = scores_report({{"a", 0.30}, {"b", 0.29999999}, {"c", 0.9}, {"d", 0.0}});
    const FeatureSelection s = select_features(rep, 0.3, Task::binary);
    CHECK(s.kept == std::vector<std::string>{"a", "c"});
    REQUIRE(s.dropped.size() == 2);
    CHECK(s.dropped[0].first == "b");
    CHECK(s.kept_scores[0].second == 0.30);
}

TEST_CASE("selection rejects bad thresholds and empty results") {
    const auto rep = scores_report({{"a", 0.1}, {"b", 0.2}});
    CHECK_THROWS_AS(select_features(rep, 0.3), InputError);
    CHECK_THROWS_AS(select_features(rep, 0.0), InputError);
    CHECK_THROWS_AS(select_features(rep, 1.5), InputError);
    CHECK(select_features(rep, 0.15).kept == std::vector<std::string>{"b"});
}

TEST_CASE("selection on the surrogate keeps the informative groups") {
    const PreparedData p = test::synthetic_data(4000, 42);
    const FeatureSelection s = select_features(correlation_matrix(p.train()), 0.3, Task::binary);
    for (const auto& n : synthetic_informative_names(3))
        CHECK(std::find(s.kept.begin(), s.kept.end(), n) != s.kept.end());
    for (const auto& n : synthetic_noise_names(12))
        CHECK(std::find(s.kept.begin(), s.kept.end(), n) == s.kept.end());
}
