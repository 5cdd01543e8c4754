#include "xids/selection.hpp"

#include <algorithm>
#include <sstream>

namespace xids {

CorrelationReport correlation_matrix(const DataTable& t) {
    CorrelationReport rep;
    rep.feature_names = t.feature_names();
    const Eigen::Index n = t.n_rows();
    const Eigen::Index d = t.n_features();
    if (n < 2) throw InputError("correlation needs at least 2 rows");

    // Standardise columns once; constant columns become all-zero so their r is 0.
    Eigen::MatrixXd z = t.matrix;
    for (Eigen::Index c = 0; c < d; ++c) {
        z.col(c).array() -= z.col(c).mean();
        const double norm = z.col(c).norm();
        if (norm > 0.0) z.col(c) /= norm;
        else z.col(c).setZero();
    }
    const Eigen::MatrixXd gram = z.transpose() * z;
    rep.matrix = Matrix::Identity(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j) {
            const double r = std::clamp(gram(i, j), -1.0, 1.0);
            rep.matrix(i, j) = r;
            rep.matrix(j, i) = r;
        }

    const Vector y_bin = t.y_binary.cast<double>();
    std::vector<Vector> one_vs_rest;
    for (int k = 0; k < static_cast<int>(t.class_names.size()); ++k)
        one_vs_rest.push_back((t.y_multi.array() == k).cast<double>().matrix());

    for (const auto& g : t.groups()) {
        GroupScore s{g.name, 0.0, 0.0};
        for (auto c : g.columns) {
            s.binary = std::max(s.binary, std::abs(pearson(t.matrix.col(c), y_bin)));
            for (const auto& ind : one_vs_rest) s.multiclass = std::max(s.multiclass, std::abs(pearson(t.matrix.col(c), ind)));
        }
        rep.label_scores.push_back(s);
    }
    return rep;
}

FeatureSelection select_features(const CorrelationReport& rep, double threshold, Task mode) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw InputError("selection threshold must lie in (0, 1)");
    FeatureSelection sel;
    sel.mode = mode;
    sel.threshold = threshold;
    for (const auto& s : rep.label_scores) {
        const double v = s.score(mode);
        if (v >= threshold) {
            sel.kept.push_back(s.group);
            sel.kept_scores.emplace_back(s.group, v);
        } else {
            sel.dropped.emplace_back(s.group, v);
        }
    }
    if (sel.kept.empty()) {
        std::ostringstream os;
        os << "no feature group reaches correlation " << threshold << " with the " << to_string(mode)
           << " label; lower the selection threshold";
        throw InputError(os.str());
    }
    return sel;
}

}  // namespace xids
