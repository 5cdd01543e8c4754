#ifndef XIDS_SELECTION_HPP
#define XIDS_SELECTION_HPP

#include "xids/data.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace xids {

/// Pearson correlation of two equally sized vectors. A constant argument
/// yields 0. The result is clamped to [-1, 1].
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar pearson(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedX::Scalar;
    if (x.size() != y.size()) throw InputError("pearson: length mismatch");
    if (x.size() < 2) throw InputError("pearson: need at least 2 observations");
    const auto xc = (x.array() - x.mean()).eval();
    const auto yd = y.template cast<Scalar>().eval();
    const auto yc = (yd.array() - yd.mean()).eval();
    const Scalar sxx = (xc * xc).sum();
    const Scalar syy = (yc * yc).sum();
    if (sxx <= Scalar(0) || syy <= Scalar(0)) return Scalar(0);
    const Scalar r = (xc * yc).sum() / std::sqrt(sxx * syy);
    return std::clamp(r, Scalar(-1), Scalar(1));
}

struct GroupScore {
    std::string group;
    double binary = 0.0;      // max |r| of member columns against the binary label
    double multiclass = 0.0;  // max |r| over members and one-vs-rest class indicators

    double score(Task mode) const { return mode == Task::binary ? binary : multiclass; }
};

struct CorrelationReport {
    std::vector<std::string> feature_names;
    Matrix matrix;  // symmetric, unit diagonal
    std::vector<GroupScore> label_scores;
};

CorrelationReport correlation_matrix(const DataTable& t);

struct FeatureSelection {
    Task mode = Task::binary;
    double threshold = 0.3;
    std::vector<std::string> kept;
    std::vector<std::pair<std::string, double>> kept_scores;
    std::vector<std::pair<std::string, double>> dropped;
};

/// Keeps groups whose score is >= threshold (only scores strictly below are removed).
FeatureSelection select_features(const CorrelationReport& rep, double threshold = 0.3, Task mode = Task::binary);

}  // namespace xids

#endif  // XIDS_SELECTION_HPP
