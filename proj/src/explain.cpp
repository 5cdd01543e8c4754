#include "xids/explain.hpp"

#include "xids/rng.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <thread>

namespace xids {

std::string to_string(Baseline b) {
    switch (b) {
        case Baseline::train_mean: return "train_mean";
        case Baseline::zero: return "zero";
        case Baseline::permute: return "permute";
    }
    return "?";
}

Baseline baseline_from_string(const std::string& s) {
    for (auto b : {Baseline::train_mean, Baseline::zero, Baseline::permute})
        if (to_string(b) == s) return b;
    throw InputError("unknown occlusion baseline '" + s + "' (expected train_mean, zero or permute)");
}

Vector column_means(const Matrix& x_train) {
    if (x_train.rows() == 0) throw InputError("column_means needs at least one training row");
    return x_train.colwise().mean().transpose();
}

Matrix occlude(const Matrix& x, const std::vector<FeatureGroup>& groups, const OcclusionConfig& cfg,
               const Vector& train_means) {
    std::set<Eigen::Index> cols;
    for (const auto& g : groups)
        for (auto c : g.columns) {
            if (c < 0 || c >= x.cols()) throw InputError("unknown feature group '" + g.name + "'");
            cols.insert(c);
        }
    Matrix out = x;
    if (cols.empty()) return out;
    switch (cfg.baseline) {
        case Baseline::train_mean:
            if (train_means.size() != x.cols()) throw LayoutError("training means do not match the table width");
            for (auto c : cols) out.col(c).setConstant(train_means(c));
            break;
        case Baseline::zero:
            for (auto c : cols) out.col(c).setZero();
            break;
        case Baseline::permute: {
            Rng rng(cfg.permute_seed);
            const IndexList perm = rng.permutation(x.rows());
            for (auto c : cols)
                for (Eigen::Index r = 0; r < x.rows(); ++r) out(r, c) = x(perm[static_cast<std::size_t>(r)], c);
            break;
        }
    }
    return out;
}

Matrix occlude(const Matrix& x, const FeatureGroup& group, const OcclusionConfig& cfg, const Vector& train_means) {
    return occlude(x, std::vector<FeatureGroup>{group}, cfg, train_means);
}

const GroupSensitivity& SensitivityReport::at(const std::string& group) const {
    for (const auto& g : groups)
        if (g.group == group) return g;
    throw InputError("sensitivity report has no group '" + group + "'");
}

double SensitivityReport::max_degradation() const {
    double best = -1.0;
    for (const auto& g : groups) best = std::max(best, g.degradation);
    return best;
}

SensitivityReport sensitivity(const TrainedModel& m, const Matrix& x_test, const Labels& y_test,
                              const std::vector<FeatureGroup>& all_groups, const OcclusionConfig& cfg,
                              const Vector& train_means) {
    const std::vector<FeatureGroup>& sweep = cfg.groups.empty() ? all_groups : cfg.groups;
    if (sweep.empty()) throw InputError("sensitivity needs at least one feature group");

    SensitivityReport rep;
    rep.kind = m.kind;
    rep.baseline = cfg.baseline;
    rep.baseline_accuracy = accuracy(predict(m, x_test), y_test, m.class_count).accuracy;
    rep.groups.resize(sweep.size());

    auto run = [&](std::size_t i) {
        const double acc = accuracy(predict(m, occlude(x_test, sweep[i], cfg, train_means)), y_test, m.class_count).accuracy;
        rep.groups[i] = {sweep[i].name, acc, rep.baseline_accuracy - acc};
    };
    const int workers = std::max(1, std::min<int>(cfg.threads, static_cast<int>(sweep.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < sweep.size(); ++i) run(i);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = static_cast<std::size_t>(w); i < sweep.size(); i += static_cast<std::size_t>(workers))
                    run(i);
            });
    }

    std::vector<std::size_t> order(sweep.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rep.groups[a].degradation > rep.groups[b].degradation; });
    for (auto i : order) rep.ranking.push_back(rep.groups[i].group);
    return rep;
}

MaskingReport mask_topk(const TrainedModel& m, const Matrix& x_test, const Labels& y_test, const SensitivityReport& base,
                        int k, const std::vector<FeatureGroup>& all_groups, const OcclusionConfig& cfg,
                        const Vector& train_means) {
    if (k < 1 || static_cast<std::size_t>(k) > base.ranking.size())
        throw InputError("mask_topk: k = " + std::to_string(k) + " is outside [1, " + std::to_string(base.ranking.size()) +
                         "]");
    MaskingReport rep;
    rep.kind = m.kind;
    std::vector<FeatureGroup> chosen;
    for (int i = 0; i < k; ++i) {
        const auto& name = base.ranking[static_cast<std::size_t>(i)];
        const auto it = std::find_if(all_groups.begin(), all_groups.end(), [&](const FeatureGroup& g) { return g.name == name; });
        if (it == all_groups.end()) throw InputError("unknown feature group '" + name + "'");
        chosen.push_back(*it);
        rep.masked.push_back(name);
    }
    rep.accuracy_before = accuracy(predict(m, x_test), y_test, m.class_count).accuracy;
    rep.accuracy_after = accuracy(predict(m, occlude(x_test, chosen, cfg, train_means)), y_test, m.class_count).accuracy;
    rep.degradation = rep.accuracy_before - rep.accuracy_after;
    return rep;
}

}  // namespace xids
