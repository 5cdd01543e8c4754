#ifndef XIDS_EXPLAIN_HPP
#define XIDS_EXPLAIN_HPP

#include "xids/data.hpp"
#include "xids/models.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace xids {

enum class Baseline { train_mean, zero, permute };

std::string to_string(Baseline b);
Baseline baseline_from_string(const std::string& s);

struct OcclusionConfig {
    Baseline baseline = Baseline::train_mean;
    std::uint64_t permute_seed = 0;
    std::vector<FeatureGroup> groups;  // empty: every group of the table
    int threads = 1;
};

/// Column means of the training matrix; the train_mean replacement values.
Vector column_means(const Matrix& x_train);

/// Copy of `x` with the group's columns replaced by the configured baseline.
Matrix occlude(const Matrix& x, const FeatureGroup& group, const OcclusionConfig& cfg, const Vector& train_means);

/// Occludes several groups at once (top-k masking).
Matrix occlude(const Matrix& x, const std::vector<FeatureGroup>& groups, const OcclusionConfig& cfg,
               const Vector& train_means);

struct GroupSensitivity {
    std::string group;
    double occluded_accuracy = 0.0;
    double degradation = 0.0;  // baseline - occluded; positive means the model relied on the group
};

struct SensitivityReport {
    ModelKind kind = ModelKind::KNN;
    Baseline baseline = Baseline::train_mean;
    double baseline_accuracy = 0.0;
    std::vector<GroupSensitivity> groups;  // sweep order
    std::vector<std::string> ranking;      // by degradation descending, ties in sweep order

    const GroupSensitivity& at(const std::string& group) const;
    double max_degradation() const;
};

/// One occlusion per group; the model is never retrained.
SensitivityReport sensitivity(const TrainedModel& m, const Matrix& x_test, const Labels& y_test,
                              const std::vector<FeatureGroup>& all_groups, const OcclusionConfig& cfg,
                              const Vector& train_means);

struct MaskingReport {
    ModelKind kind = ModelKind::KNN;
    std::vector<std::string> masked;
    double accuracy_before = 0.0;
    double accuracy_after = 0.0;
    double degradation = 0.0;
};

/// Occludes the top-k groups of `base` simultaneously.
MaskingReport mask_topk(const TrainedModel& m, const Matrix& x_test, const Labels& y_test, const SensitivityReport& base,
                        int k, const std::vector<FeatureGroup>& all_groups, const OcclusionConfig& cfg,
                        const Vector& train_means);

}  // namespace xids

#endif  // XIDS_EXPLAIN_HPP
