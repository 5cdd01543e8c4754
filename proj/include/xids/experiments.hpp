#ifndef XIDS_EXPERIMENTS_HPP
#define XIDS_EXPERIMENTS_HPP

#include "xids/canonical_json.hpp"
#include "xids/data.hpp"
#include "xids/explain.hpp"
#include "xids/models.hpp"
#include "xids/selection.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace xids {

enum class ExperimentName { full_sensitivity, selected_sensitivity, top2_masking, retrain_without_top, overhead };

inline constexpr std::array<ExperimentName, 5> kAllExperiments = {
    ExperimentName::full_sensitivity, ExperimentName::selected_sensitivity, ExperimentName::top2_masking,
    ExperimentName::retrain_without_top, ExperimentName::overhead};

std::string to_string(ExperimentName n);
ExperimentName experiment_from_string(const std::string& s);

/// Where rows come from: a CSV on disk or the synthetic generator.
struct DatasetSource {
    std::string path;
    Schema schema;
    std::optional<SyntheticConfig> synthetic;
    double ratio = 0.8;

    std::string describe() const;
};

RawTable load_source(const DatasetSource& src);

enum class RemovalMode { name_substring, sensitivity_rank };

struct ExperimentSpec {
    ExperimentName name = ExperimentName::full_sensitivity;
    Task task = Task::binary;
    std::vector<ModelKind> kinds{kAllModelKinds.begin(), kAllModelKinds.end()};
    DatasetSource source;
    std::uint64_t seed = 42;  // split, training and forest streams
    Baseline baseline = Baseline::train_mean;
    std::uint64_t permute_seed = 0;

    // retrain_without_top: an explicit list wins; otherwise groups are resolved
    // by name substring (default "ttl") or by pooled sensitivity rank.
    std::optional<std::vector<std::string>> removal;
    RemovalMode removal_mode = RemovalMode::name_substring;
    std::string removal_pattern = "ttl";
    int removal_count = 3;

    double selection_threshold = 0.3;
    double accuracy_guard = 0.5;
    int mask_k = 2;
    int overhead_repeats = 3;
    bool l2_probe = true;
    int threads = 1;
    TrainConfig train;  // seed and threads are overridden from the fields above
};

/// Throws InputError when the spec violates its invariants.
void validate(const ExperimentSpec& spec);

struct ModelEntry {
    ModelKind kind = ModelKind::KNN;
    Metrics metrics;  // on the test split
    TrainMetadata meta;
    Eigen::Index n_features = 0;
    std::optional<SensitivityReport> sensitivity;
    std::optional<MaskingReport> masking;
    // retrain_without_top only: the full-feature model before removal.
    std::optional<double> pre_removal_accuracy;
    std::optional<SensitivityReport> pre_removal_sensitivity;
};

struct OverheadEntry {
    ModelKind kind = ModelKind::KNN;
    std::vector<double> train_seconds_repeats;
    std::vector<double> predict_seconds_repeats;  // per 1,000 rows
    double train_seconds = 0.0;                   // median
    double predict_seconds_per_1000 = 0.0;        // median
    int epochs_run = 0;
};

struct OverheadReport {
    std::vector<OverheadEntry> entries;
    int threads_used = 1;
    Eigen::Index predict_rows = 0;
};

struct L2Probe {
    double l2 = 1e-4;
    double accuracy_with_l2 = 0.0;
    double accuracy_without_l2 = 0.0;
};

struct DatasetSummary {
    Eigen::Index rows = 0;
    Eigen::Index train_rows = 0;
    Eigen::Index test_rows = 0;
    Eigen::Index features = 0;
    std::size_t groups = 0;
    std::vector<std::string> class_names;
    std::vector<std::pair<std::string, double>> class_distribution;
};

struct Environment {
    std::string cpu;
    unsigned cores = 0;
};

Environment environment_fingerprint();

struct ExperimentResult {
    ExperimentSpec spec;
    DatasetSummary dataset;
    std::vector<ModelEntry> models;
    std::optional<FeatureSelection> selection;
    std::optional<CorrelationReport> correlation;
    std::vector<std::string> removed_groups;
    std::vector<std::string> robustness_ranking;  // top2_masking: least degraded first
    std::optional<L2Probe> l2_probe;
    std::optional<OverheadReport> overhead;
    Environment environment;

    const ModelEntry& entry(ModelKind k) const;
};

// Each runner loads and prepares the dataset itself; the second overloads
// reuse an already prepared table (it must come from spec.source and spec.seed).
ExperimentResult run_sensitivity(const ExperimentSpec& spec);
ExperimentResult run_sensitivity(const ExperimentSpec& spec, const PreparedData& data);
ExperimentResult run_top2_masking(const ExperimentSpec& spec);
ExperimentResult run_top2_masking(const ExperimentSpec& spec, const PreparedData& data);
ExperimentResult run_retrain_without(const ExperimentSpec& spec);
ExperimentResult run_retrain_without(const ExperimentSpec& spec, const PreparedData& data);
ExperimentResult run_overhead(const ExperimentSpec& spec);
ExperimentResult run_overhead(const ExperimentSpec& spec, const PreparedData& data);

ExperimentResult run_experiment(const ExperimentSpec& spec);
ExperimentResult run_experiment(const ExperimentSpec& spec, const PreparedData& data);

/// Every experiment for both tasks, experiment-major:
/// full_sensitivity, selected_sensitivity, top2_masking, retrain_without_top,
/// overhead; binary before multiclass within each.
std::vector<ExperimentResult> run_all(const DatasetSource& source, std::uint64_t seed, const ExperimentSpec& defaults = {});

/// Specs from a JSON config: top-level defaults (dataset, synthetic, schema,
/// seed, baseline, permute_seed, threads, models) plus an "experiments" array
/// whose entries may override name, task, baseline, removal, removal_mode.
std::vector<ExperimentSpec> load_experiment_config(const Json& config, const ExperimentSpec& defaults);

Json to_json(const ExperimentSpec& s);
ExperimentSpec spec_from_json(const Json& j);
Json to_json(const ExperimentResult& r);
ExperimentResult result_from_json(const Json& j);
Json to_json(const SensitivityReport& r);
SensitivityReport sensitivity_from_json(const Json& j);

}  // namespace xids

#endif  // XIDS_EXPERIMENTS_HPP
