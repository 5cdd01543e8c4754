#include "xids/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace xids {

std::string to_string(ExperimentName n) {
    switch (n) {
        case ExperimentName::full_sensitivity: return "full_sensitivity";
        case ExperimentName::selected_sensitivity: return "selected_sensitivity";
        case ExperimentName::top2_masking: return "top2_masking";
        case ExperimentName::retrain_without_top: return "retrain_without_top";
        case ExperimentName::overhead: return "overhead";
    }
    return "?";
}

ExperimentName experiment_from_string(const std::string& s) {
    for (auto n : kAllExperiments)
        if (to_string(n) == s) return n;
    throw InputError("unknown experiment '" + s + "'");
}

namespace {

std::string to_string(RemovalMode m) { return m == RemovalMode::name_substring ? "name_substring" : "sensitivity_rank"; }

RemovalMode removal_mode_from_string(const std::string& s) {
    if (s == "name_substring") return RemovalMode::name_substring;
    if (s == "sensitivity_rank") return RemovalMode::sensitivity_rank;
    throw InputError("unknown removal mode '" + s + "'");
}

// Runs fn(i) for i in [0, n) on up to `threads` workers and rethrows the
// first failure by index.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
    std::vector<std::exception_ptr> errors(n);
    auto guarded = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) guarded(i);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, n); ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < n; i += workers) guarded(i);
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TrainConfig train_config(const ExperimentSpec& spec, int inner_threads) {
    TrainConfig cfg = spec.train;
    cfg.seed = spec.seed;
    cfg.threads = inner_threads;
    return cfg;
}

OcclusionConfig occlusion_config(const ExperimentSpec& spec, int threads) {
    OcclusionConfig oc;
    oc.baseline = spec.baseline;
    oc.permute_seed = spec.permute_seed;
    oc.threads = threads;
    return oc;
}

DatasetSummary summarize(const PreparedData& data) {
    DatasetSummary s;
    s.rows = data.table.n_rows();
    s.train_rows = static_cast<Eigen::Index>(data.split.train_idx.size());
    s.test_rows = static_cast<Eigen::Index>(data.split.test_idx.size());
    s.features = data.table.n_features();
    s.groups = data.table.groups().size();
    s.class_names = data.table.class_names;
    s.class_distribution = class_distribution(data.table);
    return s;
}

ExperimentResult start_result(const ExperimentSpec& spec, const PreparedData& data) {
    validate(spec);
    ExperimentResult r;
    r.spec = spec;
    r.dataset = summarize(data);
    r.environment = environment_fingerprint();
    return r;
}

void enforce_guard(const ExperimentSpec& spec, const ModelEntry& e) {
    if (e.metrics.accuracy < spec.accuracy_guard) {
        std::ostringstream os;
        os << to_string(e.kind) << " reached only " << e.metrics.accuracy << " test accuracy in "
           << to_string(spec.name) << "/" << to_string(spec.task) << " (guard " << spec.accuracy_guard
           << "); check the dataset, schema and training configuration";
        throw TrainingGuardError(os.str());
    }
}

// Trains every requested kind on `train`, scores it on `test` and, when asked,
// runs the occlusion sweep. Parallel across kinds; each kind owns its slot.
std::vector<ModelEntry> train_and_sweep(const ExperimentSpec& spec, const DataTable& train_t, const DataTable& test_t,
                                        bool sweep, std::vector<TrainedModel>* keep_models = nullptr, bool guard = true) {
    const int outer = std::max(1, std::min<int>(spec.threads, static_cast<int>(spec.kinds.size())));
    const int inner = outer > 1 ? 1 : std::max(1, spec.threads);
    const TrainConfig cfg = train_config(spec, inner);
    const OcclusionConfig oc = occlusion_config(spec, inner);
    const auto groups = train_t.groups();
    const Vector means = column_means(train_t.matrix);
    const int classes = train_t.class_count(spec.task);

    std::vector<ModelEntry> entries(spec.kinds.size());
    std::vector<TrainedModel> models(spec.kinds.size());
    parallel_for(spec.kinds.size(), outer, [&](std::size_t i) {
        const ModelKind kind = spec.kinds[i];
        TrainedModel m = train(kind, train_t.matrix, train_t.labels(spec.task), classes, cfg, train_t.feature_names());
        ModelEntry& e = entries[i];
        e.kind = kind;
        e.meta = m.meta;
        e.n_features = m.n_features();
        e.metrics = accuracy(predict(m, test_t.matrix), test_t.labels(spec.task), classes);
        if (guard) enforce_guard(spec, e);
        if (sweep) e.sensitivity = sensitivity(m, test_t.matrix, test_t.labels(spec.task), groups, oc, means);
        models[i] = std::move(m);
    });
    if (keep_models) *keep_models = std::move(models);
    return entries;
}

}  // namespace

std::string DatasetSource::describe() const {
    if (synthetic) {
        std::ostringstream os;
        os << "synthetic(n=" << synthetic->n_rows << ", informative=" << synthetic->n_informative
           << ", noise=" << synthetic->n_noise << ", categorical=" << synthetic->n_categorical
           << ", seed=" << synthetic->seed << (synthetic->redundant ? ", redundant" : "") << ")";
        return os.str();
    }
    return path;
}

RawTable load_source(const DatasetSource& src) {
    if (src.synthetic) return make_synthetic(*src.synthetic);
    if (src.path.empty()) throw InputError("no dataset given: pass a CSV path or a synthetic configuration");
    return load_csv(src.path, src.schema);
}

void validate(const ExperimentSpec& spec) {
    if (spec.kinds.empty()) throw InputError("experiment needs at least one model kind");
    const bool is_retrain = spec.name == ExperimentName::retrain_without_top;
    if (!is_retrain && spec.removal) throw InputError("a removal list only applies to retrain_without_top");
    if (is_retrain && spec.removal && spec.removal->empty())
        throw InputError("retrain_without_top needs a non-empty removal list");
    if (is_retrain && !spec.removal && spec.removal_mode == RemovalMode::sensitivity_rank && spec.removal_count < 1)
        throw InputError("rank-based removal needs removal_count >= 1");
    if (spec.mask_k < 1) throw InputError("mask_k must be at least 1");
    if (spec.overhead_repeats < 1) throw InputError("overhead needs at least one repeat");
}

Environment environment_fingerprint() {
    Environment env;
    env.cores = std::thread::hardware_concurrency();
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) env.cpu = line.substr(line.find_first_not_of(" \t", colon + 1));
            break;
        }
    }
    if (env.cpu.empty()) env.cpu = "unknown";
    return env;
}

const ModelEntry& ExperimentResult::entry(ModelKind k) const {
    for (const auto& e : models)
        if (e.kind == k) return e;
    throw InputError("result has no entry for " + to_string(k));
}

ExperimentResult run_sensitivity(const ExperimentSpec& spec, const PreparedData& data) {
    if (spec.name != ExperimentName::full_sensitivity && spec.name != ExperimentName::selected_sensitivity)
        throw InputError("run_sensitivity handles full_sensitivity and selected_sensitivity only");
    ExperimentResult r = start_result(spec, data);
    DataTable train_t = data.train();
    DataTable test_t = data.test();

    if (spec.name == ExperimentName::selected_sensitivity) {
        // Correlations come from training rows only.
        r.correlation = correlation_matrix(train_t);
        r.selection = select_features(*r.correlation, spec.selection_threshold, spec.task);
        train_t = train_t.keep_groups(r.selection->kept);
        test_t = test_t.keep_groups(r.selection->kept);
    }
    r.models = train_and_sweep(spec, train_t, test_t, true);

    const bool has_mlp = std::find(spec.kinds.begin(), spec.kinds.end(), ModelKind::MLP) != spec.kinds.end();
    if (spec.name == ExperimentName::full_sensitivity && spec.l2_probe && has_mlp) {
        TrainConfig cfg = train_config(spec, std::max(1, spec.threads));
        cfg.l2_mlp = 0.0;
        const int classes = train_t.class_count(spec.task);
        const TrainedModel m = train(ModelKind::MLP, train_t.matrix, train_t.labels(spec.task), classes, cfg);
        L2Probe probe;
        probe.l2 = spec.train.l2_mlp;
        probe.accuracy_with_l2 = r.entry(ModelKind::MLP).metrics.accuracy;
        probe.accuracy_without_l2 = accuracy(predict(m, test_t.matrix), test_t.labels(spec.task), classes).accuracy;
        r.l2_probe = probe;
    }
    return r;
}

ExperimentResult run_top2_masking(const ExperimentSpec& spec, const PreparedData& data) {
    ExperimentResult r = start_result(spec, data);
    const DataTable train_t = data.train();
    const DataTable test_t = data.test();
    const auto groups = train_t.groups();
    if (groups.size() < 2 || static_cast<std::size_t>(spec.mask_k) > groups.size())
        throw InputError("top-k masking needs at least " + std::to_string(std::max(2, spec.mask_k)) +
                         " feature groups, the table has " + std::to_string(groups.size()));

    std::vector<TrainedModel> models;
    r.models = train_and_sweep(spec, train_t, test_t, true, &models);
    const Vector means = column_means(train_t.matrix);
    const OcclusionConfig oc = occlusion_config(spec, 1);
    for (std::size_t i = 0; i < models.size(); ++i)
        r.models[i].masking = mask_topk(models[i], test_t.matrix, test_t.labels(spec.task), *r.models[i].sensitivity,
                                        spec.mask_k, groups, oc, means);

    std::vector<std::size_t> order(r.models.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return r.models[a].masking->degradation < r.models[b].masking->degradation;
    });
    for (auto i : order) r.robustness_ranking.push_back(to_string(r.models[i].kind));
    return r;
}

ExperimentResult run_retrain_without(const ExperimentSpec& spec, const PreparedData& data) {
    ExperimentResult r = start_result(spec, data);
    const DataTable train_t = data.train();
    const DataTable test_t = data.test();
    const auto groups = train_t.groups();

    const std::vector<ModelEntry> before = train_and_sweep(spec, train_t, test_t, true);

    if (spec.removal) {
        r.removed_groups = *spec.removal;
    } else if (spec.removal_mode == RemovalMode::name_substring) {
        for (const auto& g : groups)
            if (g.name.find(spec.removal_pattern) != std::string::npos) r.removed_groups.push_back(g.name);
        if (r.removed_groups.empty())
            throw InputError("no feature group name contains '" + spec.removal_pattern + "'; pass an explicit removal list");
    } else {
        // Pooled rank: mean degradation over the requested models.
        std::vector<double> pooled(groups.size(), 0.0);
        for (const auto& e : before)
            for (std::size_t g = 0; g < groups.size(); ++g) pooled[g] += e.sensitivity->groups[g].degradation;
        std::vector<std::size_t> order(groups.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pooled[a] > pooled[b]; });
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(spec.removal_count), groups.size());
        for (std::size_t i = 0; i < n; ++i) r.removed_groups.push_back(groups[order[i]].name);
    }

    const DataTable train_cut = train_t.drop_groups(r.removed_groups);
    const DataTable test_cut = test_t.drop_groups(r.removed_groups);
    // The guard covers the full-feature models; accuracy lost to the removal is the measurement itself.
    r.models = train_and_sweep(spec, train_cut, test_cut, true, nullptr, false);
    for (std::size_t i = 0; i < r.models.size(); ++i) {
        r.models[i].pre_removal_accuracy = before[i].metrics.accuracy;
        r.models[i].pre_removal_sensitivity = before[i].sensitivity;
    }
    return r;
}

ExperimentResult run_overhead(const ExperimentSpec& spec, const PreparedData& data) {
    ExperimentResult r = start_result(spec, data);
    const DataTable train_t = data.train();
    const DataTable test_t = data.test();
    const TrainConfig cfg = train_config(spec, 1);  // serial timing mode
    const int classes = train_t.class_count(spec.task);
    const auto names = train_t.feature_names();

    OverheadReport rep;
    rep.threads_used = 1;
    rep.predict_rows = test_t.n_rows();
    using clock = std::chrono::steady_clock;
    for (const ModelKind kind : spec.kinds) {
        OverheadEntry oe;
        oe.kind = kind;
        TrainedModel m;
        for (int rep_i = 0; rep_i < spec.overhead_repeats; ++rep_i) {
            const auto t0 = clock::now();
            m = train(kind, train_t.matrix, train_t.labels(spec.task), classes, cfg, names);
            const auto t1 = clock::now();
            oe.train_seconds_repeats.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        Labels pred;
        for (int rep_i = 0; rep_i < spec.overhead_repeats; ++rep_i) {
            const auto t0 = clock::now();
            pred = predict(m, test_t.matrix);
            const auto t1 = clock::now();
            oe.predict_seconds_repeats.push_back(std::chrono::duration<double>(t1 - t0).count() * 1000.0 /
                                                 static_cast<double>(test_t.n_rows()));
        }
        oe.train_seconds = median(oe.train_seconds_repeats);
        oe.predict_seconds_per_1000 = median(oe.predict_seconds_repeats);
        oe.epochs_run = m.meta.epochs_run;
        rep.entries.push_back(oe);

        ModelEntry e;
        e.kind = kind;
        e.meta = m.meta;
        e.n_features = m.n_features();
        e.metrics = accuracy(pred, test_t.labels(spec.task), classes);
        enforce_guard(spec, e);
        r.models.push_back(std::move(e));
    }
    r.overhead = std::move(rep);
    return r;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const PreparedData& data) {
    switch (spec.name) {
        case ExperimentName::full_sensitivity:
        case ExperimentName::selected_sensitivity: return run_sensitivity(spec, data);
        case ExperimentName::top2_masking: return run_top2_masking(spec, data);
        case ExperimentName::retrain_without_top: return run_retrain_without(spec, data);
        case ExperimentName::overhead: return run_overhead(spec, data);
    }
    throw InputError("unknown experiment");
}

namespace {

PreparedData prepare_for(const ExperimentSpec& spec) {
    return prepare(load_source(spec.source), spec.source.schema, spec.source.ratio, spec.seed);
}

}  // namespace

ExperimentResult run_sensitivity(const ExperimentSpec& spec) { return run_sensitivity(spec, prepare_for(spec)); }
ExperimentResult run_top2_masking(const ExperimentSpec& spec) { return run_top2_masking(spec, prepare_for(spec)); }
ExperimentResult run_retrain_without(const ExperimentSpec& spec) { return run_retrain_without(spec, prepare_for(spec)); }
ExperimentResult run_overhead(const ExperimentSpec& spec) { return run_overhead(spec, prepare_for(spec)); }
ExperimentResult run_experiment(const ExperimentSpec& spec) { return run_experiment(spec, prepare_for(spec)); }

std::vector<ExperimentResult> run_all(const DatasetSource& source, std::uint64_t seed, const ExperimentSpec& defaults) {
    ExperimentSpec base = defaults;
    base.source = source;
    base.seed = seed;
    const PreparedData data = prepare_for(base);
    std::vector<ExperimentResult> out;
    for (const auto name : kAllExperiments)
        for (const auto task : {Task::binary, Task::multiclass}) {
            ExperimentSpec s = base;
            s.name = name;
            s.task = task;
            if (name != ExperimentName::retrain_without_top) s.removal.reset();
            try {
                out.push_back(run_experiment(s, data));
            } catch (const Error& e) {
                const std::string where = to_string(name) + "/" + to_string(task) + ": ";
                if (e.exit_code() == 3) throw TrainingGuardError(where + e.what());
                if (e.exit_code() == 4) throw LayoutError(where + e.what());
                throw InputError(where + e.what());
            }
        }
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

Json to_json(const Schema& s) {
    return {{"label", s.label_column}, {"category", s.category_column}, {"id", s.id_columns}, {"categorical", s.categorical_columns}};
}

Schema schema_from_json(const Json& j) {
    Schema s;
    s.label_column = j.value("label", s.label_column);
    s.category_column = j.value("category", s.category_column);
    s.id_columns = j.value("id", s.id_columns);
    s.categorical_columns = j.value("categorical", s.categorical_columns);
    return s;
}

Json to_json(const SyntheticConfig& c) {
    return {{"n_rows", c.n_rows},         {"n_informative", c.n_informative}, {"n_noise", c.n_noise},
            {"n_categorical", c.n_categorical}, {"seed", c.seed},            {"redundant", c.redundant},
            {"label_noise", c.label_noise}};
}

SyntheticConfig synthetic_from_json(const Json& j) {
    SyntheticConfig c;
    c.n_rows = j.value("n_rows", c.n_rows);
    c.n_informative = j.value("n_informative", c.n_informative);
    c.n_noise = j.value("n_noise", c.n_noise);
    c.n_categorical = j.value("n_categorical", c.n_categorical);
    c.seed = j.value("seed", c.seed);
    c.redundant = j.value("redundant", c.redundant);
    c.label_noise = j.value("label_noise", c.label_noise);
    return c;
}

Json to_json(const TrainConfig& c) {
    return {{"max_epochs", c.max_epochs},
            {"target_accuracy", c.target_accuracy},
            {"min_improvement", c.min_improvement},
            {"plateau_patience", c.plateau_patience},
            {"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"svm_lambda", c.svm_lambda},
            {"knn_k", c.knn_k},
            {"forest_trees", c.forest_trees},
            {"forest_bootstrap", c.forest_bootstrap},
            {"forest_max_features", c.forest_max_features},
            {"mlp_hidden", c.mlp_hidden},
            {"l2_mlp", c.l2_mlp}};
}

TrainConfig train_config_from_json(const Json& j) {
    TrainConfig c;
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.target_accuracy = j.value("target_accuracy", c.target_accuracy);
    c.min_improvement = j.value("min_improvement", c.min_improvement);
    c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.svm_lambda = j.value("svm_lambda", c.svm_lambda);
    c.knn_k = j.value("knn_k", c.knn_k);
    c.forest_trees = j.value("forest_trees", c.forest_trees);
    c.forest_bootstrap = j.value("forest_bootstrap", c.forest_bootstrap);
    c.forest_max_features = j.value("forest_max_features", c.forest_max_features);
    c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
    c.l2_mlp = j.value("l2_mlp", c.l2_mlp);
    return c;
}

Json to_json(const Metrics& m) {
    Json conf = Json::array();
    for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) row.push_back(m.confusion(r, c));
        conf.push_back(row);
    }
    return {{"accuracy", m.accuracy}, {"confusion", conf}};
}

Metrics metrics_from_json(const Json& j) {
    Metrics m;
    m.accuracy = j.at("accuracy").get<double>();
    const auto& conf = j.at("confusion");
    const auto n = static_cast<Eigen::Index>(conf.size());
    m.confusion = Eigen::MatrixXi::Zero(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) m.confusion(r, c) = conf[r][c].get<int>();
    return m;
}

Json to_json(const TrainMetadata& m) {
    return {{"epochs_run", m.epochs_run},
            {"stop_reason", to_string(m.stop_reason)},
            {"train_seconds", m.train_seconds},
            {"epoch_accuracy", m.epoch_accuracy}};
}

TrainMetadata meta_from_json(const Json& j) {
    TrainMetadata m;
    m.epochs_run = j.at("epochs_run").get<int>();
    m.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
    m.train_seconds = j.value("train_seconds", 0.0);
    m.epoch_accuracy = j.value("epoch_accuracy", std::vector<double>{});
    return m;
}

Json to_json(const MaskingReport& m) {
    return {{"model", to_string(m.kind)},
            {"masked", m.masked},
            {"accuracy_before", m.accuracy_before},
            {"accuracy_after", m.accuracy_after},
            {"degradation", m.degradation}};
}

MaskingReport masking_from_json(const Json& j) {
    MaskingReport m;
    m.kind = model_kind_from_string(j.at("model").get<std::string>());
    m.masked = j.at("masked").get<std::vector<std::string>>();
    m.accuracy_before = j.at("accuracy_before").get<double>();
    m.accuracy_after = j.at("accuracy_after").get<double>();
    m.degradation = j.at("degradation").get<double>();
    return m;
}

Json to_json(const ModelEntry& e) {
    Json j = {{"model", to_string(e.kind)},
              {"metrics", to_json(e.metrics)},
              {"training", to_json(e.meta)},
              {"n_features", e.n_features}};
    if (e.sensitivity) j["sensitivity"] = to_json(*e.sensitivity);
    if (e.masking) j["masking"] = to_json(*e.masking);
    if (e.pre_removal_accuracy) j["pre_removal_accuracy"] = *e.pre_removal_accuracy;
    if (e.pre_removal_sensitivity) j["pre_removal_sensitivity"] = to_json(*e.pre_removal_sensitivity);
    return j;
}

ModelEntry entry_from_json(const Json& j) {
    ModelEntry e;
    e.kind = model_kind_from_string(j.at("model").get<std::string>());
    e.metrics = metrics_from_json(j.at("metrics"));
    e.meta = meta_from_json(j.at("training"));
    e.n_features = j.at("n_features").get<Eigen::Index>();
    if (j.contains("sensitivity")) e.sensitivity = sensitivity_from_json(j.at("sensitivity"));
    if (j.contains("masking")) e.masking = masking_from_json(j.at("masking"));
    if (j.contains("pre_removal_accuracy")) e.pre_removal_accuracy = j.at("pre_removal_accuracy").get<double>();
    if (j.contains("pre_removal_sensitivity")) e.pre_removal_sensitivity = sensitivity_from_json(j.at("pre_removal_sensitivity"));
    return e;
}

Json pairs_to_json(const std::vector<std::pair<std::string, double>>& v) {
    Json out = Json::array();
    for (const auto& [name, value] : v) out.push_back({{"name", name}, {"value", value}});
    return out;
}

std::vector<std::pair<std::string, double>> pairs_from_json(const Json& j) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& e : j) out.emplace_back(e.at("name").get<std::string>(), e.at("value").get<double>());
    return out;
}

}  // namespace

Json to_json(const SensitivityReport& r) {
    Json groups = Json::array();
    for (const auto& g : r.groups)
        groups.push_back({{"group", g.group}, {"occluded_accuracy", g.occluded_accuracy}, {"degradation", g.degradation}});
    return {{"model", to_string(r.kind)},
            {"baseline", to_string(r.baseline)},
            {"baseline_accuracy", r.baseline_accuracy},
            {"groups", groups},
            {"ranking", r.ranking}};
}

SensitivityReport sensitivity_from_json(const Json& j) {
    SensitivityReport r;
    r.kind = model_kind_from_string(j.at("model").get<std::string>());
    r.baseline = baseline_from_string(j.at("baseline").get<std::string>());
    r.baseline_accuracy = j.at("baseline_accuracy").get<double>();
    for (const auto& g : j.at("groups"))
        r.groups.push_back({g.at("group").get<std::string>(), g.at("occluded_accuracy").get<double>(),
                            g.at("degradation").get<double>()});
    r.ranking = j.at("ranking").get<std::vector<std::string>>();
    return r;
}

Json to_json(const ExperimentSpec& s) {
    Json kinds = Json::array();
    for (auto k : s.kinds) kinds.push_back(to_string(k));
    Json source = {{"path", s.source.path}, {"schema", to_json(s.source.schema)}, {"ratio", s.source.ratio}};
    if (s.source.synthetic) source["synthetic"] = to_json(*s.source.synthetic);
    Json j = {{"name", to_string(s.name)},
              {"task", to_string(s.task)},
              {"models", kinds},
              {"source", source},
              {"seed", s.seed},
              {"baseline", to_string(s.baseline)},
              {"permute_seed", s.permute_seed},
              {"removal_mode", to_string(s.removal_mode)},
              {"removal_pattern", s.removal_pattern},
              {"removal_count", s.removal_count},
              {"selection_threshold", s.selection_threshold},
              {"accuracy_guard", s.accuracy_guard},
              {"mask_k", s.mask_k},
              {"overhead_repeats", s.overhead_repeats},
              {"l2_probe", s.l2_probe},
              {"train", to_json(s.train)}};
    if (s.removal) j["removal"] = *s.removal;
    return j;
}

ExperimentSpec spec_from_json(const Json& j) {
    ExperimentSpec s;
    s.name = experiment_from_string(j.at("name").get<std::string>());
    s.task = task_from_string(j.at("task").get<std::string>());
    s.kinds.clear();
    for (const auto& k : j.at("models")) s.kinds.push_back(model_kind_from_string(k.get<std::string>()));
    const auto& src = j.at("source");
    s.source.path = src.value("path", std::string{});
    s.source.ratio = src.value("ratio", 0.8);
    if (src.contains("schema")) s.source.schema = schema_from_json(src.at("schema"));
    if (src.contains("synthetic")) s.source.synthetic = synthetic_from_json(src.at("synthetic"));
    s.seed = j.at("seed").get<std::uint64_t>();
    s.baseline = baseline_from_string(j.at("baseline").get<std::string>());
    s.permute_seed = j.value("permute_seed", std::uint64_t{0});
    if (j.contains("removal")) s.removal = j.at("removal").get<std::vector<std::string>>();
    s.removal_mode = removal_mode_from_string(j.value("removal_mode", std::string("name_substring")));
    s.removal_pattern = j.value("removal_pattern", s.removal_pattern);
    s.removal_count = j.value("removal_count", s.removal_count);
    s.selection_threshold = j.value("selection_threshold", s.selection_threshold);
    s.accuracy_guard = j.value("accuracy_guard", s.accuracy_guard);
    s.mask_k = j.value("mask_k", s.mask_k);
    s.overhead_repeats = j.value("overhead_repeats", s.overhead_repeats);
    s.l2_probe = j.value("l2_probe", s.l2_probe);
    if (j.contains("train")) s.train = train_config_from_json(j.at("train"));
    return s;
}

Json to_json(const ExperimentResult& r) {
    Json j;
    j["spec"] = to_json(r.spec);
    j["dataset"] = {{"rows", r.dataset.rows},
                    {"train_rows", r.dataset.train_rows},
                    {"test_rows", r.dataset.test_rows},
                    {"features", r.dataset.features},
                    {"groups", r.dataset.groups},
                    {"class_names", r.dataset.class_names},
                    {"class_distribution", pairs_to_json(r.dataset.class_distribution)}};
    Json models = Json::array();
    for (const auto& e : r.models) models.push_back(to_json(e));
    j["models"] = models;
    if (r.selection) {
        j["selection"] = {{"mode", to_string(r.selection->mode)},
                          {"threshold", r.selection->threshold},
                          {"kept", pairs_to_json(r.selection->kept_scores)},
                          {"dropped", pairs_to_json(r.selection->dropped)}};
    }
    if (r.correlation) {
        Json scores = Json::array();
        for (const auto& s : r.correlation->label_scores)
            scores.push_back({{"group", s.group}, {"binary", s.binary}, {"multiclass", s.multiclass}});
        Json matrix = Json::array();
        for (Eigen::Index i = 0; i < r.correlation->matrix.rows(); ++i) {
            Json row = Json::array();
            for (Eigen::Index k = 0; k < r.correlation->matrix.cols(); ++k) row.push_back(r.correlation->matrix(i, k));
            matrix.push_back(row);
        }
        j["correlation"] = {{"features", r.correlation->feature_names}, {"matrix", matrix}, {"label_scores", scores}};
    }
    if (!r.removed_groups.empty()) j["removed_groups"] = r.removed_groups;
    if (!r.robustness_ranking.empty()) j["robustness_ranking"] = r.robustness_ranking;
    if (r.l2_probe)
        j["l2_probe"] = {{"l2", r.l2_probe->l2},
                         {"accuracy_with_l2", r.l2_probe->accuracy_with_l2},
                         {"accuracy_without_l2", r.l2_probe->accuracy_without_l2}};
    if (r.overhead) {
        Json entries = Json::array();
        for (const auto& e : r.overhead->entries)
            entries.push_back({{"model", to_string(e.kind)},
                               {"train_seconds", e.train_seconds},
                               {"train_seconds_repeats", e.train_seconds_repeats},
                               {"predict_seconds_per_1000", e.predict_seconds_per_1000},
                               {"predict_seconds_repeats", e.predict_seconds_repeats},
                               {"epochs_run", e.epochs_run}});
        j["overhead"] = {{"entries", entries}, {"threads_used", r.overhead->threads_used}, {"predict_rows", r.overhead->predict_rows}};
    }
    j["environment"] = {{"cpu", r.environment.cpu}, {"cores", r.environment.cores}};
    return j;
}

ExperimentResult result_from_json(const Json& j) {
    try {
        ExperimentResult r;
        r.spec = spec_from_json(j.at("spec"));
        const auto& d = j.at("dataset");
        r.dataset.rows = d.at("rows").get<Eigen::Index>();
        r.dataset.train_rows = d.at("train_rows").get<Eigen::Index>();
        r.dataset.test_rows = d.at("test_rows").get<Eigen::Index>();
        r.dataset.features = d.at("features").get<Eigen::Index>();
        r.dataset.groups = d.at("groups").get<std::size_t>();
        r.dataset.class_names = d.at("class_names").get<std::vector<std::string>>();
        r.dataset.class_distribution = pairs_from_json(d.at("class_distribution"));
        for (const auto& e : j.at("models")) r.models.push_back(entry_from_json(e));
        if (j.contains("selection")) {
            const auto& s = j.at("selection");
            FeatureSelection sel;
            sel.mode = task_from_string(s.at("mode").get<std::string>());
            sel.threshold = s.at("threshold").get<double>();
            sel.kept_scores = pairs_from_json(s.at("kept"));
            for (const auto& [name, v] : sel.kept_scores) sel.kept.push_back(name);
            sel.dropped = pairs_from_json(s.at("dropped"));
            r.selection = sel;
        }
        if (j.contains("correlation")) {
            const auto& c = j.at("correlation");
            CorrelationReport rep;
            rep.feature_names = c.at("features").get<std::vector<std::string>>();
            const auto n = static_cast<Eigen::Index>(rep.feature_names.size());
            rep.matrix.resize(n, n);
            for (Eigen::Index a = 0; a < n; ++a)
                for (Eigen::Index b = 0; b < n; ++b) rep.matrix(a, b) = c.at("matrix")[a][b].get<double>();
            for (const auto& s : c.at("label_scores"))
                rep.label_scores.push_back({s.at("group").get<std::string>(), s.at("binary").get<double>(),
                                            s.at("multiclass").get<double>()});
            r.correlation = rep;
        }
        r.removed_groups = j.value("removed_groups", std::vector<std::string>{});
        r.robustness_ranking = j.value("robustness_ranking", std::vector<std::string>{});
        if (j.contains("l2_probe")) {
            const auto& p = j.at("l2_probe");
            r.l2_probe = L2Probe{p.at("l2").get<double>(), p.at("accuracy_with_l2").get<double>(),
                                 p.at("accuracy_without_l2").get<double>()};
        }
        if (j.contains("overhead")) {
            const auto& o = j.at("overhead");
            OverheadReport rep;
            rep.threads_used = o.at("threads_used").get<int>();
            rep.predict_rows = o.at("predict_rows").get<Eigen::Index>();
            for (const auto& e : o.at("entries")) {
                OverheadEntry oe;
                oe.kind = model_kind_from_string(e.at("model").get<std::string>());
                oe.train_seconds = e.value("train_seconds", 0.0);
                oe.train_seconds_repeats = e.value("train_seconds_repeats", std::vector<double>{});
                oe.predict_seconds_per_1000 = e.value("predict_seconds_per_1000", 0.0);
                oe.predict_seconds_repeats = e.value("predict_seconds_repeats", std::vector<double>{});
                oe.epochs_run = e.at("epochs_run").get<int>();
                rep.entries.push_back(oe);
            }
            r.overhead = rep;
        }
        r.environment.cpu = j.at("environment").at("cpu").get<std::string>();
        r.environment.cores = j.at("environment").at("cores").get<unsigned>();
        return r;
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed result document: ") + e.what());
    }
}

std::vector<ExperimentSpec> load_experiment_config(const Json& config, const ExperimentSpec& defaults) {
    try {
        ExperimentSpec base = defaults;
        if (config.contains("dataset")) {
            base.source.path = config.at("dataset").get<std::string>();
            base.source.synthetic.reset();
        }
        if (config.contains("synthetic")) base.source.synthetic = synthetic_from_json(config.at("synthetic"));
        if (config.contains("schema")) base.source.schema = schema_from_json(config.at("schema"));
        if (config.contains("ratio")) base.source.ratio = config.at("ratio").get<double>();
        base.seed = config.value("seed", base.seed);
        if (config.contains("baseline")) base.baseline = baseline_from_string(config.at("baseline").get<std::string>());
        base.permute_seed = config.value("permute_seed", base.permute_seed);
        base.threads = config.value("threads", base.threads);
        base.accuracy_guard = config.value("accuracy_guard", base.accuracy_guard);
        if (config.contains("train")) base.train = train_config_from_json(config.at("train"));
        if (config.contains("models")) {
            base.kinds.clear();
            for (const auto& k : config.at("models")) base.kinds.push_back(model_kind_from_string(k.get<std::string>()));
        }

        std::vector<ExperimentSpec> out;
        for (const auto& e : config.value("experiments", Json::array())) {
            ExperimentSpec s = base;
            s.name = experiment_from_string(e.at("name").get<std::string>());
            if (s.name != ExperimentName::retrain_without_top) s.removal.reset();
            if (e.contains("task")) s.task = task_from_string(e.at("task").get<std::string>());
            if (e.contains("baseline")) s.baseline = baseline_from_string(e.at("baseline").get<std::string>());
            if (e.contains("permute_seed")) s.permute_seed = e.at("permute_seed").get<std::uint64_t>();
            if (e.contains("removal")) s.removal = e.at("removal").get<std::vector<std::string>>();
            if (e.contains("removal_mode")) s.removal_mode = removal_mode_from_string(e.at("removal_mode").get<std::string>());
            if (e.contains("removal_count")) s.removal_count = e.at("removal_count").get<int>();
            if (e.contains("models")) {
                s.kinds.clear();
                for (const auto& k : e.at("models")) s.kinds.push_back(model_kind_from_string(k.get<std::string>()));
            }
            validate(s);
            out.push_back(std::move(s));
        }
        return out;
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed experiment config: ") + e.what());
    }
}

}  // namespace xids
