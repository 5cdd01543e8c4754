#include "cli.hpp"

#include "xids/experiments.hpp"
#include "xids/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace xids {

namespace {

constexpr const char* kDefaultOut = "xids-out";

struct Common {
    std::string data;
    std::string synthetic;
    std::string schema;
    std::uint64_t seed = 42;
    double ratio = 0.8;
    std::string out;
    int threads = 1;
    bool quiet = false;
};

void add_source_options(CLI::App* cmd, Common& c) {
    cmd->add_option("--data", c.data, "Dataset CSV (UNSW-NB15 layout or any table matching --schema)");
    cmd->add_option("--synthetic", c.synthetic,
                    "Generate a surrogate instead of reading --data, e.g. n=20000,informative=3,noise=12,"
                    "categorical=0,redundant=0,seed=42,label_noise=0.01");
    cmd->add_option("--schema", c.schema, "Schema file (key=value lines: label, category, id, categorical)");
    cmd->add_option("--ratio", c.ratio, "Train fraction of the split")->capture_default_str()->check(CLI::Range(0.0, 1.0));
}

void add_common_options(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "Seed for the split, training and synthetic data")->capture_default_str();
    cmd->add_option("--out", c.out, std::string("Output directory; falls back to $XIDS_OUTPUT_DIR, then ") + kDefaultOut);
    cmd->add_option("--threads", c.threads, "Worker threads (1 runs everything serially)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_flag("-q,--quiet", c.quiet, "Suppress the summary printout");
}

std::string output_dir(const Common& c) {
    if (!c.out.empty()) return c.out;
    if (const char* env = std::getenv("XIDS_OUTPUT_DIR"); env && *env) return env;
    return kDefaultOut;
}

DatasetSource make_source(const Common& c) {
    DatasetSource src;
    src.ratio = c.ratio;
    if (!c.schema.empty()) src.schema = load_schema(c.schema);
    if (!c.synthetic.empty() && !c.data.empty()) throw InputError("pass either --data or --synthetic, not both");
    if (!c.synthetic.empty()) {
        src.synthetic = parse_synthetic(c.synthetic, c.seed);
    } else if (!c.data.empty()) {
        src.path = c.data;
    } else {
        throw InputError("no dataset: pass --data <csv> or --synthetic n=<rows>");
    }
    return src;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) throw InputError("cannot write " + path.string());
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

// --- preprocess ------------------------------------------------------------

int cmd_preprocess(const Common& c, std::ostream& out) {
    const DatasetSource src = make_source(c);
    const PreparedData data = prepare(load_source(src), src.schema, src.ratio, c.seed);
    const fs::path dir = output_dir(c);

    write_processed(data, (dir / "processed.csv").string());
    const auto dist = class_distribution(data.table);
    write_text(dir / "class_distribution.csv", to_csv(distribution_table(dist)));
    write_text(dir / "class_distribution.svg", render_svg(distribution_figure(dist, "Class distribution")));

    Json groups = Json::array();
    for (const auto& g : data.table.groups()) groups.push_back(g.name);
    Json summary = {{"dataset", src.describe()},
                    {"seed", c.seed},
                    {"ratio", src.ratio},
                    {"rows", data.table.n_rows()},
                    {"train_rows", data.split.train_idx.size()},
                    {"test_rows", data.split.test_idx.size()},
                    {"features", data.table.feature_names()},
                    {"groups", groups},
                    {"class_names", data.table.class_names},
                    {"scaler", {{"min", std::vector<double>(data.scaler.min.begin(), data.scaler.min.end())},
                                {"max", std::vector<double>(data.scaler.max.begin(), data.scaler.max.end())}}}};
    write_text(dir / "preprocess.json", canonical_dump(summary));

    if (!c.quiet) {
        out << "rows " << data.table.n_rows() << " (train " << data.split.train_idx.size() << ", test "
            << data.split.test_idx.size() << "), " << data.table.n_features() << " encoded columns in "
            << groups.size() << " groups\n";
        for (const auto& [name, share] : dist) out << "  " << std::left << std::setw(16) << name << fmt(100 * share, 2) << "%\n";
        out << "wrote " << (dir / "processed.csv").string() << "\n";
    }
    return 0;
}

// --- run -------------------------------------------------------------------

struct RunOptions {
    bool all = false;
    std::vector<std::string> experiments;
    std::string task = "both";
    std::vector<std::string> models;
    std::string baseline = "train_mean";
    std::uint64_t permute_seed = 0;
    std::string config;
    std::string save_models;
    std::vector<std::string> removal;
    std::string removal_mode = "name_substring";
};

std::vector<Task> tasks_from(const std::string& t) {
    if (t == "both") return {Task::binary, Task::multiclass};
    return {task_from_string(t)};
}

void print_summary(const std::vector<ExperimentResult>& results, std::ostream& out) {
    out << std::left << std::setw(22) << "experiment" << std::setw(12) << "task" << std::setw(20) << "model"
        << std::setw(10) << "accuracy" << std::setw(24) << "top feature" << "degradation\n";
    for (const auto& r : results)
        for (const auto& e : r.models) {
            std::string top = "-", deg = "-";
            if (e.masking) {
                top = e.masking->masked.empty() ? "-" : e.masking->masked.front();
                deg = fmt(e.masking->degradation) + " (top-" + std::to_string(e.masking->masked.size()) + ")";
            } else if (e.sensitivity && !e.sensitivity->ranking.empty()) {
                top = e.sensitivity->ranking.front();
                deg = fmt(e.sensitivity->at(top).degradation);
            }
            out << std::setw(22) << to_string(r.spec.name) << std::setw(12) << to_string(r.spec.task) << std::setw(20)
                << to_string(e.kind) << std::setw(10) << fmt(e.metrics.accuracy) << std::setw(24) << top << deg << "\n";
        }
}

void save_models(const std::vector<ExperimentSpec>& specs, const std::string& dir, std::ostream& out, bool quiet) {
    std::map<std::string, bool> done;
    for (const auto& s : specs) {
        const std::string key = s.source.describe() + "|" + std::to_string(s.seed) + "|" + to_string(s.task);
        if (done[key]) continue;
        done[key] = true;
        const PreparedData data = prepare(load_source(s.source), s.source.schema, s.source.ratio, s.seed);
        const DataTable train_t = data.train();
        TrainConfig cfg = s.train;
        cfg.seed = s.seed;
        cfg.threads = s.threads;
        for (const auto kind : s.kinds) {
            const TrainedModel m = train(kind, train_t.matrix, train_t.labels(s.task), train_t.class_count(s.task), cfg,
                                         train_t.feature_names());
            const fs::path p = fs::path(dir) / (to_string(s.task) + "_" + to_string(kind) + ".json");
            std::error_code ec;
            fs::create_directories(p.parent_path(), ec);
            save_model(m, p.string());
            if (!quiet) out << "saved " << p.string() << "\n";
        }
    }
}

int cmd_run(const Common& c, const RunOptions& o, std::ostream& out) {
    ExperimentSpec defaults;
    defaults.seed = c.seed;
    defaults.threads = c.threads;
    defaults.baseline = baseline_from_string(o.baseline);
    defaults.permute_seed = o.permute_seed;
    if (!o.models.empty()) {
        defaults.kinds.clear();
        for (const auto& m : o.models) defaults.kinds.push_back(model_kind_from_string(m));
    }
    if (!o.removal.empty()) defaults.removal = o.removal;
    defaults.removal_mode = o.removal_mode == "sensitivity_rank" ? RemovalMode::sensitivity_rank : RemovalMode::name_substring;
    if (o.removal_mode != "sensitivity_rank" && o.removal_mode != "name_substring")
        throw InputError("unknown removal mode '" + o.removal_mode + "'");

    Json config = Json::object();
    if (!o.config.empty()) {
        try {
            config = Json::parse(read_text(o.config));
        } catch (const Json::exception& e) {
            throw InputError("malformed config " + o.config + ": " + e.what());
        }
    }
    const bool config_has_source = config.contains("dataset") || config.contains("synthetic");
    if (!config_has_source || !c.data.empty() || !c.synthetic.empty()) defaults.source = make_source(c);

    const bool flag_selection = o.all || !o.experiments.empty();
    if (!config.contains("experiments")) {
        if (!flag_selection) throw InputError("choose experiments with --all or --experiment <name>");
        Json list = Json::array();
        std::vector<ExperimentName> names;
        if (o.all) {
            names.assign(kAllExperiments.begin(), kAllExperiments.end());
        } else {
            for (const auto& n : o.experiments) names.push_back(experiment_from_string(n));
        }
        for (const auto n : names)
            for (const auto t : tasks_from(o.task)) list.push_back({{"name", to_string(n)}, {"task", to_string(t)}});
        config["experiments"] = list;
    }
    auto specs = load_experiment_config(config, defaults);
    for (auto& s : specs)
        if (s.name == ExperimentName::overhead) s.threads = 1;

    // One prepared table per (source, seed, ratio).
    std::map<std::string, PreparedData> cache;
    std::vector<ExperimentResult> results;
    for (const auto& s : specs) {
        const std::string key = s.source.describe() + "|" + std::to_string(s.seed) + "|" + format_double(s.source.ratio);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, prepare(load_source(s.source), s.source.schema, s.source.ratio, s.seed)).first;
        try {
            results.push_back(run_experiment(s, it->second));
        } catch (const TrainingGuardError& e) {
            throw TrainingGuardError(to_string(s.name) + "/" + to_string(s.task) + ": " + e.what());
        }
        if (!c.quiet) out << "finished " << to_string(s.name) << " (" << to_string(s.task) << ")\n";
    }

    const std::string dir = output_dir(c);
    const Bundle b = write_bundle(results, dir);
    if (!o.save_models.empty()) save_models(specs, o.save_models, out, c.quiet);
    if (!c.quiet) {
        print_summary(results, out);
        out << results.size() << " experiment results, " << b.files.size() << " files in " << dir << "\n";
    }
    return 0;
}

// --- explain ---------------------------------------------------------------

struct ExplainOptions {
    std::string model;
    std::string table;
    std::string baseline = "train_mean";
    std::uint64_t permute_seed = 0;
    std::string rows = "test";
};

int cmd_explain(const Common& c, const ExplainOptions& o, std::ostream& out) {
    const TrainedModel m = load_model(o.model);
    const ProcessedTable pt = load_processed(o.table);
    const auto names = pt.table.feature_names();
    if (names != m.feature_names) {
        std::ostringstream os;
        os << "model expects " << m.feature_names.size() << " features, table has " << names.size();
        const auto n = std::min(names.size(), m.feature_names.size());
        for (std::size_t i = 0; i < n; ++i)
            if (names[i] != m.feature_names[i]) {
                os << "; first difference at column " << i << " ('" << m.feature_names[i] << "' vs '" << names[i] << "')";
                break;
            }
        throw LayoutError(os.str());
    }
    const Task task = m.class_count == 2 ? Task::binary : Task::multiclass;
    if (task == Task::multiclass && m.class_count != pt.table.class_count(task))
        throw LayoutError("model has " + std::to_string(m.class_count) + " classes, table has " +
                          std::to_string(pt.table.class_count(task)));

    IndexList train_rows, eval_rows;
    for (std::size_t i = 0; i < pt.split.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        if (pt.split[i] == "train") train_rows.push_back(idx);
        if (o.rows == "all" || pt.split[i] == "test") eval_rows.push_back(idx);
    }
    if (o.rows != "all" && o.rows != "test") throw InputError("--rows must be test or all");
    if (train_rows.empty() || eval_rows.empty()) throw InputError(o.table + ": needs both train and evaluation rows");
    const DataTable train_t = pt.table.take_rows(train_rows);
    const DataTable eval_t = pt.table.take_rows(eval_rows);

    OcclusionConfig oc;
    oc.baseline = baseline_from_string(o.baseline);
    oc.permute_seed = o.permute_seed;
    oc.threads = c.threads;
    const SensitivityReport rep =
        sensitivity(m, eval_t.matrix, eval_t.labels(task), eval_t.groups(), oc, column_means(train_t.matrix));

    ExperimentResult view;
    ModelEntry e;
    e.kind = m.kind;
    e.sensitivity = rep;
    view.models.push_back(e);
    view.spec.task = task;

    const fs::path dir = output_dir(c);
    Json doc = {{"model_file", fs::path(o.model).filename().string()},
                {"table_file", fs::path(o.table).filename().string()},
                {"task", to_string(task)},
                {"rows", o.rows},
                {"permute_seed", o.permute_seed},
                {"sensitivity", to_json(rep)}};
    write_text(dir / "sensitivity.json", canonical_dump(doc));
    write_text(dir / "sensitivity.csv", to_csv(sensitivity_table(view)));
    FigureSpec fig = sensitivity_figure(view);
    fig.title = "Occlusion sensitivity: " + to_string(m.kind);
    write_text(dir / "sensitivity.svg", render_svg(fig));

    if (!c.quiet) {
        out << to_string(m.kind) << " baseline accuracy " << fmt(rep.baseline_accuracy) << " (" << to_string(rep.baseline)
            << " occlusion, " << eval_rows.size() << " rows)\n";
        for (const auto& g : rep.ranking) out << "  " << std::left << std::setw(24) << g << fmt(rep.at(g).degradation) << "\n";
    }
    return 0;
}

// --- report ----------------------------------------------------------------

int cmd_report(const Common& c, const std::string& bundle, std::ostream& out) {
    verify_bundle(bundle);
    const auto results = load_bundle(bundle);
    const std::string dir = c.out.empty() ? bundle : c.out;
    const Bundle b = write_bundle(results, dir);
    if (!c.quiet) {
        print_summary(results, out);
        out << "re-rendered " << results.size() << " results (" << b.files.size() << " files) into " << dir << "\n";
    }
    return 0;
}

}  // namespace

SyntheticConfig parse_synthetic(const std::string& text, std::uint64_t default_seed) {
    SyntheticConfig cfg;
    cfg.seed = default_seed;
    std::stringstream ss(text);
    std::string item;
    const auto to_size = [](const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const long long x = std::stoll(v, &pos);
            if (pos != v.size() || x < 0) throw std::invalid_argument(v);
            return static_cast<std::size_t>(x);
        } catch (const std::exception&) {
            throw InputError("--synthetic: '" + key + "' needs a non-negative integer, got '" + v + "'");
        }
    };
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw InputError("--synthetic: expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq), v = item.substr(eq + 1);
        if (key == "n" || key == "rows") cfg.n_rows = to_size(key, v);
        else if (key == "informative") cfg.n_informative = to_size(key, v);
        else if (key == "noise") cfg.n_noise = to_size(key, v);
        else if (key == "categorical") cfg.n_categorical = to_size(key, v);
        else if (key == "seed") cfg.seed = to_size(key, v);
        else if (key == "redundant") cfg.redundant = to_size(key, v) != 0;
        else if (key == "label_noise") {
            try {
                cfg.label_noise = std::stod(v);
            } catch (const std::exception&) {
                throw InputError("--synthetic: bad label_noise '" + v + "'");
            }
        } else {
            throw InputError("--synthetic: unknown key '" + key + "'");
        }
    }
    return cfg;
}

void write_processed(const PreparedData& data, const std::string& path) {
    const DataTable& t = data.table;
    std::vector<std::string> split(static_cast<std::size_t>(t.n_rows()), "test");
    for (auto i : data.split.train_idx) split[static_cast<std::size_t>(i)] = "train";

    CsvTable csv;
    csv.header = t.feature_names();
    csv.header.insert(csv.header.end(), {"label", "attack_cat", "split"});
    for (Eigen::Index r = 0; r < t.n_rows(); ++r) {
        std::vector<std::string> row;
        row.reserve(csv.header.size());
        for (Eigen::Index k = 0; k < t.n_features(); ++k) row.push_back(format_double(t.matrix(r, k)));
        row.push_back(std::to_string(t.y_binary(r)));
        row.push_back(t.class_names[static_cast<std::size_t>(t.y_multi(r))]);
        row.push_back(split[static_cast<std::size_t>(r)]);
        csv.rows.push_back(std::move(row));
    }
    write_text(path, to_csv(csv));
}

ProcessedTable load_processed(const std::string& path) {
    Schema s;
    s.label_column = "label";
    s.category_column = "attack_cat";
    s.id_columns = {"split"};
    const RawTable raw = load_csv(path, s);
    const auto split_col = raw.column_index("split");
    if (!split_col) throw InputError(path + ": not a processed table (no split column)");

    ProcessedTable pt;
    pt.table = encode(raw, s);
    for (auto& spec : pt.table.specs) {
        const auto eq = spec.name.find('=');
        if (eq != std::string::npos) spec.onehot_group = spec.name.substr(0, eq);
    }
    for (const auto& row : raw.rows) {
        const auto* v = std::get_if<std::string>(&row[*split_col]);
        if (!v || (*v != "train" && *v != "test")) throw InputError(path + ": split column must hold train or test");
        pt.split.push_back(*v);
    }
    return pt;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Occlusion-sensitivity study of intrusion detection classifiers", "xids"};
    app.require_subcommand(1);

    Common c;
    RunOptions ro;
    ExplainOptions eo;
    std::string bundle;

    auto* pre = app.add_subcommand("preprocess", "Load, clean, encode, scale and split a dataset");
    add_source_options(pre, c);
    add_common_options(pre, c);

    auto* run = app.add_subcommand("run", "Run experiments and write a result bundle");
    add_source_options(run, c);
    add_common_options(run, c);
    run->add_flag("--all", ro.all, "Run every experiment for both tasks");
    run->add_option("--experiment", ro.experiments,
                    "Experiment to run (repeatable): full_sensitivity, selected_sensitivity, top2_masking, "
                    "retrain_without_top, overhead");
    run->add_option("--task", ro.task, "binary, multiclass or both")
        ->capture_default_str()
        ->check(CLI::IsMember({"binary", "multiclass", "both"}));
    run->add_option("--models", ro.models, "Model kinds to train (default: all seven)");
    run->add_option("--baseline", ro.baseline, "Occlusion baseline: train_mean, zero or permute")
        ->capture_default_str()
        ->check(CLI::IsMember({"train_mean", "zero", "permute"}));
    run->add_option("--permute-seed", ro.permute_seed, "Seed of the permute baseline")->capture_default_str();
    run->add_option("--removal", ro.removal, "Groups removed by retrain_without_top (default: names containing ttl)");
    run->add_option("--removal-mode", ro.removal_mode, "name_substring or sensitivity_rank")->capture_default_str();
    run->add_option("--config", ro.config, "JSON config; its values override the flags");
    run->add_option("--save-models", ro.save_models, "Also train and save every model of the run to this directory");

    auto* exp = app.add_subcommand("explain", "Occlusion sweep of a saved model over a processed table");
    add_common_options(exp, c);
    exp->add_option("--model", eo.model, "Saved model (JSON)")->required();
    exp->add_option("--table", eo.table, "processed.csv written by preprocess")->required();
    exp->add_option("--baseline", eo.baseline, "Occlusion baseline: train_mean, zero or permute")
        ->capture_default_str()
        ->check(CLI::IsMember({"train_mean", "zero", "permute"}));
    exp->add_option("--permute-seed", eo.permute_seed, "Seed of the permute baseline")->capture_default_str();
    exp->add_option("--rows", eo.rows, "Rows to evaluate: test or all")->capture_default_str();

    auto* rep = app.add_subcommand("report", "Verify a bundle and re-render its tables and figures");
    add_common_options(rep, c);
    rep->add_option("--bundle", bundle, "Bundle directory written by run")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*pre) return cmd_preprocess(c, out);
        if (*run) return cmd_run(c, ro, out);
        if (*exp) return cmd_explain(c, eo, out);
        if (*rep) return cmd_report(c, bundle, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace xids
