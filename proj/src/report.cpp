#include "xids/report.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

namespace fs = std::filesystem;

namespace xids {

namespace {

std::string join(const std::vector<std::string>& v, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + format_double(v[i]);
    return out;
}

std::vector<std::string> sweep_groups(const ExperimentResult& r) {
    for (const auto& e : r.models)
        if (e.sensitivity) {
            std::vector<std::string> out;
            for (const auto& g : e.sensitivity->groups) out.push_back(g.group);
            return out;
        }
    return {};
}

int count_above(const SensitivityReport& s, double threshold) {
    int n = 0;
    for (const auto& g : s.groups) n += g.degradation > threshold;
    return n;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

FigureSpec distribution_figure(const std::vector<std::pair<std::string, double>>& shares, const std::string& title) {
    FigureSpec f;
    f.kind = FigureKind::distribution;
    f.title = title;
    f.x_label = "share of rows";
    Series s{"share", {}};
    for (const auto& [name, v] : shares) {
        f.categories.push_back(name);
        s.values.push_back(v);
    }
    f.series.push_back(std::move(s));
    return f;
}

FigureSpec sensitivity_figure(const ExperimentResult& r) {
    FigureSpec f;
    f.kind = FigureKind::grouped_bar;
    f.title = "Occlusion sensitivity: " + to_string(r.spec.name) + " (" + to_string(r.spec.task) + ")";
    f.x_label = "feature group";
    f.y_label = "accuracy degradation";
    f.categories = sweep_groups(r);
    for (const auto& e : r.models) {
        if (!e.sensitivity) continue;
        Series s{to_string(e.kind), {}};
        for (const auto& g : e.sensitivity->groups) s.values.push_back(g.degradation);
        f.series.push_back(std::move(s));
    }
    if (f.series.size() == 1) f.kind = FigureKind::bar;
    return f;
}

FigureSpec correlation_figure(const CorrelationReport& c) {
    FigureSpec f;
    f.kind = FigureKind::heatmap;
    f.title = "Feature correlation";
    f.x_label = "Pearson r";
    f.categories = c.feature_names;
    for (Eigen::Index i = 0; i < c.matrix.rows(); ++i) {
        Series s{c.feature_names[static_cast<std::size_t>(i)], {}};
        for (Eigen::Index j = 0; j < c.matrix.cols(); ++j) s.values.push_back(c.matrix(i, j));
        f.series.push_back(std::move(s));
    }
    return f;
}

FigureSpec selection_figure(const FeatureSelection& sel) {
    FigureSpec f;
    f.kind = FigureKind::bar;
    f.title = "Selected feature groups (" + to_string(sel.mode) + ", threshold " + format_double(sel.threshold) + ")";
    f.x_label = "feature group";
    f.y_label = "max |r| with label";
    Series s{"", {}};
    for (const auto& [name, v] : sel.kept_scores) {
        f.categories.push_back(name);
        s.values.push_back(v);
    }
    f.series.push_back(std::move(s));
    return f;
}

FigureSpec masking_figure(const ExperimentResult& r) {
    FigureSpec f;
    f.kind = FigureKind::bar;
    f.title = "Top-" + std::to_string(r.spec.mask_k) + " masking degradation (" + to_string(r.spec.task) + ")";
    f.x_label = "model";
    f.y_label = "accuracy degradation";
    Series s{"", {}};
    for (const auto& e : r.models)
        if (e.masking) {
            f.categories.push_back(to_string(e.kind));
            s.values.push_back(e.masking->degradation);
        }
    f.series.push_back(std::move(s));
    return f;
}

FigureSpec retrain_figure(const ExperimentResult& r) {
    FigureSpec f;
    f.kind = FigureKind::grouped_bar;
    f.title = "Accuracy before and after removing " + join(r.removed_groups, ", ") + " (" + to_string(r.spec.task) + ")";
    f.x_label = "model";
    f.y_label = "test accuracy";
    Series before{"all features", {}}, after{"after removal", {}};
    for (const auto& e : r.models) {
        f.categories.push_back(to_string(e.kind));
        before.values.push_back(e.pre_removal_accuracy.value_or(0.0));
        after.values.push_back(e.metrics.accuracy);
    }
    f.series = {std::move(before), std::move(after)};
    return f;
}

FigureSpec overhead_figure(const OverheadReport& o, bool predict) {
    FigureSpec f;
    f.kind = FigureKind::bar;
    f.title = predict ? "Prediction time per 1000 rows (median)" : "Training time (median)";
    f.x_label = "model";
    f.y_label = "seconds";
    Series s{"", {}};
    for (const auto& e : o.entries) {
        f.categories.push_back(to_string(e.kind));
        s.values.push_back(predict ? e.predict_seconds_per_1000 : e.train_seconds);
    }
    f.series.push_back(std::move(s));
    return f;
}

std::string to_csv(const CsvTable& t) {
    const auto cell = [](const std::string& s) {
        const bool quote = s.find_first_of(",\"\r\n") != std::string::npos || (!s.empty() && (s.front() == ' ' || s.back() == ' '));
        if (!quote) return s;
        std::string out = "\"";
        for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
        return out + "\"";
    };
    std::string out;
    const auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cell(cells[i]);
        out += "\n";
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out;
}

CsvTable sensitivity_table(const ExperimentResult& r) {
    CsvTable t{{"model", "group", "baseline_acc", "occluded_acc", "degradation", "rank"}, {}};
    for (const auto& e : r.models) {
        if (!e.sensitivity) continue;
        const auto& s = *e.sensitivity;
        for (const auto& g : s.groups) {
            const auto rank = std::find(s.ranking.begin(), s.ranking.end(), g.group) - s.ranking.begin() + 1;
            t.rows.push_back({to_string(e.kind), g.group, format_double(s.baseline_accuracy),
                              format_double(g.occluded_accuracy), format_double(g.degradation), std::to_string(rank)});
        }
    }
    return t;
}

CsvTable masking_table(const ExperimentResult& r) {
    CsvTable t{{"model", "masked", "accuracy_before", "accuracy_after", "degradation", "robustness_rank"}, {}};
    for (const auto& e : r.models) {
        if (!e.masking) continue;
        const auto name = to_string(e.kind);
        const auto& rr = r.robustness_ranking;
        const auto rank = std::find(rr.begin(), rr.end(), name) - rr.begin() + 1;
        t.rows.push_back({name, join(e.masking->masked, ";"), format_double(e.masking->accuracy_before),
                          format_double(e.masking->accuracy_after), format_double(e.masking->degradation),
                          std::to_string(rank)});
    }
    return t;
}

CsvTable retrain_table(const ExperimentResult& r) {
    CsvTable t{{"model", "removed", "accuracy_before", "accuracy_after", "n_features", "groups_over_0.01_before",
                "groups_over_0.01_after"},
               {}};
    for (const auto& e : r.models)
        t.rows.push_back({to_string(e.kind), join(r.removed_groups, ";"), format_double(e.pre_removal_accuracy.value_or(0.0)),
                          format_double(e.metrics.accuracy), std::to_string(e.n_features),
                          std::to_string(e.pre_removal_sensitivity ? count_above(*e.pre_removal_sensitivity, 0.01) : 0),
                          std::to_string(e.sensitivity ? count_above(*e.sensitivity, 0.01) : 0)});
    return t;
}

CsvTable overhead_table(const OverheadReport& o) {
    CsvTable t{{"model", "train_seconds", "predict_seconds_per_1000", "epochs_run", "train_seconds_repeats",
                "predict_seconds_repeats"},
               {}};
    for (const auto& e : o.entries)
        t.rows.push_back({to_string(e.kind), format_double(e.train_seconds), format_double(e.predict_seconds_per_1000),
                          std::to_string(e.epochs_run), join(e.train_seconds_repeats), join(e.predict_seconds_repeats)});
    return t;
}

CsvTable selection_table(const FeatureSelection& s) {
    CsvTable t{{"group", "score", "kept", "mode", "threshold"}, {}};
    for (const auto& [name, v] : s.kept_scores)
        t.rows.push_back({name, format_double(v), "1", to_string(s.mode), format_double(s.threshold)});
    for (const auto& [name, v] : s.dropped)
        t.rows.push_back({name, format_double(v), "0", to_string(s.mode), format_double(s.threshold)});
    return t;
}

CsvTable correlation_table(const CorrelationReport& c) {
    CsvTable t;
    t.header.push_back("feature");
    t.header.insert(t.header.end(), c.feature_names.begin(), c.feature_names.end());
    for (Eigen::Index i = 0; i < c.matrix.rows(); ++i) {
        std::vector<std::string> row{c.feature_names[static_cast<std::size_t>(i)]};
        for (Eigen::Index j = 0; j < c.matrix.cols(); ++j) row.push_back(format_double(c.matrix(i, j)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable distribution_table(const std::vector<std::pair<std::string, double>>& shares) {
    CsvTable t{{"class", "share"}, {}};
    for (const auto& [name, v] : shares) t.rows.push_back({name, format_double(v)});
    return t;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 digest failed", 1);
    std::string out;
    char hex[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(hex, sizeof hex, "%02x", md[i]);
        out += hex;
    }
    return out;
}

Bundle write_bundle(const std::vector<ExperimentResult>& results, const std::string& dir) {
    Bundle b;
    b.dir = dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + dir);

    Json files = Json::array();
    const auto emit = [&](const std::string& rel, const std::string& content, bool timing,
                          const std::string& stable = {}) {
        const fs::path p = fs::path(dir) / rel;
        fs::create_directories(p.parent_path(), ec);
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out) throw InputError("cannot write " + p.string());
        BundleFile f{rel, sha256_hex(content), timing};
        Json j = {{"path", rel}, {"sha256", f.sha256}, {"timing", timing}};
        if (!stable.empty()) j["stable_sha256"] = stable;
        files.push_back(j);
        b.files.push_back(std::move(f));
    };

    Json experiments = Json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        char prefix[16];
        std::snprintf(prefix, sizeof prefix, "%02zu_", i + 1);
        const std::string sub = prefix + to_string(r.spec.name) + "_" + to_string(r.spec.task);

        const Json rj = to_json(r);
        emit(sub + "/result.json", canonical_dump(rj), true, sha256_hex(canonical_dump(strip_timing(rj))));

        const bool swept = std::any_of(r.models.begin(), r.models.end(), [](const auto& e) { return e.sensitivity.has_value(); });
        if (swept) {
            emit(sub + "/tables/sensitivity.csv", to_csv(sensitivity_table(r)), false);
            emit(sub + "/figures/sensitivity.svg", render_svg(sensitivity_figure(r)), false);
        }
        if (r.selection) {
            emit(sub + "/tables/selection.csv", to_csv(selection_table(*r.selection)), false);
            emit(sub + "/figures/selection.svg", render_svg(selection_figure(*r.selection)), false);
        }
        if (r.correlation) {
            emit(sub + "/tables/correlation.csv", to_csv(correlation_table(*r.correlation)), false);
            emit(sub + "/figures/correlation.svg", render_svg(correlation_figure(*r.correlation)), false);
        }
        if (r.spec.name == ExperimentName::top2_masking) {
            emit(sub + "/tables/masking.csv", to_csv(masking_table(r)), false);
            emit(sub + "/figures/masking.svg", render_svg(masking_figure(r)), false);
        }
        if (r.spec.name == ExperimentName::retrain_without_top) {
            emit(sub + "/tables/retrain.csv", to_csv(retrain_table(r)), false);
            emit(sub + "/figures/retrain.svg", render_svg(retrain_figure(r)), false);
        }
        if (r.overhead) {
            emit(sub + "/tables/overhead.csv", to_csv(overhead_table(*r.overhead)), true);
            emit(sub + "/figures/overhead_train.svg", render_svg(overhead_figure(*r.overhead, false)), true);
            emit(sub + "/figures/overhead_predict.svg", render_svg(overhead_figure(*r.overhead, true)), true);
        }

        Json models = Json::array();
        for (auto k : r.spec.kinds) models.push_back(to_string(k));
        experiments.push_back({{"dir", sub},
                               {"name", to_string(r.spec.name)},
                               {"task", to_string(r.spec.task)},
                               {"seed", r.spec.seed},
                               {"baseline", to_string(r.spec.baseline)},
                               {"permute_seed", r.spec.permute_seed},
                               {"dataset", r.spec.source.describe()},
                               {"models", models}});
    }

    const Environment env = results.empty() ? environment_fingerprint() : results.front().environment;
    b.manifest = {{"format", "xids-bundle"},
                  {"version", 1},
                  {"toolkit_version", kToolkitVersion},
                  {"environment", {{"cpu", env.cpu}, {"cores", env.cores}}},
                  {"experiments", experiments},
                  {"files", files}};
    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary | std::ios::trunc);
    out << canonical_dump(b.manifest);
    out.close();
    if (!out) throw InputError("cannot write " + (fs::path(dir) / "manifest.json").string());
    return b;
}

namespace {

Json read_manifest(const std::string& dir) {
    const fs::path p = fs::path(dir) / "manifest.json";
    if (!fs::exists(p)) throw InputError("not a bundle directory (no manifest.json): " + dir);
    try {
        return Json::parse(read_file(p));
    } catch (const Json::exception& e) {
        throw InputError("malformed manifest " + p.string() + ": " + e.what());
    }
}

}  // namespace

void verify_bundle(const std::string& dir) {
    const Json m = read_manifest(dir);
    for (const auto& f : m.at("files")) {
        const auto rel = f.at("path").get<std::string>();
        const fs::path p = fs::path(dir) / rel;
        if (!fs::exists(p)) throw InputError("bundle file missing: " + rel);
        if (sha256_hex(read_file(p)) != f.at("sha256").get<std::string>())
            throw InputError("hash mismatch on re-verification: " + rel);
    }
}

std::vector<ExperimentResult> load_bundle(const std::string& dir) {
    const Json m = read_manifest(dir);
    std::vector<ExperimentResult> out;
    for (const auto& e : m.at("experiments")) {
        const fs::path p = fs::path(dir) / e.at("dir").get<std::string>() / "result.json";
        try {
            out.push_back(result_from_json(Json::parse(read_file(p))));
        } catch (const Json::exception& ex) {
            throw InputError("malformed " + p.string() + ": " + ex.what());
        }
    }
    return out;
}

Json stable_manifest(const Json& manifest) {
    Json m = manifest;
    for (auto& f : m["files"])
        if (f.value("timing", false)) f.erase("sha256");
    return m;
}

}  // namespace xids
