#include "xids/canonical_json.hpp"
#include "xids/models.hpp"

#include <fstream>
#include <sstream>

namespace xids {

namespace {

constexpr int kModelFormatVersion = 1;

template <typename M>
Json matrix_to_json(const M& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(static_cast<double>(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename V>
Json vector_to_json(const V& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::MatrixXd matrix_from_json(const Json& j, Eigen::Index cols_if_empty = 0) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : cols_if_empty;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols) throw InputError("model file: ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from_json(const Json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

Json tree_to_json(const Tree& t) {
    Json feature = Json::array(), threshold = Json::array(), left = Json::array(), right = Json::array(),
         prediction = Json::array();
    for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        prediction.push_back(n.prediction);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"prediction", prediction}};
}

Tree tree_from_json(const Json& j) {
    Tree t;
    const std::size_t n = j.at("feature").size();
    t.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& node = t.nodes[i];
        node.feature = j.at("feature")[i].get<int>();
        node.threshold = j.at("threshold")[i].get<double>();
        node.left = j.at("left")[i].get<int>();
        node.right = j.at("right")[i].get<int>();
        node.prediction = j.at("prediction")[i].get<int>();
        if (node.feature >= 0 && (node.left <= 0 || node.right <= 0 || static_cast<std::size_t>(node.left) >= n ||
                                  static_cast<std::size_t>(node.right) >= n))
            throw InputError("model file: tree child index out of range");
    }
    if (n == 0) throw InputError("model file: empty tree");
    return t;
}

Json params_to_json(const TrainedModel& m) {
    return std::visit(
        [](const auto& p) -> Json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, LinearParams>) {
                return {{"weights", matrix_to_json(p.weights)}, {"bias", vector_to_json(p.bias)}};
            } else if constexpr (std::is_same_v<P, KnnParams>) {
                return {{"k", p.k}, {"points", matrix_to_json(p.points)}, {"labels", vector_to_json(p.labels)}};
            } else if constexpr (std::is_same_v<P, Tree>) {
                return tree_to_json(p);
            } else if constexpr (std::is_same_v<P, ForestParams>) {
                Json trees = Json::array();
                for (const auto& t : p.trees) trees.push_back(tree_to_json(t));
                return {{"trees", trees}};
            } else {
                return {{"w1", matrix_to_json(p.w1)},
                        {"b1", vector_to_json(p.b1)},
                        {"w2", matrix_to_json(p.w2)},
                        {"b2", vector_to_json(p.b2)}};
            }
        },
        m.params);
}

}  // namespace

std::string save_model_json(const TrainedModel& m) {
    Json j;
    j["format"] = "xids-model";
    j["version"] = kModelFormatVersion;
    j["kind"] = to_string(m.kind);
    j["class_count"] = m.class_count;
    j["feature_names"] = m.feature_names;
    j["meta"] = {{"epochs_run", m.meta.epochs_run},
                 {"stop_reason", to_string(m.meta.stop_reason)},
                 {"train_seconds", m.meta.train_seconds},
                 {"epoch_accuracy", m.meta.epoch_accuracy}};
    j["params"] = params_to_json(m);
    return canonical_dump(j);
}

TrainedModel load_model_json(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw InputError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "xids-model") throw InputError("not a model document");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw InputError("unsupported model format version " + j.at("version").dump());
        TrainedModel m;
        m.kind = model_kind_from_string(j.at("kind").get<std::string>());
        m.class_count = j.at("class_count").get<int>();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        const auto& meta = j.at("meta");
        m.meta.epochs_run = meta.at("epochs_run").get<int>();
        m.meta.stop_reason = stop_reason_from_string(meta.at("stop_reason").get<std::string>());
        m.meta.train_seconds = meta.at("train_seconds").get<double>();
        m.meta.epoch_accuracy = meta.at("epoch_accuracy").get<std::vector<double>>();
        const auto& p = j.at("params");
        const auto d = static_cast<Eigen::Index>(m.feature_names.size());
        switch (m.kind) {
            case ModelKind::LinearRegression:
            case ModelKind::LogisticRegression:
            case ModelKind::LinearSVM: {
                LinearParams lp{matrix_from_json(p.at("weights")), vector_from_json(p.at("bias"))};
                if (lp.weights.cols() != d || lp.bias.size() != lp.weights.rows())
                    throw InputError("model file: linear parameter shape mismatch");
                m.params = std::move(lp);
                break;
            }
            case ModelKind::KNN: {
                KnnParams kp;
                kp.k = p.at("k").get<int>();
                kp.points = matrix_from_json(p.at("points"), d);
                const auto labels = vector_from_json(p.at("labels"));
                kp.labels = labels.cast<int>();
                if (kp.points.cols() != d || kp.labels.size() != kp.points.rows())
                    throw InputError("model file: KNN parameter shape mismatch");
                m.params = std::move(kp);
                break;
            }
            case ModelKind::DecisionTree: m.params = tree_from_json(p); break;
            case ModelKind::RandomForest: {
                ForestParams f;
                for (const auto& t : p.at("trees")) f.trees.push_back(tree_from_json(t));
                m.params = std::move(f);
                break;
            }
            case ModelKind::MLP: {
                MlpParams mp;
                mp.w1 = matrix_from_json(p.at("w1"));
                mp.b1 = vector_from_json(p.at("b1")).transpose();
                mp.w2 = matrix_from_json(p.at("w2"));
                mp.b2 = vector_from_json(p.at("b2")).transpose();
                if (mp.w1.rows() != d || mp.w1.cols() != mp.b1.size() || mp.w2.rows() != mp.w1.cols() ||
                    mp.w2.cols() != mp.b2.size())
                    throw InputError("model file: MLP parameter shape mismatch");
                m.params = std::move(mp);
                break;
            }
        }
        return m;
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed model file: ") + e.what());
    }
}

void save_model(const TrainedModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write model file: " + path);
    out << save_model_json(m);
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_model_json(ss.str());
}

}  // namespace xids
