#include "xids/data.hpp"

#include "xids/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

namespace xids {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

bool is_missing_token(const std::string& s) {
    if (s.empty() || s == "-") return true;
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower == "nan";
}

std::optional<double> parse_number(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) return std::nullopt;
    return v;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

std::string format_category(const Cell& c) {
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    std::ostringstream os;
    os << std::get<double>(c);
    return os.str();
}

// "Normal" first, then lexicographic.
std::vector<std::string> order_classes(const std::set<std::string>& names) {
    std::vector<std::string> out;
    if (names.count("Normal")) out.push_back("Normal");
    for (const auto& n : names)
        if (n != "Normal") out.push_back(n);
    return out;
}

}  // namespace

std::optional<std::size_t> RawTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < column_names.size(); ++i)
        if (column_names[i] == name) return i;
    return std::nullopt;
}

Schema parse_schema(std::istream& in) {
    Schema s;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("schema line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "label") s.label_column = value;
        else if (key == "category") s.category_column = value;
        else if (key == "id") s.id_columns = split_list(value);
        else if (key == "categorical") s.categorical_columns = split_list(value);
        else throw InputError("schema line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    return s;
}

Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read schema file: " + path);
    return parse_schema(in);
}

bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    if (in.peek() == std::char_traits<char>::eof()) return false;
    std::string field;
    bool quoted = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

RawTable parse_csv(std::istream& in, const Schema& schema, const std::string& source) {
    RawTable t;
    std::vector<std::string> fields;
    if (!read_csv_record(in, fields)) throw InputError(source + ": empty file, expected a header row");
    for (auto& f : fields) t.column_names.push_back(trim(f));

    std::set<std::string> seen;
    for (const auto& n : t.column_names)
        if (!seen.insert(n).second) throw InputError(source + ": duplicate column name '" + n + "'");
    for (const auto* required : {&schema.label_column, &schema.category_column})
        if (!required->empty() && !seen.count(*required))
            throw InputError(source + ": missing declared label column '" + *required + "'");

    const std::size_t n_cols = t.column_names.size();
    std::vector<std::vector<std::string>> text_rows;
    std::size_t line = 1;
    while (read_csv_record(in, fields)) {
        ++line;
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;
        if (fields.size() != n_cols)
            throw InputError(source + ": ragged row at line " + std::to_string(line) + " (" +
                             std::to_string(fields.size()) + " cells, header has " + std::to_string(n_cols) + ")");
        for (auto& f : fields) f = trim(f);
        text_rows.push_back(fields);
    }

    t.column_types.assign(n_cols, CellType::numeric);
    for (std::size_t c = 0; c < n_cols; ++c) {
        const auto& name = t.column_names[c];
        bool numeric = !contains(schema.categorical_columns, name) && name != schema.category_column;
        for (std::size_t r = 0; numeric && r < text_rows.size(); ++r) {
            const auto& s = text_rows[r][c];
            if (!is_missing_token(s) && !parse_number(s)) numeric = false;
        }
        t.column_types[c] = numeric ? CellType::numeric : CellType::text;
    }

    t.rows.reserve(text_rows.size());
    for (auto& tr : text_rows) {
        std::vector<Cell> row(n_cols);
        for (std::size_t c = 0; c < n_cols; ++c) {
            if (is_missing_token(tr[c])) continue;
            if (t.column_types[c] == CellType::numeric) row[c] = *parse_number(tr[c]);
            else row[c] = std::move(tr[c]);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

RawTable load_csv(const std::string& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read dataset: " + path);
    return parse_csv(in, schema, path);
}

RawTable drop_incomplete(const RawTable& t) {
    RawTable out;
    out.column_names = t.column_names;
    out.column_types = t.column_types;
    for (const auto& row : t.rows)
        if (std::none_of(row.begin(), row.end(), is_missing)) out.rows.push_back(row);
    if (out.rows.empty()) throw InputError("no complete records remain after removing missing values");
    return out;
}

std::string to_string(Task t) { return t == Task::binary ? "binary" : "multiclass"; }

Task task_from_string(const std::string& s) {
    if (s == "binary") return Task::binary;
    if (s == "multiclass") return Task::multiclass;
    throw InputError("unknown task '" + s + "' (expected binary or multiclass)");
}

DataTable encode(const RawTable& t, const Schema& schema) {
    for (const auto& row : t.rows)
        if (std::any_of(row.begin(), row.end(), is_missing))
            throw InputError("encode requires complete records; run drop_incomplete first");

    const auto label_col = schema.label_column.empty() ? std::nullopt : t.column_index(schema.label_column);
    const auto cat_col = t.column_index(schema.category_column);
    if (!cat_col) throw InputError("missing category column '" + schema.category_column + "'");
    if (!schema.label_column.empty() && !label_col)
        throw InputError("missing label column '" + schema.label_column + "'");

    DataTable out;
    const std::size_t n = t.n_rows();

    // Column layout first, then fill.
    struct Source {
        std::size_t raw;
        bool onehot;
        std::vector<std::string> levels;
    };
    std::vector<Source> sources;
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
        const auto& name = t.column_names[c];
        if (c == *cat_col || label_col == c || contains(schema.id_columns, name)) continue;
        const bool categorical = t.column_types[c] == CellType::text || contains(schema.categorical_columns, name);
        if (!categorical) {
            sources.push_back({c, false, {}});
            out.specs.push_back({name, ColumnKind::numeric, ""});
            continue;
        }
        std::set<std::string> levels;
        for (const auto& row : t.rows) levels.insert(format_category(row[c]));
        if (levels.size() == 1)
            std::cerr << "warning: categorical column '" << name << "' has a single level; emitting a constant indicator\n";
        Source s{c, true, {levels.begin(), levels.end()}};
        for (const auto& lv : s.levels) out.specs.push_back({name + "=" + lv, ColumnKind::numeric, name});
        sources.push_back(std::move(s));
    }

    out.matrix = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(out.specs.size()));
    Eigen::Index col = 0;
    for (const auto& s : sources) {
        if (!s.onehot) {
            for (std::size_t r = 0; r < n; ++r) out.matrix(static_cast<Eigen::Index>(r), col) = std::get<double>(t.rows[r][s.raw]);
            ++col;
            continue;
        }
        for (std::size_t r = 0; r < n; ++r) {
            const auto lv = format_category(t.rows[r][s.raw]);
            const auto pos = std::lower_bound(s.levels.begin(), s.levels.end(), lv) - s.levels.begin();
            out.matrix(static_cast<Eigen::Index>(r), col + pos) = 1.0;
        }
        col += static_cast<Eigen::Index>(s.levels.size());
    }

    std::set<std::string> cats;
    for (const auto& row : t.rows) {
        const auto name = format_category(row[*cat_col]);
        if (name.empty()) throw InputError("empty attack category in column '" + schema.category_column + "'");
        cats.insert(name);
    }
    out.class_names = order_classes(cats);

    out.y_binary.resize(static_cast<Eigen::Index>(n));
    out.y_multi.resize(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const auto name = format_category(t.rows[r][*cat_col]);
        const auto pos = std::find(out.class_names.begin(), out.class_names.end(), name) - out.class_names.begin();
        out.y_multi(static_cast<Eigen::Index>(r)) = static_cast<int>(pos);
        int bin;
        if (label_col) {
            const auto* v = std::get_if<double>(&t.rows[r][*label_col]);
            if (!v || (*v != 0.0 && *v != 1.0))
                throw InputError("label column '" + schema.label_column + "' must hold 0/1 values");
            bin = static_cast<int>(*v);
        } else {
            bin = name == "Normal" ? 0 : 1;
        }
        out.y_binary(static_cast<Eigen::Index>(r)) = bin;
    }
    return out;
}

std::vector<std::string> DataTable::feature_names() const {
    std::vector<std::string> names;
    names.reserve(specs.size());
    for (const auto& s : specs) names.push_back(s.name);
    return names;
}

std::vector<FeatureGroup> DataTable::groups() const {
    std::vector<FeatureGroup> out;
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(specs.size()); ++c) {
        const auto& s = specs[static_cast<std::size_t>(c)];
        const bool onehot = !s.onehot_group.empty();
        const std::string& gname = onehot ? s.onehot_group : s.name;
        if (onehot && !out.empty() && out.back().onehot && out.back().name == gname) {
            out.back().columns.push_back(c);
        } else {
            out.push_back({gname, {c}, onehot});
        }
    }
    return out;
}

DataTable DataTable::take_rows(const IndexList& rows) const {
    DataTable out;
    out.specs = specs;
    out.class_names = class_names;
    const auto n = static_cast<Eigen::Index>(rows.size());
    out.matrix.resize(n, matrix.cols());
    out.y_binary.resize(n);
    out.y_multi.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = rows[static_cast<std::size_t>(i)];
        out.matrix.row(i) = matrix.row(r);
        out.y_binary(i) = y_binary(r);
        out.y_multi(i) = y_multi(r);
    }
    return out;
}

namespace {

DataTable select_columns(const DataTable& t, const std::vector<FeatureGroup>& keep) {
    DataTable out;
    out.class_names = t.class_names;
    out.y_binary = t.y_binary;
    out.y_multi = t.y_multi;
    std::vector<Eigen::Index> cols;
    for (const auto& g : keep)
        for (auto c : g.columns) cols.push_back(c);
    out.matrix.resize(t.n_rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.specs.push_back(t.specs[static_cast<std::size_t>(cols[j])]);
        out.matrix.col(static_cast<Eigen::Index>(j)) = t.matrix.col(cols[j]);
    }
    return out;
}

}  // namespace

DataTable DataTable::keep_groups(const std::vector<std::string>& names) const {
    const auto all = groups();
    for (const auto& n : names)
        if (std::none_of(all.begin(), all.end(), [&](const FeatureGroup& g) { return g.name == n; }))
            throw InputError("unknown feature group '" + n + "'");
    std::vector<FeatureGroup> keep;
    for (const auto& g : all)
        if (contains(names, g.name)) keep.push_back(g);
    return select_columns(*this, keep);
}

DataTable DataTable::drop_groups(const std::vector<std::string>& names) const {
    const auto all = groups();
    for (const auto& n : names)
        if (std::none_of(all.begin(), all.end(), [&](const FeatureGroup& g) { return g.name == n; }))
            throw InputError("unknown feature group '" + n + "'");
    std::vector<FeatureGroup> keep;
    for (const auto& g : all)
        if (!contains(names, g.name)) keep.push_back(g);
    if (keep.empty()) throw InputError("removing the requested groups leaves no features");
    return select_columns(*this, keep);
}

SplitIndices split(Eigen::Index n_rows, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("split ratio must lie strictly between 0 and 1");
    if (n_rows < 2) throw InputError("split needs at least 2 rows");
    const auto n_train = static_cast<Eigen::Index>(std::llround(ratio * static_cast<double>(n_rows)));
    if (n_train <= 0 || n_train >= n_rows)
        throw InputError("split ratio " + std::to_string(ratio) + " leaves an empty train or test set");
    Rng rng(seed);
    auto perm = rng.permutation(n_rows);
    SplitIndices s;
    s.seed = seed;
    s.ratio = ratio;
    s.train_idx.assign(perm.begin(), perm.begin() + n_train);
    s.test_idx.assign(perm.begin() + n_train, perm.end());
    std::sort(s.train_idx.begin(), s.train_idx.end());
    std::sort(s.test_idx.begin(), s.test_idx.end());
    return s;
}

ScalerParams fit_scaler(const DataTable& t, const SplitIndices& idx) {
    const auto d = t.n_features();
    ScalerParams p{Vector::Zero(d), Vector::Ones(d)};
    if (idx.train_idx.empty()) throw InputError("fit_scaler needs at least one training row");
    for (Eigen::Index c = 0; c < d; ++c) {
        if (!t.specs[static_cast<std::size_t>(c)].onehot_group.empty()) continue;
        double lo = t.matrix(idx.train_idx.front(), c);
        double hi = lo;
        for (auto r : idx.train_idx) {
            lo = std::min(lo, t.matrix(r, c));
            hi = std::max(hi, t.matrix(r, c));
        }
        p.min(c) = lo;
        p.max(c) = hi;
    }
    return p;
}

DataTable apply_scaler(const DataTable& t, const ScalerParams& p) {
    if (p.min.size() != t.n_features()) throw LayoutError("scaler width does not match table width");
    DataTable out = t;
    for (Eigen::Index c = 0; c < t.n_features(); ++c)
        for (Eigen::Index r = 0; r < t.n_rows(); ++r)
            out.matrix(r, c) = scale_value(t.matrix(r, c), p.min(c), p.max(c));
    return out;
}

std::vector<std::pair<std::string, double>> class_distribution(const DataTable& t) {
    std::vector<std::pair<std::string, double>> out;
    if (t.y_multi.size() == 0) return out;
    std::vector<long> counts(t.class_names.size(), 0);
    for (Eigen::Index i = 0; i < t.y_multi.size(); ++i) ++counts[static_cast<std::size_t>(t.y_multi(i))];
    const double n = static_cast<double>(t.y_multi.size());
    for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] > 0) out.emplace_back(t.class_names[k], static_cast<double>(counts[k]) / n);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return out;
}

PreparedData prepare(const RawTable& raw, const Schema& schema, double ratio, std::uint64_t seed) {
    PreparedData p;
    const DataTable encoded = encode(drop_incomplete(raw), schema);
    p.split = split(encoded.n_rows(), ratio, seed);
    p.scaler = fit_scaler(encoded, p.split);
    p.table = apply_scaler(encoded, p.scaler);
    return p;
}

}  // namespace xids
