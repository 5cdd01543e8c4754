#ifndef XIDS_DATA_HPP
#define XIDS_DATA_HPP

#include "xids/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace xids {

// ---------------------------------------------------------------------------
// Raw CSV ingestion
// ---------------------------------------------------------------------------

using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

enum class CellType { numeric, text };

struct RawTable {
    std::vector<std::string> column_names;
    std::vector<CellType> column_types;
    std::vector<std::vector<Cell>> rows;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return column_names.size(); }
    std::optional<std::size_t> column_index(const std::string& name) const;
};

/// Column roles for ingestion. Anything not named here is a feature whose
/// kind (numeric vs categorical) is inferred from its cells.
struct Schema {
    std::string label_column = "label";
    std::string category_column = "attack_cat";
    std::vector<std::string> id_columns = {"id"};
    std::vector<std::string> categorical_columns;
};

/// Reads `key = value` lines: label, category, id (comma list), categorical (comma list).
/// Blank lines and lines starting with '#' are ignored.
Schema load_schema(const std::string& path);
Schema parse_schema(std::istream& in);

RawTable load_csv(const std::string& path, const Schema& schema);
RawTable parse_csv(std::istream& in, const Schema& schema, const std::string& source = "<stream>");

// Splits one RFC-4180 record. Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields);

RawTable drop_incomplete(const RawTable& t);

// ---------------------------------------------------------------------------
// Encoded tables
// ---------------------------------------------------------------------------

enum class ColumnKind { numeric, categorical, binary_label, multiclass_label, id };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::string onehot_group;  // source column of an indicator; empty otherwise
};

/// The encoded columns originating from one source feature.
struct FeatureGroup {
    std::string name;
    std::vector<Eigen::Index> columns;
    bool onehot = false;
};

enum class Task { binary, multiclass };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct DataTable {
    std::vector<ColumnSpec> specs;  // one per matrix column
    Matrix matrix;
    Labels y_binary;  // 1 = intrusive
    Labels y_multi;
    std::vector<std::string> class_names;

    Eigen::Index n_rows() const { return matrix.rows(); }
    Eigen::Index n_features() const { return matrix.cols(); }

    std::vector<std::string> feature_names() const;
    std::vector<FeatureGroup> groups() const;

    const Labels& labels(Task task) const { return task == Task::binary ? y_binary : y_multi; }
    int class_count(Task task) const { return task == Task::binary ? 2 : static_cast<int>(class_names.size()); }

    DataTable take_rows(const IndexList& rows) const;
    DataTable keep_groups(const std::vector<std::string>& names) const;
    DataTable drop_groups(const std::vector<std::string>& names) const;
};

/// One-hot encodes categoricals, derives both label vectors, drops id columns.
/// Indicator levels and class names are ordered lexicographically, except that
/// "Normal" is always class 0 when present.
DataTable encode(const RawTable& t, const Schema& schema);

struct ScalerParams {
    Vector min;
    Vector max;
};

struct SplitIndices {
    IndexList train_idx;
    IndexList test_idx;
    std::uint64_t seed = 0;
    double ratio = 0.8;
};

SplitIndices split(Eigen::Index n_rows, double ratio, std::uint64_t seed);

/// Learns per-column (min, max) from the training rows. Indicator columns
/// receive the identity range (0, 1).
ScalerParams fit_scaler(const DataTable& t, const SplitIndices& idx);
DataTable apply_scaler(const DataTable& t, const ScalerParams& p);

/// Min-max maps one value; constant ranges map to 0 and results are clamped to [0,1].
inline double scale_value(double v, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    const double s = (v - lo) / (hi - lo);
    return s < 0.0 ? 0.0 : (s > 1.0 ? 1.0 : s);
}

/// Per-class fractions of y_multi, sorted by fraction descending (ties by name).
std::vector<std::pair<std::string, double>> class_distribution(const DataTable& t);

/// A scaled table together with the split that produced its scaler.
struct PreparedData {
    DataTable table;
    SplitIndices split;
    ScalerParams scaler;

    DataTable train() const { return table.take_rows(split.train_idx); }
    DataTable test() const { return table.take_rows(split.test_idx); }
};

/// drop_incomplete -> encode -> split -> fit_scaler(train) -> apply_scaler.
PreparedData prepare(const RawTable& raw, const Schema& schema, double ratio, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic surrogate
// ---------------------------------------------------------------------------

struct SyntheticConfig {
    std::size_t n_rows = 10000;
    std::size_t n_informative = 3;
    std::size_t n_noise = 12;
    std::size_t n_categorical = 0;
    std::uint64_t seed = 42;
    // When set, every informative column is a noisy copy of one latent signal
    // instead of an independent summand.
    bool redundant = false;
    double label_noise = 0.01;
};

/// Flow-like records with a planted label rule. The intrusive label is
/// `latent > 0.5`, where latent is the mean of the informative columns (or the
/// shared signal in redundant mode); attack categories band the latent score.
/// The first informative column is named "sttl".
RawTable make_synthetic(const SyntheticConfig& cfg);

/// Names make_synthetic gives its informative and noise source columns.
std::vector<std::string> synthetic_informative_names(std::size_t n_informative);
std::vector<std::string> synthetic_noise_names(std::size_t n_noise);

}  // namespace xids

#endif  // XIDS_DATA_HPP
