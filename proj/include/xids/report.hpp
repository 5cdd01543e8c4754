#ifndef XIDS_REPORT_HPP
#define XIDS_REPORT_HPP

#include "xids/canonical_json.hpp"
#include "xids/experiments.hpp"

#include <string>
#include <vector>

namespace xids {

enum class FigureKind { bar, grouped_bar, heatmap, distribution };

std::string to_string(FigureKind k);

struct Series {
    std::string name;
    std::vector<double> values;
};

/// bar: one series over `categories`. grouped_bar: several series over the
/// same categories. heatmap: one series per row, square, labelled by
/// `categories`. distribution: one series of shares that sum to about 1.
struct FigureSpec {
    FigureKind kind = FigureKind::bar;
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> categories;
    std::vector<Series> series;
};

/// Throws InputError on inconsistent lengths or non-finite values.
void validate(const FigureSpec& f);

/// Standalone SVG 1.1 document. Bars use a linear scale anchored at 0.
std::string render_svg(const FigureSpec& f);

std::string xml_escape(const std::string& s);

// Figure builders for the report families.
FigureSpec distribution_figure(const std::vector<std::pair<std::string, double>>& shares, const std::string& title);
FigureSpec sensitivity_figure(const ExperimentResult& r);
FigureSpec correlation_figure(const CorrelationReport& c);
FigureSpec selection_figure(const FeatureSelection& s);
FigureSpec masking_figure(const ExperimentResult& r);
FigureSpec retrain_figure(const ExperimentResult& r);
FigureSpec overhead_figure(const OverheadReport& o, bool predict);

/// A CSV table: fixed header plus string cells (numbers pre-formatted).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const CsvTable& t);
CsvTable sensitivity_table(const ExperimentResult& r);
CsvTable masking_table(const ExperimentResult& r);
CsvTable retrain_table(const ExperimentResult& r);
CsvTable overhead_table(const OverheadReport& o);
CsvTable selection_table(const FeatureSelection& s);
CsvTable correlation_table(const CorrelationReport& c);
CsvTable distribution_table(const std::vector<std::pair<std::string, double>>& shares);

std::string sha256_hex(const std::string& bytes);

struct BundleFile {
    std::string path;  // relative to the bundle directory
    std::string sha256;
    bool timing = false;  // content depends on wall-clock measurements
};

struct Bundle {
    std::string dir;
    std::vector<BundleFile> files;
    Json manifest;
};

inline constexpr const char* kToolkitVersion = "1.0.0";

/// Writes manifest.json and one directory per result:
///   NN_<experiment>_<task>/result.json, tables/*.csv, figures/*.svg
Bundle write_bundle(const std::vector<ExperimentResult>& results, const std::string& dir);

/// Re-hashes every manifest entry; throws InputError on a missing file or a
/// hash mismatch.
void verify_bundle(const std::string& dir);

/// Results stored in a bundle, in manifest order.
std::vector<ExperimentResult> load_bundle(const std::string& dir);

/// Manifest with the hashes of timing-dependent files removed, for rerun
/// comparisons.
Json stable_manifest(const Json& manifest);

}  // namespace xids

#endif  // XIDS_REPORT_HPP
