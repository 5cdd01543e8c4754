#include "test_util.hpp"
#include "xml_check.hpp"
#include "xids/report.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <regex>
#include <sstream>

using namespace xids;
namespace fs = std::filesystem;

namespace {

// Attribute values of every element carrying `marker`.
std::vector<std::map<std::string, std::string>> elements_with(const std::string& svg, const std::string& marker) {
    std::vector<std::map<std::string, std::string>> out;
    const std::regex tag("<rect [^>]*" + marker + "[^>]*>");
    const std::regex attr("([a-z-]+)=\"([^\"]*)\"");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tag); it != std::sregex_iterator(); ++it) {
        const std::string t = it->str();
        std::map<std::string, std::string> m;
        for (auto a = std::sregex_iterator(t.begin(), t.end(), attr); a != std::sregex_iterator(); ++a) m[(*a)[1]] = (*a)[2];
        out.push_back(m);
    }
    return out;
}

ExperimentSpec tiny(ExperimentName n, Task t = Task::binary) {
    ExperimentSpec s;
    s.name = n;
    s.task = t;
    s.kinds = {ModelKind::DecisionTree, ModelKind::KNN};
    SyntheticConfig c;
    c.n_rows = 700;
    c.n_noise = 3;
    c.n_categorical = 1;
    c.seed = 2;
    s.source.synthetic = c;
    s.seed = 2;
    return s;
}

}  // namespace

TEST_CASE("canonical JSON: sorted keys, float formatting and a dump-parse-dump fixed point") {
    Json j = {{"b", 1}, {"a", {{"z", 0.1}, {"y", std::vector<double>{1.0, 2.5, 1e-300}}}}, {"c", "text"}};
    const std::string once = canonical_dump(j);
    CHECK(once.find("\"a\"") < once.find("\"b\""));
    CHECK(once.find("0.10000000000000001") != std::string::npos);
    CHECK(canonical_dump(Json::parse(once)) == once);
    CHECK(format_double(1.0) == "1.0");
    CHECK(format_double(0.5) == "0.5");
    CHECK(std::stod(format_double(0.1)) == 0.1);
    CHECK(canonical_dump(Json(std::numeric_limits<double>::quiet_NaN())).rfind("null", 0) == 0);

    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const double v = std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng.below(200)) - 100);
        CHECK(std::stod(format_double(v)) == v);
        const std::string d = canonical_dump(Json{{"v", v}});
        CHECK(canonical_dump(Json::parse(d)) == d);
    }
}

TEST_CASE("strip_timing drops every key mentioning seconds") {
    const Json j = {{"train_seconds", 1.0}, {"keep", {{"predict_seconds_per_1000", 2.0}, {"epochs", 3}}}, {"list", {{{"seconds", 1}}}}};
    const Json s = strip_timing(j);
    CHECK_FALSE(s.contains("train_seconds"));
    CHECK(s["keep"].size() == 1);
    CHECK(s["list"][0].empty());
}

TEST_CASE("bar heights use a linear scale anchored at zero") {
    FigureSpec f;
    f.kind = FigureKind::bar;
    f.title = "two bars";
    f.categories = {"a", "b"};
    f.series = {{"", {1.0, 2.0}}};
    const std::string svg = render_svg(f);
    const auto bars = elements_with(svg, "class=\"bar\"");
    REQUIRE(bars.size() == 2);
    const double h1 = std::stod(bars[0].at("height")), h2 = std::stod(bars[1].at("height"));
    CHECK(h2 == 2.0 * h1);
    // Both bars sit on the same baseline.
    CHECK(std::stod(bars[0].at("y")) + h1 == std::stod(bars[1].at("y")) + h2);
}

TEST_CASE("property: bar heights are proportional to |value| for random series") {
    Rng rng(8);
    for (int t = 0; t < 30; ++t) {
        FigureSpec f;
        f.kind = FigureKind::grouped_bar;
        f.title = "random";
        const int n = 1 + static_cast<int>(rng.below(8));
        for (int i = 0; i < n; ++i) f.categories.push_back("g" + std::to_string(i));
        for (int s = 0; s < 3; ++s) {
            Series ser{"s" + std::to_string(s), {}};
            for (int i = 0; i < n; ++i) ser.values.push_back(rng.uniform(-0.2, 1.0));
            f.series.push_back(ser);
        }
        const std::string svg = render_svg(f);
        CHECK(test::xml_problem(svg).empty());
        const auto bars = elements_with(svg, "class=\"bar\"");
        REQUIRE(bars.size() == static_cast<std::size_t>(3 * n));
        double ratio = -1;
        for (const auto& b : bars) {
            const double v = std::stod(b.at("data-value"));
            if (std::abs(v) < 1e-9) continue;
            const double r = std::stod(b.at("height")) / std::abs(v);
            if (ratio < 0) ratio = r;
            CHECK(r == doctest::Approx(ratio).epsilon(1e-12));
        }
    }
}

TEST_CASE("heatmap fills are symmetric for a symmetric matrix") {
    const PreparedData p = test::synthetic_data(500, 4, 3, 3, 1);
    const CorrelationReport c = correlation_matrix(p.train());
    const std::string svg = render_svg(correlation_figure(c));
    CHECK(test::xml_problem(svg).empty());
    std::map<std::pair<int, int>, std::string> fill;
    for (const auto& cell : elements_with(svg, "class=\"cell\""))
        fill[{std::stoi(cell.at("data-row")), std::stoi(cell.at("data-col"))}] = cell.at("fill");
    const int n = static_cast<int>(c.feature_names.size());
    REQUIRE(fill.size() == static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) CHECK(fill[{i, j}] == fill[{j, i}]);
}

TEST_CASE("distribution figure labels carry two-decimal percentages") {
    const std::vector<std::pair<std::string, double>> shares = {
        {"Normal", 0.4866}, {"Generic", 0.2401}, {"Fuzzers", 0.1994}, {"Exploits", 0.05}, {"Other", 0.0239}};
    const std::string svg = render_svg(distribution_figure(shares, "Classes"));
    CHECK(test::xml_problem(svg).empty());
    for (const char* label : {">Normal<", ">48.66%<", ">Generic<", ">24.01%<", ">Fuzzers<", ">19.94%<"})
        CHECK(svg.find(label) != std::string::npos);
}

TEST_CASE("figure validation") {
    FigureSpec f;
    f.categories = {"a", "b"};
    f.series = {{"", {1.0}}};
    CHECK_THROWS_AS(render_svg(f), InputError);
    f.series = {{"", {1.0, std::numeric_limits<double>::infinity()}}};
    CHECK_THROWS_AS(render_svg(f), InputError);
    f.series = {{"", {1.0, std::nan("")}}};
    CHECK_THROWS_AS(render_svg(f), InputError);
    f.kind = FigureKind::distribution;
    f.series = {{"", {0.5, -0.1}}};
    CHECK_THROWS_AS(render_svg(f), InputError);
    f.kind = FigureKind::heatmap;
    f.series = {{"", {0.5, 0.1}}};
    CHECK_THROWS_AS(render_svg(f), InputError);
}

TEST_CASE("titles and labels are escaped") {
    FigureSpec f;
    f.title = "a < b & \"c\"";
    f.categories = {"x<y"};
    f.series = {{"s&t", {0.3}}};
    const std::string svg = render_svg(f);
    CHECK(test::xml_problem(svg).empty());
    CHECK(svg.find("a &lt; b &amp; &quot;c&quot;") != std::string::npos);
}

TEST_CASE("an empty result list gives a valid manifest with no experiments") {
    const auto dir = test::scratch("bundle_empty");
    const Bundle b = write_bundle({}, dir.string());
    CHECK(b.files.empty());
    const Json m = Json::parse(test::read_file(dir / "manifest.json"));
    CHECK(m["experiments"].empty());
    CHECK(m["toolkit_version"] == kToolkitVersion);
    verify_bundle(dir.string());
    CHECK(load_bundle(dir.string()).empty());
}

TEST_CASE("one sensitivity result emits one json, one csv and one svg") {
    const auto dir = test::scratch("bundle_one");
    const ExperimentResult r = run_experiment(tiny(ExperimentName::full_sensitivity));
    const Bundle b = write_bundle({r}, dir.string());
    int json = 0, csv = 0, svg = 0;
    for (const auto& f : b.files) {
        const auto ext = fs::path(f.path).extension();
        json += ext == ".json";
        csv += ext == ".csv";
        svg += ext == ".svg";
    }
    CHECK(json == 1);
    CHECK(csv == 1);
    CHECK(svg == 1);
}

TEST_CASE("bundle files hash, verify, reload and re-render identically") {
    const auto dir = test::scratch("bundle_all");
    std::vector<ExperimentResult> results;
    for (auto n : kAllExperiments) results.push_back(run_experiment(tiny(n, Task::multiclass)));
    const Bundle b = write_bundle(results, dir.string());
    verify_bundle(dir.string());

    const Json m = Json::parse(test::read_file(dir / "manifest.json"));
    CHECK(m["experiments"].size() == results.size());
    REQUIRE(m["files"].size() == b.files.size());
    for (const auto& f : b.files) {
        const std::string content = test::read_file(dir / f.path);
        CHECK(sha256_hex(content) == f.sha256);
        if (fs::path(f.path).extension() == ".svg") CHECK(test::xml_problem(content).empty());
        if (fs::path(f.path).extension() == ".json") CHECK(canonical_dump(Json::parse(content)) == content);
        if (fs::path(f.path).extension() == ".csv") {
            Schema any;
            any.label_column.clear();
            any.category_column.clear();
            any.id_columns.clear();
            const RawTable t = load_csv((dir / f.path).string(), any);
            CHECK(t.n_rows() > 0);
        }
    }

    // Re-rendering from the stored results reproduces every non-timing file.
    const auto again = test::scratch("bundle_again");
    const Bundle b2 = write_bundle(load_bundle(dir.string()), again.string());
    REQUIRE(b2.files.size() == b.files.size());
    for (std::size_t i = 0; i < b.files.size(); ++i) CHECK(b2.files[i].sha256 == b.files[i].sha256);
    CHECK(canonical_dump(stable_manifest(b2.manifest)) == canonical_dump(stable_manifest(b.manifest)));

    // Tampering is detected.
    const auto victim = dir / b.files.back().path;
    test::write_file(victim, test::read_file(victim) + " ");
    CHECK_THROWS_AS(verify_bundle(dir.string()), InputError);
}

TEST_CASE("csv quoting survives the project's own parser") {
    CsvTable t{{"name", "value"}, {{"a,b", "1.0"}, {"say \"x\"", "2.0"}}};
    std::istringstream in(to_csv(t));
    Schema any;
    any.label_column.clear();
    any.category_column.clear();
    const RawTable r = parse_csv(in, any);
    REQUIRE(r.n_rows() == 2);
    CHECK(std::get<std::string>(r.rows[0][0]) == "a,b");
    CHECK(std::get<std::string>(r.rows[1][0]) == "say \"x\"");
    CHECK(std::get<double>(r.rows[1][1]) == 2.0);
}

TEST_CASE("sha256 known answers") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("the xml checker itself rejects malformed documents") {
    CHECK(test::xml_problem("<a><b/></a>").empty());
    CHECK_FALSE(test::xml_problem("<a><b></a>").empty());
    CHECK_FALSE(test::xml_problem("<a x=1/>").empty());
    CHECK_FALSE(test::xml_problem("<a>&nbsp;</a>").empty());
    CHECK_FALSE(test::xml_problem("<a/><b/>").empty());
}
