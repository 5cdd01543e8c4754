#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

using namespace xids;

namespace {

const char* kSmallCsv =
    "id,dur,proto,sbytes,attack_cat,label\n"
    "1,0.5,tcp,100,Normal,0\n"
    "2,1.5,udp,200,Exploits,1\n"
    "3,2.5,tcp,-,Generic,1\n"
    "4,3.5,\"ud,p\",400,Normal,0\n"
    "5,4.5,arp,500,Fuzzers,1\n"
    "6,5.5,tcp,600,Generic,1\n";

RawTable small_table() {
    std::istringstream in(kSmallCsv);
    return parse_csv(in, Schema{});
}

}  // namespace

TEST_CASE("csv records honour quotes, escaped quotes and embedded newlines") {
    std::istringstream in("a,\"b,c\",\"say \"\"hi\"\"\",\"two\nlines\"\nx,y,z,w\n");
    std::vector<std::string> f;
    REQUIRE(read_csv_record(in, f));
    CHECK(f == std::vector<std::string>{"a", "b,c", "say \"hi\"", "two\nlines"});
    REQUIRE(read_csv_record(in, f));
    CHECK(f.size() == 4);
    CHECK_FALSE(read_csv_record(in, f));
}

TEST_CASE("column types follow the majority of parsable cells and sentinels read as missing") {
    const RawTable t = small_table();
    REQUIRE(t.n_rows() == 6);
    CHECK(t.column_types[*t.column_index("dur")] == CellType::numeric);
    CHECK(t.column_types[*t.column_index("proto")] == CellType::text);
    CHECK(is_missing(t.rows[2][*t.column_index("sbytes")]));
    CHECK(std::get<std::string>(t.rows[3][*t.column_index("proto")]) == "ud,p");

    std::istringstream nan_in("x,attack_cat,label\nNaN,Normal,0\n1,Normal,0\n2,Generic,1\n");
    const RawTable n = parse_csv(nan_in, Schema{});
    CHECK(is_missing(n.rows[0][0]));
}

TEST_CASE("csv errors name the problem") {
    SUBCASE("missing file") {
        try {
            load_csv("/nonexistent/flows.csv", Schema{});
            FAIL("expected an error");
        } catch (const InputError& e) {
            CHECK(std::string(e.what()).find("/nonexistent/flows.csv") != std::string::npos);
            CHECK(e.exit_code() == 2);
        }
    }
    SUBCASE("ragged row") {
        std::istringstream in("a,attack_cat,label\n1,Normal,0\n2,Normal\n");
        CHECK_THROWS_WITH_AS(parse_csv(in, Schema{}), doctest::Contains("line 3"), InputError);
    }
    SUBCASE("missing label column") {
        std::istringstream in("a,attack_cat\n1,Normal\n");
        CHECK_THROWS_AS(parse_csv(in, Schema{}), InputError);
    }
    SUBCASE("duplicate header") {
        std::istringstream in("a,a,attack_cat,label\n1,2,Normal,0\n");
        CHECK_THROWS_AS(parse_csv(in, Schema{}), InputError);
    }
}

TEST_CASE("schema files set column roles") {
    std::istringstream in("# roles\nlabel = y\ncategory=kind\nid = rowid, ts\n\ncategorical= port\n");
    const Schema s = parse_schema(in);
    CHECK(s.label_column == "y");
    CHECK(s.category_column == "kind");
    CHECK(s.id_columns == std::vector<std::string>{"rowid", "ts"});
    CHECK(s.categorical_columns == std::vector<std::string>{"port"});
    std::istringstream bad("colour = blue\n");
    CHECK_THROWS_AS(parse_schema(bad), InputError);
}

TEST_CASE("drop_incomplete removes rows with any missing cell") {
    const RawTable t = drop_incomplete(small_table());
    CHECK(t.n_rows() == 5);
    for (const auto& row : t.rows) CHECK(std::none_of(row.begin(), row.end(), is_missing));
}

TEST_CASE("encode: one-hot blocks, label vectors and class order") {
    const DataTable d = encode(drop_incomplete(small_table()), Schema{});
    const auto names = d.feature_names();
    CHECK(names == std::vector<std::string>{"dur", "proto=arp", "proto=tcp", "proto=ud,p", "proto=udp", "sbytes"});
    CHECK(d.class_names == std::vector<std::string>{"Normal", "Exploits", "Fuzzers", "Generic"});

    const auto groups = d.groups();
    REQUIRE(groups.size() == 3);
    CHECK(groups[1].name == "proto");
    CHECK(groups[1].onehot);
    CHECK(groups[1].columns == IndexList{1, 2, 3, 4});
    for (Eigen::Index r = 0; r < d.n_rows(); ++r) CHECK(d.matrix.row(r).segment(1, 4).sum() == 1.0);

    CHECK(d.y_binary(0) == 0);
    CHECK(d.y_binary(1) == 1);
    for (Eigen::Index r = 0; r < d.n_rows(); ++r) CHECK((d.y_multi(r) == 0) == (d.y_binary(r) == 0));
}

TEST_CASE("encode rejects labels that are not 0/1") {
    std::istringstream in("x,attack_cat,label\n1,Normal,0\n2,Generic,2\n");
    CHECK_THROWS_AS(encode(parse_csv(in, Schema{}), Schema{}), InputError);
}

TEST_CASE("property: one-hot row sums are 1 for random categorical tables") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::ostringstream csv;
        csv << "a,b,c,attack_cat,label\n";
        const int n = 5 + static_cast<int>(rng.below(40));
        for (int i = 0; i < n; ++i) {
            const bool attack = rng.uniform() < 0.5;
            csv << rng.uniform() << ",L" << rng.below(1 + rng.below(6)) << ",M" << rng.below(3) << ","
                << (attack ? "Exploits" : "Normal") << "," << attack << "\n";
        }
        std::istringstream in(csv.str());
        const DataTable d = encode(parse_csv(in, Schema{}), Schema{});
        for (const auto& g : d.groups()) {
            if (!g.onehot) continue;
            for (Eigen::Index r = 0; r < d.n_rows(); ++r) {
                double s = 0;
                for (auto c : g.columns) s += d.matrix(r, c);
                CHECK(s == 1.0);
            }
        }
    }
}

TEST_CASE("split sizes, disjointness and determinism") {
    for (Eigen::Index n : {5, 10, 101, 1000}) {
        const auto s = split(n, 0.8, 42);
        CHECK(static_cast<Eigen::Index>(s.train_idx.size()) == static_cast<Eigen::Index>(std::llround(0.8 * n)));
        std::vector<Eigen::Index> all = s.train_idx;
        all.insert(all.end(), s.test_idx.begin(), s.test_idx.end());
        std::sort(all.begin(), all.end());
        std::vector<Eigen::Index> expect(static_cast<std::size_t>(n));
        std::iota(expect.begin(), expect.end(), Eigen::Index{0});
        CHECK(all == expect);
        CHECK(std::is_sorted(s.train_idx.begin(), s.train_idx.end()));
        CHECK(split(n, 0.8, 42).train_idx == s.train_idx);
    }
    CHECK(split(1000, 0.8, 1).train_idx != split(1000, 0.8, 2).train_idx);
    CHECK_THROWS_AS(split(10, 1.5, 1), InputError);
    CHECK_THROWS_AS(split(1, 0.8, 1), InputError);
    CHECK_THROWS_AS(split(2, 0.8, 1), InputError);
}

TEST_CASE("property: scaled values stay in [0,1] and training extremes hit 0 and 1") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const PreparedData p = test::synthetic_data(600, seed, 3, 4, 2);
        CHECK(p.table.matrix.minCoeff() >= 0.0);
        CHECK(p.table.matrix.maxCoeff() <= 1.0);
        const DataTable tr = p.train();
        for (Eigen::Index c = 0; c < tr.n_features(); ++c) {
            if (!p.table.specs[static_cast<std::size_t>(c)].onehot_group.empty()) continue;
            if (p.scaler.max(c) > p.scaler.min(c)) {
                CHECK(tr.matrix.col(c).minCoeff() == 0.0);
                CHECK(tr.matrix.col(c).maxCoeff() == 1.0);
            }
        }
    }
}

TEST_CASE("scaler is fit on training rows only") {
    DataTable t;
    t.specs = {{"x", ColumnKind::numeric, ""}};
    t.matrix = Matrix(4, 1);
    t.matrix << 0, 10, 20, 100;
    t.y_binary = Labels::Zero(4);
    t.y_multi = Labels::Zero(4);
    t.class_names = {"Normal"};
    SplitIndices s;
    s.train_idx = {0, 1, 2};
    s.test_idx = {3};
    const ScalerParams p = fit_scaler(t, s);
    CHECK(p.min(0) == 0.0);
    CHECK(p.max(0) == 20.0);
    const DataTable scaled = apply_scaler(t, p);
    CHECK(scaled.matrix(1, 0) == 0.5);
    CHECK(scaled.matrix(3, 0) == 1.0);  // clamped
    CHECK(scale_value(5.0, 3.0, 3.0) == 0.0);
}

TEST_CASE("keep and drop groups") {
    const PreparedData p = test::synthetic_data(300, 5, 3, 2, 1);
    const DataTable t = p.table;
    const DataTable kept = t.keep_groups({"inf1", "proto"});
    CHECK(kept.groups().size() == 2);
    const DataTable dropped = t.drop_groups({"proto"});
    CHECK(dropped.groups().size() == t.groups().size() - 1);
    CHECK_THROWS_AS(t.keep_groups({"nope"}), InputError);
    std::vector<std::string> all;
    for (const auto& g : t.groups()) all.push_back(g.name);
    CHECK_THROWS_AS(t.drop_groups(all), InputError);
}

TEST_CASE("synthetic surrogate layout and determinism") {
    SyntheticConfig c;
    c.n_rows = 500;
    c.n_informative = 3;
    c.n_noise = 4;
    c.n_categorical = 2;
    c.seed = 9;
    const RawTable a = make_synthetic(c);
    const RawTable b = make_synthetic(c);
    CHECK(a.rows == b.rows);
    CHECK(a.n_rows() == 500);
    for (const auto& n : synthetic_informative_names(3)) CHECK(a.column_index(n));
    for (const auto& n : synthetic_noise_names(4)) CHECK(a.column_index(n));
    CHECK(synthetic_informative_names(3).front() == "sttl");
    CHECK(a.column_index("proto"));
    CHECK(a.column_index("service"));

    c.seed = 10;
    CHECK(make_synthetic(c).rows != a.rows);

    // The planted rule: intrusive rows are exactly the non-Normal ones.
    const DataTable d = encode(a, Schema{});
    for (Eigen::Index r = 0; r < d.n_rows(); ++r) CHECK((d.y_multi(r) == 0) == (d.y_binary(r) == 0));
}

TEST_CASE("class distribution sums to one and is sorted") {
    const PreparedData p = test::synthetic_data(1000, 3);
    const auto dist = class_distribution(p.table);
    double total = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        total += dist[i].second;
        if (i) CHECK(dist[i - 1].second >= dist[i].second);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rng streams are reproducible and below() is in range") {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Rng r(1);
    for (int i = 0; i < 1000; ++i) CHECK(r.below(7) < 7);
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    const auto perm = Rng(3).permutation(50);
    std::vector<Eigen::Index> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (Eigen::Index i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}
