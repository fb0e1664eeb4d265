#include "doctest.h"

#include <fstream>
#include <set>

#include "cleanbench/tabular.hpp"
#include "test_util.hpp"

using namespace cleanbench;

TEST_CASE("load_csv parses header and infers numeric columns") {
    auto dir = testutil::scratch_dir("load");
    {
        std::ofstream out(dir / "small.csv");
        out << "a,b\n1,x\n2,y\n3,z\n";
    }
    Dataset ds = load_csv(dir / "small.csv");
    CHECK(ds.row_count() == 3);
    CHECK(ds.col_count() == 2);
    CHECK(ds.column(0).declared_type == ColumnType::numeric);
    CHECK(ds.column(1).declared_type == ColumnType::categorical);
    CHECK(ds.name() == "small");
    CHECK(ds.cell(2, 0).parsed == 3.0);
}

TEST_CASE("NaN and other null tokens are empty") {
    Dataset ds = testutil::csv("a,b\n1,NaN\n,2\nNA,?\n");
    CHECK(ds.cell(0, 1).is_empty);
    CHECK_FALSE(ds.cell(0, 1).parsed);
    CHECK(ds.cell(1, 0).is_empty);
    CHECK(ds.cell(2, 0).is_empty);
    CHECK(ds.cell(2, 1).is_empty);
    CHECK_FALSE(ds.cell(0, 0).is_empty);
}

TEST_CASE("numeric inference at exactly 90 percent") {
    Dataset ds = testutil::csv("v\n1\n2\nx\n4\n5\n6\n7\n8\n9\n10\n");
    CHECK(ds.column(0).declared_type == ColumnType::numeric);
    CHECK(ds.metadata().at("inference_ratio.v") == "0.9");
    CHECK_FALSE(ds.cell(2, 0).parsed);
    CHECK_FALSE(ds.cell(2, 0).is_empty);

    Dataset below = testutil::csv("v\n1\n2\nx\ny\n5\n6\n7\n8\n9\n10\n");
    CHECK(below.column(0).declared_type == ColumnType::categorical);
}

TEST_CASE("declared schema overrides inference") {
    CsvOptions opts;
    opts.schema["a"] = ColumnType::text;
    Dataset ds = testutil::csv("a,b\n1,2\n", opts);
    CHECK(ds.column(0).declared_type == ColumnType::text);
    opts.schema["missing"] = ColumnType::numeric;
    CHECK_THROWS_AS(testutil::csv("a,b\n1,2\n", opts), InputError);
}

TEST_CASE("load_csv error paths") {
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), InputError);
    CHECK_THROWS_AS(testutil::csv("a,b\n1,2,3\n"), InputError);
    CHECK_THROWS_AS(testutil::csv("a,a\n1,2\n"), InputError);
    CHECK_THROWS_AS(testutil::csv("a,b\n\"open,2\n"), InputError);
}

TEST_CASE("RFC-4180 quoting") {
    Dataset ds = testutil::csv("name,note\n\"Smith, J\",\"said \"\"hi\"\"\"\nx,\"multi\nline\"\n");
    CHECK(ds.cell(0, 0).raw == "Smith, J");
    CHECK(ds.cell(0, 1).raw == "said \"hi\"");
    CHECK(ds.cell(1, 1).raw == "multi\nline");
    CHECK(write_csv_field("a,b") == "\"a,b\"");
    CHECK(write_csv_field("plain") == "plain");
    CHECK(write_csv_field("") == "");
}

TEST_CASE("save_csv then load_csv reproduces raw text") {
    auto dir = testutil::scratch_dir("roundtrip");
    Dataset ds = testutil::csv("a,b,c\n1,\"x,y\",\n2.50,\"q\"\"uote\",NaN\n,z,\"line\nbreak\"\n");
    save_csv(ds, dir / "out.csv");
    Dataset back = load_csv(dir / "out.csv");
    REQUIRE(back.row_count() == ds.row_count());
    REQUIRE(back.col_count() == ds.col_count());
    for (std::size_t r = 0; r < ds.row_count(); ++r)
        for (std::size_t c = 0; c < ds.col_count(); ++c) CHECK(back.cell(r, c).raw == ds.cell(r, c).raw);

    std::ifstream in(dir / "out.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(first == "1,\"x,y\",");
}

TEST_CASE("round trip property on random text cells") {
    std::mt19937_64 rng(11);
    const std::string alphabet = "ab,\"\n 1.-";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1), len(0, 6);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<std::string>> rows(7, std::vector<std::string>(3));
        for (auto& row : rows)
            for (auto& cell : row) {
                std::size_t n = len(rng);
                for (std::size_t i = 0; i < n; ++i) cell.push_back(alphabet[pick(rng)]);
            }
        Dataset ds = make_dataset("r", {"x", "y", "z"}, rows);
        Dataset back = dataset_from_csv_text(to_csv_text(ds), "r");
        REQUIRE(back.row_count() == ds.row_count());
        for (std::size_t r = 0; r < ds.row_count(); ++r)
            for (std::size_t c = 0; c < ds.col_count(); ++c) CHECK(back.cell(r, c).raw == ds.cell(r, c).raw);
    }
}

TEST_CASE("diff_cells") {
    Dataset gt = testutil::csv("a,b\n5,x\n6,y\n");
    CHECK(diff_cells(gt, gt).empty());

    Dataset edited = gt;
    edited.set_raw(0, 1, "q");
    auto mask = diff_cells(gt, edited);
    REQUIRE(mask.size() == 1);
    CHECK(mask.cells()[0] == CellRef{0, 1});

    Dataset reformatted = gt;
    reformatted.set_raw(0, 0, "5.0");
    CHECK(diff_cells(gt, reformatted).contains({0, 0}));

    Dataset other = testutil::csv("a,b\n5,x\n");
    CHECK_THROWS_AS(diff_cells(gt, other), InputError);
    Dataset renamed = testutil::csv("a,c\n5,x\n6,y\n");
    CHECK_THROWS_AS(diff_cells(gt, renamed), InputError);
}

TEST_CASE("split is a deterministic partition") {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 100; ++i) rows.push_back({std::to_string(i)});
    Dataset ds = make_dataset("d", {"v"}, rows);

    auto [train, test] = split(ds, {0.2, 42});
    CHECK(train.row_count() == 80);
    CHECK(test.row_count() == 20);

    std::set<std::size_t> ids;
    for (auto id : train.row_ids()) ids.insert(id);
    for (auto id : test.row_ids()) CHECK(ids.insert(id).second);
    CHECK(ids.size() == 100);

    auto again = split_indices(100, {0.2, 42});
    auto first = split_indices(100, {0.2, 42});
    CHECK(again.test == first.test);
    auto other = split_indices(100, {0.2, 43});
    CHECK(other.test != first.test);
}

TEST_CASE("split rejects degenerate partitions") {
    CHECK_THROWS_AS(split_indices(1, {0.5, 1}), InputError);
    CHECK_THROWS_AS(split_indices(10, {0.01, 1}), InputError);
    CHECK_THROWS_AS(split_indices(10, {0.99, 1}), InputError);
    CHECK_THROWS_AS(split_indices(10, {0.0, 1}), InputError);
}

TEST_CASE("mask files round trip and operations") {
    DetectionMask m({{2, 1}, {0, 0}, {2, 1}, {1, 3}}, "sd");
    CHECK(m.size() == 3);
    CHECK(m.cells().front() == CellRef{0, 0});
    CHECK(to_mask_text(m) == "0,0,sd\n1,3,sd\n2,1,sd\n");
    auto dir = testutil::scratch_dir("mask");
    save_mask(m, dir / "m.mask");
    DetectionMask back = load_mask(dir / "m.mask");
    CHECK(back == m);
    CHECK(back.source() == "sd");

    DetectionMask other({{1, 3}, {4, 4}}, "iqr");
    CHECK(m.intersect(other).size() == 1);
    CHECK(m.unite(other).size() == 4);
    CHECK(m.subtract(other).size() == 2);
    CHECK(m.rows() == std::vector<std::size_t>{0, 1, 2});
    CHECK_THROWS_AS(m.check_bounds(2, 4), InputError);
    CHECK_THROWS_AS(mask_from_text("x,1,a\n"), InputError);
}

TEST_CASE("row ids follow selected and appended rows") {
    Dataset ds = testutil::csv("a\n1\n2\n3\n");
    ds.append_row_copy(1, 3);
    CHECK(ds.row_count() == 4);
    CHECK(ds.cell(3, 0).raw == "2");
    std::vector<std::size_t> pick{3, 0};
    Dataset sub = ds.select_rows(pick);
    CHECK(sub.row_ids() == std::vector<std::size_t>{3, 0});
}
