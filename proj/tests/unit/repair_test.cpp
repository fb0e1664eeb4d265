#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "cleanbench/inject.hpp"
#include "cleanbench/repair.hpp"
#include "test_util.hpp"

using namespace cleanbench;

namespace {

std::vector<std::string> column_raw(const Dataset& ds, std::size_t c) {
    std::vector<std::string> out;
    for (std::size_t r = 0; r < ds.row_count(); ++r) out.push_back(ds.cell(r, c).raw);
    return out;
}

std::vector<std::vector<std::string>> sorted_rows(const Dataset& ds) {
    std::vector<std::vector<std::string>> rows(ds.row_count());
    for (std::size_t r = 0; r < ds.row_count(); ++r)
        for (std::size_t c = 0; c < ds.col_count(); ++c) rows[r].push_back(ds.cell(r, c).raw);
    std::sort(rows.begin(), rows.end());
    return rows;
}

// Unflagged cells must be raw-identical.
void check_untouched(const Dataset& before, const Dataset& after, const DetectionMask& mask) {
    REQUIRE(before.row_count() == after.row_count());
    for (std::size_t r = 0; r < before.row_count(); ++r)
        for (std::size_t c = 0; c < before.col_count(); ++c)
            if (!mask.contains({r, c})) CHECK(before.cell(r, c).raw == after.cell(r, c).raw);
}

Dataset noisy_table(std::size_t rows, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<std::string>> data;
    for (std::size_t r = 0; r < rows; ++r) {
        double a = normal(rng), b = normal(rng);
        data.push_back({format_number(std::round(a * 1000) / 1000), format_number(std::round(b * 1000) / 1000),
                        format_number(std::round((2 * a - b + 0.1 * normal(rng)) * 1000) / 1000),
                        a > 0 ? "hi" : "lo"});
    }
    return make_dataset("noisy", {"a", "b", "y", "tag"}, data);
}

DetectionMask random_mask(const Dataset& ds, double rate, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution pick(rate);
    std::vector<CellRef> cells;
    for (std::size_t r = 0; r < ds.row_count(); ++r)
        for (std::size_t c = 0; c < ds.col_count(); ++c)
            if (pick(rng)) cells.push_back({r, c});
    return DetectionMask(cells, "random");
}

}  // namespace

TEST_CASE("delete repair") {
    auto ds = testutil::csv("a\n1\n2\n3\n4\n5\n");
    auto same = repair_delete(ds, DetectionMask("none"));
    CHECK(to_csv_text(same.data) == to_csv_text(ds));
    CHECK(same.repaired_cells.empty());

    auto out = repair_delete(ds, DetectionMask({{0, 0}, {3, 0}}, "d"));
    CHECK(column_raw(out.data, 0) == std::vector<std::string>{"2", "3", "5"});
    CHECK(out.data.row_ids() == std::vector<std::size_t>{1, 2, 4});
    CHECK(out.repaired_cells.cells() == std::vector<CellRef>{{0, 0}, {3, 0}});
    CHECK(out.warnings.empty());

    std::vector<CellRef> all;
    for (std::size_t r = 0; r < 5; ++r) all.push_back({r, 0});
    auto none_left = repair_delete(ds, DetectionMask(all, "all"));
    CHECK(none_left.data.row_count() == 0);
    CHECK(none_left.warnings.size() == 1);
}

TEST_CASE("deleting perfectly detected duplicates restores the ground truth rows") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::two_class;
    spec.rows = 120;
    Dataset gt = make_synthetic(spec);
    ErrorProfile profile;
    profile.entries.push_back({ErrorKind::duplicate_row, 0.25});
    auto result = inject(gt, profile, 8);
    REQUIRE(result.pair.dirty.row_count() == 150);
    auto out = repair_delete(result.pair.dirty, result.pair.error_mask);
    CHECK(sorted_rows(out.data) == sorted_rows(gt));
}

TEST_CASE("statistical imputation") {
    CsvOptions opts;
    opts.schema["x"] = ColumnType::numeric;
    auto num = testutil::csv("x\n1\n2\n?\n3\n", opts);
    DetectionMask hole({{2, 0}}, "mvd");
    CHECK(repair_impute_stat(num, hole, RepairKind::mean).data.cell(2, 0).raw == "2");
    CHECK(repair_impute_stat(num, hole, RepairKind::median).data.cell(2, 0).raw == "2");
    auto even = testutil::csv("x\n1\n2\n9\n4\n10\n", opts);
    CHECK(repair_impute_stat(even, DetectionMask({{4, 0}}, "m"), RepairKind::median).data.cell(4, 0).raw == "3");
    auto modal = testutil::csv("x\n5\n3\n5\n3\n0\n", opts);
    CHECK(repair_impute_stat(modal, DetectionMask({{4, 0}}, "m"), RepairKind::mode).data.cell(4, 0).raw == "3");

    auto cat = testutil::csv("c\na\na\nb\n?\n");
    CHECK(repair_impute_stat(cat, DetectionMask({{3, 0}}, "m"), RepairKind::mean).data.cell(3, 0).raw == "a");
    auto tie = testutil::csv("c\nb\na\n?\n");
    CHECK(repair_impute_stat(tie, DetectionMask({{2, 0}}, "m"), RepairKind::mode).data.cell(2, 0).raw == "a");

    // Flagged values are excluded from the statistic even when parseable.
    auto spiked = testutil::csv("x\n1\n3\n1000\n", opts);
    CHECK(repair_impute_stat(spiked, DetectionMask({{2, 0}}, "m"), RepairKind::mean).data.cell(2, 0).raw == "2");

    auto lonely = testutil::csv("x,y\n1,a\n2,b\n", opts);
    auto out = repair_impute_stat(lonely, DetectionMask({{0, 1}, {1, 1}}, "m"), RepairKind::mode);
    CHECK(out.data.cell(0, 1).is_empty);
    CHECK(out.warnings.size() == 1);
}

TEST_CASE("statistical imputation is idempotent and local") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto ds = noisy_table(60, seed);
        auto mask = random_mask(ds, 0.15, seed);
        for (auto stat : {RepairKind::mean, RepairKind::median, RepairKind::mode}) {
            auto once = repair_impute_stat(ds, mask, stat);
            check_untouched(ds, once.data, mask);
            auto twice = repair_impute_stat(once.data, mask, stat);
            CHECK(to_csv_text(twice.data) == to_csv_text(once.data));
            CHECK(once.repaired_cells == mask);
        }
    }
}

TEST_CASE("knn imputation") {
    CsvOptions opts;
    opts.schema["x"] = ColumnType::numeric;
    opts.schema["y"] = ColumnType::numeric;
    auto ds = testutil::csv("x,y\n1,1\n2,2\n?,3\n4,4\n", opts);
    DetectionMask hole({{2, 0}}, "mvd");
    CHECK(repair_impute_knn(ds, hole, 2).data.cell(2, 0).raw == "3");
    // k covering every donor gives the donor mean.
    CHECK(repair_impute_knn(ds, hole, 10).data.cell(2, 0).raw == format_number(7.0 / 3.0));

    auto single = testutil::csv("x,y\n7,1\n?,2\n", opts);
    DetectionMask one({{1, 0}}, "mvd");
    CHECK(repair_impute_knn(single, one, 1).data.cell(1, 0).raw == "7");

    auto cat = testutil::csv("c,y\nred,1\nblue,1.1\nblue,5\nred,5.2\n?,1.05\n");
    CHECK(repair_impute_knn(cat, DetectionMask({{4, 0}}, "m"), 2).data.cell(4, 0).raw == "blue");

    auto orphan = testutil::csv("x,y\n?,1\n?,2\n", opts);
    CHECK_THROWS_AS(repair_impute_knn(orphan, DetectionMask({{0, 0}, {1, 0}}, "m"), 1), DataError);
}

TEST_CASE("knn imputation parallel equals serial") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto ds = noisy_table(80, seed + 10);
        auto mask = random_mask(ds, 0.1, seed);
        auto par = repair_impute_knn(ds, mask, 3);
        auto ser = serial::repair_impute_knn(ds, mask, 3);
        CHECK(to_csv_text(par.data) == to_csv_text(ser.data));
        check_untouched(ds, par.data, mask);
    }
}

TEST_CASE("iterative imputation follows a deterministic relation") {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 80; ++i) rows.push_back({std::to_string(i), std::to_string(2 * i)});
    Dataset ds = make_dataset("lin", {"x", "y"}, rows);
    std::vector<CellRef> cells;
    for (std::size_t r = 5; r < 80; r += 10) cells.push_back({r, 1});
    DetectionMask mask(cells, "m");
    auto out = repair_impute_iterative(ds, mask, 5, 10, 3);
    for (const auto& cell : cells) {
        double got = *out.data.cell(cell.row, 1).parsed;
        double x = static_cast<double>(cell.row);
        // A depth-10 tree with leaves of at least 3 rows is within a few steps of 2x.
        CHECK(std::abs(got - 2 * x) <= 8.0);
    }
    check_untouched(ds, out.data, mask);
    CHECK(!out.round_changes.empty());
}

TEST_CASE("iterative imputation with one round is a single sweep") {
    auto ds = noisy_table(60, 3);
    auto mask = random_mask(ds, 0.1, 3);
    auto one = repair_impute_iterative(ds, mask, 1);
    CHECK(one.round_changes.size() == 1);
    auto many = repair_impute_iterative(ds, mask, 10);
    CHECK(many.round_changes.size() >= 1);
    CHECK(many.round_changes[0] == doctest::Approx(one.round_changes[0]));
    CHECK_THROWS_AS(repair_impute_iterative(ds, mask, 0), InputError);
}

TEST_CASE("iterative imputation changes shrink across rounds") {
    int shrinking = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto ds = noisy_table(120, 50 + seed);
        auto mask = random_mask(ds, 0.1, seed);
        auto out = repair_impute_iterative(ds, mask, 3);
        if (out.round_changes.size() < 2 || out.round_changes[1] <= out.round_changes[0]) ++shrinking;
    }
    CHECK(shrinking >= 9);
}

TEST_CASE("iterative imputation falls back on tiny data") {
    auto ds = noisy_table(8, 1);
    auto out = repair_impute_iterative(ds, DetectionMask({{0, 0}}, "m"), 3);
    CHECK(out.warnings.size() == 1);
    CHECK(out.data.cell(0, 0).raw == repair_impute_stat(ds, DetectionMask({{0, 0}}, "m"), RepairKind::mean).data.cell(0, 0).raw);
}

TEST_CASE("ground-truth repair") {
    SyntheticSpec spec;
    spec.rows = 254;
    Dataset gt = make_synthetic(spec);
    ErrorProfile profile;
    profile.entries.push_back({ErrorKind::explicit_mv, 1.0 / 3.0});
    auto result = inject(gt, profile, 2);
    const auto& pair = result.pair;
    REQUIRE(pair.error_mask.size() == 254);

    auto full = repair_ground_truth(pair, pair.error_mask);
    CHECK(to_csv_text(full.data) == to_csv_text(gt));
    auto none = repair_ground_truth(pair, DetectionMask("none"));
    CHECK(to_csv_text(none.data) == to_csv_text(pair.dirty));

    std::vector<CellRef> half(pair.error_mask.cells().begin(), pair.error_mask.cells().begin() + 127);
    auto partial = repair_ground_truth(pair, DetectionMask(half, "half"));
    CHECK(diff_cells(gt, partial.data).size() == 127);
}

TEST_CASE("ground-truth repair drops flagged duplicate rows") {
    SyntheticSpec spec;
    spec.rows = 100;
    Dataset gt = make_synthetic(spec);
    ErrorProfile profile;
    profile.entries.push_back({ErrorKind::keyboard_typo, 0.05});
    profile.entries.push_back({ErrorKind::duplicate_row, 0.1});
    auto result = inject(gt, profile, 4);
    auto out = repair_ground_truth(result.pair, result.pair.error_mask);
    CHECK(to_csv_text(out.data) == to_csv_text(gt));
    CHECK(out.data.row_ids() == gt.row_ids());

    DatasetPair orphan = result.pair;
    orphan.duplicate_source.clear();
    CHECK_THROWS_AS(repair_ground_truth(orphan, orphan.error_mask), DataError);
}

TEST_CASE("repair specs parse") {
    CHECK(parse_repair_spec("knn:k=3").k == 3);
    CHECK(parse_repair_spec("knn:k=3").name() == "knn:k=3");
    CHECK(parse_repair_spec("iter:rounds=4").max_rounds == 4);
    CHECK(parse_repair_spec("delete").kind == RepairKind::delete_rows);
    CHECK(parse_repair_spec("gt").kind == RepairKind::ground_truth);
    CHECK_THROWS_AS(parse_repair_spec("knn:k=0"), InputError);
    CHECK_THROWS_AS(parse_repair_spec("iter:rounds=0"), InputError);
    CHECK_THROWS_AS(parse_repair_spec("mean:k=2"), InputError);
    CHECK_THROWS_AS(parse_repair_spec("holo"), InputError);
    auto ds = testutil::csv("a\n1\n");
    CHECK_THROWS_AS(run_repair(parse_repair_spec("gt"), ds, DetectionMask("m")), InputError);
}
