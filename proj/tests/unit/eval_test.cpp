#include "doctest.h"

#include <cmath>
#include <random>

#include "cleanbench/eval.hpp"
#include "cleanbench/inject.hpp"
#include "test_util.hpp"

using namespace cleanbench;

namespace {

DetectionMask mask_of(std::vector<CellRef> cells) { return DetectionMask(std::move(cells), "t"); }

DetectionMask random_mask(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double p) {
    std::bernoulli_distribution pick(p);
    std::vector<CellRef> cells;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            if (pick(rng)) cells.push_back({r, c});
    return mask_of(cells);
}

}  // namespace

TEST_CASE("detection metrics match the direct formula") {
    std::vector<CellRef> truth, detected;
    for (std::size_t r = 0; r < 10; ++r) truth.push_back({r, 0});
    for (std::size_t r = 0; r < 8; ++r) detected.push_back({r, 0});
    detected.push_back({0, 1});
    detected.push_back({1, 1});
    auto s = detection_metrics(mask_of(detected), mask_of(truth));
    CHECK(s.tp == 8);
    CHECK(s.fp == 2);
    CHECK(s.fn == 2);
    CHECK(s.precision == doctest::Approx(0.8));
    CHECK(s.recall == doctest::Approx(0.8));
    CHECK(s.f1 == doctest::Approx(0.8));

    auto empty = detection_metrics(DetectionMask{}, mask_of(truth));
    CHECK(empty.precision == 0.0);
    CHECK(empty.recall == 0.0);
    CHECK(empty.f1 == 0.0);
}

TEST_CASE("iou examples") {
    std::vector<CellRef> a, b, truth;
    for (std::size_t r = 0; r < 8; ++r) truth.push_back({r, 0});
    for (std::size_t r = 0; r < 4; ++r) a.push_back({r, 0});
    for (std::size_t r = 2; r < 8; ++r) b.push_back({r, 0});
    CHECK(iou(mask_of(a), mask_of(b), mask_of(truth)).value == doctest::Approx(0.25));
    CHECK(iou(mask_of(a), mask_of(a), mask_of(truth)).value == 1.0);
    CHECK(iou(mask_of({{0, 0}}), mask_of({{1, 0}}), mask_of(truth)).value == 0.0);
    // false positives are ignored
    CHECK(iou(mask_of({{0, 0}, {0, 3}}), mask_of({{0, 0}, {1, 3}}), mask_of(truth)).value == 1.0);
    auto none = iou(DetectionMask{}, mask_of({{0, 3}}), mask_of(truth));
    CHECK(none.both_empty);
    CHECK(none.value == 1.0);
}

TEST_CASE("detection metrics and iou agree with brute-force scans on random grids") {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 100; ++trial) {
        double p = 0.05 + 0.1 * (trial % 6);
        auto d = random_mask(rng, 20, 5, p), t = random_mask(rng, 20, 5, p), o = random_mask(rng, 20, 5, p);
        auto fast = detection_metrics(d, t), slow = serial::detection_metrics(d, t, 20, 5);
        CHECK(fast.tp == slow.tp);
        CHECK(fast.fp == slow.fp);
        CHECK(fast.fn == slow.fn);
        CHECK(std::abs(fast.f1 - slow.f1) <= 1e-12);
        CHECK(fast.tp <= std::min(d.size(), t.size()));
        double m = std::min(fast.precision, fast.recall);
        CHECK(fast.f1 <= 2 * m / (1 + m) + 1e-12);

        auto i1 = iou(d, o, t), i2 = serial::iou(d, o, t, 20, 5), i3 = iou(o, d, t);
        CHECK(std::abs(i1.value - i2.value) <= 1e-12);
        CHECK(i1.value == i3.value);
        CHECK(i1.value >= 0.0);
        CHECK(i1.value <= 1.0);
    }
}

TEST_CASE("numeric repair rmse over the comparable set") {
    auto gt = testutil::csv("x,y\n0,0\n1,1\n2,2\n3,3\n");
    auto repaired = gt;
    DetectionMask truth = mask_of({{0, 0}, {1, 0}, {2, 1}});
    CHECK(*repair_metrics_numeric(repaired, gt, truth, truth).rmse == 0.0);

    // GT sample sd of each column is sqrt(5/3); residuals 1 and 2 in z units
    double sd = std::sqrt(5.0 / 3.0);
    repaired.set_raw(0, 0, format_number(0 + 1 * sd));
    repaired.set_raw(1, 0, format_number(1 - 2 * sd));
    auto s = repair_metrics_numeric(repaired, gt, mask_of({{0, 0}, {1, 0}}), mask_of({{0, 0}, {1, 0}}));
    REQUIRE(s.rmse);
    CHECK(*s.rmse == doctest::Approx(std::sqrt(2.5)).epsilon(1e-9));
    CHECK(s.compared == 2);

    // an undetected typo stays out of the comparable set
    repaired = gt;
    repaired.set_raw(2, 1, "12x");
    auto t = repair_metrics_numeric(repaired, gt, mask_of({{2, 1}}), DetectionMask{});
    CHECK_FALSE(t.rmse);
    CHECK(t.compared == 0);
    CHECK(t.unparsable_after_repair == 0);

    // a repaired cell that still fails to parse is excluded and counted
    auto u = repair_metrics_numeric(repaired, gt, mask_of({{2, 1}}), mask_of({{2, 1}}));
    CHECK_FALSE(u.rmse);
    CHECK(u.unparsable_after_repair == 1);
}

TEST_CASE("numeric repair rmse is invariant to affine rescaling of a column") {
    auto gt = testutil::csv("x\n1\n4\n2\n8\n5\n");
    auto rep = testutil::csv("x\n2\n4\n3\n8\n1\n");
    auto gt2 = testutil::csv("x\n-7\n-16\n-10\n-28\n-19\n");  // -3x - 4
    auto rep2 = testutil::csv("x\n-10\n-16\n-13\n-28\n-7\n");
    DetectionMask m = mask_of({{0, 0}, {2, 0}, {4, 0}});
    CHECK(*repair_metrics_numeric(rep, gt, m, m).rmse ==
          doctest::Approx(*repair_metrics_numeric(rep2, gt2, m, m).rmse).epsilon(1e-12));
}

TEST_CASE("categorical repair precision and recall") {
    std::string text = "c\n";
    for (int r = 0; r < 14; ++r) text += "v" + std::to_string(r) + "\n";
    auto gt = testutil::csv(text);
    auto repaired = gt;
    std::vector<CellRef> truth, fixes;
    for (std::size_t r = 0; r < 10; ++r) truth.push_back({r, 0});
    // 12 repairs: rows 0..7 correct, rows 8..9 wrong, rows 10..11 are false alarms
    for (std::size_t r = 0; r < 12; ++r) fixes.push_back({r, 0});
    repaired.set_raw(8, 0, "bad");
    repaired.set_raw(9, 0, "bad");
    auto s = repair_metrics_categorical(repaired, gt, mask_of(truth), mask_of(fixes));
    CHECK(s.correct == 8);
    CHECK(s.precision == doctest::Approx(8.0 / 12.0));
    CHECK(s.recall == doctest::Approx(0.8));

    auto zero = repair_metrics_categorical(repaired, gt, mask_of(truth), DetectionMask{});
    CHECK(zero.precision == 0.0);
    CHECK(zero.recall == 0.0);

    auto perfect = repair_metrics_categorical(gt, gt, mask_of(truth), mask_of(truth));
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);
}

TEST_CASE("alignment follows row ids after deletion and duplicate source rows") {
    auto gt = testutil::csv("x,c\n1,a\n2,b\n3,c\n4,d\n");
    DatasetPair pair;
    pair.ground_truth = gt;
    pair.dirty = gt;
    pair.dirty.append_row_copy(1, 4);
    pair.duplicate_source[4] = 1;
    pair.dirty.set_raw(2, 1, "zz");
    pair.error_mask = mask_of({{2, 1}, {4, 0}, {4, 1}});

    RepairedDataset rep;
    std::vector<std::size_t> keep = {0, 2, 4};
    rep.data = pair.dirty.select_rows(keep);
    rep.repaired_cells = mask_of({{1, 0}, {1, 1}, {3, 0}, {3, 1}});
    auto a = align_repair(pair, rep);
    REQUIRE(a.gt.row_count() == 3);
    CHECK(a.gt.cell(1, 1).raw == "c");
    CHECK(a.gt.cell(2, 0).raw == "2");  // duplicate maps back to its source
    CHECK(a.truth == mask_of({{1, 1}, {2, 0}, {2, 1}}));
    CHECK(a.repaired_cells == mask_of({}));
}

TEST_CASE("ground-truth repair scores perfectly on explicit missing values") {
    auto gt = testutil::csv("x,y,c\n1,2,a\n3,4,b\n5,6,a\n7,8,b\n9,10,c\n11,12,a\n13,14,b\n15,16,c\n");
    ErrorProfile profile;
    profile.entries.push_back({ErrorKind::explicit_mv, 0.4});
    auto pair = inject(gt, profile, 11).pair;
    auto fixed = repair_ground_truth(pair, pair.error_mask);
    auto a = align_repair(pair, fixed);
    auto s = repair_metrics(a.repaired, a.gt, a.truth, a.repaired_cells);
    REQUIRE(s.rmse);
    CHECK(*s.rmse == 0.0);
    CHECK(s.f1 == 1.0);
}

TEST_CASE("model scores") {
    std::vector<std::string> classes = {"a", "b", "c"};
    auto perfect = classification_score({0, 1, 1, 0}, {0, 1, 1, 0}, classes);
    CHECK(perfect.value == 1.0);
    CHECK(perfect.per_class_f1.size() == 2);  // class c absent from the truth

    // class a: P=1/2 R=1/2; class b: P=2/3 R=2/3 -> macro (0.5 + 2/3) / 2
    auto mixed = classification_score({0, 0, 1, 1, 1}, {0, 1, 1, 1, 0}, classes);
    CHECK(mixed.value == doctest::Approx((0.5 + 2.0 / 3.0) / 2.0));

    std::vector<double> y = {1, 2, 3, 4}, yhat = {3.5, 4.5, 5.5, 6.5};
    CHECK(regression_score(y, yhat).value == doctest::Approx(2.5));

    Matrix x(4, 1);
    x.data = {0, 1, 10, 11};
    std::vector<int> labels = {0, 0, 1, 1};
    CHECK(clustering_score(x, labels).value == doctest::Approx(silhouette(x, labels)));
    CHECK_THROWS_AS(clustering_score(x, {0, 0, 0, 0}), DataError);

    CHECK(metric_for(Task::regression) == MetricKind::rmse);
    CHECK_FALSE(higher_is_better(MetricKind::rmse));
    CHECK(parse_metric_kind("silhouette") == MetricKind::silhouette);
}
