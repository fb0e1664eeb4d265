#include "doctest.h"

#include <fstream>
#include <sstream>

#include "cleanbench/report.hpp"
#include "test_util.hpp"

using namespace cleanbench;
using nlohmann::json;

namespace {

ExperimentRecord model_record(const std::string& detector, std::size_t repeat, double value) {
    ExperimentRecord r;
    r.dataset = "d";
    r.detector = detector;
    r.repair = "mean";
    r.model = "ridge";
    r.scenario = "S1";
    r.seed = 100 + repeat;
    r.repeat = repeat;
    r.metric = "rmse";
    r.value = value;
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t column(const ReportTable& t, const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        if (t.columns[i] == name) return t.keys.size() + i;
    FAIL("missing column " << name);
    return 0;
}

}  // namespace

TEST_CASE("model report groups by detector with one row each and n per seed") {
    ResultStore store(testutil::scratch_dir("report_group"));
    for (std::size_t s = 0; s < 10; ++s) {
        store.upsert(model_record("sd", s, static_cast<double>(s)));
        store.upsert(model_record("iqr", s, 2.0));
    }
    auto t = model_report(store, {"detector"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == "iqr");
    CHECK(t.rows[1][0] == "sd");
    CHECK(t.rows[0][column(t, "rmse_n")] == "10");
    CHECK(t.rows[1][column(t, "rmse_mean")] == "4.5");
    CHECK(parse_number(t.rows[1][column(t, "rmse_std")]).value() == doctest::Approx(std::sqrt(55.0 / 6.0)));
    CHECK(t.rows[0][column(t, "rmse_std")] == "0");

    CHECK_THROWS_AS(model_report(store, {"colour"}), InputError);
    CHECK_THROWS_AS(model_report(store, {}), InputError);
    CHECK(model_report(store, {"dataset", "model"}).rows.size() == 1);
}

TEST_CASE("report from a real run: iou diagonal and byte-identical re-emission") {
    auto cfg = config_from_json(json::parse(R"({
        "config_schema": 1, "seed": 3,
        "datasets": [{"name": "lin", "task": "regression", "target": "y",
                      "synthetic": {"kind": "linear_regression", "rows": 120, "weights": [3, -2]}}],
        "errors": {"entries": [{"kind": "gaussian_outlier", "rate": 0.1, "degree": 5}], "protected_columns": ["y"]},
        "detectors": ["sd:n=2", "iqr"], "repairs": ["median"], "models": ["ridge"],
        "scenarios": ["S1", "S4"], "repeats": 10})"));
    auto prepared = prepare_datasets(cfg);
    auto grid = plan_experiments(cfg, prepared);
    auto dir = testutil::scratch_dir("report_run");
    ResultStore store(dir / "store");
    run_benchmark(cfg, prepared, grid, store);

    auto m = iou_matrix(store, "lin");
    REQUIRE(m.rows.size() == 2);
    CHECK(m.rows[0][1] == "1");
    CHECK(m.rows[1][2] == "1");
    CHECK(m.rows[0][2] == m.rows[1][1]);

    auto t = model_report(store, {"detector", "repair", "scenario"});
    for (const auto& row : t.rows) CHECK(row[column(t, "rmse_n")] == "10");

    auto first = emit_report(store, {"detector"}, dir / "a");
    ResultStore reloaded(dir / "store");
    auto second = emit_report(reloaded, {"detector"}, dir / "b");
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].filename() == second[i].filename());
        CHECK(slurp(first[i]) == slurp(second[i]));
    }

    ResultStore empty(dir / "empty");
    CHECK_THROWS_AS(emit_report(empty, {"detector"}, dir / "c"), DataError);
}
