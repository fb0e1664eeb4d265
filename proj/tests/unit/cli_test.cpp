#include "doctest.h"

#include <fstream>
#include <sstream>

#include "cleanbench/cli.hpp"
#include "test_util.hpp"

using namespace cleanbench;
using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

/// CSV rows with every runtime column removed; wall-clock times never reproduce.
std::vector<std::vector<std::string>> without_runtimes(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::vector<bool> keep;
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        if (keep.empty())
            for (const auto& c : cells) keep.push_back(c.find("runtime") == std::string::npos);
        std::vector<std::string> kept;
        for (std::size_t i = 0; i < cells.size() && i < keep.size(); ++i)
            if (keep[i]) kept.push_back(cells[i]);
        rows.push_back(kept);
    }
    return rows;
}

std::filesystem::path write_config(const std::filesystem::path& dir) {
    json cfg = json::parse(R"({
        "config_schema": 1, "seed": 9,
        "datasets": [{"name": "lin", "task": "regression", "target": "y",
                      "synthetic": {"kind": "linear_regression", "rows": 100, "weights": [1, 2]}}],
        "errors": {"entries": [{"kind": "explicit_mv", "rate": 0.1}], "protected_columns": ["y"]},
        "detectors": ["mvd"], "repairs": ["gt", "mean"], "models": ["ridge"],
        "scenarios": ["S1", "S4"], "repeats": 3})");
    auto path = dir / "cfg.json";
    std::ofstream(path) << cfg.dump(2);
    return path;
}

}  // namespace

TEST_CASE("sha256 matches the standard test vector") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("dotted overrides") {
    json j = {{"seed", 1}, {"datasets", json::array({{{"name", "a"}}})}};
    apply_override(j, "seed=42");
    apply_override(j, "datasets.0.name=b");
    apply_override(j, "sweeps.error_rates=[0.1,0.2]");
    CHECK(j["seed"] == 42);
    CHECK(j["datasets"][0]["name"] == "b");
    CHECK(j["sweeps"]["error_rates"].size() == 2);
    CHECK_THROWS_AS(apply_override(j, "novalue"), InputError);
    CHECK_THROWS_AS(apply_override(j, "a..b=1"), InputError);
}

TEST_CASE("usage errors exit with 1") {
    auto dir = testutil::scratch_dir("cli_usage");
    CHECK(run_command({"frobnicate"}) == kExitUsage);
    CHECK(run_command({}) == kExitUsage);
    CHECK(run_command({"bench", "--out", dir.string()}) == kExitUsage);  // --config missing
    CHECK(run_command({"bench", "--config", (dir / "absent.json").string(), "--out", dir.string()}) == kExitUsage);
    CHECK(read_json(dir / "error.json")["error"] == "input");
    auto cfg = write_config(dir);
    CHECK(run_command({"bench", "--config", cfg.string(), "--out", dir.string(), "--set", "repeets=2"}) ==
          kExitUsage);
}

TEST_CASE("bench writes a manifest, is reproducible and feeds abtest and report") {
    auto dir = testutil::scratch_dir("cli_bench");
    auto cfg = write_config(dir);
    auto out1 = dir / "one", out2 = dir / "two";
    REQUIRE(run_command({"bench", "--config", cfg.string(), "--out", out1.string(), "--workers", "1"}) == kExitOk);
    REQUIRE(run_command({"bench", "--config", cfg.string(), "--out", out2.string(), "--workers", "2"}) == kExitOk);
    auto m1 = read_json(out1 / "manifest_bench.json"), m2 = read_json(out2 / "manifest_bench.json");
    CHECK(m1["config_sha256"].get<std::string>().size() == 64);
    CHECK(m1["details"]["planned"] == (2 * 1 + 1) * 3 + 3);
    CHECK(m1["details"]["failed"] == 0);
    // workers differ, so the effective configs differ; the records must not
    auto experiments = [](const json& m) {
        for (const auto& a : m["artifacts"])
            if (a["path"] == "store/experiments.jsonl") return a["sha256"];
        return json();
    };
    CHECK_FALSE(experiments(m1).is_null());
    CHECK(m1["seed"] == 9);

    CHECK(run_command({"abtest", "--out", out1.string(), "--dataset", "lin", "--model", "ridge", "--a",
                       "S1/mvd/gt", "--b", "S4"}) == kExitOk);
    auto ab = read_json(out1 / "abtest.json");
    CHECK(ab["degenerate"] == true);
    CHECK(ab["p_value"] == 1.0);
    CHECK(run_command({"abtest", "--out", out1.string(), "--dataset", "lin", "--model", "ridge", "--a", "S9"}) ==
          kExitUsage);

    REQUIRE(run_command({"report", "--out", out1.string(), "--group-by", "detector,repair"}) == kExitOk);
    REQUIRE(run_command({"report", "--out", out2.string(), "--group-by", "detector,repair"}) == kExitOk);
    for (const char* f : {"model_metrics.csv", "detection.csv", "repair.csv"}) {
        auto ta = without_runtimes(out1 / "report" / f), tb = without_runtimes(out2 / "report" / f);
        CHECK(ta.size() > 1);
        CHECK(ta == tb);
    }
}

TEST_CASE("seed override changes the results and is recorded") {
    auto dir = testutil::scratch_dir("cli_seed");
    auto cfg = write_config(dir);
    REQUIRE(run_command({"inject", "--config", cfg.string(), "--out", (dir / "a").string(), "--seed", "77"}) ==
            kExitOk);
    REQUIRE(run_command({"inject", "--config", cfg.string(), "--out", (dir / "b").string()}) == kExitOk);
    auto ma = read_json(dir / "a" / "manifest_inject.json"), mb = read_json(dir / "b" / "manifest_inject.json");
    CHECK(ma["seed"] == 77);
    CHECK(ma["config_sha256"] == mb["config_sha256"]);
    CHECK(ma["effective_config_sha256"] != mb["effective_config_sha256"]);
    CHECK(std::filesystem::exists(dir / "a" / "lin" / "dirty.csv"));
}

TEST_CASE("failing cells make bench exit with 3") {
    auto dir = testutil::scratch_dir("cli_partial");
    auto cfg = write_config(dir);
    CHECK(run_command({"bench", "--config", cfg.string(), "--out", dir.string(), "--timeout", "1e-9"}) ==
          kExitPartial);
}
