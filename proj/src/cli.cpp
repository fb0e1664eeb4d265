#include "cleanbench/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cleanbench/bench.hpp"
#include "cleanbench/report.hpp"

namespace cleanbench {

using nlohmann::json;
namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

void apply_override(json& doc, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--set expects key=value, got '" + assignment + "'");
    std::string pointer;
    std::stringstream path(assignment.substr(0, eq));
    for (std::string part; std::getline(path, part, '.');) {
        if (part.empty()) throw InputError("--set: empty path segment in '" + assignment + "'");
        pointer += "/" + part;
    }
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    try {
        doc[json::json_pointer(pointer)] = value;
    } catch (const json::exception& e) {
        throw InputError("--set " + assignment + ": " + e.what());
    }
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string safe_name(std::string_view text) {
    std::string out;
    for (char c : text) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_';
    return out;
}

struct Options {
    std::string verb;
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<double> timeout;
    std::vector<std::string> overrides;
    // verb specific
    std::string axis = "all";
    std::string store;
    std::string dataset;
    std::string model;
    std::string arm_a = "S1/none/none";
    std::string arm_b = "S4";
    double alpha = 0.05;
    std::string mode = "auto";
    std::string group_by = "dataset,detector,repair,model,scenario";
};

/// Everything one invocation produced.
struct Session {
    Options opt;
    fs::path out;
    json effective_config;
    std::string config_sha256;
    std::vector<fs::path> artifacts;
    json extra = json::object();

    void write(const fs::path& path, std::string_view text) {
        fs::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << text;
        if (!f) throw DataError("cannot write " + path.string());
        artifacts.push_back(path);
    }
    void write_json(const fs::path& path, const json& j) { write(path, j.dump(2) + "\n"); }
};

BenchmarkConfig load_config(Session& s) {
    if (s.opt.config_path.empty()) throw InputError(s.opt.verb + " needs --config");
    fs::path path(s.opt.config_path);
    std::string raw = read_file(path);
    json doc = json::parse(raw, nullptr, false);
    if (doc.is_discarded()) throw InputError("config " + path.string() + " is not valid JSON");
    if (s.opt.seed) doc["seed"] = *s.opt.seed;
    if (s.opt.workers) doc["workers"] = *s.opt.workers;
    if (s.opt.timeout) doc["timeout_seconds"] = *s.opt.timeout;
    for (const auto& o : s.opt.overrides) apply_override(doc, o);
    auto cfg = config_from_json(doc, path.parent_path());
    s.config_sha256 = sha256_hex(raw);
    s.effective_config = config_to_json(cfg);
    return cfg;
}

fs::path store_dir(const Session& s) { return s.opt.store.empty() ? s.out / "store" : fs::path(s.opt.store); }

json report_json(const InjectionReport& r, const DatasetPair& pair) {
    json totals = json::object();
    for (const auto& [kind, n] : r.totals) totals[std::string(to_string(kind))] = n;
    json dups = json::object();
    for (const auto& [row, src] : pair.duplicate_source) dups[std::to_string(row)] = src;
    return {{"seed", r.seed},
            {"totals", totals},
            {"cell_total", r.cell_total},
            {"achieved_rate", r.achieved_rate},
            {"duplicate_source", dups}};
}

json score_json(const DetectionScore& d) {
    return {{"tp", d.tp}, {"fp", d.fp}, {"fn", d.fn}, {"precision", d.precision}, {"recall", d.recall}, {"f1", d.f1}};
}

int verb_inject(Session& s) {
    auto cfg = load_config(s);
    for (const auto& data : prepare_datasets(cfg)) {
        auto dir = s.out / safe_name(data.source.name);
        s.write(dir / "clean.csv", to_csv_text(data.pair.ground_truth));
        s.write(dir / "dirty.csv", to_csv_text(data.pair.dirty));
        s.write(dir / "error_mask.txt", to_mask_text(data.pair.error_mask));
        for (const auto& [kind, mask] : data.report.masks)
            s.write(dir / ("mask_" + std::string(to_string(kind)) + ".txt"), to_mask_text(mask));
        s.write_json(dir / "injection.json", report_json(data.report, data.pair));
    }
    return kExitOk;
}

DetectionContext context(const BenchmarkConfig& cfg, const PreparedDataset& data) {
    DetectionContext ctx;
    ctx.constraints = data.constraints;
    ctx.label_column = data.source.effective_label_column();
    ctx.oracle = &data.pair.error_mask;
    ctx.default_contamination = cfg.contamination;
    ctx.seed = derive_seed(cfg.seed, "detect." + data.source.name);
    return ctx;
}

int verb_detect(Session& s) {
    auto cfg = load_config(s);
    auto prepared = prepare_datasets(cfg);
    auto grid = plan_experiments(cfg, prepared);
    json summary = json::array();
    for (std::size_t di = 0; di < prepared.size(); ++di) {
        const auto& data = prepared[di];
        auto dir = s.out / safe_name(data.source.name) / "detect";
        for (const auto& spec : grid.datasets[di].detectors) {
            DeadlineScope scope(std::chrono::steady_clock::now() +
                                std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(cfg.timeout_seconds)));
            auto run = run_detector(spec, data.pair.dirty, context(cfg, data));
            s.write(dir / (safe_name(spec.name()) + ".mask"), to_mask_text(run.mask));
            json entry{{"dataset", data.source.name},
                       {"detector", spec.name()},
                       {"runtime", run.runtime},
                       {"cells", run.mask.size()},
                       {"score", score_json(detection_metrics(run.mask, data.pair.error_mask))}};
            summary.push_back(entry);
        }
    }
    json skipped = json::array();
    for (const auto& k : grid.skipped) skipped.push_back({{"dataset", k.dataset}, {"item", k.item}, {"reason", k.reason}});
    s.write_json(s.out / "detection.json", {{"runs", summary}, {"skipped", skipped}});
    return kExitOk;
}

int verb_repair(Session& s) {
    auto cfg = load_config(s);
    auto prepared = prepare_datasets(cfg);
    auto grid = plan_experiments(cfg, prepared);
    json summary = json::array();
    for (std::size_t di = 0; di < prepared.size(); ++di) {
        const auto& data = prepared[di];
        const auto& plan = grid.datasets[di];
        auto dir = s.out / safe_name(data.source.name) / "repair";
        for (const auto& det : plan.detectors) {
            auto run = run_detector(det, data.pair.dirty, context(cfg, data));
            for (const auto& rep : plan.repairs) {
                auto out = run_repair(rep, data.pair.dirty, run.mask, &data.pair);
                auto a = align_repair(data.pair, out);
                auto score = repair_metrics(a.repaired, a.gt, a.truth, a.repaired_cells);
                auto stem = safe_name(det.name()) + "__" + safe_name(rep.name());
                s.write(dir / (stem + ".csv"), to_csv_text(out.data));
                summary.push_back({{"dataset", data.source.name},
                                   {"detector", det.name()},
                                   {"repair", rep.name()},
                                   {"runtime", out.runtime},
                                   {"rmse", score.rmse ? json(*score.rmse) : json(nullptr)},
                                   {"compared_cells", score.compared},
                                   {"categorical_precision", score.precision},
                                   {"categorical_recall", score.recall},
                                   {"categorical_f1", score.f1},
                                   {"warnings", out.warnings}});
            }
        }
    }
    s.write_json(s.out / "repair.json", summary);
    return kExitOk;
}

int verb_model(Session& s) {
    auto cfg = load_config(s);
    json rows = json::array();
    for (const auto& data : prepare_datasets(cfg)) {
        for (const auto& text : cfg.models) {
            auto spec = parse_model_spec(text, data.source.task);
            const auto name = spec.name();
            for (std::size_t r = 0; r < cfg.repeats; ++r) {
                spec.seed = model_seed(cfg.seed, name, r);
                auto seed = split_seed(cfg.seed, r);
                auto gt = split_version(data.pair, data.pair.ground_truth, cfg.test_fraction, seed);
                auto dirty = split_version(data.pair, data.pair.dirty, cfg.test_fraction, seed);
                for (auto [label, parts] : {std::pair{"S4", &gt}, std::pair{"S1", &dirty}}) {
                    auto score = train_and_score(spec, parts->first, parts->second, data.source.target,
                                                 data.source.task);
                    rows.push_back({{"dataset", data.source.name},
                                    {"model", name},
                                    {"version", std::string(label) == "S4" ? "ground_truth" : "dirty"},
                                    {"scenario", label},
                                    {"repeat", r},
                                    {"seed", seed},
                                    {"metric", std::string(to_string(score.kind))},
                                    {"value", score.value}});
                }
            }
        }
    }
    s.write_json(s.out / "models.json", rows);
    return kExitOk;
}

int verb_bench(Session& s) {
    auto cfg = load_config(s);
    auto prepared = prepare_datasets(cfg);
    auto grid = plan_experiments(cfg, prepared);
    ResultStore store(store_dir(s));
    auto summary = run_benchmark(cfg, prepared, grid, store);
    for (const char* f : {"experiments.jsonl", "cleaning.jsonl", "failures.jsonl", "ab_tests.jsonl", "index.json"})
        s.artifacts.push_back(store.dir() / f);
    json skipped = json::array();
    for (const auto& k : grid.skipped) skipped.push_back({{"dataset", k.dataset}, {"item", k.item}, {"reason", k.reason}});
    s.extra = {{"planned", summary.planned},
               {"s4_planned", grid.s4_total},
               {"completed", summary.completed},
               {"failed", summary.failed},
               {"stage_failures", summary.stage_failures},
               {"skipped", skipped}};
    std::cout << "planned " << summary.planned << ", completed " << summary.completed << ", failed "
              << summary.failed << "\n";
    return summary.failed || summary.stage_failures ? kExitPartial : kExitOk;
}

int verb_sweep(Session& s) {
    auto cfg = load_config(s);
    const auto& axis = s.opt.axis;
    if (axis != "all" && axis != "error_rate" && axis != "outlier_degree" && axis != "fraction")
        throw InputError("--axis must be all, error_rate, outlier_degree or fraction");
    ResultStore store(store_dir(s));
    std::size_t ran = 0;
    for (const auto& data : prepare_datasets(cfg)) {
        if ((axis == "all" || axis == "error_rate") && !cfg.sweeps.error_rates.empty()) {
            run_robustness_sweep(cfg, data, SweepAxis::error_rate, cfg.sweeps.error_rates, store);
            ++ran;
        }
        if ((axis == "all" || axis == "outlier_degree") && !cfg.sweeps.outlier_degrees.empty()) {
            run_robustness_sweep(cfg, data, SweepAxis::outlier_degree, cfg.sweeps.outlier_degrees, store);
            ++ran;
        }
        if ((axis == "all" || axis == "fraction") && !cfg.sweeps.fractions.empty()) {
            run_scalability_sweep(cfg, data, cfg.sweeps.fractions, store);
            ++ran;
        }
    }
    if (ran == 0) throw InputError("config defines no values for the requested sweep");
    for (const char* f : {"cleaning.jsonl", "failures.jsonl", "index.json"}) s.artifacts.push_back(store.dir() / f);
    std::size_t failures = 0;
    for (const auto& f : store.failures()) failures += f.stage.rfind("sweep.", 0) == 0;
    s.extra = {{"sweeps", ran}, {"failures", failures}};
    return failures ? kExitPartial : kExitOk;
}

Arm parse_arm(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, '/');) parts.push_back(p);
    if (parts.empty()) throw InputError("empty arm");
    Arm arm;
    arm.scenario = parse_scenario(parts[0]);
    if (arm.scenario == Scenario::S4) return arm;
    if (parts.size() != 3) throw InputError("arm '" + text + "' must read SCENARIO/DETECTOR/REPAIR");
    arm.detector = parts[1];
    arm.repair = parts[2];
    return arm;
}

int verb_abtest(Session& s) {
    if (s.opt.dataset.empty() || s.opt.model.empty()) throw InputError("abtest needs --dataset and --model");
    ResultStore store(store_dir(s));
    auto r = ab_compare(store, s.opt.dataset, s.opt.model, parse_arm(s.opt.arm_a), parse_arm(s.opt.arm_b),
                        s.opt.alpha, parse_wilcoxon_mode(s.opt.mode));
    json j{{"dataset", s.opt.dataset}, {"model", s.opt.model},        {"arm_a", s.opt.arm_a},
           {"arm_b", s.opt.arm_b},     {"w", r.w},                    {"p_value", r.p_value},
           {"alpha", r.alpha},         {"reject_h0", r.reject_h0},    {"n_effective", r.n_effective},
           {"mode", to_string(r.mode)}, {"degenerate", r.degenerate}};
    s.write_json(s.out / "abtest.json", j);
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int verb_report(Session& s) {
    ResultStore store(store_dir(s));
    std::vector<std::string> keys;
    std::stringstream ss(s.opt.group_by);
    for (std::string k; std::getline(ss, k, ',');)
        if (!k.empty()) keys.push_back(k);
    for (const auto& p : emit_report(store, keys, s.out / "report")) s.artifacts.push_back(p);
    json inputs = json::object();
    for (const char* f : {"experiments.jsonl", "cleaning.jsonl", "failures.jsonl"})
        if (fs::exists(store.dir() / f)) inputs[f] = sha256_hex(read_file(store.dir() / f));
    s.extra = {{"store", store.dir().string()}, {"store_sha256", inputs}};
    return kExitOk;
}

void write_manifest(Session& s, int status) {
    json artifacts = json::array();
    for (const auto& p : s.artifacts) {
        if (!fs::exists(p)) continue;
        auto bytes = read_file(p);
        artifacts.push_back({{"path", fs::relative(p, s.out).string()}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    json m{{"verb", s.opt.verb},
           {"exit_code", status},
           {"timestamp", utc_timestamp()},
           {"config_path", s.opt.config_path},
           {"overrides", s.opt.overrides},
           {"artifacts", artifacts},
           {"details", s.extra}};
    if (!s.config_sha256.empty()) {
        m["config_sha256"] = s.config_sha256;
        m["effective_config"] = s.effective_config;
        m["effective_config_sha256"] = sha256_hex(s.effective_config.dump());
        m["seed"] = s.effective_config["seed"];
    }
    std::ofstream f(s.out / ("manifest_" + s.opt.verb + ".json"), std::ios::trunc);
    f << m.dump(2) << "\n";
}

void write_error(const Session& s, int status, const std::string& kind, const std::string& message) {
    std::cerr << "error (" << kind << "): " << message << "\n";
    try {
        if (s.out.empty()) return;
        fs::create_directories(s.out);
        json e{{"verb", s.opt.verb}, {"exit_code", status}, {"error", kind}, {"message", message},
               {"timestamp", utc_timestamp()}};
        std::ofstream f(s.out / "error.json", std::ios::trunc);
        f << e.dump(2) << "\n";
    } catch (...) {
        // the message already went to stderr
    }
}

void common_options(CLI::App* cmd, Options& o, bool needs_config) {
    auto* config = cmd->add_option("--config", o.config_path, "Benchmark config (JSON)");
    if (needs_config) config->required();
    cmd->add_option("--out", o.out, "Output directory (default: $CLEANBENCH_OUT or ./cleanbench_out)");
    cmd->add_option("--seed", o.seed, "Override the master seed");
    cmd->add_option("--workers", o.workers, "Worker threads (0: all cores)");
    cmd->add_option("--timeout", o.timeout, "Per-experiment timeout in seconds")->check(CLI::PositiveNumber);
    cmd->add_option("--set", o.overrides, "Config override key=value (repeatable)");
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"Data-cleaning benchmark harness"};
    app.require_subcommand(1, 1);
    Options o;
    struct Verb {
        const char* name;
        const char* help;
        int (*fn)(Session&);
        bool needs_config;
    };
    const Verb verbs[] = {
        {"inject", "Inject the error profile and write dirty data, masks and a report", verb_inject, true},
        {"detect", "Run the configured detectors and score them", verb_detect, true},
        {"repair", "Run every cleaning strategy and score the repairs", verb_repair, true},
        {"model", "Train models on the ground-truth and dirty versions", verb_model, true},
        {"bench", "Run the full experiment grid into the results store", verb_bench, true},
        {"sweep", "Run robustness and scalability sweeps", verb_sweep, true},
        {"abtest", "Wilcoxon signed-rank test between two scenarios in the store", verb_abtest, false},
        {"report", "Aggregate the store into CSV tables", verb_report, false},
    };
    std::map<CLI::App*, const Verb*> by_cmd;
    for (const auto& v : verbs) {
        auto* cmd = app.add_subcommand(v.name, v.help);
        common_options(cmd, o, v.needs_config);
        by_cmd[cmd] = &v;
        std::string name = v.name;
        if (name == "sweep") cmd->add_option("--axis", o.axis, "all, error_rate, outlier_degree or fraction");
        if (name == "abtest" || name == "report" || name == "bench" || name == "sweep")
            cmd->add_option("--store", o.store, "Results store directory (default: OUT/store)");
        if (name == "abtest") {
            cmd->add_option("--dataset", o.dataset, "Dataset name")->required();
            cmd->add_option("--model", o.model, "Model name as stored, e.g. ridge or knn:k=3")->required();
            cmd->add_option("--a", o.arm_a, "Arm A: S4 or SCENARIO/DETECTOR/REPAIR");
            cmd->add_option("--b", o.arm_b, "Arm B");
            cmd->add_option("--alpha", o.alpha, "Significance level");
            cmd->add_option("--mode", o.mode, "auto, exact or normal_approx");
        }
        if (name == "report") cmd->add_option("--group-by", o.group_by, "Comma-separated model-table keys");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    Session s;
    const Verb* verb = nullptr;
    for (auto* sub : app.get_subcommands()) verb = by_cmd.at(sub);
    s.opt = o;
    s.opt.verb = verb->name;
    const char* env = std::getenv("CLEANBENCH_OUT");
    s.out = !o.out.empty() ? fs::path(o.out) : env && *env ? fs::path(env) : fs::path("cleanbench_out");

    int status = kExitOk;
    try {
        fs::create_directories(s.out);
        status = verb->fn(s);
    } catch (const InputError& e) {
        status = kExitUsage;
        write_error(s, status, "input", e.what());
    } catch (const TimeoutError& e) {
        status = kExitFailure;
        write_error(s, status, "timeout", e.what());
    } catch (const DataError& e) {
        status = kExitFailure;
        write_error(s, status, "data", e.what());
    } catch (const std::exception& e) {
        status = kExitFailure;
        write_error(s, status, "internal", e.what());
    }
    try {
        if (fs::exists(s.out)) write_manifest(s, status);
    } catch (const std::exception& e) {
        std::cerr << "warning: manifest not written: " << e.what() << "\n";
    }
    return status;
}

}  // namespace cleanbench
