#include "cleanbench/bench.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "cleanbench/common.hpp"

namespace cleanbench {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::optional<Clock::time_point> deadline_after(double seconds) {
    if (!(seconds > 0.0) || !std::isfinite(seconds)) return std::nullopt;
    return Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
}

int thread_count(std::size_t workers) {
    return workers ? static_cast<int>(workers) : omp_get_max_threads();
}

std::string join_key(std::initializer_list<std::string> parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += '|';
        out += p;
    }
    return out;
}

/// Error class name plus message of the exception in flight.
std::pair<std::string, std::string> classify_current_exception() {
    try {
        throw;
    } catch (const TimeoutError& e) {
        return {"timeout", e.what()};
    } catch (const DataError& e) {
        return {"data", e.what()};
    } catch (const InputError& e) {
        return {"input", e.what()};
    } catch (const std::exception& e) {
        return {"internal", e.what()};
    }
}

}  // namespace

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// --- names ---------------------------------------------------------------------

std::string_view to_string(Scenario s) {
    static constexpr std::string_view names[] = {"S1", "S2", "S3", "S4", "S5"};
    return names[static_cast<int>(s)];
}

Scenario parse_scenario(std::string_view name) {
    for (auto s : {Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4, Scenario::S5})
        if (to_string(s) == name) return s;
    throw InputError("unknown scenario: " + std::string(name));
}

std::string_view to_string(ErrorTag tag) {
    static constexpr std::string_view names[] = {"missing",    "implicit_missing", "outliers",        "typos",
                                                 "duplicates", "mislabels",        "rule_violations", "swaps"};
    return names[static_cast<int>(tag)];
}

ErrorTag parse_error_tag(std::string_view name) {
    for (int i = 0; i < 8; ++i)
        if (to_string(static_cast<ErrorTag>(i)) == name) return static_cast<ErrorTag>(i);
    throw InputError("unknown error tag: " + std::string(name));
}

std::set<ErrorTag> tags_from_report(const InjectionReport& report) {
    std::set<ErrorTag> tags;
    for (const auto& [kind, count] : report.totals) {
        if (count == 0) continue;
        switch (kind) {
            case ErrorKind::explicit_mv: tags.insert(ErrorTag::missing); break;
            case ErrorKind::implicit_mv: tags.insert(ErrorTag::implicit_missing); break;
            case ErrorKind::gaussian_outlier: tags.insert(ErrorTag::outliers); break;
            case ErrorKind::keyboard_typo: tags.insert(ErrorTag::typos); break;
            case ErrorKind::value_swap: tags.insert(ErrorTag::swaps); break;
            case ErrorKind::duplicate_row: tags.insert(ErrorTag::duplicates); break;
            case ErrorKind::mislabel: tags.insert(ErrorTag::mislabels); break;
            case ErrorKind::rule_violation: tags.insert(ErrorTag::rule_violations); break;
        }
    }
    return tags;
}

std::optional<std::string> DatasetSource::effective_label_column() const {
    if (label_column) return label_column;
    if (task == Task::classification) return target;
    return std::nullopt;
}

std::string Strategy::detector_name() const { return detector ? detector->name() : "none"; }
std::string Strategy::repair_name() const { return repair ? repair->name() : "none"; }

std::string_view to_string(SweepAxis axis) {
    return axis == SweepAxis::error_rate ? "error_rate" : "outlier_degree";
}

std::string Arm::label() const {
    if (scenario == Scenario::S4) return "S4";
    return std::string(to_string(scenario)) + "/" + detector + "/" + repair;
}

// --- configuration -------------------------------------------------------------

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw InputError(where + ": expected an object");
    for (const auto& [key, _] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw InputError(where + ": unknown key '" + key + "'");
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : it->get<T>();
}

std::vector<std::string> strings(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return {};
    return it->get<std::vector<std::string>>();
}

SyntheticSpec synthetic_from_json(const json& j, std::uint64_t fallback_seed) {
    check_keys(j, "synthetic", {"kind", "rows", "seed", "weights", "noise", "centers", "cluster_std", "bias"});
    SyntheticSpec s;
    s.kind = parse_synthetic_kind(j.at("kind").get<std::string>());
    s.rows = get_or<std::size_t>(j, "rows", s.rows);
    s.seed = get_or<std::uint64_t>(j, "seed", fallback_seed);
    s.weights = get_or(j, "weights", s.weights);
    s.noise = get_or(j, "noise", s.noise);
    s.centers = get_or(j, "centers", s.centers);
    s.cluster_std = get_or(j, "cluster_std", s.cluster_std);
    s.bias = get_or(j, "bias", s.bias);
    return s;
}

std::string_view synthetic_name(SyntheticKind kind) {
    switch (kind) {
        case SyntheticKind::linear_regression: return "linear_regression";
        case SyntheticKind::blobs: return "blobs";
        case SyntheticKind::two_class: return "two_class";
    }
    return "linear_regression";
}

}  // namespace

void BenchmarkConfig::validate() const {
    if (config_schema != kConfigSchema)
        throw InputError("unsupported config_schema " + std::to_string(config_schema) + " (expected " +
                         std::to_string(kConfigSchema) + ")");
    if (datasets.empty()) throw InputError("config: no datasets");
    std::set<std::string> names;
    for (const auto& d : datasets) {
        if (d.name.empty()) throw InputError("config: dataset without a name");
        if (!names.insert(d.name).second) throw InputError("config: duplicate dataset name '" + d.name + "'");
        if (d.path.has_value() == d.synthetic.has_value())
            throw InputError("config: dataset '" + d.name + "' needs exactly one of path or synthetic");
        if (d.task != Task::clustering && !d.target)
            throw InputError("config: dataset '" + d.name + "' needs a target for a supervised task");
    }
    if (detectors.empty()) throw InputError("config: no detectors");
    if (repairs.empty()) throw InputError("config: no repairs");
    if (models.empty()) throw InputError("config: no models");
    if (scenarios.empty()) throw InputError("config: no scenarios");
    if (repeats == 0) throw InputError("config: repeats must be >= 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InputError("config: test_fraction must lie in (0,1)");
    if (!(timeout_seconds > 0.0)) throw InputError("config: timeout_seconds must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("config: alpha must lie in (0,1)");
    if (!(contamination > 0.0 && contamination <= 0.5)) throw InputError("config: contamination must lie in (0,0.5]");
    errors.validate();
    for (const auto& d : detectors) d.validate();
    for (const auto& r : repairs) r.validate();
    for (double f : sweeps.fractions)
        if (!(f > 0.0 && f <= 1.0)) throw InputError("config: sweep fractions must lie in (0,1]");
    for (double r : sweeps.error_rates)
        if (!(r >= 0.0 && r <= 1.0)) throw InputError("config: sweep error rates must lie in [0,1]");
    for (double g : sweeps.outlier_degrees)
        if (!(g > 0.0)) throw InputError("config: outlier degrees must be positive");
}

BenchmarkConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
    try {
        check_keys(j, "config",
                   {"config_schema", "datasets", "errors", "detectors", "repairs", "models", "scenarios", "repeats",
                    "seed", "test_fraction", "constraint_file", "sweeps", "timeout_seconds", "workers",
                    "contamination", "alpha"});
        if (!j.contains("config_schema")) throw InputError("config: config_schema is mandatory");
        BenchmarkConfig cfg;
        cfg.config_schema = j.at("config_schema").get<int>();
        cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
        cfg.repeats = get_or<std::size_t>(j, "repeats", cfg.repeats);
        cfg.test_fraction = get_or(j, "test_fraction", cfg.test_fraction);
        cfg.timeout_seconds = get_or(j, "timeout_seconds", cfg.timeout_seconds);
        cfg.workers = get_or<std::size_t>(j, "workers", cfg.workers);
        cfg.contamination = get_or(j, "contamination", cfg.contamination);
        cfg.alpha = get_or(j, "alpha", cfg.alpha);
        auto resolve = [&](const std::string& p) {
            std::filesystem::path path(p);
            return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
        };
        if (j.contains("constraint_file") && !j.at("constraint_file").is_null())
            cfg.constraint_file = resolve(j.at("constraint_file").get<std::string>());

        for (const auto& d : j.at("datasets")) {
            check_keys(d, "dataset", {"name", "path", "synthetic", "schema", "task", "target", "label_column"});
            DatasetSource src;
            src.name = d.at("name").get<std::string>();
            if (d.contains("path")) src.path = resolve(d.at("path").get<std::string>());
            if (d.contains("synthetic"))
                src.synthetic = synthetic_from_json(d.at("synthetic"), derive_seed(cfg.seed, "synthetic." + src.name));
            if (d.contains("schema"))
                for (const auto& [col, type] : d.at("schema").items())
                    src.schema[col] = parse_column_type(type.get<std::string>());
            src.task = parse_task(d.at("task").get<std::string>());
            if (d.contains("target")) src.target = d.at("target").get<std::string>();
            if (d.contains("label_column")) src.label_column = d.at("label_column").get<std::string>();
            cfg.datasets.push_back(std::move(src));
        }

        if (j.contains("errors")) {
            const auto& e = j.at("errors");
            check_keys(e, "errors", {"entries", "protected_columns"});
            cfg.errors.protected_columns = strings(e, "protected_columns");
            for (const auto& entry : e.value("entries", json::array())) {
                check_keys(entry, "error entry",
                           {"kind", "rate", "degree", "label_column", "constraint_ids", "columns"});
                ErrorSpec spec;
                spec.kind = parse_error_kind(entry.at("kind").get<std::string>());
                spec.rate = entry.at("rate").get<double>();
                spec.degree = get_or(entry, "degree", spec.degree);
                spec.label_column = get_or<std::string>(entry, "label_column", "");
                spec.constraint_ids = strings(entry, "constraint_ids");
                spec.columns = strings(entry, "columns");
                cfg.errors.entries.push_back(std::move(spec));
            }
        }
        for (const auto& t : strings(j, "detectors")) cfg.detectors.push_back(parse_detector_spec(t));
        for (const auto& t : strings(j, "repairs")) cfg.repairs.push_back(parse_repair_spec(t));
        cfg.models = strings(j, "models");
        for (const auto& t : strings(j, "scenarios")) cfg.scenarios.push_back(parse_scenario(t));

        if (j.contains("sweeps")) {
            const auto& s = j.at("sweeps");
            check_keys(s, "sweeps", {"error_rates", "outlier_degrees", "fractions", "detectors", "outlier_rate",
                                     "degree"});
            cfg.sweeps.error_rates = get_or(s, "error_rates", cfg.sweeps.error_rates);
            cfg.sweeps.outlier_degrees = get_or(s, "outlier_degrees", cfg.sweeps.outlier_degrees);
            cfg.sweeps.fractions = get_or(s, "fractions", cfg.sweeps.fractions);
            cfg.sweeps.outlier_rate = get_or(s, "outlier_rate", cfg.sweeps.outlier_rate);
            cfg.sweeps.degree = get_or(s, "degree", cfg.sweeps.degree);
            for (const auto& t : strings(s, "detectors")) cfg.sweeps.detectors.push_back(parse_detector_spec(t));
        }
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
}

json config_to_json(const BenchmarkConfig& cfg) {
    json j;
    j["config_schema"] = cfg.config_schema;
    j["seed"] = cfg.seed;
    j["repeats"] = cfg.repeats;
    j["test_fraction"] = cfg.test_fraction;
    j["timeout_seconds"] = cfg.timeout_seconds;
    j["workers"] = cfg.workers;
    j["contamination"] = cfg.contamination;
    j["alpha"] = cfg.alpha;
    if (cfg.constraint_file) j["constraint_file"] = cfg.constraint_file->string();
    j["datasets"] = json::array();
    for (const auto& d : cfg.datasets) {
        json dj{{"name", d.name}, {"task", std::string(to_string(d.task))}};
        if (d.path) dj["path"] = d.path->string();
        if (d.synthetic) {
            const auto& s = *d.synthetic;
            dj["synthetic"] = {{"kind", std::string(synthetic_name(s.kind))},
                               {"rows", s.rows},
                               {"seed", s.seed},
                               {"weights", s.weights},
                               {"noise", s.noise},
                               {"centers", s.centers},
                               {"cluster_std", s.cluster_std},
                               {"bias", s.bias}};
        }
        if (!d.schema.empty()) {
            json schema = json::object();
            for (const auto& [col, type] : d.schema) schema[col] = std::string(to_string(type));
            dj["schema"] = schema;
        }
        if (d.target) dj["target"] = *d.target;
        if (d.label_column) dj["label_column"] = *d.label_column;
        j["datasets"].push_back(dj);
    }
    json entries = json::array();
    for (const auto& e : cfg.errors.entries) {
        json ej{{"kind", std::string(to_string(e.kind))}, {"rate", e.rate}, {"degree", e.degree}};
        if (!e.label_column.empty()) ej["label_column"] = e.label_column;
        if (!e.constraint_ids.empty()) ej["constraint_ids"] = e.constraint_ids;
        if (!e.columns.empty()) ej["columns"] = e.columns;
        entries.push_back(ej);
    }
    j["errors"] = {{"entries", entries}, {"protected_columns", cfg.errors.protected_columns}};
    j["detectors"] = json::array();
    for (const auto& d : cfg.detectors) j["detectors"].push_back(d.name());
    j["repairs"] = json::array();
    for (const auto& r : cfg.repairs) j["repairs"].push_back(r.name());
    j["models"] = cfg.models;
    j["scenarios"] = json::array();
    for (auto s : cfg.scenarios) j["scenarios"].push_back(std::string(to_string(s)));
    json sweeps{{"error_rates", cfg.sweeps.error_rates},
                {"outlier_degrees", cfg.sweeps.outlier_degrees},
                {"fractions", cfg.sweeps.fractions},
                {"outlier_rate", cfg.sweeps.outlier_rate},
                {"degree", cfg.sweeps.degree},
                {"detectors", json::array()}};
    for (const auto& d : cfg.sweeps.detectors) sweeps["detectors"].push_back(d.name());
    j["sweeps"] = sweeps;
    return j;
}

json load_config_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("config " + path.string() + ": " + e.what());
    }
}

// --- preparation and planning --------------------------------------------------

PreparedDataset prepare_dataset(const BenchmarkConfig& cfg, const DatasetSource& source) {
    PreparedDataset out;
    out.source = source;
    Dataset gt;
    if (source.synthetic) {
        gt = make_synthetic(*source.synthetic);
    } else {
        CsvOptions opts;
        opts.schema = source.schema;
        gt = load_csv(*source.path, opts);
    }
    gt.set_name(source.name);
    if (source.target) gt.column_index(*source.target);
    if (auto label = source.effective_label_column()) gt.column_index(*label);
    if (cfg.constraint_file) {
        auto cols = gt.column_names();
        out.constraints = load_constraints(*cfg.constraint_file, &cols);
        bind_constraints(out.constraints, gt);
    }
    auto injected = inject(gt, cfg.errors, derive_seed(cfg.seed, "inject." + source.name), out.constraints);
    out.pair = std::move(injected.pair);
    out.report = std::move(injected.report);
    out.tags = tags_from_report(out.report);
    return out;
}

std::vector<PreparedDataset> prepare_datasets(const BenchmarkConfig& cfg) {
    std::vector<PreparedDataset> out;
    for (const auto& src : cfg.datasets) out.push_back(prepare_dataset(cfg, src));
    return out;
}

namespace {

struct PlanInputs {
    std::set<ErrorTag> tags;
    bool has_label = false;
    bool has_constraints = false;
};

bool is_single_purpose_detector(DetectorKind k) {
    switch (k) {
        case DetectorKind::sd:
        case DetectorKind::iqr:
        case DetectorKind::iforest:
        case DetectorKind::rule:
        case DetectorKind::mvd:
        case DetectorKind::disguised: return true;
        default: return false;
    }
}

std::optional<std::string> skip_reason(const DetectorSpec& d, const PlanInputs& in) {
    if (in.tags == std::set<ErrorTag>{ErrorTag::duplicates} && is_single_purpose_detector(d.kind))
        return "data contains only duplicate rows";
    if (d.kind == DetectorKind::mislabel && !in.has_label) return "no label column";
    if (d.kind == DetectorKind::rule && !in.has_constraints) return "no constraint file";
    for (const auto& b : d.base)
        if (auto why = skip_reason(b, in)) return "base detector " + b.name() + " skipped: " + *why;
    return std::nullopt;
}

ExperimentGrid plan_core(const BenchmarkConfig& cfg, const std::vector<PlanInputs>& inputs) {
    cfg.validate();
    ExperimentGrid grid;
    grid.repeats = cfg.repeats;
    for (std::size_t di = 0; di < cfg.datasets.size(); ++di) {
        const auto& src = cfg.datasets[di];
        const auto& in = inputs[di];
        DatasetPlan plan;
        plan.name = src.name;
        plan.task = src.task;
        grid.epsilon += cfg.detectors.size() * cfg.repairs.size();
        auto skip = [&](std::string item, std::string reason) {
            grid.skipped.push_back({src.name, std::move(item), std::move(reason)});
        };
        for (const auto& d : cfg.detectors) {
            if (auto why = skip_reason(d, in))
                skip("detector " + d.name(), *why);
            else
                plan.detectors.push_back(d);
        }
        if (plan.detectors.empty()) throw InputError("dataset '" + src.name + "': no detector survives the skip table");
        plan.repairs = cfg.repairs;
        for (const auto& text : cfg.models) {
            try {
                plan.models.push_back(parse_model_spec(text, src.task));
            } catch (const InputError& e) {
                skip("model " + text, e.what());
            }
        }
        if (plan.models.empty()) throw InputError("dataset '" + src.name + "': no model fits the task");
        for (auto s : cfg.scenarios) {
            if (s == Scenario::S5 && src.task == Task::clustering)
                skip("scenario S5", "clustering task");
            else if (std::find(plan.scenarios.begin(), plan.scenarios.end(), s) == plan.scenarios.end())
                plan.scenarios.push_back(s);
        }
        plan.strategies.push_back({});
        for (const auto& d : plan.detectors)
            for (const auto& r : plan.repairs) plan.strategies.push_back({d, r});
        plan.epsilon = plan.detectors.size() * plan.repairs.size();

        for (std::size_t si = 0; si < plan.strategies.size(); ++si)
            for (std::size_t mi = 0; mi < plan.models.size(); ++mi)
                for (auto s : plan.scenarios) {
                    if (s == Scenario::S4) continue;
                    for (std::size_t r = 0; r < cfg.repeats; ++r) grid.cells.push_back({di, si, mi, s, r});
                }
        if (std::find(plan.scenarios.begin(), plan.scenarios.end(), Scenario::S4) != plan.scenarios.end())
            for (std::size_t mi = 0; mi < plan.models.size(); ++mi)
                for (std::size_t r = 0; r < cfg.repeats; ++r) {
                    grid.cells.push_back({di, 0, mi, Scenario::S4, r});
                    ++grid.s4_total;
                }
        grid.datasets.push_back(std::move(plan));
    }
    grid.total = grid.cells.size();
    return grid;
}

}  // namespace

ExperimentGrid plan_experiments(const BenchmarkConfig& cfg, const std::map<std::string, std::set<ErrorTag>>& tags) {
    std::vector<PlanInputs> inputs;
    for (const auto& src : cfg.datasets) {
        auto it = tags.find(src.name);
        if (it == tags.end()) throw InputError("no error tags for dataset '" + src.name + "'");
        inputs.push_back({it->second, src.effective_label_column().has_value(), cfg.constraint_file.has_value()});
    }
    return plan_core(cfg, inputs);
}

ExperimentGrid plan_experiments(const BenchmarkConfig& cfg, const std::vector<PreparedDataset>& prepared) {
    if (prepared.size() != cfg.datasets.size()) throw InputError("prepared datasets do not match the config");
    std::vector<PlanInputs> inputs;
    for (const auto& p : prepared)
        inputs.push_back({p.tags, p.source.effective_label_column().has_value(), !p.constraints.empty()});
    return plan_core(cfg, inputs);
}

// --- results store -------------------------------------------------------------

std::string ExperimentRecord::key() const {
    return join_key({dataset, detector, repair, model, scenario, std::to_string(seed), metric});
}

std::string CleaningRecord::key() const {
    return join_key({dataset, stage, detector, repair, peer, std::to_string(repeat), metric});
}

std::string FailureRecord::key() const {
    return join_key({dataset, stage, detector, repair, model, scenario, std::to_string(repeat)});
}

std::string ABRecord::key() const { return join_key({dataset, model, arm_a, arm_b}); }

json to_json(const ExperimentRecord& r) {
    return {{"dataset", r.dataset},
            {"detector", r.detector},
            {"repair", r.repair},
            {"model", r.model},
            {"scenario", r.scenario},
            {"seed", r.seed},
            {"repeat", r.repeat},
            {"metric", r.metric},
            {"value", r.value},
            {"detect_runtime", r.detect_runtime},
            {"repair_runtime", r.repair_runtime},
            {"train_runtime", r.train_runtime},
            {"timestamp", r.timestamp}};
}

json to_json(const CleaningRecord& r) {
    return {{"dataset", r.dataset},
            {"stage", r.stage},
            {"detector", r.detector},
            {"repair", r.repair},
            {"peer", r.peer},
            {"repeat", r.repeat},
            {"metric", r.metric},
            {"value", r.value ? json(*r.value) : json(nullptr)},
            {"runtime", r.runtime},
            {"timestamp", r.timestamp}};
}

json to_json(const FailureRecord& r) {
    return {{"dataset", r.dataset}, {"stage", r.stage},       {"detector", r.detector}, {"repair", r.repair},
            {"model", r.model},     {"scenario", r.scenario}, {"repeat", r.repeat},     {"error", r.error},
            {"message", r.message}, {"timestamp", r.timestamp}};
}

json to_json(const ABRecord& r) {
    const auto& t = r.result;
    return {{"dataset", r.dataset},
            {"model", r.model},
            {"arm_a", r.arm_a},
            {"arm_b", r.arm_b},
            {"w", t.w},
            {"p_value", t.p_value},
            {"alpha", t.alpha},
            {"reject_h0", t.reject_h0},
            {"n_effective", t.n_effective},
            {"mode", to_string(t.mode)},
            {"degenerate", t.degenerate},
            {"timestamp", r.timestamp}};
}

namespace {

ExperimentRecord experiment_from_json(const json& j) {
    ExperimentRecord r;
    r.dataset = j.at("dataset");
    r.detector = j.at("detector");
    r.repair = j.at("repair");
    r.model = j.at("model");
    r.scenario = j.at("scenario");
    r.seed = j.at("seed");
    r.repeat = j.at("repeat");
    r.metric = j.at("metric");
    r.value = j.at("value");
    r.detect_runtime = j.at("detect_runtime");
    r.repair_runtime = j.at("repair_runtime");
    r.train_runtime = j.at("train_runtime");
    r.timestamp = j.at("timestamp");
    return r;
}

CleaningRecord cleaning_from_json(const json& j) {
    CleaningRecord r;
    r.dataset = j.at("dataset");
    r.stage = j.at("stage");
    r.detector = j.at("detector");
    r.repair = j.at("repair");
    r.peer = j.at("peer");
    r.repeat = j.at("repeat");
    r.metric = j.at("metric");
    if (!j.at("value").is_null()) r.value = j.at("value").get<double>();
    r.runtime = j.at("runtime");
    r.timestamp = j.at("timestamp");
    return r;
}

FailureRecord failure_from_json(const json& j) {
    FailureRecord r;
    r.dataset = j.at("dataset");
    r.stage = j.at("stage");
    r.detector = j.at("detector");
    r.repair = j.at("repair");
    r.model = j.at("model");
    r.scenario = j.at("scenario");
    r.repeat = j.at("repeat");
    r.error = j.at("error");
    r.message = j.at("message");
    r.timestamp = j.at("timestamp");
    return r;
}

ABRecord ab_from_json(const json& j) {
    ABRecord r;
    r.dataset = j.at("dataset");
    r.model = j.at("model");
    r.arm_a = j.at("arm_a");
    r.arm_b = j.at("arm_b");
    r.result.w = j.at("w");
    r.result.p_value = j.at("p_value");
    r.result.alpha = j.at("alpha");
    r.result.reject_h0 = j.at("reject_h0");
    r.result.n_effective = j.at("n_effective");
    r.result.mode = parse_wilcoxon_mode(j.at("mode"));
    r.result.degenerate = j.at("degenerate");
    r.timestamp = j.at("timestamp");
    return r;
}

template <class R, class F>
void read_lines(const std::filesystem::path& path, F&& parse, const std::function<void(R)>& sink) {
    std::ifstream in(path);
    if (!in) return;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        try {
            sink(parse(json::parse(line)));
        } catch (const json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
}

template <class R>
void write_lines(const std::filesystem::path& path, const std::vector<R>& records) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        for (const auto& r : records) out << to_json(r).dump() << '\n';
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

ResultStore::ResultStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    read_lines<ExperimentRecord>(dir_ / "experiments.jsonl", experiment_from_json,
                                 [this](ExperimentRecord r) { put(experiments_, experiment_index_, r); });
    read_lines<CleaningRecord>(dir_ / "cleaning.jsonl", cleaning_from_json,
                               [this](CleaningRecord r) { put(cleaning_, cleaning_index_, r); });
    read_lines<FailureRecord>(dir_ / "failures.jsonl", failure_from_json,
                              [this](FailureRecord r) { put(failures_, failure_index_, r); });
    read_lines<ABRecord>(dir_ / "ab_tests.jsonl", ab_from_json,
                         [this](ABRecord r) { put(ab_tests_, ab_index_, r); });
}

template <class R>
void ResultStore::put(std::vector<R>& records, std::map<std::string, std::size_t>& index, const R& r) {
    auto [it, fresh] = index.emplace(r.key(), records.size());
    if (fresh)
        records.push_back(r);
    else
        records[it->second] = r;
}

template <class R>
void ResultStore::drop(std::vector<R>& records, std::map<std::string, std::size_t>& index, const std::string& key) {
    auto it = index.find(key);
    if (it == index.end()) return;
    records.erase(records.begin() + static_cast<std::ptrdiff_t>(it->second));
    index.clear();
    for (std::size_t i = 0; i < records.size(); ++i) index[records[i].key()] = i;
}

namespace {

FailureRecord failure_key_of(const ExperimentRecord& r) {
    FailureRecord f;
    f.dataset = r.dataset;
    f.stage = "model";
    f.detector = r.detector;
    f.repair = r.repair;
    f.model = r.model;
    f.scenario = r.scenario;
    f.repeat = r.repeat;
    return f;
}

}  // namespace

void ResultStore::upsert(const ExperimentRecord& r) {
    put(experiments_, experiment_index_, r);
    drop(failures_, failure_index_, failure_key_of(r).key());
}

void ResultStore::upsert(const CleaningRecord& r) { put(cleaning_, cleaning_index_, r); }

void ResultStore::upsert(const FailureRecord& r) {
    put(failures_, failure_index_, r);
    if (r.stage != "model") return;
    // a model cell that now fails no longer has a valid metric record
    for (std::size_t i = experiments_.size(); i-- > 0;) {
        const auto& e = experiments_[i];
        if (failure_key_of(e).key() == r.key()) drop(experiments_, experiment_index_, e.key());
    }
}

void ResultStore::upsert(const ABRecord& r) { put(ab_tests_, ab_index_, r); }

void ResultStore::save() const {
    std::filesystem::create_directories(dir_);
    write_lines(dir_ / "experiments.jsonl", experiments_);
    write_lines(dir_ / "cleaning.jsonl", cleaning_);
    write_lines(dir_ / "failures.jsonl", failures_);
    write_lines(dir_ / "ab_tests.jsonl", ab_tests_);
    auto keys = [](const auto& records) {
        json arr = json::array();
        for (const auto& r : records) arr.push_back(r.key());
        return arr;
    };
    json index{{"format", "cleanbench-store"},
               {"version", 1},
               {"files",
                {{"experiments.jsonl", {{"records", experiments_.size()}, {"keys", keys(experiments_)}}},
                 {"cleaning.jsonl", {{"records", cleaning_.size()}, {"keys", keys(cleaning_)}}},
                 {"failures.jsonl", {{"records", failures_.size()}, {"keys", keys(failures_)}}},
                 {"ab_tests.jsonl", {{"records", ab_tests_.size()}, {"keys", keys(ab_tests_)}}}}}};
    auto tmp = dir_ / "index.json.tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << index.dump(2) << '\n';
        if (!out) throw DataError("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, dir_ / "index.json");
}

// --- execution -----------------------------------------------------------------

std::uint64_t split_seed(std::uint64_t master, std::size_t repeat) { return derive_seed(master, "split", repeat); }

std::uint64_t model_seed(std::uint64_t master, const std::string& model, std::size_t repeat) {
    return derive_seed(master, "model." + model, repeat);
}

std::pair<Dataset, Dataset> split_version(const DatasetPair& pair, const Dataset& version, double test_fraction,
                                          std::uint64_t seed) {
    auto parts = split_indices(pair.ground_truth.row_count(), {test_fraction, seed});
    std::unordered_set<std::size_t> test_ids;
    for (auto r : parts.test) test_ids.insert(pair.ground_truth.row_id(r));
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t r = 0; r < version.row_count(); ++r)
        (test_ids.count(pair.logical_row(version.row_id(r))) ? test_rows : train_rows).push_back(r);
    if (train_rows.empty() || test_rows.empty())
        throw DataError("split leaves an empty partition in version '" + version.name() + "'");
    return {version.select_rows(train_rows), version.select_rows(test_rows)};
}

ModelScore train_and_score(const ModelSpec& spec, const Dataset& train, const Dataset& test,
                           const std::optional<std::string>& target, Task task, double* train_runtime) {
    auto [tr, te] = encode(train, test, target, task);
    if (tr.features.rows == 0) throw DataError("no usable training rows");
    auto t0 = Clock::now();
    auto fitted = fit(spec, tr);
    if (train_runtime) *train_runtime = seconds_since(t0);
    auto pred = predict(fitted, te);
    switch (task) {
        case Task::classification: return classification_score(te.labels, pred.labels, te.classes);
        case Task::regression: return regression_score(te.target, pred.values);
        case Task::clustering: return clustering_score(te.features, pred.labels);
    }
    throw InputError("unknown task");
}

namespace {

DetectionContext context_for(const BenchmarkConfig& cfg, const PreparedDataset& data, const DetectionMask* oracle) {
    DetectionContext ctx;
    ctx.constraints = data.constraints;
    ctx.label_column = data.source.effective_label_column();
    ctx.oracle = oracle;
    ctx.default_contamination = cfg.contamination;
    ctx.seed = derive_seed(cfg.seed, "detect." + data.source.name);
    return ctx;
}

struct DetectOutcome {
    std::optional<DetectorRun> run;
    std::optional<FailureRecord> failure;
};

struct RepairOutcome {
    std::optional<RepairedDataset> repaired;
    std::optional<FailureRecord> failure;
};

struct CellOutcome {
    std::optional<ExperimentRecord> record;
    std::optional<FailureRecord> failure;
};

}  // namespace

RunSummary run_benchmark(const BenchmarkConfig& cfg, const std::vector<PreparedDataset>& prepared,
                         const ExperimentGrid& grid, ResultStore& store) {
    if (prepared.size() != grid.datasets.size()) throw InputError("prepared datasets do not match the grid");
    RunSummary summary;
    summary.planned = grid.total;
    const int threads = thread_count(cfg.workers);
    const std::string now = utc_timestamp();

    // Detection: once per (dataset, detector).
    struct DetectJob {
        std::size_t dataset, detector;
    };
    std::vector<DetectJob> detect_jobs;
    for (std::size_t di = 0; di < grid.datasets.size(); ++di)
        for (std::size_t k = 0; k < grid.datasets[di].detectors.size(); ++k) detect_jobs.push_back({di, k});
    std::vector<DetectOutcome> detected(detect_jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::size_t j = 0; j < detect_jobs.size(); ++j) {
        const auto& data = prepared[detect_jobs[j].dataset];
        const auto& spec = grid.datasets[detect_jobs[j].dataset].detectors[detect_jobs[j].detector];
        try {
            DeadlineScope scope(deadline_after(cfg.timeout_seconds));
            detected[j].run = run_detector(spec, data.pair.dirty, context_for(cfg, data, &data.pair.error_mask));
        } catch (...) {
            auto [kind, message] = classify_current_exception();
            detected[j].failure =
                FailureRecord{data.source.name, "detect", spec.name(), kNoStrategy, "", "", 0, kind, message, now};
        }
    }
    auto detect_index = [&](std::size_t di, std::size_t k) {
        std::size_t offset = 0;
        for (std::size_t d = 0; d < di; ++d) offset += grid.datasets[d].detectors.size();
        return offset + k;
    };
    for (std::size_t j = 0; j < detect_jobs.size(); ++j) {
        const auto& data = prepared[detect_jobs[j].dataset];
        if (detected[j].failure) {
            store.upsert(*detected[j].failure);
            ++summary.stage_failures;
            continue;
        }
        const auto& run = *detected[j].run;
        auto score = detection_metrics(run.mask, data.pair.error_mask);
        auto rec = [&](const char* metric, double value) {
            store.upsert(CleaningRecord{data.source.name, "detect", run.spec.name(), kNoStrategy, "", 0, metric, value,
                                        run.runtime, now});
        };
        rec("precision", score.precision);
        rec("recall", score.recall);
        rec("f1", score.f1);
        rec("flagged_cells", static_cast<double>(run.mask.size()));
    }
    // Pairwise IoU of the true-positive sets.
    for (std::size_t di = 0; di < grid.datasets.size(); ++di) {
        const auto& plan = grid.datasets[di];
        for (std::size_t a = 0; a < plan.detectors.size(); ++a)
            for (std::size_t b = 0; b < plan.detectors.size(); ++b) {
                const auto& ra = detected[detect_index(di, a)].run;
                const auto& rb = detected[detect_index(di, b)].run;
                if (!ra || !rb) continue;
                auto v = iou(ra->mask, rb->mask, prepared[di].pair.error_mask);
                store.upsert(CleaningRecord{plan.name, "iou", ra->spec.name(), kNoStrategy, rb->spec.name(), 0, "iou",
                                            v.value, 0.0, now});
                store.upsert(CleaningRecord{plan.name, "iou", ra->spec.name(), kNoStrategy, rb->spec.name(), 0,
                                            "both_empty", v.both_empty ? 1.0 : 0.0, 0.0, now});
            }
    }

    // Repair: once per strategy.
    struct RepairJob {
        std::size_t dataset, strategy;
    };
    std::vector<RepairJob> repair_jobs;
    for (std::size_t di = 0; di < grid.datasets.size(); ++di)
        for (std::size_t si = 1; si < grid.datasets[di].strategies.size(); ++si) repair_jobs.push_back({di, si});
    std::vector<RepairOutcome> repaired(repair_jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::size_t j = 0; j < repair_jobs.size(); ++j) {
        const auto& plan = grid.datasets[repair_jobs[j].dataset];
        const auto& data = prepared[repair_jobs[j].dataset];
        const auto& strategy = plan.strategies[repair_jobs[j].strategy];
        std::size_t k = (repair_jobs[j].strategy - 1) / plan.repairs.size();
        const auto& det = detected[detect_index(repair_jobs[j].dataset, k)];
        if (!det.run) {
            repaired[j].failure = FailureRecord{data.source.name, "repair", strategy.detector_name(),
                                                strategy.repair_name(), "", "", 0, "upstream",
                                                "detector failed: " + det.failure->message, now};
            continue;
        }
        try {
            DeadlineScope scope(deadline_after(cfg.timeout_seconds));
            auto out = run_repair(*strategy.repair, data.pair.dirty, det.run->mask, &data.pair);
            out.detector = strategy.detector_name();
            repaired[j].repaired = std::move(out);
        } catch (...) {
            auto [kind, message] = classify_current_exception();
            repaired[j].failure = FailureRecord{data.source.name, "repair", strategy.detector_name(),
                                                strategy.repair_name(), "", "", 0, kind, message, now};
        }
    }
    // versions[di][si]: nullptr when the strategy failed
    std::vector<std::vector<const RepairedDataset*>> versions(grid.datasets.size());
    for (std::size_t di = 0; di < grid.datasets.size(); ++di)
        versions[di].assign(grid.datasets[di].strategies.size(), nullptr);
    for (std::size_t j = 0; j < repair_jobs.size(); ++j) {
        const auto& data = prepared[repair_jobs[j].dataset];
        if (repaired[j].failure) {
            store.upsert(*repaired[j].failure);
            ++summary.stage_failures;
            continue;
        }
        const auto& rep = *repaired[j].repaired;
        versions[repair_jobs[j].dataset][repair_jobs[j].strategy] = &rep;
        auto aligned = align_repair(data.pair, rep);
        auto score = repair_metrics(aligned.repaired, aligned.gt, aligned.truth, aligned.repaired_cells);
        auto rec = [&](const char* metric, std::optional<double> value) {
            store.upsert(CleaningRecord{data.source.name, "repair", rep.detector, rep.repair, "", 0, metric, value,
                                        rep.runtime, now});
        };
        rec("rmse", score.rmse);
        rec("compared_cells", static_cast<double>(score.compared));
        rec("unparsable_after_repair", static_cast<double>(score.unparsable_after_repair));
        rec("categorical_precision", score.precision);
        rec("categorical_recall", score.recall);
        rec("categorical_f1", score.f1);
        rec("rows", static_cast<double>(rep.data.row_count()));
    }

    // Model cells.
    std::vector<CellOutcome> outcomes(grid.cells.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::size_t c = 0; c < grid.cells.size(); ++c) {
        const auto& cell = grid.cells[c];
        const auto& plan = grid.datasets[cell.dataset];
        const auto& data = prepared[cell.dataset];
        const auto& pair = data.pair;
        ModelSpec spec = plan.models[cell.model];
        const std::string model_name = spec.name();
        spec.seed = model_seed(cfg.seed, model_name, cell.repeat);
        const bool s4 = cell.scenario == Scenario::S4;
        const auto& strategy = plan.strategies[s4 ? 0 : cell.strategy];

        ExperimentRecord rec;
        rec.dataset = plan.name;
        rec.detector = s4 ? kNoStrategy : strategy.detector_name();
        rec.repair = s4 ? kNoStrategy : strategy.repair_name();
        rec.model = model_name;
        rec.scenario = std::string(to_string(cell.scenario));
        rec.seed = split_seed(cfg.seed, cell.repeat);
        rec.repeat = cell.repeat;
        rec.timestamp = now;
        auto fail = [&](std::string kind, std::string message) {
            outcomes[c].failure = FailureRecord{rec.dataset, "model", rec.detector, rec.repair, rec.model, rec.scenario,
                                                rec.repeat, std::move(kind), std::move(message), now};
        };

        const Dataset* version = &pair.dirty;
        if (!s4 && cell.strategy > 0) {
            const auto* rep = versions[cell.dataset][cell.strategy];
            if (!rep) {
                fail("upstream", "cleaning strategy failed");
                continue;
            }
            version = &rep->data;
            rec.repair_runtime = rep->runtime;
            std::size_t k = (cell.strategy - 1) / plan.repairs.size();
            rec.detect_runtime = detected[detect_index(cell.dataset, k)].run->runtime;
        }
        try {
            DeadlineScope scope(deadline_after(cfg.timeout_seconds));
            const double tf = cfg.test_fraction;
            auto v = split_version(pair, *version, tf, rec.seed);
            auto g = split_version(pair, pair.ground_truth, tf, rec.seed);
            const Dataset *train = nullptr, *test = nullptr;
            std::pair<Dataset, Dataset> d;
            switch (cell.scenario) {
                case Scenario::S1: train = &v.first, test = &v.second; break;
                case Scenario::S2: train = &v.first, test = &g.second; break;
                case Scenario::S3: train = &g.first, test = &v.second; break;
                case Scenario::S4: train = &g.first, test = &g.second; break;
                case Scenario::S5:
                    d = split_version(pair, pair.dirty, tf, rec.seed);
                    train = &v.first, test = &d.second;
                    break;
            }
            auto score = train_and_score(spec, *train, *test, data.source.target, plan.task, &rec.train_runtime);
            rec.metric = std::string(to_string(score.kind));
            rec.value = score.value;
            outcomes[c].record = rec;
        } catch (...) {
            auto [kind, message] = classify_current_exception();
            fail(kind, message);
        }
    }
    for (const auto& o : outcomes) {
        if (o.record) {
            store.upsert(*o.record);
            ++summary.completed;
        } else {
            store.upsert(*o.failure);
            ++summary.failed;
        }
    }
    store.save();
    return summary;
}

// --- sweeps --------------------------------------------------------------------

namespace {

const std::vector<DetectorSpec>& sweep_detectors(const BenchmarkConfig& cfg) {
    return cfg.sweeps.detectors.empty() ? cfg.detectors : cfg.sweeps.detectors;
}

struct SweepOutcome {
    std::vector<CleaningRecord> records;
    std::vector<FailureRecord> failures;
};

/// Injects `profile` into `gt` and runs every sweep detector on the result.
void sweep_point(const BenchmarkConfig& cfg, const PreparedDataset& data, const Dataset& gt,
                 const ErrorProfile& profile, std::uint64_t inject_seed, const std::string& stage,
                 const std::string& value, std::size_t repeat, const std::string& now, SweepOutcome& out) {
    DatasetPair pair;
    try {
        pair = inject(gt, profile, inject_seed, data.constraints).pair;
    } catch (...) {
        auto [kind, message] = classify_current_exception();
        out.failures.push_back({data.source.name, stage, "inject", kNoStrategy, "", value, repeat, kind, message, now});
        return;
    }
    PreparedDataset local{data.source, pair, {}, data.constraints, {}};
    for (const auto& spec : sweep_detectors(cfg)) {
        try {
            DeadlineScope scope(deadline_after(cfg.timeout_seconds));
            auto run = run_detector(spec, pair.dirty, context_for(cfg, local, &pair.error_mask));
            auto score = detection_metrics(run.mask, pair.error_mask);
            for (auto [metric, v] : {std::pair{"precision", score.precision},
                                     std::pair{"recall", score.recall},
                                     std::pair{"f1", score.f1},
                                     std::pair{"runtime", run.runtime},
                                     std::pair{"rows", static_cast<double>(pair.dirty.row_count())}})
                out.records.push_back(
                    {data.source.name, stage, spec.name(), kNoStrategy, value, repeat, metric, v, run.runtime, now});
        } catch (...) {
            auto [kind, message] = classify_current_exception();
            out.failures.push_back(
                {data.source.name, stage, spec.name(), kNoStrategy, "", value, repeat, kind, message, now});
        }
    }
}

void flush(ResultStore& store, const std::vector<SweepOutcome>& outcomes) {
    for (const auto& o : outcomes) {
        for (const auto& r : o.records) store.upsert(r);
        for (const auto& f : o.failures) store.upsert(f);
    }
    store.save();
}

}  // namespace

void run_robustness_sweep(const BenchmarkConfig& cfg, const PreparedDataset& data, SweepAxis axis,
                          const std::vector<double>& values, ResultStore& store) {
    if (values.empty()) throw InputError("robustness sweep: no values");
    const std::string stage = "sweep." + std::string(to_string(axis));
    const std::string now = utc_timestamp();
    const std::size_t jobs = values.size() * cfg.repeats;
    std::vector<SweepOutcome> outcomes(jobs);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(cfg.workers))
    for (std::size_t j = 0; j < jobs; ++j) {
        std::size_t repeat = j / values.size();
        double v = values[j % values.size()];
        ErrorSpec spec;
        spec.kind = ErrorKind::gaussian_outlier;
        spec.rate = axis == SweepAxis::error_rate ? v : cfg.sweeps.outlier_rate;
        spec.degree = axis == SweepAxis::outlier_degree ? v : cfg.sweeps.degree;
        ErrorProfile profile{{spec}, cfg.errors.protected_columns};
        sweep_point(cfg, data, data.pair.ground_truth, profile, derive_seed(cfg.seed, "sweep.inject", repeat), stage,
                    format_number(v), repeat, now, outcomes[j]);
    }
    flush(store, outcomes);
}

void run_scalability_sweep(const BenchmarkConfig& cfg, const PreparedDataset& data,
                           const std::vector<double>& fractions, ResultStore& store) {
    if (fractions.empty()) throw InputError("scalability sweep: no fractions");
    const Dataset& gt = data.pair.ground_truth;
    std::vector<std::size_t> sizes;
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw InputError("scalability sweep: fractions must lie in (0,1]");
        auto rows = static_cast<std::size_t>(std::ceil(f * static_cast<double>(gt.row_count())));
        if (rows < 10) throw InputError("scalability sweep: fraction " + format_number(f) + " yields fewer than 10 rows");
        sizes.push_back(rows);
    }
    std::vector<std::size_t> order(gt.row_count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, "sweep.fraction.order"));
    std::shuffle(order.begin(), order.end(), rng);
    const std::string now = utc_timestamp();
    // Serial on purpose: runtimes are the measurement.
    std::vector<SweepOutcome> outcomes(fractions.size());
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        std::vector<std::size_t> rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sizes[i]));
        std::sort(rows.begin(), rows.end());
        Dataset sample = gt.select_rows(rows);
        std::vector<std::size_t> ids(sample.row_count());
        std::iota(ids.begin(), ids.end(), std::size_t{0});
        sample.set_row_ids(std::move(ids));
        sweep_point(cfg, data, sample, cfg.errors, derive_seed(cfg.seed, "sweep.fraction.inject"), "sweep.fraction",
                    format_number(fractions[i]), 0, now, outcomes[i]);
    }
    flush(store, outcomes);
}

ABTestResult ab_compare(ResultStore& store, const std::string& dataset, const std::string& model, const Arm& a,
                        const Arm& b, double alpha, WilcoxonMode mode) {
    auto collect = [&](const Arm& arm) {
        std::map<std::uint64_t, double> by_seed;
        const std::string scenario(to_string(arm.scenario));
        const bool s4 = arm.scenario == Scenario::S4;
        for (const auto& r : store.experiments()) {
            if (r.dataset != dataset || r.model != model || r.scenario != scenario) continue;
            if (!s4 && (r.detector != arm.detector || r.repair != arm.repair)) continue;
            by_seed[r.seed] = r.value;
        }
        return by_seed;
    };
    auto va = collect(a), vb = collect(b);
    PairedSample sample;
    sample.label_a = a.label();
    sample.label_b = b.label();
    for (const auto& [seed, value] : va) {
        auto it = vb.find(seed);
        if (it != vb.end()) sample.pairs.push_back({value, it->second});
    }
    if (sample.pairs.empty())
        throw InputError("ab_compare: no shared seeds for " + model + " between " + a.label() + " and " + b.label());
    auto result = wilcoxon_signed_rank(sample, alpha, mode);
    store.upsert(ABRecord{dataset, model, a.label(), b.label(), result, utc_timestamp()});
    store.save();
    return result;
}

}  // namespace cleanbench
