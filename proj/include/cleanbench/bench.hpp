#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "cleanbench/constraints.hpp"
#include "cleanbench/detect.hpp"
#include "cleanbench/eval.hpp"
#include "cleanbench/inject.hpp"
#include "cleanbench/model.hpp"
#include "cleanbench/repair.hpp"
#include "cleanbench/stats.hpp"

namespace cleanbench {

// --- configuration -------------------------------------------------------------

/// Train/test data versions: S1 version/version, S2 version/GT, S3 GT/version,
/// S4 GT/GT, S5 version/dirty.
enum class Scenario { S1, S2, S3, S4, S5 };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view name);

struct DatasetSource {
    std::string name;
    std::optional<std::filesystem::path> path;  // clean CSV
    std::optional<SyntheticSpec> synthetic;
    std::map<std::string, ColumnType> schema;
    Task task = Task::regression;
    std::optional<std::string> target;
    /// Label column for mislabel detection; defaults to the target of a classification task.
    std::optional<std::string> label_column;

    std::optional<std::string> effective_label_column() const;
};

struct SweepSpec {
    std::vector<double> error_rates;
    std::vector<double> outlier_degrees;
    std::vector<double> fractions;
    std::vector<DetectorSpec> detectors;  // empty: the benchmark detectors
    double outlier_rate = 0.3;            // outlier-degree sweep
    double degree = 4.0;                  // error-rate sweep
};

inline constexpr int kConfigSchema = 1;

struct BenchmarkConfig {
    int config_schema = kConfigSchema;
    std::vector<DatasetSource> datasets;
    ErrorProfile errors;
    std::vector<DetectorSpec> detectors;
    std::vector<RepairSpec> repairs;
    /// Model texts, resolved against each dataset's task.
    std::vector<std::string> models;
    std::vector<Scenario> scenarios;
    std::size_t repeats = 10;
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
    std::optional<std::filesystem::path> constraint_file;
    SweepSpec sweeps;
    double timeout_seconds = 600.0;
    std::size_t workers = 0;  // 0: OpenMP default
    double contamination = 0.1;
    double alpha = 0.05;

    void validate() const;
};

/// Relative paths resolve against `base_dir`.
BenchmarkConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const BenchmarkConfig& cfg);
nlohmann::json load_config_json(const std::filesystem::path& path);

// --- preparation and planning ------------------------------------------------

enum class ErrorTag { missing, implicit_missing, outliers, typos, duplicates, mislabels, rule_violations, swaps };

std::string_view to_string(ErrorTag tag);
ErrorTag parse_error_tag(std::string_view name);
/// Tags of every kind with at least one injected cell or row.
std::set<ErrorTag> tags_from_report(const InjectionReport& report);

struct PreparedDataset {
    DatasetSource source;
    DatasetPair pair;
    InjectionReport report;
    std::vector<DenialConstraint> constraints;
    std::set<ErrorTag> tags;
};

/// Loads or generates each ground truth and injects the error profile.
PreparedDataset prepare_dataset(const BenchmarkConfig& cfg, const DatasetSource& source);
std::vector<PreparedDataset> prepare_datasets(const BenchmarkConfig& cfg);

/// Dirty version when both parts are absent.
struct Strategy {
    std::optional<DetectorSpec> detector;
    std::optional<RepairSpec> repair;

    std::string detector_name() const;  // "none" for the dirty version
    std::string repair_name() const;
};

inline constexpr const char* kNoStrategy = "-";  // detector/repair of S4 records

struct GridCell {
    std::size_t dataset = 0;   // index into ExperimentGrid::datasets
    std::size_t strategy = 0;  // index into DatasetPlan::strategies; ignored for S4
    std::size_t model = 0;     // index into DatasetPlan::models
    Scenario scenario = Scenario::S1;
    std::size_t repeat = 0;
};

struct SkipRecord {
    std::string dataset;
    std::string item;
    std::string reason;
};

struct DatasetPlan {
    std::string name;
    Task task = Task::regression;
    std::vector<DetectorSpec> detectors;  // survivors
    std::vector<RepairSpec> repairs;
    std::vector<Strategy> strategies;  // dirty version first
    std::vector<ModelSpec> models;
    std::vector<Scenario> scenarios;  // survivors, S4 included when requested
    std::size_t epsilon = 0;           // surviving detectors x repairs
};

struct ExperimentGrid {
    std::vector<DatasetPlan> datasets;
    std::vector<GridCell> cells;
    std::size_t epsilon = 0;       // requested m x k summed over datasets
    std::size_t total = 0;         // cells.size()
    std::size_t s4_total = 0;      // share of total in S4
    std::size_t repeats = 0;
    std::vector<SkipRecord> skipped;
};

/// Applies the skip table per dataset. Total = (eps' + 1) * h * |non-S4 scenarios| * s,
/// plus h * s when S4 is requested. Throws InputError when no detector survives.
ExperimentGrid plan_experiments(const BenchmarkConfig& cfg, const std::map<std::string, std::set<ErrorTag>>& tags);

/// Per dataset: whether a label column exists and whether rules are loaded.
ExperimentGrid plan_experiments(const BenchmarkConfig& cfg, const std::vector<PreparedDataset>& prepared);

// --- results store -------------------------------------------------------------

struct ExperimentRecord {
    std::string dataset;
    std::string detector;
    std::string repair;
    std::string model;
    std::string scenario;
    std::uint64_t seed = 0;  // split seed shared by every scenario of one repeat
    std::size_t repeat = 0;
    std::string metric;
    double value = 0.0;
    double detect_runtime = 0.0;
    double repair_runtime = 0.0;
    double train_runtime = 0.0;
    std::string timestamp;

    std::string key() const;
};

/// Detection, repair and IoU measurements, one record per metric.
struct CleaningRecord {
    std::string dataset;
    std::string stage;  // detect, repair, iou, sweep.error_rate, sweep.outlier_degree, sweep.fraction
    std::string detector;
    std::string repair;  // "-" outside the repair stage
    std::string peer;    // iou partner, or the sweep value as text
    std::size_t repeat = 0;
    std::string metric;
    std::optional<double> value;  // absent: undefined (e.g. empty RMSE set)
    double runtime = 0.0;
    std::string timestamp;

    std::string key() const;
};

struct FailureRecord {
    std::string dataset;
    std::string stage;  // detect, repair, model, sweep
    std::string detector;
    std::string repair;
    std::string model;
    std::string scenario;
    std::size_t repeat = 0;
    std::string error;  // timeout, data, input, internal
    std::string message;
    std::string timestamp;

    std::string key() const;
};

struct ABRecord {
    std::string dataset;
    std::string model;
    std::string arm_a;  // scenario/detector/repair
    std::string arm_b;
    ABTestResult result;
    std::string timestamp;

    std::string key() const;
};

nlohmann::json to_json(const ExperimentRecord& r);
nlohmann::json to_json(const CleaningRecord& r);
nlohmann::json to_json(const FailureRecord& r);
nlohmann::json to_json(const ABRecord& r);

/// Line-delimited records under one directory with an index.json sidecar.
/// Upserts are keyed, so replaying a run leaves the store unchanged. A
/// successful model record clears a failure with the same key and vice versa.
class ResultStore {
public:
    explicit ResultStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    void upsert(const ExperimentRecord& r);
    void upsert(const CleaningRecord& r);
    void upsert(const FailureRecord& r);
    void upsert(const ABRecord& r);

    const std::vector<ExperimentRecord>& experiments() const { return experiments_; }
    const std::vector<CleaningRecord>& cleaning() const { return cleaning_; }
    const std::vector<FailureRecord>& failures() const { return failures_; }
    const std::vector<ABRecord>& ab_tests() const { return ab_tests_; }

    /// Rewrites every file (via temporary + rename).
    void save() const;

private:
    template <class R>
    void put(std::vector<R>& records, std::map<std::string, std::size_t>& index, const R& r);
    template <class R>
    void drop(std::vector<R>& records, std::map<std::string, std::size_t>& index, const std::string& key);

    std::filesystem::path dir_;
    std::vector<ExperimentRecord> experiments_;
    std::vector<CleaningRecord> cleaning_;
    std::vector<FailureRecord> failures_;
    std::vector<ABRecord> ab_tests_;
    std::map<std::string, std::size_t> experiment_index_;
    std::map<std::string, std::size_t> cleaning_index_;
    std::map<std::string, std::size_t> failure_index_;
    std::map<std::string, std::size_t> ab_index_;
};

// --- execution -----------------------------------------------------------------

struct RunSummary {
    std::size_t planned = 0;
    std::size_t completed = 0;
    std::size_t failed = 0;          // model cells
    std::size_t stage_failures = 0;  // detector and repair runs
};

/// Split seed for one repeat; shared by every version and scenario.
std::uint64_t split_seed(std::uint64_t master, std::size_t repeat);
/// Model seed; independent of the cleaning strategy.
std::uint64_t model_seed(std::uint64_t master, const std::string& model, std::size_t repeat);

/// Rows of `version` whose ground-truth row falls in the train and test parts
/// of a split drawn over the ground truth.
std::pair<Dataset, Dataset> split_version(const DatasetPair& pair, const Dataset& version, double test_fraction,
                                          std::uint64_t seed);

/// Encodes, fits and scores one train/test pair.
ModelScore train_and_score(const ModelSpec& spec, const Dataset& train, const Dataset& test,
                           const std::optional<std::string>& target, Task task, double* train_runtime = nullptr);

RunSummary run_benchmark(const BenchmarkConfig& cfg, const std::vector<PreparedDataset>& prepared,
                         const ExperimentGrid& grid, ResultStore& store);

enum class SweepAxis { error_rate, outlier_degree };

std::string_view to_string(SweepAxis axis);

/// Re-injects gaussian outliers for each value (rate sweep at the configured
/// degree, degree sweep at the configured rate) with one injection seed per
/// repeat, then records detection precision, recall, F1 and runtime.
void run_robustness_sweep(const BenchmarkConfig& cfg, const PreparedDataset& data, SweepAxis axis,
                          const std::vector<double>& values, ResultStore& store);

/// Seeded shuffle, then a prefix of ceil(f * rows) rows per fraction; the
/// error profile is re-injected and detectors run under the per-run timeout.
void run_scalability_sweep(const BenchmarkConfig& cfg, const PreparedDataset& data,
                           const std::vector<double>& fractions, ResultStore& store);

struct Arm {
    Scenario scenario = Scenario::S1;
    std::string detector = "none";  // ignored for S4
    std::string repair = "none";

    std::string label() const;
};

/// Pairs model records of two arms by seed and runs the Wilcoxon test. The
/// result is persisted in the store.
ABTestResult ab_compare(ResultStore& store, const std::string& dataset, const std::string& model, const Arm& a,
                        const Arm& b, double alpha = 0.05, WilcoxonMode mode = WilcoxonMode::automatic);

std::string utc_timestamp();

}  // namespace cleanbench
