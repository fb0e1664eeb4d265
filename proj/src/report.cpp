#include "cleanbench/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "cleanbench/common.hpp"

namespace cleanbench {

namespace {

using Key = std::vector<std::string>;

std::string field(const ExperimentRecord& r, const std::string& name) {
    if (name == "dataset") return r.dataset;
    if (name == "detector") return r.detector;
    if (name == "repair") return r.repair;
    if (name == "model") return r.model;
    if (name == "scenario") return r.scenario;
    throw InputError("unknown group-by key: " + name);
}

/// key -> metric -> values; metrics keep first-seen order per table.
struct Groups {
    std::map<Key, std::map<std::string, std::vector<double>>> cells;
    std::vector<std::string> metrics;

    void add(Key key, const std::string& metric, double value) {
        if (std::find(metrics.begin(), metrics.end(), metric) == metrics.end()) metrics.push_back(metric);
        cells[std::move(key)][metric].push_back(value);
    }

    ReportTable table(std::string name, std::vector<std::string> keys) const {
        ReportTable t{std::move(name), std::move(keys), {}, {}};
        auto sorted = metrics;
        std::sort(sorted.begin(), sorted.end());
        for (const auto& m : sorted)
            for (const char* suffix : {"_mean", "_std", "_n"}) t.columns.push_back(m + suffix);
        for (const auto& [key, by_metric] : cells) {
            auto row = key;
            for (const auto& m : sorted) {
                auto it = by_metric.find(m);
                if (it == by_metric.end() || it->second.empty()) {
                    row.insert(row.end(), {"", "", "0"});
                    continue;
                }
                auto s = summarize(it->second);
                row.push_back(format_number(s.mean));
                row.push_back(s.std ? format_number(*s.std) : "");
                row.push_back(std::to_string(s.n));
            }
            t.rows.push_back(std::move(row));
        }
        return t;
    }
};

bool is_sweep(const std::string& stage) { return stage.rfind("sweep.", 0) == 0; }

}  // namespace

ReportTable model_report(const ResultStore& store, const std::vector<std::string>& group_by) {
    if (group_by.empty()) throw InputError("model report: empty group-by");
    Groups g;
    for (const auto& r : store.experiments()) {
        Key key;
        for (const auto& k : group_by) key.push_back(field(r, k));
        g.add(key, r.metric, r.value);
        g.add(key, "train_runtime", r.train_runtime);
    }
    return g.table("model_metrics", group_by);
}

ReportTable detection_report(const ResultStore& store) {
    Groups g;
    for (const auto& r : store.cleaning()) {
        if (r.stage != "detect" || !r.value) continue;
        g.add({r.dataset, r.detector}, r.metric, *r.value);
        if (r.metric == "f1") g.add({r.dataset, r.detector}, "runtime", r.runtime);
    }
    return g.table("detection", {"dataset", "detector"});
}

ReportTable repair_report(const ResultStore& store) {
    Groups g;
    for (const auto& r : store.cleaning()) {
        if (r.stage != "repair") continue;
        Key key{r.dataset, r.detector, r.repair};
        if (r.value) g.add(key, r.metric, *r.value);
        if (r.metric == "rows") g.add(key, "runtime", r.runtime);
    }
    return g.table("repair", {"dataset", "detector", "repair"});
}

ReportTable sweep_report(const ResultStore& store) {
    Groups g;
    for (const auto& r : store.cleaning()) {
        if (!is_sweep(r.stage) || !r.value) continue;
        g.add({r.dataset, r.stage.substr(6), r.detector, r.peer}, r.metric, *r.value);
    }
    // numeric order of the swept value inside each series
    auto t = g.table("sweeps", {"dataset", "axis", "detector", "value"});
    std::stable_sort(t.rows.begin(), t.rows.end(), [](const Key& a, const Key& b) {
        if (a[0] != b[0] || a[1] != b[1] || a[2] != b[2]) return std::tie(a[0], a[1], a[2]) < std::tie(b[0], b[1], b[2]);
        return parse_number(a[3]).value_or(0.0) < parse_number(b[3]).value_or(0.0);
    });
    return t;
}

ReportTable failure_report(const ResultStore& store) {
    std::map<Key, std::size_t> counts;
    for (const auto& f : store.failures()) ++counts[{f.dataset, f.stage, f.detector, f.repair, f.model, f.error}];
    ReportTable t{"failures", {"dataset", "stage", "detector", "repair", "model", "error"}, {"count"}, {}};
    for (const auto& [key, n] : counts) {
        auto row = key;
        row.push_back(std::to_string(n));
        t.rows.push_back(std::move(row));
    }
    return t;
}

ReportTable iou_matrix(const ResultStore& store, const std::string& dataset) {
    std::set<std::string> detectors;
    std::map<std::pair<std::string, std::string>, double> value;
    for (const auto& r : store.cleaning()) {
        if (r.dataset != dataset || r.stage != "iou" || r.metric != "iou" || !r.value) continue;
        detectors.insert(r.detector);
        detectors.insert(r.peer);
        value[{r.detector, r.peer}] = *r.value;
    }
    ReportTable t{"iou_" + dataset, {"detector"}, {detectors.begin(), detectors.end()}, {}};
    for (const auto& a : detectors) {
        Key row{a};
        for (const auto& b : detectors) {
            auto it = value.find({a, b});
            row.push_back(it == value.end() ? "" : format_number(it->second));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string to_csv(const ReportTable& table) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += write_csv_field(cells[i]);
        }
        out += '\n';
    };
    auto header = table.keys;
    header.insert(header.end(), table.columns.begin(), table.columns.end());
    line(header);
    for (const auto& row : table.rows) line(row);
    return out;
}

std::vector<std::filesystem::path> emit_report(const ResultStore& store, const std::vector<std::string>& group_by,
                                               const std::filesystem::path& out_dir) {
    std::vector<ReportTable> tables;
    if (!store.experiments().empty()) tables.push_back(model_report(store, group_by));
    tables.push_back(detection_report(store));
    tables.push_back(repair_report(store));
    tables.push_back(sweep_report(store));
    tables.push_back(failure_report(store));
    std::set<std::string> datasets;
    for (const auto& r : store.cleaning())
        if (r.stage == "iou") datasets.insert(r.dataset);
    for (const auto& d : datasets) tables.push_back(iou_matrix(store, d));
    std::erase_if(tables, [](const ReportTable& t) { return t.rows.empty(); });
    if (tables.empty()) throw DataError("report: the store holds no records");

    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    for (const auto& t : tables) {
        auto path = out_dir / (t.name + ".csv");
        std::ofstream out(path, std::ios::trunc | std::ios::binary);
        out << to_csv(t);
        if (!out) throw DataError("cannot write " + path.string());
        written.push_back(path);
    }
    return written;
}

}  // namespace cleanbench
