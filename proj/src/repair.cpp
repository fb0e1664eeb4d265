#include "cleanbench/repair.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cleanbench/model.hpp"

namespace cleanbench {

std::string_view to_string(RepairKind kind) {
    switch (kind) {
        case RepairKind::delete_rows: return "delete";
        case RepairKind::mean: return "mean";
        case RepairKind::median: return "median";
        case RepairKind::mode: return "mode";
        case RepairKind::knn: return "knn";
        case RepairKind::iterative: return "iter";
        case RepairKind::ground_truth: return "gt";
    }
    return "mean";
}

RepairKind parse_repair_kind(std::string_view name) {
    for (auto k : {RepairKind::delete_rows, RepairKind::mean, RepairKind::median, RepairKind::mode, RepairKind::knn,
                   RepairKind::iterative, RepairKind::ground_truth})
        if (to_string(k) == name) return k;
    throw InputError("unknown repair: " + std::string(name));
}

std::string RepairSpec::name() const {
    RepairSpec d;
    std::vector<std::string> params;
    if (kind == RepairKind::knn && k != d.k) params.push_back("k=" + std::to_string(k));
    if (kind == RepairKind::iterative) {
        if (max_rounds != d.max_rounds) params.push_back("rounds=" + std::to_string(max_rounds));
        if (max_depth != d.max_depth) params.push_back("max_depth=" + std::to_string(max_depth));
        if (min_leaf != d.min_leaf) params.push_back("min_leaf=" + std::to_string(min_leaf));
    }
    std::string out(to_string(kind));
    for (std::size_t i = 0; i < params.size(); ++i) out += (i ? "," : ":") + params[i];
    return out;
}

void RepairSpec::validate() const {
    if (kind == RepairKind::knn && k < 1) throw InputError("knn repair: k must be >= 1");
    if (kind == RepairKind::iterative && (max_rounds < 1 || max_depth < 1 || min_leaf < 1))
        throw InputError("iter repair: rounds, max_depth and min_leaf must be >= 1");
}

RepairSpec parse_repair_spec(std::string_view text) {
    auto colon = text.find(':');
    RepairSpec spec;
    spec.kind = parse_repair_kind(text.substr(0, colon));
    if (colon != std::string_view::npos) {
        std::stringstream params{std::string(text.substr(colon + 1))};
        std::string kv;
        while (std::getline(params, kv, ',')) {
            auto eq = kv.find('=');
            auto value = eq == std::string::npos ? std::nullopt : parse_number(kv.substr(eq + 1));
            if (!value || *value < 0 || std::floor(*value) != *value)
                throw InputError("repair parameter needs key=<whole number>: " + kv);
            std::string key = kv.substr(0, eq);
            auto n = static_cast<std::size_t>(*value);
            if (key == "k" && spec.kind == RepairKind::knn) spec.k = n;
            else if (key == "rounds" && spec.kind == RepairKind::iterative) spec.max_rounds = n;
            else if (key == "max_depth" && spec.kind == RepairKind::iterative) spec.max_depth = n;
            else if (key == "min_leaf" && spec.kind == RepairKind::iterative) spec.min_leaf = n;
            else throw InputError("unknown parameter '" + key + "' for repair " + std::string(to_string(spec.kind)));
        }
    }
    spec.validate();
    return spec;
}

namespace {

// flags[col][row]
using Flags = std::vector<std::vector<bool>>;

Flags make_flags(const Dataset& ds, const DetectionMask& mask) {
    mask.check_bounds(ds.row_count(), ds.col_count());
    Flags f(ds.col_count(), std::vector<bool>(ds.row_count(), false));
    for (const auto& cell : mask.cells()) f[cell.col][cell.row] = true;
    return f;
}

bool usable(const CellValue& cell, bool numeric) { return numeric ? cell.parsed.has_value() : !cell.is_empty; }

// Most frequent string; ties to the lexicographically smallest.
std::optional<std::string> mode_of(const std::vector<std::string>& values) {
    std::map<std::string, std::size_t> counts;
    for (const auto& v : values) ++counts[v];
    std::optional<std::string> best;
    std::size_t best_n = 0;
    for (const auto& [v, n] : counts)
        if (n > best_n) {
            best = v;
            best_n = n;
        }
    return best;
}

std::optional<double> numeric_stat(std::vector<double> v, RepairKind stat) {
    if (v.empty()) return std::nullopt;
    std::sort(v.begin(), v.end());
    switch (stat) {
        case RepairKind::median: {
            std::size_t n = v.size();
            return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
        }
        case RepairKind::mode: {
            double best = v[0];
            std::size_t best_n = 0;
            for (std::size_t i = 0; i < v.size();) {
                std::size_t j = i;
                while (j < v.size() && v[j] == v[i]) ++j;
                if (j - i > best_n) {
                    best = v[i];
                    best_n = j - i;
                }
                i = j;
            }
            return best;
        }
        default: return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }
}

}  // namespace

RepairedDataset repair_delete(const Dataset& ds, const DetectionMask& mask) {
    Stopwatch clock;
    mask.check_bounds(ds.row_count(), ds.col_count());
    auto dropped = mask.rows();
    std::vector<std::size_t> keep;
    std::vector<CellRef> removed;
    for (std::size_t r = 0, d = 0; r < ds.row_count(); ++r) {
        if (d < dropped.size() && dropped[d] == r) {
            ++d;
            for (std::size_t c = 0; c < ds.col_count(); ++c) removed.push_back({r, c});
        } else {
            keep.push_back(r);
        }
    }
    RepairedDataset out{ds.select_rows(keep), mask.source(), "delete", 0.0, DetectionMask(std::move(removed), "delete"), {}, {}};
    if (keep.empty() && ds.row_count() > 0) out.warnings.push_back("delete removed every row");
    out.runtime = clock.seconds();
    return out;
}

RepairedDataset repair_impute_stat(const Dataset& ds, const DetectionMask& mask, RepairKind stat) {
    if (stat != RepairKind::mean && stat != RepairKind::median && stat != RepairKind::mode)
        throw InputError("impute_stat: statistic must be mean, median or mode");
    Stopwatch clock;
    const Flags flags = make_flags(ds, mask);
    Dataset data = ds;
    std::vector<std::string> warnings;
    for (std::size_t c = 0; c < ds.col_count(); ++c) {
        const Column& col = ds.column(c);
        if (std::none_of(flags[c].begin(), flags[c].end(), [](bool b) { return b; })) continue;
        std::optional<std::string> fill;
        if (col.is_numeric()) {
            std::vector<double> v;
            for (std::size_t r = 0; r < ds.row_count(); ++r)
                if (!flags[c][r] && col.cells[r].parsed) v.push_back(*col.cells[r].parsed);
            if (auto s = numeric_stat(std::move(v), stat)) fill = format_number(*s);
        } else {
            std::vector<std::string> v;
            for (std::size_t r = 0; r < ds.row_count(); ++r)
                if (!flags[c][r] && !col.cells[r].is_empty) v.push_back(col.cells[r].raw);
            fill = mode_of(v);
        }
        if (!fill) warnings.push_back("column '" + col.name + "' has no unflagged values; flagged cells left empty");
        for (std::size_t r = 0; r < ds.row_count(); ++r)
            if (flags[c][r]) data.set_raw(r, c, fill.value_or(""));
    }
    RepairedDataset out{std::move(data), mask.source(), std::string(to_string(stat)), 0.0, mask, std::move(warnings), {}};
    out.repaired_cells.set_source(out.repair);
    out.runtime = clock.seconds();
    return out;
}

// --- knn imputation -------------------------------------------------------------

namespace {

struct KnnPlan {
    Flags flags;
    std::vector<bool> used;  // numeric column with spread among unflagged values
    std::vector<double> mean, sd;
};

KnnPlan plan_knn(const Dataset& ds, const DetectionMask& mask) {
    KnnPlan p{make_flags(ds, mask), std::vector<bool>(ds.col_count(), false), std::vector<double>(ds.col_count(), 0.0),
              std::vector<double>(ds.col_count(), 1.0)};
    for (std::size_t c = 0; c < ds.col_count(); ++c) {
        if (!ds.column(c).is_numeric()) continue;
        std::vector<double> v;
        for (std::size_t r = 0; r < ds.row_count(); ++r)
            if (!p.flags[c][r] && ds.cell(r, c).parsed) v.push_back(*ds.cell(r, c).parsed);
        if (v.size() < 2) continue;
        double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        if (sd == 0.0) continue;
        p.used[c] = true;
        p.mean[c] = m;
        p.sd[c] = sd;
    }
    return p;
}

std::string knn_value(const Dataset& ds, const KnnPlan& p, CellRef target, std::size_t k) {
    const std::size_t c = target.col, r = target.row;
    const bool numeric = ds.column(c).is_numeric();
    std::size_t dims = 0;
    for (std::size_t f = 0; f < ds.col_count(); ++f) dims += f != c && p.used[f];
    auto feature = [&](std::size_t row, std::size_t f) -> std::optional<double> {
        if (p.flags[f][row] || !ds.cell(row, f).parsed) return std::nullopt;
        return (*ds.cell(row, f).parsed - p.mean[f]) / p.sd[f];
    };
    std::vector<std::pair<double, std::size_t>> donors;
    for (std::size_t j = 0; j < ds.row_count(); ++j) {
        if (j == r || p.flags[c][j] || !usable(ds.cell(j, c), numeric)) continue;
        double sum = 0.0;
        std::size_t shared = 0;
        for (std::size_t f = 0; f < ds.col_count(); ++f) {
            if (f == c || !p.used[f]) continue;
            auto a = feature(r, f), b = feature(j, f);
            if (!a || !b) continue;
            sum += (*a - *b) * (*a - *b);
            ++shared;
        }
        double d = shared ? std::sqrt(sum * static_cast<double>(dims) / static_cast<double>(shared))
                          : std::numeric_limits<double>::infinity();
        donors.emplace_back(d, j);
    }
    if (donors.empty())
        throw DataError("knn repair: no eligible donors for column '" + ds.column(c).name + "'");
    const std::size_t take = std::min(k, donors.size());
    std::partial_sort(donors.begin(), donors.begin() + static_cast<std::ptrdiff_t>(take), donors.end());
    if (numeric) {
        double s = 0.0;
        for (std::size_t i = 0; i < take; ++i) s += *ds.cell(donors[i].second, c).parsed;
        return format_number(s / static_cast<double>(take));
    }
    std::vector<std::string> votes;
    for (std::size_t i = 0; i < take; ++i) votes.push_back(ds.cell(donors[i].second, c).raw);
    return *mode_of(votes);
}

RepairedDataset apply_values(const Dataset& ds, const DetectionMask& mask, const std::vector<std::string>& values,
                             std::string repair, double runtime) {
    Dataset data = ds;
    for (std::size_t i = 0; i < values.size(); ++i) data.set_raw(mask.cells()[i].row, mask.cells()[i].col, values[i]);
    RepairedDataset out{std::move(data), mask.source(), repair, runtime, mask, {}, {}};
    out.repaired_cells.set_source(repair);
    return out;
}

}  // namespace

RepairedDataset repair_impute_knn(const Dataset& ds, const DetectionMask& mask, std::size_t k) {
    if (k < 1) throw InputError("knn repair: k must be >= 1");
    Stopwatch clock;
    const KnnPlan plan = plan_knn(ds, mask);
    const auto& cells = mask.cells();
    std::vector<std::string> values(cells.size());
    const auto deadline = current_deadline();
    std::atomic<bool> failed{false};
    std::string failure;
    const auto n = static_cast<long long>(cells.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (long long i = 0; i < n; ++i) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            if (deadline && std::chrono::steady_clock::now() > *deadline) throw TimeoutError("deadline exceeded");
            values[static_cast<std::size_t>(i)] = knn_value(ds, plan, cells[static_cast<std::size_t>(i)], k);
        } catch (const Error& e) {
#pragma omp critical(knn_repair_failure)
            if (!failed.exchange(true)) failure = e.what();
        }
    }
    if (failed) {
        check_deadline();
        throw DataError(failure);
    }
    return apply_values(ds, mask, values, RepairSpec{RepairKind::knn, k}.name(), clock.seconds());
}

namespace serial {

RepairedDataset repair_impute_knn(const Dataset& ds, const DetectionMask& mask, std::size_t k) {
    if (k < 1) throw InputError("knn repair: k must be >= 1");
    Stopwatch clock;
    const KnnPlan plan = plan_knn(ds, mask);
    std::vector<std::string> values;
    for (const auto& cell : mask.cells()) values.push_back(knn_value(ds, plan, cell, k));
    return apply_values(ds, mask, values, RepairSpec{RepairKind::knn, k}.name(), clock.seconds());
}

}  // namespace serial

// --- iterative imputation --------------------------------------------------------

RepairedDataset repair_impute_iterative(const Dataset& ds, const DetectionMask& mask, std::size_t max_rounds,
                                        std::size_t max_depth, std::size_t min_leaf) {
    if (max_rounds < 1) throw InputError("iter repair: max_rounds must be >= 1");
    Stopwatch clock;
    const Flags flags = make_flags(ds, mask);
    RepairedDataset out = repair_impute_stat(ds, mask, RepairKind::mean);
    out.repair = RepairSpec{RepairKind::iterative, 5, max_rounds, max_depth, min_leaf}.name();
    out.repaired_cells.set_source(out.repair);

    std::size_t clean_rows = 0;
    for (std::size_t r = 0; r < ds.row_count(); ++r) {
        bool clean = true;
        for (std::size_t c = 0; c < ds.col_count() && clean; ++c) clean = !flags[c][r];
        clean_rows += clean;
    }
    if (clean_rows < 10) {
        out.warnings.push_back("fewer than 10 unflagged rows; kept statistical imputation");
        out.runtime = clock.seconds();
        return out;
    }

    std::vector<std::pair<std::size_t, std::size_t>> order;  // (flagged count, column)
    for (std::size_t c = 0; c < ds.col_count(); ++c) {
        auto n = static_cast<std::size_t>(std::count(flags[c].begin(), flags[c].end(), true));
        if (n) order.emplace_back(n, c);
    }
    std::sort(order.begin(), order.end());

    Dataset& data = out.data;
    std::set<std::string> degenerate;
    for (std::size_t round = 0; round < max_rounds; ++round) {
        check_deadline();
        double sq = 0.0;
        std::size_t numeric_cells = 0, categorical_changes = 0;
        for (auto [count, c] : order) {
            const Column& col = data.column(c);
            const bool numeric = col.is_numeric();
            std::vector<std::size_t> train_rows, test_rows;
            for (std::size_t r = 0; r < data.row_count(); ++r) {
                if (flags[c][r]) test_rows.push_back(r);
                else if (usable(data.cell(r, c), numeric)) train_rows.push_back(r);
            }
            if (train_rows.size() < 2) {
                degenerate.insert(col.name);
                continue;
            }
            ModelSpec spec;
            spec.kind = numeric ? ModelKind::tree_regressor : ModelKind::tree_classifier;
            spec.max_depth = max_depth;
            spec.min_leaf = min_leaf;
            const Task task = numeric ? Task::regression : Task::classification;
            try {
                auto [train, test] = encode(data.select_rows(train_rows), data.select_rows(test_rows), col.name, task);
                auto pred = predict(fit(spec, train), test);
                for (std::size_t i = 0; i < test.source_rows.size(); ++i) {
                    std::size_t r = test_rows[test.source_rows[i]];
                    const auto& before = data.cell(r, c);
                    if (numeric) {
                        double v = pred.values[i];
                        double d = v - before.parsed.value_or(v);
                        sq += d * d;
                        ++numeric_cells;
                        data.set_raw(r, c, format_number(v));
                    } else {
                        const auto& label = train.classes[static_cast<std::size_t>(pred.labels[i])];
                        if (label != before.raw) ++categorical_changes;
                        data.set_raw(r, c, label);
                    }
                }
            } catch (const DataError&) {
                degenerate.insert(col.name);
            }
        }
        double rms = numeric_cells ? std::sqrt(sq / static_cast<double>(numeric_cells)) : 0.0;
        out.round_changes.push_back(rms);
        if (rms < 1e-4 && categorical_changes == 0) break;
    }
    for (const auto& name : degenerate)
        out.warnings.push_back("column '" + name + "' had degenerate training data; kept statistical imputation");
    out.runtime = clock.seconds();
    return out;
}

// --- ground truth ---------------------------------------------------------------

RepairedDataset repair_ground_truth(const DatasetPair& pair, const DetectionMask& mask) {
    Stopwatch clock;
    const Dataset& dirty = pair.dirty;
    const Dataset& gt = pair.ground_truth;
    mask.check_bounds(dirty.row_count(), dirty.col_count());
    if (dirty.column_names() != gt.column_names()) throw InputError("gt repair: column mismatch between versions");
    std::unordered_map<std::size_t, std::size_t> gt_position;
    for (std::size_t r = 0; r < gt.row_count(); ++r) gt_position[gt.row_id(r)] = r;

    std::set<std::size_t> drop;
    for (auto r : mask.rows())
        if (pair.duplicate_source.count(dirty.row_id(r))) drop.insert(r);

    Dataset data = dirty;
    std::vector<CellRef> written;
    for (const auto& cell : mask.cells()) {
        if (drop.count(cell.row)) continue;
        auto it = gt_position.find(dirty.row_id(cell.row));
        if (it == gt_position.end())
            throw DataError("gt repair: row id " + std::to_string(dirty.row_id(cell.row)) + " has no ground-truth row");
        data.set_raw(cell.row, cell.col, gt.cell(it->second, cell.col).raw);
        written.push_back(cell);
    }
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < dirty.row_count(); ++r) {
        if (!drop.count(r)) {
            keep.push_back(r);
            continue;
        }
        for (std::size_t c = 0; c < dirty.col_count(); ++c) written.push_back({r, c});
    }
    RepairedDataset out{data.select_rows(keep), mask.source(), "gt", 0.0, DetectionMask(std::move(written), "gt"), {}, {}};
    out.runtime = clock.seconds();
    return out;
}

RepairedDataset run_repair(const RepairSpec& spec, const Dataset& ds, const DetectionMask& mask,
                           const DatasetPair* pair) {
    spec.validate();
    check_deadline();  // an expired budget fails even kernels too short to poll
    switch (spec.kind) {
        case RepairKind::delete_rows: return repair_delete(ds, mask);
        case RepairKind::mean:
        case RepairKind::median:
        case RepairKind::mode: return repair_impute_stat(ds, mask, spec.kind);
        case RepairKind::knn: return repair_impute_knn(ds, mask, spec.k);
        case RepairKind::iterative:
            return repair_impute_iterative(ds, mask, spec.max_rounds, spec.max_depth, spec.min_leaf);
        case RepairKind::ground_truth:
            if (!pair) throw InputError("gt repair needs the ground-truth dataset");
            return repair_ground_truth(*pair, mask);
    }
    throw InputError("unknown repair");
}

}  // namespace cleanbench
