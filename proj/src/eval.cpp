#include "cleanbench/eval.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

namespace cleanbench {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

DetectionScore score_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    DetectionScore s{tp, fp, fn, ratio(tp, tp + fp), ratio(tp, tp + fn), 0.0};
    s.f1 = harmonic(s.precision, s.recall);
    return s;
}

IouScore iou_counts(std::size_t a, std::size_t b, std::size_t both) {
    if (a == 0 && b == 0) return {1.0, true};
    return {static_cast<double>(both) / static_cast<double>(a + b - both), false};
}

}  // namespace

DetectionScore detection_metrics(const DetectionMask& detected, const DetectionMask& truth) {
    std::size_t tp = detected.intersect(truth).size();
    return score_counts(tp, detected.size() - tp, truth.size() - tp);
}

IouScore iou(const DetectionMask& a, const DetectionMask& b, const DetectionMask& truth) {
    auto ta = a.intersect(truth), tb = b.intersect(truth);
    return iou_counts(ta.size(), tb.size(), ta.intersect(tb).size());
}

namespace serial {

DetectionScore detection_metrics(const DetectionMask& detected, const DetectionMask& truth, std::size_t rows,
                                 std::size_t cols) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            bool d = detected.contains({r, c}), t = truth.contains({r, c});
            tp += d && t;
            fp += d && !t;
            fn += !d && t;
        }
    return score_counts(tp, fp, fn);
}

IouScore iou(const DetectionMask& a, const DetectionMask& b, const DetectionMask& truth, std::size_t rows,
             std::size_t cols) {
    std::size_t na = 0, nb = 0, both = 0;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            if (!truth.contains({r, c})) continue;
            bool in_a = a.contains({r, c}), in_b = b.contains({r, c});
            na += in_a;
            nb += in_b;
            both += in_a && in_b;
        }
    return iou_counts(na, nb, both);
}

}  // namespace serial

// --- repair metrics ---------------------------------------------------------------

namespace {

void check_aligned(const Dataset& repaired, const Dataset& gt) {
    if (repaired.row_count() != gt.row_count() || repaired.column_names() != gt.column_names())
        throw InputError("repair metrics: repaired and ground-truth versions are not aligned");
}

}  // namespace

RepairScore repair_metrics_numeric(const Dataset& repaired, const Dataset& gt, const DetectionMask& truth,
                                   const DetectionMask& repaired_mask) {
    check_aligned(repaired, gt);
    truth.check_bounds(gt.row_count(), gt.col_count());
    std::vector<std::pair<double, double>> stats(gt.col_count(), {0.0, 1.0});
    for (std::size_t c = 0; c < gt.col_count(); ++c) {
        if (!gt.column(c).is_numeric()) continue;
        std::vector<double> v;
        for (const auto& cell : gt.column(c).cells)
            if (cell.parsed) v.push_back(*cell.parsed);
        if (v.empty()) continue;
        double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        stats[c] = {mean, sd > 0.0 ? sd : 1.0};
    }
    RepairScore score;
    double sq = 0.0;
    for (const auto& cell : truth.cells()) {
        if (!gt.column(cell.col).is_numeric()) continue;
        const auto& want = gt.cell(cell);
        const auto& got = repaired.cell(cell);
        if (!want.parsed) continue;
        if (!got.parsed) {
            // Repaired cells that fail to parse are excluded but counted; undetected junk is filtered silently.
            if (repaired_mask.contains(cell)) ++score.unparsable_after_repair;
            continue;
        }
        double d = (*got.parsed - *want.parsed) / stats[cell.col].second;
        sq += d * d;
        ++score.compared;
    }
    if (score.compared) score.rmse = std::sqrt(sq / static_cast<double>(score.compared));
    return score;
}

RepairScore repair_metrics_categorical(const Dataset& repaired, const Dataset& gt, const DetectionMask& truth,
                                       const DetectionMask& repaired_mask) {
    check_aligned(repaired, gt);
    RepairScore score;
    for (const auto& cell : repaired_mask.cells()) {
        if (gt.column(cell.col).is_numeric()) continue;
        ++score.repaired_categorical;
        if (truth.contains(cell) && repaired.cell(cell).raw == gt.cell(cell).raw) ++score.correct;
    }
    for (const auto& cell : truth.cells())
        if (!gt.column(cell.col).is_numeric()) ++score.truth_categorical;
    score.precision = ratio(score.correct, score.repaired_categorical);
    score.recall = ratio(score.correct, score.truth_categorical);
    score.f1 = harmonic(score.precision, score.recall);
    return score;
}

RepairScore repair_metrics(const Dataset& repaired, const Dataset& gt, const DetectionMask& truth,
                           const DetectionMask& repaired_mask) {
    RepairScore s = repair_metrics_categorical(repaired, gt, truth, repaired_mask);
    RepairScore n = repair_metrics_numeric(repaired, gt, truth, repaired_mask);
    s.rmse = n.rmse;
    s.compared = n.compared;
    s.unparsable_after_repair = n.unparsable_after_repair;
    return s;
}

Dataset aligned_ground_truth(const DatasetPair& pair, const Dataset& version) {
    std::unordered_map<std::size_t, std::size_t> position;
    for (std::size_t r = 0; r < pair.ground_truth.row_count(); ++r) position[pair.ground_truth.row_id(r)] = r;
    std::vector<std::size_t> rows;
    rows.reserve(version.row_count());
    for (std::size_t r = 0; r < version.row_count(); ++r) {
        auto it = position.find(pair.logical_row(version.row_id(r)));
        if (it == position.end())
            throw DataError("row id " + std::to_string(version.row_id(r)) + " has no ground-truth row");
        rows.push_back(it->second);
    }
    Dataset gt = pair.ground_truth.select_rows(rows);
    gt.set_row_ids(version.row_ids());
    return gt;
}

AlignedRepair align_repair(const DatasetPair& pair, const RepairedDataset& repaired) {
    const Dataset& dirty = pair.dirty;
    std::unordered_map<std::size_t, std::size_t> repaired_pos;
    for (std::size_t r = 0; r < repaired.data.row_count(); ++r) repaired_pos[repaired.data.row_id(r)] = r;
    auto move = [&](const DetectionMask& m) {
        std::vector<CellRef> cells;
        for (const auto& cell : m.cells()) {
            auto it = repaired_pos.find(dirty.row_id(cell.row));
            if (it != repaired_pos.end()) cells.push_back({it->second, cell.col});
        }
        return DetectionMask(std::move(cells), m.source());
    };
    return {repaired.data, aligned_ground_truth(pair, repaired.data), move(pair.error_mask),
            move(repaired.repaired_cells)};
}

// --- model metrics ---------------------------------------------------------------

std::string_view to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::f1_macro: return "f1_macro";
        case MetricKind::rmse: return "rmse";
        case MetricKind::silhouette: return "silhouette";
    }
    return "f1_macro";
}

MetricKind parse_metric_kind(std::string_view name) {
    for (auto k : {MetricKind::f1_macro, MetricKind::rmse, MetricKind::silhouette})
        if (to_string(k) == name) return k;
    throw InputError("unknown metric: " + std::string(name));
}

MetricKind metric_for(Task task) {
    switch (task) {
        case Task::classification: return MetricKind::f1_macro;
        case Task::regression: return MetricKind::rmse;
        case Task::clustering: return MetricKind::silhouette;
    }
    return MetricKind::rmse;
}

bool higher_is_better(MetricKind kind) { return kind != MetricKind::rmse; }

ModelScore classification_score(const std::vector<int>& truth, const std::vector<int>& predicted,
                                const std::vector<std::string>& classes) {
    if (truth.size() != predicted.size()) throw InputError("classification score: length mismatch");
    if (truth.empty()) throw DataError("classification score: empty test set");
    std::set<int> present(truth.begin(), truth.end());
    ModelScore score{MetricKind::f1_macro, 0.0, {}};
    for (int c : present) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            tp += truth[i] == c && predicted[i] == c;
            fp += truth[i] != c && predicted[i] == c;
            fn += truth[i] == c && predicted[i] != c;
        }
        double f1 = harmonic(ratio(tp, tp + fp), ratio(tp, tp + fn));
        score.per_class_f1[classes.at(static_cast<std::size_t>(c))] = f1;
        score.value += f1;
    }
    score.value /= static_cast<double>(present.size());
    return score;
}

ModelScore regression_score(const std::vector<double>& truth, const std::vector<double>& predicted) {
    if (truth.size() != predicted.size()) throw InputError("regression score: length mismatch");
    if (truth.empty()) throw DataError("regression score: empty test set");
    double sq = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) sq += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
    return {MetricKind::rmse, std::sqrt(sq / static_cast<double>(truth.size())), {}};
}

ModelScore clustering_score(const Matrix& features, const std::vector<int>& assignments) {
    std::set<int> used(assignments.begin(), assignments.end());
    if (used.size() < 2) throw DataError("clustering score: fewer than two non-empty clusters");
    return {MetricKind::silhouette, silhouette(features, assignments), {}};
}

}  // namespace cleanbench
