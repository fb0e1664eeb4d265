#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cleanbench/model.hpp"
#include "cleanbench/repair.hpp"
#include "cleanbench/tabular.hpp"

namespace cleanbench {

struct DetectionScore {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Cell-level precision, recall and F1; every 0/0 ratio is 0.
DetectionScore detection_metrics(const DetectionMask& detected, const DetectionMask& truth);

struct IouScore {
    double value = 0.0;
    bool both_empty = false;  // value is 1 by convention
};

/// IoU of the true-positive parts of `a` and `b`.
IouScore iou(const DetectionMask& a, const DetectionMask& b, const DetectionMask& truth);

struct RepairScore {
    // numeric
    std::optional<double> rmse;
    std::size_t compared = 0;
    std::size_t unparsable_after_repair = 0;
    // categorical
    std::size_t correct = 0;
    std::size_t repaired_categorical = 0;
    std::size_t truth_categorical = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// `repaired` and `gt` must be row-aligned with the masks in their coordinates.
/// Comparable cells: numeric truth cells either repaired or still parseable.
/// Residuals are z-scored by the GT column's mean and sample std (1 when
/// the column is constant).
RepairScore repair_metrics_numeric(const Dataset& repaired, const Dataset& gt, const DetectionMask& truth,
                                   const DetectionMask& repaired_mask);
RepairScore repair_metrics_categorical(const Dataset& repaired, const Dataset& gt, const DetectionMask& truth,
                                       const DetectionMask& repaired_mask);
/// Both parts in one record.
RepairScore repair_metrics(const Dataset& repaired, const Dataset& gt, const DetectionMask& truth,
                           const DetectionMask& repaired_mask);

/// A repaired version and its ground truth, row-aligned through row ids and
/// duplicate source rows. Masks are moved to repaired-row coordinates; cells
/// of deleted rows drop out.
struct AlignedRepair {
    Dataset repaired;
    Dataset gt;
    DetectionMask truth;
    DetectionMask repaired_cells;
};

AlignedRepair align_repair(const DatasetPair& pair, const RepairedDataset& repaired);

/// Ground-truth rows matching each row of `version` through row ids.
Dataset aligned_ground_truth(const DatasetPair& pair, const Dataset& version);

enum class MetricKind { f1_macro, rmse, silhouette };

std::string_view to_string(MetricKind kind);
MetricKind parse_metric_kind(std::string_view name);
MetricKind metric_for(Task task);
/// True when larger values are better.
bool higher_is_better(MetricKind kind);

struct ModelScore {
    MetricKind kind = MetricKind::f1_macro;
    double value = 0.0;
    std::map<std::string, double> per_class_f1;
};

/// Macro F1 over classes present in `truth`.
ModelScore classification_score(const std::vector<int>& truth, const std::vector<int>& predicted,
                                const std::vector<std::string>& classes);
ModelScore regression_score(const std::vector<double>& truth, const std::vector<double>& predicted);
ModelScore clustering_score(const Matrix& features, const std::vector<int>& assignments);

namespace serial {
/// Brute-force scans used as oracles.
DetectionScore detection_metrics(const DetectionMask& detected, const DetectionMask& truth, std::size_t rows,
                                 std::size_t cols);
IouScore iou(const DetectionMask& a, const DetectionMask& b, const DetectionMask& truth, std::size_t rows,
             std::size_t cols);
}  // namespace serial

}  // namespace cleanbench
