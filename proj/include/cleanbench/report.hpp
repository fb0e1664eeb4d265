#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cleanbench/bench.hpp"

namespace cleanbench {

/// Aggregated table: group keys followed by mean, std and n per metric.
struct ReportTable {
    std::string name;
    std::vector<std::string> keys;
    std::vector<std::string> columns;           // header after the keys
    std::vector<std::vector<std::string>> rows;  // sorted by key
};

/// Model metrics grouped by any subset of dataset, detector, repair, model, scenario.
ReportTable model_report(const ResultStore& store, const std::vector<std::string>& group_by);
/// Detection precision/recall/F1/runtime per (dataset, detector).
ReportTable detection_report(const ResultStore& store);
/// Repair metrics per (dataset, detector, repair).
ReportTable repair_report(const ResultStore& store);
/// Sweep series per (dataset, axis, detector, value).
ReportTable sweep_report(const ResultStore& store);
/// Failure counts per (dataset, stage, detector, repair, model, error).
ReportTable failure_report(const ResultStore& store);
/// Detector x detector IoU for one dataset.
ReportTable iou_matrix(const ResultStore& store, const std::string& dataset);

std::string to_csv(const ReportTable& table);

/// Writes every non-empty table as <name>.csv and returns the paths written.
/// Throws DataError when the store holds nothing to report.
std::vector<std::filesystem::path> emit_report(const ResultStore& store, const std::vector<std::string>& group_by,
                                               const std::filesystem::path& out_dir);

}  // namespace cleanbench
