#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cleanbench/tabular.hpp"

namespace cleanbench {

enum class RepairKind { delete_rows, mean, median, mode, knn, iterative, ground_truth };

/// Short names: delete, mean, median, mode, knn, iter, gt.
std::string_view to_string(RepairKind kind);
RepairKind parse_repair_kind(std::string_view name);

struct RepairSpec {
    RepairKind kind = RepairKind::mean;
    std::size_t k = 5;            // knn
    std::size_t max_rounds = 10;  // iter
    std::size_t max_depth = 10;   // iter trees
    std::size_t min_leaf = 3;     // iter trees

    std::string name() const;
    void validate() const;
};

/// `name[:key=value,...]`, e.g. `knn:k=3`, `iter:rounds=5`.
RepairSpec parse_repair_spec(std::string_view text);

struct RepairedDataset {
    Dataset data;
    std::string detector;
    std::string repair;
    double runtime = 0.0;
    /// Cells written, in the input (dirty) coordinates. For deleted rows, all their cells.
    DetectionMask repaired_cells;
    std::vector<std::string> warnings;
    /// Iterative imputer: RMS change of numeric imputations per round.
    std::vector<double> round_changes;
};

RepairedDataset repair_delete(const Dataset& ds, const DetectionMask& mask);

/// `stat` is mean, median or mode for numeric columns; categorical columns
/// always take the mode. Statistics use unflagged cells only; ties go to the
/// smallest value.
RepairedDataset repair_impute_stat(const Dataset& ds, const DetectionMask& mask, RepairKind stat);

RepairedDataset repair_impute_knn(const Dataset& ds, const DetectionMask& mask, std::size_t k);

RepairedDataset repair_impute_iterative(const Dataset& ds, const DetectionMask& mask, std::size_t max_rounds,
                                        std::size_t max_depth = 10, std::size_t min_leaf = 3);

/// Flagged cells take their ground-truth values; appended duplicate rows
/// with any flagged cell are dropped.
RepairedDataset repair_ground_truth(const DatasetPair& pair, const DetectionMask& mask);

/// Dispatch. `pair` is required for the ground-truth repair and ignored otherwise.
RepairedDataset run_repair(const RepairSpec& spec, const Dataset& ds, const DetectionMask& mask,
                           const DatasetPair* pair = nullptr);

namespace serial {
RepairedDataset repair_impute_knn(const Dataset& ds, const DetectionMask& mask, std::size_t k);
}  // namespace serial

}  // namespace cleanbench
