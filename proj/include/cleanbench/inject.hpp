#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cleanbench/constraints.hpp"
#include "cleanbench/tabular.hpp"

namespace cleanbench {

enum class ErrorKind {
    explicit_mv,
    implicit_mv,
    gaussian_outlier,
    keyboard_typo,
    value_swap,
    duplicate_row,
    mislabel,
    rule_violation,
};

std::string_view to_string(ErrorKind kind);
ErrorKind parse_error_kind(std::string_view name);

/// One requested error type. `rate` is a fraction of all u*v cells for
/// cell-level kinds and a fraction of rows for duplicate_row and mislabel.
struct ErrorSpec {
    ErrorKind kind = ErrorKind::explicit_mv;
    double rate = 0.0;
    double degree = 4.0;                   // gaussian_outlier, in clean-column sigmas
    std::string label_column;              // mislabel
    std::vector<std::string> constraint_ids;  // rule_violation; empty = all FDs
    std::vector<std::string> columns;      // optional restriction of target columns
};

struct ErrorProfile {
    std::vector<ErrorSpec> entries;
    /// Never touched except by mislabel on its own label column.
    std::vector<std::string> protected_columns;

    void validate() const;
};

struct InjectionReport {
    std::map<ErrorKind, DetectionMask> masks;
    std::map<ErrorKind, std::size_t> totals;
    std::size_t cell_total = 0;  // cell-level kinds only; duplicates excluded
    double achieved_rate = 0.0;  // cell_total / (u*v)
    std::uint64_t seed = 0;
};

struct InjectionResult {
    DatasetPair pair;
    InjectionReport report;
};

/// Number of cells a rate asks for: round(rate * u * v).
std::size_t requested_cells(double rate, std::size_t rows, std::size_t cols);

/// Injects the profile into a copy of `gt`. Cell-level kinds are applied in
/// profile order without reusing cells; duplicates are appended last.
InjectionResult inject(const Dataset& gt, const ErrorProfile& profile, std::uint64_t seed,
                       const std::vector<DenialConstraint>& constraints = {});

/// Disguise codes and tokens shared with the disguised-missing detector.
const std::vector<std::string>& disguise_codes();
const std::vector<std::string>& disguise_tokens();

/// One random keyboard edit (adjacent-key substitution, insertion, deletion
/// or transposition); always returns text different from `text`.
std::string keyboard_typo(std::string_view text, Rng& rng);

/// Keys adjacent to `key` on a QWERTY layout (lower-case letters and digits).
std::string_view qwerty_neighbors(char key);

// --- synthetic data ----------------------------------------------------

enum class SyntheticKind { linear_regression, blobs, two_class };

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::linear_regression;
    std::size_t rows = 100;
    std::uint64_t seed = 0;
    std::vector<double> weights{3.0, -2.0};            // linear_regression / two_class
    double noise = 0.1;                                // linear_regression target noise sigma
    std::vector<std::vector<double>> centers{{0, 0}, {10, 10}};  // blobs
    double cluster_std = 1.0;                          // blobs
    double bias = 0.0;                                 // two_class
};

SyntheticKind parse_synthetic_kind(std::string_view name);

/// Deterministic dataset; generative parameters are stored in metadata.
/// linear_regression: x1..xd ~ N(0,1), y = X w + N(0, noise^2).
/// blobs: x1..xd around round-robin centers, categorical "cluster" column.
/// two_class: x1..xd ~ N(0,1), categorical "label" = pos iff x.w + bias > 0.
Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace cleanbench
