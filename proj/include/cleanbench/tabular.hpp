#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cleanbench/common.hpp"

namespace cleanbench {

enum class ColumnType { numeric, categorical, text };

std::string_view to_string(ColumnType type);
ColumnType parse_column_type(std::string_view name);

/// Tokens read as "no value". Empty text is always null.
struct NullTokens {
    std::vector<std::string> tokens{"", "NA", "N/A", "NaN", "nan", "null", "NULL", "?"};

    bool contains(std::string_view raw) const;
    static const NullTokens& defaults();
};

struct CellValue {
    std::string raw;
    std::optional<double> parsed;
    bool is_empty = true;

    static CellValue make(std::string raw, const NullTokens& nulls = NullTokens::defaults());
};

struct Column {
    std::string name;
    ColumnType declared_type = ColumnType::categorical;
    std::vector<CellValue> cells;

    bool is_numeric() const { return declared_type == ColumnType::numeric; }
};

struct CellRef {
    std::size_t row = 0;
    std::size_t col = 0;

    auto operator<=>(const CellRef&) const = default;
};

/// Rows x columns of tagged cells. Each row carries a stable id: the row's
/// position in the table it was first loaded or generated as. Rows derived
/// from other rows (subsets, appended duplicates) keep or receive ids so
/// versions of the same data can be aligned.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::string name, std::vector<Column> columns);

    const std::string& name() const { return name_; }
    void set_name(std::string name) { name_ = std::move(name); }

    std::size_t row_count() const { return row_ids_.size(); }
    std::size_t col_count() const { return columns_.size(); }
    std::size_t cell_count() const { return row_count() * col_count(); }

    const std::vector<Column>& columns() const { return columns_; }
    const Column& column(std::size_t c) const { return columns_.at(c); }
    const CellValue& cell(std::size_t row, std::size_t col) const { return columns_[col].cells[row]; }
    const CellValue& cell(CellRef ref) const { return cell(ref.row, ref.col); }

    std::optional<std::size_t> find_column(std::string_view name) const;
    std::size_t column_index(std::string_view name) const;  // throws InputError
    std::vector<std::string> column_names() const;

    const std::vector<std::size_t>& row_ids() const { return row_ids_; }
    std::size_t row_id(std::size_t row) const { return row_ids_[row]; }
    void set_row_ids(std::vector<std::size_t> ids);

    /// Replaces one cell; null tokens follow the dataset's configured set.
    void set_raw(std::size_t row, std::size_t col, std::string raw);

    /// Appends a copy of `source_row` with the given id.
    void append_row_copy(std::size_t source_row, std::size_t id);

    /// New dataset holding the given rows (in the given order) with their ids.
    Dataset select_rows(std::span<const std::size_t> rows) const;

    const NullTokens& null_tokens() const { return nulls_; }
    void set_null_tokens(NullTokens nulls) { nulls_ = std::move(nulls); }

    std::map<std::string, std::string>& metadata() { return metadata_; }
    const std::map<std::string, std::string>& metadata() const { return metadata_; }

private:
    std::string name_;
    std::vector<Column> columns_;
    std::vector<std::size_t> row_ids_;
    NullTokens nulls_;
    std::map<std::string, std::string> metadata_;
};

/// Sorted, duplicate-free set of cells plus the name of whatever produced it.
class DetectionMask {
public:
    DetectionMask() = default;
    explicit DetectionMask(std::string source) : source_(std::move(source)) {}
    DetectionMask(std::vector<CellRef> cells, std::string source);

    const std::vector<CellRef>& cells() const { return cells_; }
    const std::string& source() const { return source_; }
    void set_source(std::string source) { source_ = std::move(source); }
    std::size_t size() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }
    bool contains(CellRef ref) const;

    /// Inserts keeping order; for bulk building prefer the vector constructor.
    void insert(CellRef ref);

    DetectionMask unite(const DetectionMask& other) const;
    DetectionMask intersect(const DetectionMask& other) const;
    DetectionMask subtract(const DetectionMask& other) const;

    /// Set of rows touched by the mask.
    std::vector<std::size_t> rows() const;

    /// Throws InputError if any cell lies outside the grid.
    void check_bounds(std::size_t rows, std::size_t cols) const;

    bool operator==(const DetectionMask& other) const { return cells_ == other.cells_; }

private:
    std::vector<CellRef> cells_;
    std::string source_;
};

struct DatasetPair {
    Dataset ground_truth;
    Dataset dirty;
    DetectionMask error_mask;
    /// Appended duplicate row (dirty position) -> ground-truth row it copies.
    std::map<std::size_t, std::size_t> duplicate_source;

    /// Ground-truth row a dirty-version row id stands for.
    std::size_t logical_row(std::size_t row_id) const;
};

struct SplitSpec {
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

struct CsvOptions {
    NullTokens nulls;
    /// Declared column types by name; missing columns are inferred.
    std::map<std::string, ColumnType> schema;
    /// Share of non-empty cells that must parse for a column to be inferred numeric.
    double numeric_threshold = 0.9;
};

// --- CSV ---------------------------------------------------------------

/// RFC-4180 reader. Returns header + records as raw text.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string write_csv_field(std::string_view field);

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
Dataset dataset_from_csv_text(std::string_view text, std::string name, const CsvOptions& options = {});
std::string to_csv_text(const Dataset& ds);
void save_csv(const Dataset& ds, const std::filesystem::path& path);

/// Builds a dataset from string rows with inferred/declared types.
Dataset make_dataset(std::string name, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows, const CsvOptions& options = {});

// --- masks -------------------------------------------------------------

/// Line-delimited `row,col,source` records.
void save_mask(const DetectionMask& mask, const std::filesystem::path& path);
DetectionMask load_mask(const std::filesystem::path& path);
std::string to_mask_text(const DetectionMask& mask);
DetectionMask mask_from_text(std::string_view text);

/// All cells of the given rows.
DetectionMask row_cells(std::span<const std::size_t> rows, std::size_t cols, std::string source);

// --- operations --------------------------------------------------------

/// Cells whose raw text differs. Requires identical shape and column names.
DetectionMask diff_cells(const Dataset& gt, const Dataset& dirty);

SplitIndices split_indices(std::size_t row_count, const SplitSpec& spec);
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

}  // namespace cleanbench
