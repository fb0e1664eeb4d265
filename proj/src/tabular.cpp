#include "cleanbench/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

namespace cleanbench {

std::string_view to_string(ColumnType type) {
    switch (type) {
        case ColumnType::numeric: return "numeric";
        case ColumnType::categorical: return "categorical";
        case ColumnType::text: return "text";
    }
    return "categorical";
}

ColumnType parse_column_type(std::string_view name) {
    if (name == "numeric") return ColumnType::numeric;
    if (name == "categorical") return ColumnType::categorical;
    if (name == "text") return ColumnType::text;
    throw InputError("unknown column type: " + std::string(name));
}

bool NullTokens::contains(std::string_view raw) const {
    if (raw.empty()) return true;
    return std::find(tokens.begin(), tokens.end(), raw) != tokens.end();
}

const NullTokens& NullTokens::defaults() {
    static const NullTokens instance;
    return instance;
}

CellValue CellValue::make(std::string raw, const NullTokens& nulls) {
    CellValue v;
    v.is_empty = nulls.contains(raw);
    if (!v.is_empty) v.parsed = parse_number(raw);
    v.raw = std::move(raw);
    return v;
}

// --- Dataset -----------------------------------------------------------

Dataset::Dataset(std::string name, std::vector<Column> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {
    std::size_t rows = columns_.empty() ? 0 : columns_.front().cells.size();
    std::unordered_set<std::string> seen;
    for (const auto& col : columns_) {
        if (col.cells.size() != rows)
            throw InputError("column '" + col.name + "' has " + std::to_string(col.cells.size()) +
                             " cells, expected " + std::to_string(rows));
        if (!seen.insert(col.name).second) throw InputError("duplicate column name: " + col.name);
    }
    row_ids_.resize(rows);
    std::iota(row_ids_.begin(), row_ids_.end(), std::size_t{0});
}

std::optional<std::size_t> Dataset::find_column(std::string_view name) const {
    for (std::size_t c = 0; c < columns_.size(); ++c)
        if (columns_[c].name == name) return c;
    return std::nullopt;
}

std::size_t Dataset::column_index(std::string_view name) const {
    if (auto c = find_column(name)) return *c;
    throw InputError("unknown column: " + std::string(name));
}

std::vector<std::string> Dataset::column_names() const {
    std::vector<std::string> names;
    names.reserve(columns_.size());
    for (const auto& col : columns_) names.push_back(col.name);
    return names;
}

void Dataset::set_row_ids(std::vector<std::size_t> ids) {
    if (ids.size() != row_count()) throw InputError("row id count does not match row count");
    row_ids_ = std::move(ids);
}

void Dataset::set_raw(std::size_t row, std::size_t col, std::string raw) {
    columns_.at(col).cells.at(row) = CellValue::make(std::move(raw), nulls_);
}

void Dataset::append_row_copy(std::size_t source_row, std::size_t id) {
    if (source_row >= row_count()) throw InputError("append_row_copy: row out of range");
    for (auto& col : columns_) col.cells.push_back(col.cells[source_row]);
    row_ids_.push_back(id);
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    Dataset out;
    out.name_ = name_;
    out.nulls_ = nulls_;
    out.metadata_ = metadata_;
    out.columns_.reserve(columns_.size());
    for (const auto& col : columns_) {
        Column c{col.name, col.declared_type, {}};
        c.cells.reserve(rows.size());
        for (std::size_t r : rows) c.cells.push_back(col.cells.at(r));
        out.columns_.push_back(std::move(c));
    }
    out.row_ids_.reserve(rows.size());
    for (std::size_t r : rows) out.row_ids_.push_back(row_ids_.at(r));
    return out;
}

// --- DetectionMask -----------------------------------------------------

DetectionMask::DetectionMask(std::vector<CellRef> cells, std::string source)
    : cells_(std::move(cells)), source_(std::move(source)) {
    std::sort(cells_.begin(), cells_.end());
    cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
}

bool DetectionMask::contains(CellRef ref) const {
    return std::binary_search(cells_.begin(), cells_.end(), ref);
}

void DetectionMask::insert(CellRef ref) {
    auto it = std::lower_bound(cells_.begin(), cells_.end(), ref);
    if (it == cells_.end() || *it != ref) cells_.insert(it, ref);
}

DetectionMask DetectionMask::unite(const DetectionMask& other) const {
    DetectionMask out(source_);
    std::set_union(cells_.begin(), cells_.end(), other.cells_.begin(), other.cells_.end(),
                   std::back_inserter(out.cells_));
    return out;
}

DetectionMask DetectionMask::intersect(const DetectionMask& other) const {
    DetectionMask out(source_);
    std::set_intersection(cells_.begin(), cells_.end(), other.cells_.begin(), other.cells_.end(),
                          std::back_inserter(out.cells_));
    return out;
}

DetectionMask DetectionMask::subtract(const DetectionMask& other) const {
    DetectionMask out(source_);
    std::set_difference(cells_.begin(), cells_.end(), other.cells_.begin(), other.cells_.end(),
                        std::back_inserter(out.cells_));
    return out;
}

std::vector<std::size_t> DetectionMask::rows() const {
    std::vector<std::size_t> out;
    for (const auto& c : cells_)
        if (out.empty() || out.back() != c.row) out.push_back(c.row);
    return out;
}

void DetectionMask::check_bounds(std::size_t rows, std::size_t cols) const {
    for (const auto& c : cells_)
        if (c.row >= rows || c.col >= cols)
            throw InputError("mask cell (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                             ") outside a " + std::to_string(rows) + "x" + std::to_string(cols) + " grid");
}

std::size_t DatasetPair::logical_row(std::size_t row_id) const {
    if (auto it = duplicate_source.find(row_id); it != duplicate_source.end()) return it->second;
    return row_id;
}

// --- CSV ---------------------------------------------------------------

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        records.push_back(std::move(record));
        record.clear();
        field_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                if (!field.empty())
                    throw InputError("line " + std::to_string(line) + ": quote inside unquoted field");
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;
                end_record();
                ++line;
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                field.push_back(ch);
                field_started = true;
        }
    }
    if (in_quotes) throw InputError("unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

std::string write_csv_field(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

Dataset make_dataset(std::string name, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows, const CsvOptions& options) {
    std::vector<Column> columns(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        columns[c].name = header[c];
        columns[c].cells.reserve(rows.size());
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != header.size())
            throw InputError("ragged row " + std::to_string(r + 1) + ": " + std::to_string(rows[r].size()) +
                             " fields, header has " + std::to_string(header.size()));
        for (std::size_t c = 0; c < header.size(); ++c)
            columns[c].cells.push_back(CellValue::make(rows[r][c], options.nulls));
    }

    std::map<std::string, std::string> metadata;
    for (auto& col : columns) {
        if (auto it = options.schema.find(col.name); it != options.schema.end()) {
            col.declared_type = it->second;
            continue;
        }
        std::size_t non_empty = 0, numeric = 0;
        for (const auto& cell : col.cells) {
            if (cell.is_empty) continue;
            ++non_empty;
            if (cell.parsed) ++numeric;
        }
        double ratio = non_empty == 0 ? 0.0 : static_cast<double>(numeric) / static_cast<double>(non_empty);
        col.declared_type = (non_empty > 0 && ratio >= options.numeric_threshold) ? ColumnType::numeric
                                                                                  : ColumnType::categorical;
        metadata["inference_ratio." + col.name] = format_number(ratio);
    }
    for (const auto& [col, _] : options.schema)
        if (std::find(header.begin(), header.end(), col) == header.end())
            throw InputError("schema names unknown column: " + col);

    Dataset ds(std::move(name), std::move(columns));
    ds.set_null_tokens(options.nulls);
    ds.metadata() = std::move(metadata);
    return ds;
}

Dataset dataset_from_csv_text(std::string_view text, std::string name, const CsvOptions& options) {
    auto records = parse_csv(text);
    if (records.empty()) throw InputError("missing header row");
    std::vector<std::string> header = std::move(records.front());
    records.erase(records.begin());
    return make_dataset(std::move(name), header, records, options);
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return dataset_from_csv_text(buf.str(), path.stem().string(), options);
}

std::string to_csv_text(const Dataset& ds) {
    std::string out;
    for (std::size_t c = 0; c < ds.col_count(); ++c) {
        if (c) out.push_back(',');
        out += write_csv_field(ds.column(c).name);
    }
    out.push_back('\n');
    for (std::size_t r = 0; r < ds.row_count(); ++r) {
        for (std::size_t c = 0; c < ds.col_count(); ++c) {
            if (c) out.push_back(',');
            out += write_csv_field(ds.cell(r, c).raw);
        }
        out.push_back('\n');
    }
    return out;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << to_csv_text(ds);
    if (!out) throw Error("write failed: " + path.string());
}

// --- masks -------------------------------------------------------------

std::string to_mask_text(const DetectionMask& mask) {
    std::string out;
    for (const auto& c : mask.cells())
        out += std::to_string(c.row) + "," + std::to_string(c.col) + "," + mask.source() + "\n";
    return out;
}

DetectionMask mask_from_text(std::string_view text) {
    std::vector<CellRef> cells;
    std::string source;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto first = line.find(',');
        auto second = first == std::string::npos ? std::string::npos : line.find(',', first + 1);
        auto row = parse_number(std::string_view(line).substr(0, first));
        auto col = first == std::string::npos
                       ? std::nullopt
                       : parse_number(std::string_view(line).substr(first + 1, second - first - 1));
        if (!row || !col || *row < 0 || *col < 0)
            throw InputError("mask line " + std::to_string(line_no) + ": expected row,col,source");
        cells.push_back({static_cast<std::size_t>(*row), static_cast<std::size_t>(*col)});
        if (second != std::string::npos && source.empty()) source = line.substr(second + 1);
    }
    return DetectionMask(std::move(cells), std::move(source));
}

void save_mask(const DetectionMask& mask, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << to_mask_text(mask);
}

DetectionMask load_mask(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return mask_from_text(buf.str());
}

DetectionMask row_cells(std::span<const std::size_t> rows, std::size_t cols, std::string source) {
    std::vector<CellRef> cells;
    cells.reserve(rows.size() * cols);
    for (std::size_t r : rows)
        for (std::size_t c = 0; c < cols; ++c) cells.push_back({r, c});
    return DetectionMask(std::move(cells), std::move(source));
}

// --- operations --------------------------------------------------------

DetectionMask diff_cells(const Dataset& gt, const Dataset& dirty) {
    if (gt.row_count() != dirty.row_count() || gt.col_count() != dirty.col_count())
        throw InputError("diff_cells: shape mismatch (" + std::to_string(gt.row_count()) + "x" +
                         std::to_string(gt.col_count()) + " vs " + std::to_string(dirty.row_count()) + "x" +
                         std::to_string(dirty.col_count()) + ")");
    for (std::size_t c = 0; c < gt.col_count(); ++c)
        if (gt.column(c).name != dirty.column(c).name)
            throw InputError("diff_cells: column names differ at index " + std::to_string(c));
    std::vector<CellRef> cells;
    for (std::size_t r = 0; r < gt.row_count(); ++r)
        for (std::size_t c = 0; c < gt.col_count(); ++c)
            if (gt.cell(r, c).raw != dirty.cell(r, c).raw) cells.push_back({r, c});
    return DetectionMask(std::move(cells), "diff");
}

SplitIndices split_indices(std::size_t row_count, const SplitSpec& spec) {
    if (row_count < 2) throw InputError("split needs at least 2 rows");
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
        throw InputError("test_fraction must lie in (0,1)");
    auto test_size = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(row_count)));
    if (test_size == 0 || test_size >= row_count)
        throw InputError("test_fraction " + format_number(spec.test_fraction) + " leaves an empty partition for " +
                         std::to_string(row_count) + " rows");
    std::vector<std::size_t> order(row_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(spec.seed, "split"));
    std::shuffle(order.begin(), order.end(), rng);
    SplitIndices out;
    out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_size));
    out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(test_size), order.end());
    std::sort(out.test.begin(), out.test.end());
    std::sort(out.train.begin(), out.train.end());
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    auto idx = split_indices(ds.row_count(), spec);
    return {ds.select_rows(idx.train), ds.select_rows(idx.test)};
}

}  // namespace cleanbench
