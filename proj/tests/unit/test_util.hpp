#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "cleanbench/tabular.hpp"

namespace testutil {

inline cleanbench::Dataset csv(std::string_view text, const cleanbench::CsvOptions& opts = {}) {
    return cleanbench::dataset_from_csv_text(text, "t", opts);
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("cleanbench_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Random table with small integer domains so equalities occur often.
inline cleanbench::Dataset random_table(std::mt19937_64& rng, std::size_t rows, std::size_t cols, int domain) {
    std::vector<std::string> header;
    for (std::size_t c = 0; c < cols; ++c) header.push_back("c" + std::to_string(c));
    std::vector<std::vector<std::string>> data(rows, std::vector<std::string>(cols));
    std::uniform_int_distribution<int> value(0, domain - 1);
    std::uniform_int_distribution<int> hole(0, 29);
    for (auto& row : data)
        for (auto& cell : row) cell = hole(rng) == 0 ? "" : std::to_string(value(rng));
    cleanbench::CsvOptions opts;
    for (const auto& h : header) opts.schema[h] = cleanbench::ColumnType::numeric;
    return cleanbench::make_dataset("random", header, data, opts);
}

}  // namespace testutil
