#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cleanbench {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitFailure = 2, kExitPartial = 3 };

/// Parses and runs one verb. Never throws; failures become exit codes plus
/// an error.json record in the output directory.
int run_command(const std::vector<std::string>& args);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Applies `dotted.path=value` to a JSON document; numeric segments index
/// arrays. The value is read as JSON when it parses, else as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace cleanbench
