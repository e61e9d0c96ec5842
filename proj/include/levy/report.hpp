#pragma once

// Serialization helpers shared by the library and the command-line tool.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace levy {

using Json = nlohmann::ordered_json;

/// 17 significant digits, '.' decimal point, independent of the global locale.
std::string format_double(double x);

/// Empty string for a missing value.
std::string format_optional(const std::optional<double>& x);

/// Writes one comma-separated row followed by '\n'.
void write_csv_row(std::ostream& os, const std::vector<std::string>& cells);

/// JSON value for an optional double (null when empty or non-finite).
Json to_json(const std::optional<double>& x);

/// JSON value for a double (null when non-finite).
Json finite_or_null(double x);

/// Library version string.
std::string tool_version();

}  // namespace levy
