#pragma once

#include <json.hpp>

#include <string>

namespace repsim::cli {

/// Shortest decimal string that parses back to exactly `value`. Non-finite
/// values have no JSON spelling and come out as "null".
std::string format_double(double value);

/// Compact serialization of `j` with every floating-point number written by
/// format_double. Key order is preserved.
std::string dump_json(const nlohmann::ordered_json& j);

}  // namespace repsim::cli
