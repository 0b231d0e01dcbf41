#pragma once

#include <optional>
#include <string_view>

#include <json.hpp>

namespace mrec {

/// Parses text as a JSON object; failing that, retries once on the span
/// between the first '{' and the last '}'.
std::optional<nlohmann::json> parse_json_object(std::string_view text);

/// Same repair for arrays, using the outermost brackets.
std::optional<nlohmann::json> parse_json_array(std::string_view text);

}  // namespace mrec
