#include "jsonfix.hpp"

namespace mrec {

namespace {

std::optional<nlohmann::json> parse_enclosed(std::string_view text, char open, char close,
                                             nlohmann::json::value_t want) {
  auto whole = nlohmann::json::parse(text, nullptr, false);
  if (!whole.is_discarded() && whole.type() == want) return whole;
  auto b = text.find(open);
  auto e = text.rfind(close);
  if (b == std::string_view::npos || e == std::string_view::npos || e < b) return std::nullopt;
  auto inner = nlohmann::json::parse(text.substr(b, e - b + 1), nullptr, false);
  if (inner.is_discarded() || inner.type() != want) return std::nullopt;
  return inner;
}

}  // namespace

std::optional<nlohmann::json> parse_json_object(std::string_view text) {
  return parse_enclosed(text, '{', '}', nlohmann::json::value_t::object);
}

std::optional<nlohmann::json> parse_json_array(std::string_view text) {
  return parse_enclosed(text, '[', ']', nlohmann::json::value_t::array);
}

}  // namespace mrec
