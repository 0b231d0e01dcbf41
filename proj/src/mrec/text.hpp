#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mrec::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::size_t word_count(std::string_view s);

/// Lowercased whitespace-split words with leading/trailing punctuation
/// stripped; empty results are dropped.
std::vector<std::string> tokenize(std::string_view s);
std::set<std::string> token_set(std::string_view s);

/// token_set minus common English function words.
std::set<std::string> content_token_set(std::string_view s);
bool is_stopword(std::string_view w);

bool is_digits(std::string_view s);

/// First `max_chars` bytes of s, backed off to a UTF-8 boundary.
std::string utf8_prefix(std::string_view s, std::size_t max_chars);

/// Replaces every `{name}` with values[name]; throws TemplateError on an
/// unknown name. Names are [a-z_]+ so JSON braces pass through untouched.
std::string substitute(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values);
std::set<std::string> placeholders(std::string_view tmpl);

std::string format_rating(double r);

}  // namespace mrec::text
