#include "text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <unordered_set>

#include "error.hpp"

namespace mrec::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> words = {
      "a",     "an",    "and",   "are",  "as",    "at",    "be",   "but",   "by",   "for",
      "from",  "has",   "have",  "i",    "in",    "into",  "is",   "it",    "its",  "my",
      "of",    "on",    "or",    "our",  "so",    "that",  "the",  "their", "them", "this",
      "to",    "was",   "were",  "with", "you",   "your",  "very", "not",   "no",   "all",
      "will",  "can",   "just",  "also", "than",  "then",  "these", "those", "they", "we",
      "he",    "she",   "his",   "her",  "me",    "us",    "do",   "does",  "did",  "been",
      "being", "which", "what",  "who",  "when",  "where", "how",  "more",  "most", "other",
      "some",  "such",  "only",  "own",  "same",  "too",   "s",    "t",     "about", "over",
      "out",   "up",    "any",   "each", "while", "if",    "there", "one",  "would", "should",
  };
  return words;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::size_t word_count(std::string_view s) { return split_whitespace(s).size(); }

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  for (auto& w : split_whitespace(s)) {
    std::size_t b = 0, e = w.size();
    while (b < e && is_punct(w[b])) ++b;
    while (e > b && is_punct(w[e - 1])) --e;
    if (e > b) out.push_back(to_lower(std::string_view(w).substr(b, e - b)));
  }
  return out;
}

std::set<std::string> token_set(std::string_view s) {
  auto toks = tokenize(s);
  return {toks.begin(), toks.end()};
}

bool is_stopword(std::string_view w) { return stopwords().count(w) > 0; }

std::set<std::string> content_token_set(std::string_view s) {
  std::set<std::string> out;
  for (auto& t : tokenize(s))
    if (!is_stopword(t)) out.insert(t);
  return out;
}

bool is_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string utf8_prefix(std::string_view s, std::size_t max_chars) {
  if (s.size() <= max_chars) return std::string(s);
  std::size_t n = max_chars;
  // back off continuation bytes
  while (n > 0 && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) --n;
  return std::string(s.substr(0, n));
}

namespace {

template <typename F>
void scan_placeholders(std::string_view t, F&& on_placeholder, std::string* out) {
  std::size_t i = 0;
  while (i < t.size()) {
    if (t[i] == '{') {
      std::size_t j = i + 1;
      while (j < t.size() && (std::islower(static_cast<unsigned char>(t[j])) || t[j] == '_')) ++j;
      if (j > i + 1 && j < t.size() && t[j] == '}') {
        on_placeholder(std::string(t.substr(i + 1, j - i - 1)));
        i = j + 1;
        continue;
      }
    }
    if (out) out->push_back(t[i]);
    ++i;
  }
}

}  // namespace

std::set<std::string> placeholders(std::string_view tmpl) {
  std::set<std::string> names;
  scan_placeholders(tmpl, [&](std::string n) { names.insert(std::move(n)); }, nullptr);
  return names;
}

std::string substitute(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  out.reserve(tmpl.size() * 2);
  scan_placeholders(
      tmpl,
      [&](const std::string& name) {
        for (auto& [k, v] : values) {
          if (k == name) {
            out += v;
            return;
          }
        }
        throw TemplateError("unresolved placeholder {" + name + "}");
      },
      &out);
  return out;
}

std::string format_rating(double r) {
  char buf[32];
  if (r == static_cast<double>(static_cast<long long>(r)))
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(r));
  else
    std::snprintf(buf, sizeof buf, "%.1f", r);
  return buf;
}

}  // namespace mrec::text
