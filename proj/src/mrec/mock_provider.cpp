// Deterministic stand-in for a chat model. It reads the tagged sections the
// shipped prompt templates emit (<schema>, <history>, <item>, <profile>,
// <candidates>, ...) and answers with simple lexical rules:
//   mope          profile from schema keywords found in the history
//   mope_reflect  AGREE when the recomputed profile matches <previous>
//   mote          short clauses of the item text as traits
//   mar           candidates ordered by profile/candidate token overlap
//   mar_reflect   rationales naming shared tokens; judged by overlap
#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "corpus.hpp"
#include "gateway.hpp"
#include "jsonfix.hpp"
#include "text.hpp"

namespace mrec::gateway {

namespace {

std::optional<std::string> last_block(std::string_view text, const std::string& tag) {
  const std::string open = "<" + tag + ">", close = "</" + tag + ">";
  auto b = text.rfind(open);
  if (b == std::string_view::npos) return std::nullopt;
  b += open.size();
  auto e = text.find(close, b);
  if (e == std::string_view::npos) return std::nullopt;
  return text::trim(text.substr(b, e - b));
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i <= s.size()) {
    auto j = s.find('\n', i);
    if (j == std::string::npos) j = s.size();
    auto line = text::trim(std::string_view(s).substr(i, j - i));
    if (!line.empty()) out.push_back(line);
    i = j + 1;
  }
  return out;
}

// "id: text" lines
std::vector<std::pair<std::string, std::string>> keyed_lines(const std::string& block) {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto& l : lines_of(block)) {
    auto c = l.find(':');
    if (c == std::string::npos) continue;
    out.emplace_back(text::trim(l.substr(0, c)), text::trim(l.substr(c + 1)));
  }
  return out;
}

std::size_t overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t n = 0;
  for (auto& x : a) n += b.count(x);
  return n;
}

std::string mock_profile(const std::string& prompt) {
  auto schema_block = last_block(prompt, "schema");
  auto history = last_block(prompt, "history");
  if (!schema_block || !history) return "I cannot determine the motivation from this input.";

  std::vector<std::pair<std::string, std::set<std::string>>> lexicon;
  for (auto& l : lines_of(*schema_block)) {
    std::string line = l.rfind("- ", 0) == 0 ? l.substr(2) : l;
    auto c = line.find(':');
    std::string name = text::trim(line.substr(0, c));
    auto words = text::content_token_set(name + " " + (c == std::string::npos ? "" : line.substr(c + 1)));
    lexicon.emplace_back(name, std::move(words));
  }

  std::map<std::string, int> freq;
  for (auto& t : text::tokenize(*history))
    if (!text::is_stopword(t) && !text::is_digits(t)) ++freq[t];

  auto top_words = [&](const std::set<std::string>* within) {
    std::vector<std::pair<int, std::string>> v;
    for (auto& [w, n] : freq)
      if (!within || within->count(w)) v.emplace_back(-n, w);
    std::sort(v.begin(), v.end());
    std::string out;
    for (std::size_t i = 0; i < v.size() && i < 4; ++i) out += (i ? " " : "") + v[i].second;
    return std::make_pair(v.empty() ? 0 : -v.front().first, out);
  };

  std::vector<std::tuple<int, std::size_t, std::string, std::string>> hits;  // (-weight, order, dim, desc)
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    int weight = 0;
    for (auto& [w, n] : freq)
      if (lexicon[i].second.count(w)) weight += n;
    if (weight == 0) continue;
    hits.emplace_back(-weight, i, lexicon[i].first, top_words(&lexicon[i].second).second);
  }
  std::sort(hits.begin(), hits.end());

  std::smatch m;
  static const std::regex limit_re(R"(at most (\d+) (?:motivation )?dimensions)");
  std::size_t limit = hits.size();
  if (std::regex_search(prompt, m, limit_re)) limit = std::min<std::size_t>(limit, std::stoul(m[1].str()));

  json out = json::object();
  for (std::size_t i = 0; i < hits.size() && i < limit; ++i) out[std::get<2>(hits[i])] = std::get<3>(hits[i]);
  if (out.empty()) {
    auto [n, words] = top_words(nullptr);
    if (n == 0 || lexicon.empty()) return "I cannot determine the motivation from this input.";
    out[lexicon.front().first] = words;
  }
  return out.dump();
}

std::string mock_reflect(const std::string& prompt) {
  auto previous = last_block(prompt, "previous");
  auto fresh = mock_profile(prompt);
  if (previous) {
    auto prev = parse_json_object(*previous);
    auto now = parse_json_object(fresh);
    if (prev && now && *prev == *now) return "AGREE";
  }
  return fresh;
}

std::string mock_traits(const std::string& prompt) {
  auto item = last_block(prompt, "item");
  if (!item) return "[]";
  std::string title, description;
  for (auto& l : lines_of(*item)) {
    if (l.rfind("Title:", 0) == 0) title = text::trim(l.substr(6));
    else if (l.rfind("Description:", 0) == 0) description = text::trim(l.substr(12));
  }
  const std::string& src = description.empty() ? title : description;
  json traits = json::array();
  std::string clause;
  auto flush = [&] {
    auto words = text::split_whitespace(clause);
    clause.clear();
    if (words.empty()) return;
    std::string phrase;
    if (words.size() <= 8) {
      for (auto& w : words) phrase += (phrase.empty() ? "" : " ") + w;
    } else {
      int kept = 0;
      for (auto& w : words) {
        auto t = text::tokenize(w);
        if (t.empty() || text::is_stopword(t.front())) continue;
        phrase += (phrase.empty() ? "" : " ") + t.front();
        if (++kept == 4) break;
      }
    }
    if (!phrase.empty() && traits.size() < 8) traits.push_back(phrase);
  };
  for (char c : src) {
    if (c == '.' || c == ',' || c == ';' || c == '!' || c == '?' || c == '\n') flush();
    else clause.push_back(c);
  }
  flush();
  return traits.dump();
}

std::string mock_listwise(const std::string& prompt) {
  auto profile = text::content_token_set(last_block(prompt, "profile").value_or(""));
  auto cands = keyed_lines(last_block(prompt, "candidates").value_or(""));
  std::vector<std::pair<long, std::string>> scored;
  for (auto& [id, body] : cands) scored.emplace_back(-static_cast<long>(overlap(profile, text::content_token_set(body))), id);
  std::sort(scored.begin(), scored.end());
  json out = json::array();
  for (auto& [_, id] : scored) out.push_back(id);
  return out.dump();
}

std::string mock_pointwise(const std::string& prompt) {
  auto profile = text::content_token_set(last_block(prompt, "profile").value_or(""));
  auto traits = text::content_token_set(last_block(prompt, "item_traits").value_or(""));
  if (traits.empty()) return "0";
  long score = std::lround(100.0 * static_cast<double>(overlap(profile, traits)) / static_cast<double>(traits.size()));
  return std::to_string(score);
}

std::string mock_rationales(const std::string& prompt) {
  auto profile = text::content_token_set(last_block(prompt, "profile").value_or(""));
  json out = json::object();
  for (auto& [id, body] : keyed_lines(last_block(prompt, "top_items").value_or(""))) {
    std::string shared;
    for (auto& t : text::content_token_set(body))
      if (profile.count(t)) shared += (shared.empty() ? "" : ", ") + t;
    out[id] = shared.empty() ? "No clear link to the shopper's stated motivations."
                             : "Serves the shopper through " + shared + ".";
  }
  return out.dump();
}

std::string mock_judgments(const std::string& prompt) {
  auto profile = text::content_token_set(last_block(prompt, "profile").value_or(""));
  json out = json::object();
  for (auto& [id, rationale] : keyed_lines(last_block(prompt, "rationales").value_or("")))
    out[id] = overlap(profile, text::content_token_set(rationale)) > 0 ? "consistent" : "inconsistent";
  return out.dump();
}

class MockProvider final : public Provider {
 public:
  ProviderKind kind() const override { return ProviderKind::mock; }

  ProviderReply send(const ChatRequest& req) override {
    const std::string& p = req.user_text;
    std::string text;
    switch (req.module_tag) {
      case ModuleTag::mope: text = mock_profile(p); break;
      case ModuleTag::mope_reflect: text = mock_reflect(p); break;
      case ModuleTag::mote: text = mock_traits(p); break;
      case ModuleTag::mar:
        text = p.find("<item_traits>") != std::string::npos ? mock_pointwise(p) : mock_listwise(p);
        break;
      case ModuleTag::mar_reflect:
        text = p.find("<rationales>") != std::string::npos ? mock_judgments(p) : mock_rationales(p);
        break;
    }
    ProviderReply r;
    r.prompt_tokens = static_cast<long>(corpus::estimate_tokens(req.system_text) + corpus::estimate_tokens(req.user_text));
    r.completion_tokens = static_cast<long>(corpus::estimate_tokens(text));
    r.text = std::move(text);
    return r;
  }
};

}  // namespace

std::shared_ptr<Provider> make_mock_provider() { return std::make_shared<MockProvider>(); }

}  // namespace mrec::gateway
