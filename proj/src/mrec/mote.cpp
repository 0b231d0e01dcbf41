#include "mote.hpp"

#include <set>

#include "error.hpp"
#include "jsonfix.hpp"
#include "text.hpp"

namespace mrec::mote {

MoteConfig MoteConfig::from_json(const json& j) {
  MoteConfig c;
  if (j.is_null()) return c;
  try {
    c.template_name = j.value("template", c.template_name);
    c.max_traits = j.value("max_traits", c.max_traits);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mote config: ") + e.what());
  }
  if (c.max_traits < 1) throw ConfigError("max_traits must be >= 1");
  return c;
}

std::string render_item(const corpus::ItemRecord& item) {
  std::string title = text::collapse_whitespace(item.title);
  std::string desc = text::collapse_whitespace(item.description);
  std::string out = "Title: " + title;
  if (!desc.empty()) out += "\nDescription: " + desc;
  return out;
}

gateway::ChatRequest build_trait_prompt(const corpus::ItemRecord& item, const prompt::PromptTemplate& tmpl,
                                        const gateway::Gateway& gw) {
  if (text::trim(item.title).empty() && text::trim(item.description).empty())
    throw DegenerateItemError("item '" + item.item_id + "' has neither title nor description");
  tmpl.require({"item"});
  auto [system, user] = tmpl.render({{"item", render_item(item)}});
  return gw.make_request(gateway::ModuleTag::mote, std::move(system), std::move(user));
}

json TraitRecord::to_json() const {
  json j = {{"item_id", traits.item_id},
            {"traits", traits.traits},
            {"fallback", fallback},
            {"rejected_count", rejected_count},
            {"token_usage", usage.to_json()}};
  if (!error.empty()) j["error"] = error;
  return j;
}

TraitRecord TraitRecord::from_json(const json& j) {
  try {
    TraitRecord r;
    r.traits.item_id = j.at("item_id").get<std::string>();
    r.traits.traits = j.at("traits").get<std::vector<std::string>>();
    r.fallback = j.value("fallback", false);
    r.rejected_count = j.value("rejected_count", std::size_t{0});
    r.error = j.value("error", std::string());
    r.usage = gateway::TokenUsage::from_json(j.value("token_usage", json::object()));
    return r;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed trait record: ") + e.what());
  }
}

namespace {

bool mentions_currency(std::string_view s) {
  static constexpr std::string_view symbols[] = {"$", "\xE2\x82\xAC", "\xC2\xA3", "\xC2\xA5"};
  for (auto sym : symbols)
    if (s.find(sym) != std::string_view::npos) return true;
  auto toks = text::token_set(s);
  return toks.count("usd") || toks.count("eur") || toks.count("dollars");
}

bool mentions_brand(const std::string& trait, const corpus::ItemRecord& item) {
  auto it = item.metadata.find("brand");
  if (it == item.metadata.end()) return false;
  auto brand = text::content_token_set(it->second);
  for (auto& t : text::tokenize(trait))
    if (brand.count(t)) return true;
  return false;
}

}  // namespace

TraitRecord extract_traits(const corpus::ItemRecord& item, Env& env) {
  const auto& tmpl = env.prompts.get(env.config.template_name);
  auto req = build_trait_prompt(item, tmpl, env.gateway);
  TraitRecord out;
  out.traits.item_id = item.item_id;
  const std::string subject = "item:" + item.item_id;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto resp = env.gateway.cached_complete(req, {env.dataset, subject});
    out.usage.add(resp);
    std::vector<std::string> kept;
    std::set<std::string> seen;
    if (auto arr = parse_json_array(resp.text)) {
      for (auto& el : *arr) {
        if (!el.is_string()) {
          ++out.rejected_count;
          continue;
        }
        auto norm = schema::normalize_trait(el.get<std::string>());
        if (!norm || mentions_currency(*norm) || mentions_brand(*norm, item)) {
          ++out.rejected_count;
          continue;
        }
        if (!seen.insert(*norm).second) continue;
        if (kept.size() < env.config.max_traits) kept.push_back(*norm);
      }
    }
    if (!kept.empty()) {
      out.traits.traits = std::move(kept);
      return out;
    }
    if (attempt == 0) req.user_text += "\n\n" + (tmpl.reminder.empty() ? tmpl.output_format_note : tmpl.reminder);
  }
  throw ExtractionError("item '" + item.item_id + "': no usable traits after retry");
}

schema::TraitSet fallback_traits(const corpus::ItemRecord& item, std::size_t max_traits) {
  schema::TraitSet t;
  t.item_id = item.item_id;
  std::set<std::string> seen;
  for (auto& tok : text::tokenize(item.title)) {
    if (text::is_stopword(tok)) continue;
    auto norm = schema::normalize_trait(tok);
    if (!norm || !seen.insert(*norm).second) continue;
    t.traits.push_back(*norm);
    if (t.traits.size() == max_traits) break;
  }
  if (t.traits.empty()) t.traits.push_back(schema::normalize_trait("item " + item.item_id).value_or("unknown item"));
  return t;
}

TraitRecord traits_or_fallback(const corpus::ItemRecord& item, Env& env) {
  try {
    return extract_traits(item, env);
  } catch (const ExtractionError& e) {
    TraitRecord r;
    r.traits = fallback_traits(item, env.config.max_traits);
    r.fallback = true;
    r.error = e.what();
    return r;
  }
}

std::map<std::string, TraitRecord> traits_for_candidates(const corpus::CandidateSet& candidates,
                                                         const corpus::Corpus& corpus, Env& env) {
  std::map<std::string, TraitRecord> out;
  for (auto& id : candidates.presentation) {
    const auto* item = corpus.find_item(id);
    if (!item) throw IntegrityError("candidate '" + id + "' for user '" + candidates.user_id + "' not in corpus");
  }
  for (auto& id : candidates.presentation)
    if (!out.count(id)) out.emplace(id, traits_or_fallback(corpus.item(id), env));
  return out;
}

}  // namespace mrec::mote
