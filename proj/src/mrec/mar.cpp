#include "mar.hpp"

#include <algorithm>
#include <regex>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "corpus.hpp"
#include "error.hpp"
#include "hash.hpp"
#include "jsonfix.hpp"
#include "text.hpp"

namespace mrec::mar {

std::string to_string(RankMode m) { return m == RankMode::listwise ? "listwise" : "pointwise"; }

RankMode rank_mode_from_string(const std::string& s) {
  if (s == "listwise") return RankMode::listwise;
  if (s == "pointwise") return RankMode::pointwise;
  throw ConfigError("unknown MAR mode '" + s + "'");
}

json MarConfig::to_json() const {
  return {{"mode", to_string(mode)},
          {"k", k},
          {"self_regularize", self_regularize},
          {"listwise_template", listwise_template},
          {"pointwise_template", pointwise_template},
          {"rationale_template", rationale_template},
          {"judge_template", judge_template}};
}

MarConfig MarConfig::from_json(const json& j) {
  MarConfig c;
  if (j.is_null()) return c;
  try {
    c.mode = rank_mode_from_string(j.value("mode", std::string("listwise")));
    c.k = j.value("k", c.k);
    c.self_regularize = j.value("self_regularize", c.self_regularize);
    c.listwise_template = j.value("listwise_template", c.listwise_template);
    c.pointwise_template = j.value("pointwise_template", c.pointwise_template);
    c.rationale_template = j.value("rationale_template", c.rationale_template);
    c.judge_template = j.value("judge_template", c.judge_template);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mar config: ") + e.what());
  }
  if (c.k < 1 || c.k > corpus::kCandidatePoolSize) throw ConfigError("mar.k must lie in [1, 30]");
  return c;
}

std::string render_profile(const schema::MotivationalProfile& p) {
  std::string out;
  for (auto& [k, v] : p.entries) {
    if (!out.empty()) out += '\n';
    out += k + ": " + v;
  }
  return out;
}

std::string render_traits(const std::vector<std::string>& traits) {
  std::string out;
  for (auto& t : traits) {
    if (!out.empty()) out += "; ";
    out += t;
  }
  return out;
}

namespace {

std::string candidate_lines(const std::vector<Candidate>& cs) {
  std::string out;
  for (auto& c : cs) {
    if (!out.empty()) out += '\n';
    out += c.id + ": " + text::collapse_whitespace(c.text);
  }
  return out;
}

void check_pool(std::size_t n) {
  if (n != corpus::kCandidatePoolSize)
    throw ProtocolError("expected " + std::to_string(corpus::kCandidatePoolSize) + " candidates, got " +
                        std::to_string(n));
}

std::string append_reminder(const std::string& user, const prompt::PromptTemplate& t) {
  return user + "\n\n" + (t.reminder.empty() ? t.output_format_note : t.reminder);
}

}  // namespace

gateway::ChatRequest build_listwise_prompt(std::string_view profile_text, const std::vector<Candidate>& candidates,
                                           std::size_t k, const prompt::PromptTemplate& tmpl,
                                           const gateway::Gateway& gw) {
  check_pool(candidates.size());
  tmpl.require({"profile", "candidates"});
  auto [system, user] = tmpl.render({{"profile", std::string(profile_text)},
                                     {"candidates", candidate_lines(candidates)},
                                     {"count", std::to_string(candidates.size())},
                                     {"k", std::to_string(k)}});
  return gw.make_request(gateway::ModuleTag::mar, std::move(system), std::move(user));
}

ParsedRanking parse_ranking(std::string_view response, const std::vector<std::string>& candidate_ids) {
  check_pool(candidate_ids.size());
  std::vector<std::string> raw;
  bool parsed = false;
  if (auto arr = parse_json_array(response)) {
    parsed = true;
    for (auto& el : *arr) {
      if (el.is_string()) raw.push_back(text::trim(el.get<std::string>()));
      else if (el.is_number_integer()) raw.push_back(std::to_string(el.get<long long>()));
      else if (el.is_object() && el.contains("id") && el["id"].is_string()) raw.push_back(el["id"].get<std::string>());
    }
  } else if (auto b = response.find('['); b != std::string_view::npos) {
    // Repair: truncated or otherwise broken array; salvage complete strings.
    static const std::regex quoted(R"re("((?:[^"\\]|\\.)*)")re");
    std::string tail(response.substr(b));
    for (std::sregex_iterator it(tail.begin(), tail.end(), quoted), end; it != end; ++it) raw.push_back((*it)[1].str());
    parsed = !raw.empty() || tail.find(']') == std::string::npos;
  }
  if (!parsed) throw ParseError("no candidate id list found in response");

  std::unordered_set<std::string_view> valid(candidate_ids.begin(), candidate_ids.end());
  std::unordered_set<std::string> placed;
  ParsedRanking out;
  for (auto& id : raw) {
    if (!valid.count(id)) {
      ++out.hallucination_count;
      continue;
    }
    if (!placed.insert(id).second) {
      ++out.duplicate_count;
      continue;
    }
    out.ranking.push_back(id);
  }
  for (auto& id : candidate_ids) {
    if (placed.count(id)) continue;
    out.ranking.push_back(id);
    ++out.appended_count;
  }
  return out;
}

AlignmentScore score_pointwise(const std::string& user_id, std::string_view profile_text, const Candidate& candidate,
                               Env& env, gateway::TokenUsage* usage) {
  const auto& tmpl = env.prompts.get(env.config.pointwise_template);
  tmpl.require({"profile", "traits"});
  auto [system, user] = tmpl.render({{"profile", std::string(profile_text)}, {"traits", candidate.text}});
  auto req = env.gateway.make_request(gateway::ModuleTag::mar, std::move(system), std::move(user));
  static const std::regex number(R"(-?\d+(?:\.\d+)?)");
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto resp = env.gateway.cached_complete(req, {env.dataset, user_id});
    if (usage) usage->add(resp);
    std::smatch m;
    if (std::regex_search(resp.text, m, number)) {
      double s = std::clamp(std::stod(m.str()), 0.0, 100.0);
      return {user_id, candidate.id, s, sha256_hex(resp.text).substr(0, 16)};
    }
    if (attempt == 0) req.user_text = append_reminder(req.user_text, tmpl);
  }
  throw RecommendationError("user '" + user_id + "': non-numeric compatibility score for '" + candidate.id + "'");
}

std::vector<std::string> rank_by_scores(const std::vector<AlignmentScore>& scores) {
  std::vector<const AlignmentScore*> v;
  for (auto& s : scores) v.push_back(&s);
  std::stable_sort(v.begin(), v.end(), [](const AlignmentScore* a, const AlignmentScore* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->item_id < b->item_id;
  });
  std::vector<std::string> out;
  for (auto* s : v) out.push_back(s->item_id);
  return out;
}

json RankedList::to_json() const {
  json j = {{"user_id", user_id}, {"status", ok ? "ok" : "failed"}, {"mode", to_string(mode)}};
  if (!ok) {
    j["error"] = error;
    j["token_usage"] = usage.to_json();
    return j;
  }
  j["ranking"] = ranking;
  j["top_k"] = top_k;
  if (!rationales.empty()) j["rationales"] = rationales;
  j["regularized"] = regularized;
  j["hallucination_count"] = hallucination_count;
  if (!scores.empty()) {
    json s = json::object();
    for (auto& a : scores) s[a.item_id] = a.score;
    j["scores"] = s;
  }
  if (warning) j["warning"] = *warning;
  j["token_usage"] = usage.to_json();
  return j;
}

RankedList RankedList::from_json(const json& j) {
  try {
    RankedList r;
    r.user_id = j.at("user_id").get<std::string>();
    r.ok = j.value("status", std::string("ok")) == "ok";
    r.mode = rank_mode_from_string(j.value("mode", std::string("listwise")));
    r.usage = gateway::TokenUsage::from_json(j.value("token_usage", json::object()));
    if (!r.ok) {
      r.error = j.value("error", std::string());
      return r;
    }
    r.ranking = j.at("ranking").get<std::vector<std::string>>();
    r.top_k = j.at("top_k").get<std::size_t>();
    r.rationales = j.value("rationales", std::map<std::string, std::string>{});
    r.regularized = j.value("regularized", false);
    r.hallucination_count = j.value("hallucination_count", std::size_t{0});
    if (j.contains("scores"))
      for (auto& [id, s] : j["scores"].items()) r.scores.push_back({r.user_id, id, s.get<double>(), ""});
    if (j.contains("warning")) r.warning = j["warning"].get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed ranking record: ") + e.what());
  }
}

RankedList recommend_topk(const std::string& user_id, std::string_view profile_text,
                          const std::vector<Candidate>& candidates, Env& env, std::size_t k) {
  check_pool(candidates.size());
  if (k < 1 || k > candidates.size()) throw ArgumentError("k must lie in [1, " + std::to_string(candidates.size()) + "]");
  RankedList out;
  out.user_id = user_id;
  out.top_k = k;
  out.mode = env.config.mode;

  if (env.config.mode == RankMode::pointwise) {
    for (auto& c : candidates) out.scores.push_back(score_pointwise(user_id, profile_text, c, env, &out.usage));
    out.ranking = rank_by_scores(out.scores);
    return out;
  }

  std::vector<std::string> ids;
  for (auto& c : candidates) ids.push_back(c.id);
  const auto& tmpl = env.prompts.get(env.config.listwise_template);
  auto req = build_listwise_prompt(profile_text, candidates, k, tmpl, env.gateway);
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto resp = env.gateway.cached_complete(req, {env.dataset, user_id});
    out.usage.add(resp);
    try {
      auto parsed = parse_ranking(resp.text, ids);
      out.ranking = std::move(parsed.ranking);
      out.hallucination_count = parsed.hallucination_count;
      return out;
    } catch (const ParseError&) {
      if (attempt == 0) req.user_text = append_reminder(req.user_text, tmpl);
    }
  }
  throw RecommendationError("user '" + user_id + "': ranking response unparseable after retry");
}

std::vector<std::string> demote(const std::vector<std::string>& ranking, std::size_t k,
                                const std::set<std::string>& inconsistent) {
  k = std::min(k, ranking.size());
  std::vector<std::string> kept, dropped;
  for (std::size_t i = 0; i < k; ++i) (inconsistent.count(ranking[i]) ? dropped : kept).push_back(ranking[i]);
  if (dropped.empty()) return ranking;
  std::vector<std::string> out = kept;
  std::size_t next = k;
  while (out.size() < k && next < ranking.size()) out.push_back(ranking[next++]);
  out.insert(out.end(), dropped.begin(), dropped.end());
  out.insert(out.end(), ranking.begin() + static_cast<std::ptrdiff_t>(next), ranking.end());
  return out;
}

RankedList self_regularize(RankedList ranked, std::string_view profile_text, const std::vector<Candidate>& candidates,
                           Env& env) {
  if (ranked.top_k < 1) throw ArgumentError("self_regularize needs top_k >= 1");
  auto fail = [&](const std::string& why) {
    spdlog::warn("self-regularization for user '{}' skipped: {}", ranked.user_id, why);
    ranked.regularized = false;
    ranked.warning = why;
    return ranked;
  };
  std::unordered_map<std::string, const Candidate*> by_id;
  for (auto& c : candidates) by_id[c.id] = &c;
  const std::size_t k = std::min(ranked.top_k, ranked.ranking.size());
  try {
    std::vector<Candidate> top;
    for (std::size_t i = 0; i < k; ++i) {
      auto it = by_id.find(ranked.ranking[i]);
      top.push_back({ranked.ranking[i], it == by_id.end() ? std::string() : it->second->text});
    }

    const auto& rt = env.prompts.get(env.config.rationale_template);
    rt.require({"profile", "items"});
    auto [s1, u1] = rt.render({{"profile", std::string(profile_text)}, {"items", candidate_lines(top)}});
    auto r1 = env.gateway.cached_complete(
        env.gateway.make_request(gateway::ModuleTag::mar_reflect, std::move(s1), std::move(u1)),
        {env.dataset, ranked.user_id});
    ranked.usage.add(r1);
    auto obj1 = parse_json_object(r1.text);
    if (!obj1) return fail("rationale response unparseable");
    std::map<std::string, std::string> rationales;
    for (auto& c : top)
      if (obj1->contains(c.id) && (*obj1)[c.id].is_string())
        rationales[c.id] = text::collapse_whitespace((*obj1)[c.id].get<std::string>());
    if (rationales.empty()) return fail("no rationale matched a top-k id");

    std::string lines;
    for (auto& c : top) {
      auto it = rationales.find(c.id);
      if (it == rationales.end()) continue;
      if (!lines.empty()) lines += '\n';
      lines += c.id + ": " + it->second;
    }
    const auto& jt = env.prompts.get(env.config.judge_template);
    jt.require({"profile", "rationales"});
    auto [s2, u2] = jt.render({{"profile", std::string(profile_text)}, {"rationales", lines}});
    auto r2 = env.gateway.cached_complete(
        env.gateway.make_request(gateway::ModuleTag::mar_reflect, std::move(s2), std::move(u2)),
        {env.dataset, ranked.user_id});
    ranked.usage.add(r2);
    auto obj2 = parse_json_object(r2.text);
    if (!obj2) return fail("consistency response unparseable");

    std::set<std::string> inconsistent;
    for (auto& [id, verdict] : obj2->items()) {
      if (!rationales.count(id)) continue;
      bool bad = verdict.is_boolean() ? !verdict.get<bool>()
                                      : verdict.is_string() && text::to_lower(text::trim(verdict.get<std::string>())) == "inconsistent";
      if (bad) inconsistent.insert(id);
    }
    ranked.ranking = demote(ranked.ranking, k, inconsistent);
    ranked.rationales = std::move(rationales);
    ranked.regularized = true;
    return ranked;
  } catch (const GatewayError&) {
    throw;
  } catch (const Error& e) {
    return fail(e.what());
  }
}

}  // namespace mrec::mar
