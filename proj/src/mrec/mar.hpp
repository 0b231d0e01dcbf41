#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gateway.hpp"
#include "prompt.hpp"
#include "schema.hpp"

namespace mrec::mar {

using nlohmann::json;

enum class RankMode { listwise, pointwise };
std::string to_string(RankMode m);
RankMode rank_mode_from_string(const std::string& s);

struct MarConfig {
  RankMode mode = RankMode::listwise;
  std::size_t k = 10;
  bool self_regularize = true;
  std::string listwise_template = "mar_listwise";
  std::string pointwise_template = "mar_pointwise";
  std::string rationale_template = "mar_rationale";
  std::string judge_template = "mar_judge";

  json to_json() const;
  static MarConfig from_json(const json& j);
};

struct Env {
  gateway::Gateway& gateway;
  const prompt::PromptLibrary& prompts;
  MarConfig config;
  std::string dataset;
};

/// A candidate as MAR sees it: trait list, or raw description under the
/// without-MOTE ablation.
struct Candidate {
  std::string id;
  std::string text;
};

/// "dimension: descriptor" lines.
std::string render_profile(const schema::MotivationalProfile& p);
/// "trait; trait; trait".
std::string render_traits(const std::vector<std::string>& traits);

gateway::ChatRequest build_listwise_prompt(std::string_view profile_text, const std::vector<Candidate>& candidates,
                                           std::size_t k, const prompt::PromptTemplate& tmpl,
                                           const gateway::Gateway& gw);

struct ParsedRanking {
  std::vector<std::string> ranking;  // always a permutation of the candidate ids
  std::size_t hallucination_count = 0;
  std::size_t duplicate_count = 0;
  std::size_t appended_count = 0;
};

/// Extracts the id array (strict JSON first, then quoted strings after the
/// first '['), drops ids outside the candidate set, keeps the first of any
/// duplicate, and appends missing ids in prompt order. A truncated array
/// counts as parsed. ParseError when no id list can be recovered at all.
ParsedRanking parse_ranking(std::string_view response, const std::vector<std::string>& candidate_ids);

struct AlignmentScore {
  std::string user_id;
  std::string item_id;
  double score = 0.0;
  std::string raw_response_digest;
};

AlignmentScore score_pointwise(const std::string& user_id, std::string_view profile_text, const Candidate& candidate,
                               Env& env, gateway::TokenUsage* usage = nullptr);

/// Descending score, ascending id on ties.
std::vector<std::string> rank_by_scores(const std::vector<AlignmentScore>& scores);

struct RankedList {
  std::string user_id;
  bool ok = true;
  std::string error;
  std::vector<std::string> ranking;
  std::size_t top_k = 0;
  RankMode mode = RankMode::listwise;
  std::map<std::string, std::string> rationales;
  bool regularized = false;
  std::size_t hallucination_count = 0;
  std::vector<AlignmentScore> scores;  // pointwise only
  std::optional<std::string> warning;
  gateway::TokenUsage usage;

  json to_json() const;
  static RankedList from_json(const json& j);
};

RankedList recommend_topk(const std::string& user_id, std::string_view profile_text,
                          const std::vector<Candidate>& candidates, Env& env, std::size_t k);

/// Moves `inconsistent` members of the top k just below the boundary; the
/// next items in line move up to fill the top k.
std::vector<std::string> demote(const std::vector<std::string>& ranking, std::size_t k,
                                const std::set<std::string>& inconsistent);

/// Rationale generation then consistency judgment. Best effort: any stage
/// failure returns the input unchanged with regularized = false.
RankedList self_regularize(RankedList ranked, std::string_view profile_text, const std::vector<Candidate>& candidates,
                           Env& env);

}  // namespace mrec::mar
