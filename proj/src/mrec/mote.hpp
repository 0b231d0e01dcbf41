#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "corpus.hpp"
#include "gateway.hpp"
#include "prompt.hpp"
#include "schema.hpp"

namespace mrec::mote {

using nlohmann::json;

struct MoteConfig {
  std::string template_name = "mote_base";
  std::size_t max_traits = schema::kDefaultMaxTraits;

  json to_json() const { return {{"template", template_name}, {"max_traits", max_traits}}; }
  static MoteConfig from_json(const json& j);
};

struct Env {
  gateway::Gateway& gateway;
  const prompt::PromptLibrary& prompts;
  MoteConfig config;
  std::string dataset;
};

/// "Title: ..." plus "Description: ..." when a description exists.
std::string render_item(const corpus::ItemRecord& item);

gateway::ChatRequest build_trait_prompt(const corpus::ItemRecord& item, const prompt::PromptTemplate& tmpl,
                                        const gateway::Gateway& gw);

/// One line of traits.jsonl.
struct TraitRecord {
  schema::TraitSet traits;
  bool fallback = false;
  std::size_t rejected_count = 0;
  std::string error;  // set when fallback replaced a failed extraction
  gateway::TokenUsage usage;

  json to_json() const;
  static TraitRecord from_json(const json& j);
};

/// Normalizes, filters brand and currency mentions, dedups, caps at
/// max_traits. One format-reminder retry; ExtractionError if nothing
/// survives twice.
TraitRecord extract_traits(const corpus::ItemRecord& item, Env& env);

/// Normalized title tokens, or the item id when the title is empty.
schema::TraitSet fallback_traits(const corpus::ItemRecord& item, std::size_t max_traits);

/// Exactly one entry per candidate. Failed items get fallback traits;
/// unknown ids raise IntegrityError.
std::map<std::string, TraitRecord> traits_for_candidates(const corpus::CandidateSet& candidates,
                                                         const corpus::Corpus& corpus, Env& env);

/// extract_traits with the fallback applied.
TraitRecord traits_or_fallback(const corpus::ItemRecord& item, Env& env);

}  // namespace mrec::mote
