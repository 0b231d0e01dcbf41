#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "gateway.hpp"
#include "prompt.hpp"
#include "schema.hpp"

namespace mrec::mope {

using nlohmann::json;

struct MotivationRunConfig {
  std::string template_name = "mope_base";
  std::string reflect_template = "mope_reflect";
  bool reflective = true;
  bool coherence_gating = false;
  double coherence_threshold = 0.5;
  std::vector<std::string> variant_templates = {"mope_dominant_cues", "mope_max3"};
  bool metadata_enabled = false;
  /// Compute per-interaction coherence even when gating is off.
  bool coherence_diagnostics = true;

  void validate() const;
  json to_json() const;
  static MotivationRunConfig from_json(const json& j);
};

/// What MOPE sees of one user: the budgeted full context plus one block
/// per observed interaction.
struct UserContext {
  std::string user_id;
  std::string context;
  std::vector<std::string> blocks;
  const schema::UserMetadata* metadata = nullptr;
};

UserContext make_user_context(const std::string& user_id, const std::vector<corpus::Interaction>& observed,
                              const corpus::Corpus& corpus, const corpus::ContextOptions& opts = {},
                              const schema::UserMetadata* metadata = nullptr);

struct Env {
  gateway::Gateway& gateway;
  const schema::MotivationalSchema& schema;
  const prompt::PromptLibrary& prompts;
  MotivationRunConfig config;
  std::string dataset;
};

std::string render_schema(const schema::MotivationalSchema& schema);

gateway::ChatRequest build_motivation_prompt(std::string_view context, const schema::MotivationalSchema& schema,
                                             const schema::UserMetadata* metadata,
                                             const prompt::PromptTemplate& tmpl, bool metadata_enabled,
                                             const gateway::Gateway& gw);

struct Extraction {
  schema::MotivationalProfile profile;
  std::vector<std::string> dropped_keys;
  std::string template_name;
  int attempts = 0;
  gateway::TokenUsage usage;
};

/// Full-context extraction with one format-reminder retry. Throws
/// ExtractionError after two unusable responses.
Extraction extract_profile(const UserContext& user, Env& env, const std::string& template_name,
                           std::optional<std::string_view> context_override = std::nullopt);
inline Extraction extract_profile(const UserContext& user, Env& env) {
  return extract_profile(user, env, env.config.template_name);
}

struct Reflection {
  schema::MotivationalProfile profile;
  bool revised = false;
  std::optional<std::string> warning;
  gateway::TokenUsage usage;
};

/// Best effort: the input profile comes back unchanged (with a warning)
/// whenever the reflective answer cannot be used.
Reflection reflect_profile(const schema::MotivationalProfile& profile, const UserContext& user, Env& env);

struct PerInteraction {
  std::vector<schema::MotivationalProfile> profiles;
  double coherence = 0.0;
  std::size_t failures = 0;
  gateway::TokenUsage usage;
};

PerInteraction per_interaction_profiles(const UserContext& user, Env& env);

struct CalibrationEntry {
  std::string user_id;
  std::optional<double> coherence;
  std::string variant;
  bool switched = false;
  json to_json() const;
};

struct CalibratedResult {
  Extraction extraction;
  std::optional<CalibrationEntry> report;
  gateway::TokenUsage usage;
};

CalibratedResult calibrated_extract(const UserContext& user, Env& env);

/// One line of profiles.jsonl.
struct ProfileRecord {
  std::string user_id;
  bool ok = false;
  std::string error;
  schema::MotivationalProfile profile;
  std::optional<double> coherence;
  std::string template_variant;
  bool switched = false;
  std::vector<std::string> dropped_keys;
  std::optional<std::string> reflection_warning;
  gateway::TokenUsage usage;

  json to_json() const;
  static ProfileRecord from_json(const json& j);
};

/// Stage driver for one user: calibrated or plain extraction, optional
/// coherence diagnostics, then reflection.
ProfileRecord profile_user(const UserContext& user, Env& env);

}  // namespace mrec::mope
