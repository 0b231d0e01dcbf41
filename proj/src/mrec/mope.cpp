#include "mope.hpp"

#include <spdlog/spdlog.h>

#include "error.hpp"
#include "jsonfix.hpp"
#include "text.hpp"

namespace mrec::mope {

void MotivationRunConfig::validate() const {
  if (!(coherence_threshold >= 0.0 && coherence_threshold <= 1.0))
    throw ConfigError("coherence_threshold must lie in [0, 1]");
  if (coherence_gating && variant_templates.empty())
    throw ConfigError("coherence gating needs at least one variant template");
}

json MotivationRunConfig::to_json() const {
  return {{"template", template_name},
          {"reflect_template", reflect_template},
          {"reflective", reflective},
          {"coherence_gating", coherence_gating},
          {"coherence_threshold", coherence_threshold},
          {"variants", variant_templates},
          {"metadata_enabled", metadata_enabled},
          {"coherence_diagnostics", coherence_diagnostics}};
}

MotivationRunConfig MotivationRunConfig::from_json(const json& j) {
  MotivationRunConfig c;
  if (j.is_null()) return c;
  try {
    c.template_name = j.value("template", c.template_name);
    c.reflect_template = j.value("reflect_template", c.reflect_template);
    c.reflective = j.value("reflective", c.reflective);
    c.coherence_gating = j.value("coherence_gating", c.coherence_gating);
    c.coherence_threshold = j.value("coherence_threshold", c.coherence_threshold);
    c.variant_templates = j.value("variants", c.variant_templates);
    c.metadata_enabled = j.value("metadata_enabled", c.metadata_enabled);
    c.coherence_diagnostics = j.value("coherence_diagnostics", c.coherence_diagnostics);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mope config: ") + e.what());
  }
  c.validate();
  return c;
}

UserContext make_user_context(const std::string& user_id, const std::vector<corpus::Interaction>& observed,
                              const corpus::Corpus& corpus, const corpus::ContextOptions& opts,
                              const schema::UserMetadata* metadata) {
  UserContext u;
  u.user_id = user_id;
  u.metadata = metadata;
  u.context = corpus::build_semantic_context(observed, corpus, opts);
  for (auto& x : observed) u.blocks.push_back(corpus::build_semantic_context({x}, corpus, opts));
  return u;
}

std::string render_schema(const schema::MotivationalSchema& schema) {
  std::string out;
  for (auto& d : schema.dimensions()) {
    if (!out.empty()) out += '\n';
    out += "- " + d.name + ": " + d.definition;
  }
  return out;
}

namespace {

std::string render_metadata(const schema::UserMetadata* m, bool enabled) {
  if (!enabled || !m || m->attributes.empty()) return {};
  std::string out = "Shopper attributes:\n<metadata>\n";
  for (auto& [k, v] : m->attributes) out += k + ": " + v + "\n";
  out += "</metadata>\n\n";
  return out;
}

}  // namespace

gateway::ChatRequest build_motivation_prompt(std::string_view context, const schema::MotivationalSchema& schema,
                                             const schema::UserMetadata* metadata,
                                             const prompt::PromptTemplate& tmpl, bool metadata_enabled,
                                             const gateway::Gateway& gw) {
  if (text::trim(context).empty()) throw ExtractionError("motivation prompt needs a nonempty context");
  tmpl.require({"context", "schema", "metadata"});
  auto [system, user] = tmpl.render({{"context", std::string(context)},
                                     {"schema", render_schema(schema)},
                                     {"metadata", render_metadata(metadata, metadata_enabled)}});
  return gw.make_request(gateway::ModuleTag::mope, std::move(system), std::move(user));
}

Extraction extract_profile(const UserContext& user, Env& env, const std::string& template_name,
                           std::optional<std::string_view> context_override) {
  const auto& tmpl = env.prompts.get(template_name);
  auto req = build_motivation_prompt(context_override.value_or(user.context), env.schema, user.metadata, tmpl,
                                     env.config.metadata_enabled, env.gateway);
  Extraction out;
  out.template_name = template_name;
  std::string last_problem;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto resp = env.gateway.cached_complete(req, {env.dataset, user.user_id});
    out.usage.add(resp);
    out.attempts = attempt + 1;
    if (auto obj = parse_json_object(resp.text)) {
      try {
        auto v = schema::validate_profile(*obj, env.schema);
        out.profile = std::move(v.profile);
        out.profile.source_user = user.user_id;
        out.profile.provenance = schema::Provenance::generated;
        out.dropped_keys = std::move(v.dropped_keys);
        return out;
      } catch (const SchemaViolation& e) {
        last_problem = e.what();
      }
    } else {
      last_problem = "response is not a JSON object";
    }
    if (attempt == 0) req.user_text += "\n\n" + (tmpl.reminder.empty() ? tmpl.output_format_note : tmpl.reminder);
  }
  throw ExtractionError("user '" + user.user_id + "': profile extraction failed twice (" + last_problem + ")");
}

Reflection reflect_profile(const schema::MotivationalProfile& profile, const UserContext& user, Env& env) {
  Reflection out;
  out.profile = profile;
  auto warn = [&](std::string msg) {
    spdlog::warn("reflection for user '{}': {}", user.user_id, msg);
    out.warning = std::move(msg);
    return out;
  };
  try {
    const auto& tmpl = env.prompts.get(env.config.reflect_template);
    tmpl.require({"profile", "context", "schema"});
    auto [system, text] = tmpl.render({{"profile", profile.entries_json().dump()},
                                       {"context", user.context},
                                       {"schema", render_schema(env.schema)}});
    auto req = env.gateway.make_request(gateway::ModuleTag::mope_reflect, std::move(system), std::move(text));
    auto resp = env.gateway.cached_complete(req, {env.dataset, user.user_id});
    out.usage.add(resp);

    if (auto obj = parse_json_object(resp.text)) {
      schema::ValidatedProfile v;
      try {
        v = schema::validate_profile(*obj, env.schema);
      } catch (const SchemaViolation& e) {
        return warn(std::string("revision rejected: ") + e.what());
      }
      if (!v.dropped_keys.empty()) return warn("revision proposes off-schema keys; original kept");
      out.profile.entries = std::move(v.profile.entries);
      out.profile.provenance = schema::Provenance::reflected;
      out.revised = out.profile.entries != profile.entries;
      return out;
    }
    auto lower = text::to_lower(resp.text);
    if (lower.find("agree") != std::string::npos && lower.find("disagree") == std::string::npos) {
      out.profile.provenance = schema::Provenance::reflected;
      return out;
    }
    return warn("reflective answer neither affirms nor revises; original kept");
  } catch (const GatewayError&) {
    throw;
  } catch (const Error& e) {
    return warn(e.what());
  }
}

PerInteraction per_interaction_profiles(const UserContext& user, Env& env) {
  PerInteraction out;
  for (auto& block : user.blocks) {
    try {
      auto e = extract_profile(user, env, env.config.template_name, std::string_view(block));
      out.usage += e.usage;
      out.profiles.push_back(std::move(e.profile));
    } catch (const ExtractionError&) {
      ++out.failures;
    }
  }
  if (out.profiles.empty())
    throw ExtractionError("user '" + user.user_id + "': no per-interaction profile could be extracted");
  out.coherence = schema::consistency_score(out.profiles);
  return out;
}

json CalibrationEntry::to_json() const {
  return {{"user_id", user_id},
          {"coherence", coherence ? json(*coherence) : json(nullptr)},
          {"variant", variant},
          {"switched", switched}};
}

CalibratedResult calibrated_extract(const UserContext& user, Env& env) {
  CalibratedResult out;
  if (!env.config.coherence_gating) {
    out.extraction = extract_profile(user, env);
    out.usage = out.extraction.usage;
    return out;
  }
  CalibrationEntry entry;
  entry.user_id = user.user_id;
  try {
    auto pi = per_interaction_profiles(user, env);
    out.usage += pi.usage;
    entry.coherence = pi.coherence;
  } catch (const ExtractionError&) {
    // no per-interaction evidence: treat as incoherent
  }
  const bool incoherent = !entry.coherence || *entry.coherence < env.config.coherence_threshold;
  std::vector<std::string> ladder;
  if (!incoherent) ladder.push_back(env.config.template_name);
  ladder.insert(ladder.end(), env.config.variant_templates.begin(), env.config.variant_templates.end());

  std::string last_error;
  for (auto& name : ladder) {
    try {
      out.extraction = extract_profile(user, env, name);
      out.usage += out.extraction.usage;
      entry.variant = name;
      entry.switched = name != env.config.template_name;
      out.report = entry;
      return out;
    } catch (const ExtractionError& e) {
      last_error = e.what();
    }
  }
  throw ExtractionError("user '" + user.user_id + "': every prompt variant failed (" + last_error + ")");
}

json ProfileRecord::to_json() const {
  json j = {{"user_id", user_id}, {"status", ok ? "ok" : "failed"}};
  if (!ok) {
    j["error"] = error;
    j["token_usage"] = usage.to_json();
    return j;
  }
  j["entries"] = profile.entries_json();
  j["provenance"] = schema::to_string(profile.provenance);
  j["coherence"] = coherence ? json(*coherence) : json(nullptr);
  j["template_variant"] = template_variant;
  j["switched"] = switched;
  j["dropped_keys"] = dropped_keys;
  if (reflection_warning) j["reflection_warning"] = *reflection_warning;
  j["token_usage"] = usage.to_json();
  return j;
}

ProfileRecord ProfileRecord::from_json(const json& j) {
  try {
    ProfileRecord r;
    r.user_id = j.at("user_id").get<std::string>();
    r.ok = j.at("status").get<std::string>() == "ok";
    r.usage = gateway::TokenUsage::from_json(j.value("token_usage", json::object()));
    if (!r.ok) {
      r.error = j.value("error", std::string());
      return r;
    }
    for (auto& [k, v] : j.at("entries").items()) r.profile.entries[k] = v.get<std::string>();
    r.profile.source_user = r.user_id;
    r.profile.provenance = schema::provenance_from_string(j.at("provenance").get<std::string>());
    if (!j.at("coherence").is_null()) r.coherence = j["coherence"].get<double>();
    r.template_variant = j.value("template_variant", std::string());
    r.switched = j.value("switched", false);
    r.dropped_keys = j.value("dropped_keys", std::vector<std::string>{});
    if (j.contains("reflection_warning")) r.reflection_warning = j["reflection_warning"].get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed profile record: ") + e.what());
  }
}

ProfileRecord profile_user(const UserContext& user, Env& env) {
  ProfileRecord rec;
  rec.user_id = user.user_id;
  try {
    auto cal = calibrated_extract(user, env);
    rec.usage += cal.usage;
    rec.profile = cal.extraction.profile;
    rec.dropped_keys = cal.extraction.dropped_keys;
    rec.template_variant = cal.extraction.template_name;
    if (cal.report) {
      rec.coherence = cal.report->coherence;
      rec.switched = cal.report->switched;
    } else if (env.config.coherence_diagnostics) {
      try {
        auto pi = per_interaction_profiles(user, env);
        rec.usage += pi.usage;
        rec.coherence = pi.coherence;
      } catch (const ExtractionError&) {
      }
    }
    if (env.config.reflective) {
      auto r = reflect_profile(rec.profile, user, env);
      rec.usage += r.usage;
      rec.profile = std::move(r.profile);
      rec.reflection_warning = std::move(r.warning);
    }
    rec.ok = true;
  } catch (const ExtractionError& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace mrec::mope
