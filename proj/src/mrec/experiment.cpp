#include "experiment.hpp"

#include <spdlog/spdlog.h>

#include "error.hpp"
#include "rng.hpp"
#include "text.hpp"

namespace mrec::experiment {

namespace {

std::string negatives_name(corpus::NegativeDistribution d) {
  return d == corpus::NegativeDistribution::uniform ? "uniform" : "popularity";
}

const std::set<std::string>* held(const Resources& res) {
  return res.split.kind == corpus::SplitKind::item_cold_start ? &res.split.held_items : nullptr;
}

}  // namespace

json ExperimentConfig::to_json() const {
  return {{"dataset", dataset},
          {"seed", seed},
          {"ks", ks},
          {"ablation", eval::to_string(ablation.name)},
          {"negatives", negatives_name(negatives)},
          {"context", {{"token_budget", context.token_budget}, {"description_chars", context.description_chars}}},
          {"max_users", max_users},
          {"mope", mope.to_json()},
          {"mote", mote.to_json()},
          {"mar", mar.to_json()}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.dataset = j.value("dataset", c.dataset);
    c.seed = j.value("seed", c.seed);
    c.ks = j.value("ks", c.ks);
    c.ablation = eval::AblationConfig::from_json(j.value("ablation", json()));
    auto neg = j.value("negatives", std::string("uniform"));
    if (neg == "uniform") c.negatives = corpus::NegativeDistribution::uniform;
    else if (neg == "popularity") c.negatives = corpus::NegativeDistribution::popularity;
    else throw ConfigError("negatives must be 'uniform' or 'popularity'");
    if (j.contains("context")) {
      c.context.token_budget = j["context"].value("token_budget", c.context.token_budget);
      c.context.description_chars = j["context"].value("description_chars", c.context.description_chars);
    }
    c.max_users = j.value("max_users", c.max_users);
    c.mope = mope::MotivationRunConfig::from_json(j.value("mope", json::object()));
    c.mote = mote::MoteConfig::from_json(j.value("mote", json::object()));
    c.mar = mar::MarConfig::from_json(j.value("mar", json::object()));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  if (c.ks.empty()) throw ConfigError("ks must not be empty");
  for (auto k : c.ks)
    if (k < 1 || k > corpus::kCandidatePoolSize) throw ConfigError("every k must lie in [1, 30]");
  if (c.mar.k > corpus::kCandidatePoolSize) throw ConfigError("mar.k must lie in [1, 30]");
  return c;
}

std::vector<std::string> eligible_users(const Resources& res, const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  std::size_t skipped = 0;
  for (auto& uid : res.split.test_users) {
    auto* h = res.corpus.users().count(uid) ? &res.corpus.user(uid) : nullptr;
    if (!h) throw IntegrityError("split names unknown user '" + uid + "'");
    try {
      corpus::select_positive(*h, held(res));
      out.push_back(uid);
    } catch (const NoPositiveError&) {
      ++skipped;
    }
  }
  if (skipped) spdlog::info("{} test users have no qualifying positive and are skipped", skipped);
  if (cfg.max_users && out.size() > cfg.max_users) {
    std::vector<std::pair<std::uint64_t, std::string>> keyed;
    for (auto& u : out) keyed.emplace_back(derive_seed(cfg.seed, u), u);
    std::sort(keyed.begin(), keyed.end());
    keyed.resize(cfg.max_users);
    out.clear();
    for (auto& [_, u] : keyed) out.push_back(u);
    std::sort(out.begin(), out.end());
  }
  return out;
}

corpus::CandidateSet make_candidates(const Resources& res, const ExperimentConfig& cfg, const std::string& user_id) {
  corpus::CandidateOptions opts;
  opts.distribution = cfg.negatives;
  opts.restrict_positive_to = held(res);
  return corpus::build_candidate_set(res.corpus, res.corpus.user(user_id), derive_seed(cfg.seed, user_id), opts);
}

mope::UserContext user_context(const Resources& res, const ExperimentConfig& cfg, const std::string& user_id) {
  auto sel = corpus::select_positive(res.corpus.user(user_id), held(res));
  const schema::UserMetadata* meta = nullptr;
  if (res.metadata) {
    auto it = res.metadata->find(user_id);
    if (it != res.metadata->end()) meta = &it->second;
  }
  return mope::make_user_context(user_id, sel.context, res.corpus, cfg.context, meta);
}

mope::ProfileRecord make_profile(const Resources& res, const ExperimentConfig& cfg, const std::string& user_id) {
  if (cfg.ablation.raw_context()) {
    mope::ProfileRecord rec;
    rec.user_id = user_id;
    rec.ok = true;
    rec.profile.source_user = user_id;
    rec.profile.provenance = schema::Provenance::ablation_raw;
    rec.template_variant = "raw_context";
    return rec;
  }
  auto ctx = user_context(res, cfg, user_id);
  mope::Env env{res.gateway, res.schema, res.prompts, cfg.mope, cfg.dataset};
  return mope::profile_user(ctx, env);
}

mote::TraitRecord make_traits(const Resources& res, const ExperimentConfig& cfg, const std::string& item_id) {
  mote::Env env{res.gateway, res.prompts, cfg.mote, cfg.dataset};
  return mote::traits_or_fallback(res.corpus.item(item_id), env);
}

std::string raw_item_text(const corpus::ItemRecord& item, const corpus::ContextOptions& opts) {
  corpus::ItemRecord cut = item;
  cut.description = text::utf8_prefix(text::collapse_whitespace(item.description), opts.description_chars);
  return text::collapse_whitespace(mote::render_item(cut));
}

std::vector<std::string> candidate_items(const std::vector<corpus::CandidateSet>& sets) {
  std::set<std::string> ids;
  for (auto& c : sets) ids.insert(c.presentation.begin(), c.presentation.end());
  return {ids.begin(), ids.end()};
}

mar::RankedList make_ranking(const Resources& res, const ExperimentConfig& cfg, const corpus::CandidateSet& cand,
                             const mope::ProfileRecord& profile,
                             const std::map<std::string, mote::TraitRecord>& traits) {
  mar::RankedList failed;
  failed.user_id = cand.user_id;
  failed.mode = cfg.mar.mode;
  failed.ok = false;
  if (!profile.ok) {
    failed.error = "profile unavailable: " + profile.error;
    return failed;
  }
  std::string profile_text = cfg.ablation.raw_context() ? user_context(res, cfg, cand.user_id).context
                                                        : mar::render_profile(profile.profile);
  std::vector<mar::Candidate> cs;
  for (auto& id : cand.presentation) {
    if (cfg.ablation.raw_descriptions()) {
      cs.push_back({id, raw_item_text(res.corpus.item(id), cfg.context)});
      continue;
    }
    auto it = traits.find(id);
    if (it == traits.end()) throw IntegrityError("no trait record for candidate '" + id + "'");
    cs.push_back({id, mar::render_traits(it->second.traits.traits)});
  }
  mar::Env env{res.gateway, res.prompts, cfg.mar, cfg.dataset};
  try {
    auto ranked = mar::recommend_topk(cand.user_id, profile_text, cs, env, cfg.mar.k);
    if (cfg.mar.self_regularize) ranked = mar::self_regularize(std::move(ranked), profile_text, cs, env);
    return ranked;
  } catch (const ExtractionError& e) {
    failed.error = e.what();
    return failed;
  }
}

ExperimentResult run_experiment(const Resources& res, const ExperimentConfig& cfg, const gateway::PriceTable* prices) {
  ExperimentResult out;
  const int workers = res.gateway.config().max_in_flight;
  auto users = eligible_users(res, cfg);
  out.candidates = parallel_map<corpus::CandidateSet>(users.size(), workers,
                                                      [&](std::size_t i) { return make_candidates(res, cfg, users[i]); });
  out.profiles = parallel_map<mope::ProfileRecord>(users.size(), workers,
                                                   [&](std::size_t i) { return make_profile(res, cfg, users[i]); });
  if (!cfg.ablation.raw_descriptions()) {
    auto items = candidate_items(out.candidates);
    auto recs = parallel_map<mote::TraitRecord>(items.size(), workers,
                                                [&](std::size_t i) { return make_traits(res, cfg, items[i]); });
    for (std::size_t i = 0; i < items.size(); ++i) out.traits.emplace(items[i], std::move(recs[i]));
  }
  out.rankings = parallel_map<mar::RankedList>(users.size(), workers, [&](std::size_t i) {
    return make_ranking(res, cfg, out.candidates[i], out.profiles[i], out.traits);
  });
  std::map<std::string, corpus::CandidateSet> by_user;
  for (auto& c : out.candidates) by_user.emplace(c.user_id, c);
  out.report = eval::evaluate(out.rankings, by_user, cfg.ks, cfg.dataset, eval::to_string(cfg.ablation.name));
  if (prices)
    out.cost = gateway::cost_report(res.gateway.ledger().entries(), *prices, std::max<std::size_t>(users.size(), 1),
                                    cfg.dataset);
  return out;
}

}  // namespace mrec::experiment
