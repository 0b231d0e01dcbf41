#include "runner.hpp"

#include <algorithm>
#include <functional>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "error.hpp"
#include "hash.hpp"
#include "io.hpp"

namespace mrec::runner {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::candidates: return "candidates";
    case Stage::profiles: return "profiles";
    case Stage::traits: return "traits";
    case Stage::rankings: return "rankings";
    case Stage::report: return "report";
  }
  return "ingest";
}

Stage stage_from_string(const std::string& s) {
  for (auto st : kStages)
    if (to_string(st) == s) return st;
  throw ArgumentError("unknown stage '" + s + "' (ingest, candidates, profiles, traits, rankings, report)");
}

// --- config ------------------------------------------------------------------------

namespace {

const std::set<std::string> kTopLevelKeys = {
    "dataset", "data",   "schema",    "prompts", "provider", "remote", "models", "gateway",
    "cache_dir", "prices", "split",   "seed",    "ks",       "ablation", "negatives", "context",
    "max_users", "mope",  "mote",     "mar",     "output_dir"};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path q(p);
  return (q.is_absolute() ? q : base / q).lexically_normal();
}

fs::path existing(const fs::path& base, const json& j, const char* what) {
  if (!j.is_string()) throw ConfigError(std::string(what) + " must be a path string");
  auto p = resolve(base, j.get<std::string>());
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  return p;
}

json stamp(const std::string& fp, std::uint64_t seed) { return {{"fingerprint", fp}, {"seed", seed}}; }

std::string hash_prompt_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string acc;
  for (auto& f : files) acc += f.filename().string() + ":" + sha256_file(f.string()) + "\n";
  return sha256_hex(acc);
}

}  // namespace

gateway::GatewayConfig gateway_config_from_json(const json& models, const json& gw, const json& cache_dir,
                                                const fs::path& base_dir) {
  using gateway::ModuleTag;
  auto cfg = gateway::GatewayConfig::defaults();
  if (!models.is_null()) {
    if (!models.is_object()) throw ConfigError("models must be an object keyed by module");
    auto apply = [&](ModuleTag t, const json& v) {
      json spec = v.is_string() ? json{{"model", v}} : v;
      cfg.module_params[t] = gateway::GenerationParams::from_json(spec, cfg.module_params[t]);
    };
    // A module's reflective pass follows it unless configured on its own.
    for (auto& [key, v] : models.items()) {
      auto tag = gateway::module_tag_from_string(key);
      apply(tag, v);
      if (tag == ModuleTag::mope && !models.contains("mope_reflect")) apply(ModuleTag::mope_reflect, v);
      if (tag == ModuleTag::mar && !models.contains("mar_reflect")) apply(ModuleTag::mar_reflect, v);
    }
  }
  if (!gw.is_null()) {
    try {
      cfg.max_in_flight = gw.value("max_in_flight", cfg.max_in_flight);
      cfg.requests_per_minute = gw.value("requests_per_minute", cfg.requests_per_minute);
      if (gw.contains("retry")) {
        auto& r = gw["retry"];
        cfg.retry.max_retries = r.value("max_retries", cfg.retry.max_retries);
        cfg.retry.base_delay_ms = r.value("base_delay_ms", cfg.retry.base_delay_ms);
        cfg.retry.max_delay_ms = r.value("max_delay_ms", cfg.retry.max_delay_ms);
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("gateway: ") + e.what());
    }
    if (cfg.max_in_flight < 1) throw ConfigError("gateway.max_in_flight must be >= 1");
    if (cfg.requests_per_minute < 0) throw ConfigError("gateway.requests_per_minute must be >= 0");
    if (cfg.retry.max_retries < 0) throw ConfigError("gateway.retry.max_retries must be >= 0");
  }
  if (!cache_dir.is_null()) {
    if (!cache_dir.is_string()) throw ConfigError("cache_dir must be a path string");
    cfg.cache_dir = resolve(base_dir, cache_dir.get<std::string>());
  }
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path, const json& overrides) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!overrides.is_null()) doc.merge_patch(overrides);
  return from_json(doc, fs::absolute(path).parent_path());
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base) {
  for (auto& [k, _] : j.items())
    if (!kTopLevelKeys.count(k)) throw ConfigError("unknown config key '" + k + "'");
  RunConfig c;
  c.document = j;
  try {
    const auto& d = j.at("data");
    c.data.interactions = existing(base, d.at("interactions"), "data.interactions");
    c.data.items = existing(base, d.at("items"), "data.items");
    if (d.contains("fields")) c.data.fields = corpus::FieldMapping::from_json(d["fields"]);
    if (d.contains("metadata")) c.data.metadata = existing(base, d["metadata"], "data.metadata");
    if (d.contains("metadata_whitelist"))
      c.data.metadata_whitelist = d["metadata_whitelist"].get<std::set<std::string>>();
    c.data.min_interactions = d.value("min_interactions", c.data.min_interactions);

    c.schema_path = existing(base, j.at("schema"), "schema");
    c.prompts_dir = existing(base, j.at("prompts"), "prompts");
    if (!fs::is_directory(c.prompts_dir)) throw ConfigError("prompts must be a directory");

    c.provider = j.value("provider", c.provider);
    if (c.provider != "mock" && c.provider != "remote") throw ConfigError("provider must be 'mock' or 'remote'");
    if (j.contains("remote")) {
      auto& r = j["remote"];
      c.remote.endpoint = r.value("endpoint", c.remote.endpoint);
      c.remote.api_key_env = r.value("api_key_env", c.remote.api_key_env);
      c.remote.timeout_seconds = r.value("timeout_seconds", c.remote.timeout_seconds);
    }
    c.gateway = gateway_config_from_json(j.value("models", json()), j.value("gateway", json()),
                                         j.value("cache_dir", json()), base);
    if (j.contains("prices")) c.prices_path = existing(base, j["prices"], "prices");

    if (j.contains("split")) {
      auto& s = j["split"];
      c.split.kind = corpus::split_kind_from_string(s.value("kind", std::string("standard")));
      c.split.fraction = s.value("fraction", c.split.fraction);
      c.split.max_interactions = s.value("max_interactions", c.split.max_interactions);
      if (!(c.split.fraction > 0.0 && c.split.fraction <= 1.0)) throw ConfigError("split.fraction must lie in (0, 1]");
    }
    if (j.contains("seed") && !j["seed"].is_number_integer()) throw ConfigError("seed must be an integer");
    c.experiment = experiment::ExperimentConfig::from_json(j);
    if (!j.contains("output_dir") || !j["output_dir"].is_string()) throw ConfigError("output_dir is required");
    c.output_dir = resolve(base, j["output_dir"].get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

json RunConfig::fingerprint_basis() const {
  json b = document;
  for (auto k : {"output_dir", "cache_dir", "gateway", "prices"}) b.erase(k);
  json content = {{"schema", sha256_file(schema_path.string())},
                  {"prompts", hash_prompt_dir(prompts_dir)},
                  {"interactions", sha256_file(data.interactions.string())},
                  {"items", sha256_file(data.items.string())}};
  if (data.metadata) content["metadata"] = sha256_file(data.metadata->string());
  b["content"] = content;
  b["effective"] = {{"experiment", experiment.to_json()}};
  json params = json::object();
  for (auto& [t, p] : gateway.module_params) params[gateway::to_string(t)] = p.to_json();
  b["effective"]["models"] = params;
  return b;
}

std::string RunConfig::fingerprint() const { return sha256_hex(fingerprint_basis().dump()); }

// --- session -----------------------------------------------------------------------

json RunSummary::to_json() const {
  json st = json::array();
  for (auto& s : stages) st.push_back({{"stage", runner::to_string(s.stage)}, {"status", s.status}, {"records", s.records}});
  return {{"stages", st}, {"provider_calls", provider_calls}, {"cache_hits", cache_hits}, {"fingerprint", fingerprint}};
}

Session::Session(RunConfig cfg, std::shared_ptr<gateway::Provider> provider) : cfg_(std::move(cfg)) {
  fingerprint_ = cfg_.fingerprint();
  schema_ = schema::MotivationalSchema::load(cfg_.schema_path);
  prompts_ = prompt::PromptLibrary::load_dir(cfg_.prompts_dir);
  const auto& e = cfg_.experiment;
  std::vector<std::string> needed = {e.mope.template_name, e.mope.reflect_template, e.mote.template_name,
                                     e.mar.listwise_template, e.mar.pointwise_template, e.mar.rationale_template,
                                     e.mar.judge_template};
  needed.insert(needed.end(), e.mope.variant_templates.begin(), e.mope.variant_templates.end());
  for (auto& n : needed) prompts_.get(n);
  if (!provider)
    provider = cfg_.provider == "remote" ? gateway::make_remote_provider(cfg_.remote) : gateway::make_mock_provider();
  gateway_ = std::make_unique<gateway::Gateway>(cfg_.gateway, std::move(provider));
}

const corpus::Corpus& Session::corpus() {
  if (!corpus_) {
    auto raw = corpus::ingest_reviews(cfg_.data.interactions, cfg_.data.items, cfg_.data.fields);
    corpus_ = corpus::filter_min_interactions(raw, cfg_.data.min_interactions);
    ingest_stats_ = corpus_->stats_json(cfg_.experiment.dataset);
    ingest_stats_["dropped_interactions"] = raw.dropped_count();
    ingest_stats_["min_interactions"] = cfg_.data.min_interactions;
    ingest_stats_["raw"] = raw.stats_json(cfg_.experiment.dataset);
    if (cfg_.data.metadata) metadata_ = schema::load_metadata(*cfg_.data.metadata, cfg_.data.metadata_whitelist);
  }
  return *corpus_;
}

json Session::ingest() {
  corpus();
  json out = ingest_stats_;
  out.update(stamp(fingerprint_, cfg_.experiment.seed));
  io::write_json(cfg_.output_dir / "corpus_stats.json", out);
  return out;
}

json Session::load_manifest() const {
  auto p = cfg_.output_dir / "manifest.json";
  if (!fs::exists(p)) return {{"stages", json::object()}};
  auto m = io::read_json(p);
  if (!m.contains("stages")) m["stages"] = json::object();
  return m;
}

void Session::save_manifest(const json& m) const { io::write_json(cfg_.output_dir / "manifest.json", m); }

void Session::flush_ledger() {
  auto entries = gateway_->ledger().entries();
  if (entries.size() <= ledger_flushed_) return;
  std::vector<gateway::LedgerEntry> fresh(entries.begin() + static_cast<std::ptrdiff_t>(ledger_flushed_), entries.end());
  ledger_flushed_ = entries.size();
  // Calls for one subject are sequential; sorting by subject removes the
  // interleaving between workers.
  std::stable_sort(fresh.begin(), fresh.end(), [](auto& a, auto& b) { return a.subject < b.subject; });
  io::JsonlAppender out(cfg_.output_dir / "ledger.jsonl");
  for (auto& e : fresh) {
    auto j = e.to_json();
    j.update(stamp(fingerprint_, cfg_.experiment.seed));
    out.append(j);
  }
}

namespace {

const std::map<Stage, std::vector<std::string>> kArtifacts = {
    {Stage::ingest, {"corpus_stats.json"}},
    {Stage::candidates, {"split.json", "candidates.jsonl"}},
    {Stage::profiles, {"profiles.jsonl"}},
    {Stage::traits, {"traits.jsonl"}},
    {Stage::rankings, {"rankings.jsonl"}},
    {Stage::report, {"report.json", "report.txt", "cost.json", "cost.txt"}}};

template <typename Rec>
struct RecordIo {
  std::function<std::string(const Rec&)> key;
  std::function<json(const Rec&)> to_json;
  std::function<Rec(const json&)> from_json;
};

std::vector<json> read_records(const fs::path& p) {
  std::vector<json> out;
  if (!fs::exists(p)) return out;
  io::for_each_line(p, [&](std::size_t line, std::string_view s) {
    try {
      out.push_back(json::parse(s));
    } catch (const json::parse_error&) {
      spdlog::warn("{}:{}: unreadable record ignored", p.string(), line);
    }
  });
  return out;
}

/// Keeps records already on disk, computes the rest chunk by chunk and
/// appends each chunk in key order.
template <typename Rec, typename Make>
std::vector<Rec> resume_stage(const fs::path& file, const std::vector<std::string>& keys, int workers, Make make,
                              const RecordIo<Rec>& rio, const json& st, const std::function<void()>& after_chunk,
                              StageOutcome& outcome) {
  std::map<std::string, Rec> have;
  for (auto& j : read_records(file)) {
    Rec r = rio.from_json(j);
    auto k = rio.key(r);
    have.insert_or_assign(k, std::move(r));
  }
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (!have.count(keys[i])) todo.push_back(i);
  outcome.status = todo.empty() ? "skipped" : have.empty() ? "ran" : "resumed";

  if (!todo.empty()) {
    io::JsonlAppender out(file);
    const std::size_t chunk = static_cast<std::size_t>(std::max(1, workers)) * 4;
    for (std::size_t start = 0; start < todo.size(); start += chunk) {
      std::size_t n = std::min(chunk, todo.size() - start);
      auto recs = experiment::parallel_map<Rec>(n, workers, [&](std::size_t i) { return make(todo[start + i]); });
      for (auto& r : recs) {
        auto j = rio.to_json(r);
        j.update(st);
        out.append(j);
        have.insert_or_assign(rio.key(r), std::move(r));
      }
      after_chunk();
    }
  }
  std::vector<Rec> ordered;
  for (auto& k : keys) ordered.push_back(std::move(have.at(k)));
  outcome.records = ordered.size();
  return ordered;
}

}  // namespace

RunSummary Session::run(const RunOptions& opts) {
  fs::create_directories(cfg_.output_dir);
  auto manifest = load_manifest();
  const Stage until = opts.until.value_or(Stage::report);
  const auto st = stamp(fingerprint_, cfg_.experiment.seed);

  if (opts.force) {
    for (auto s : kStages) {
      if (s < *opts.force) continue;
      manifest["stages"].erase(to_string(s));
      for (auto& a : kArtifacts.at(s)) fs::remove(cfg_.output_dir / a);
    }
  }
  for (auto s : kStages) {
    if (s > until) break;
    auto name = to_string(s);
    if (manifest["stages"].contains(name) && manifest["stages"][name].value("fingerprint", "") != fingerprint_)
      throw FingerprintError("run directory " + cfg_.output_dir.string() + " holds '" + name +
                             "' artifacts from a different configuration; rerun with --force-stage " + name +
                             " or choose a new output_dir");
  }
  manifest["fingerprint"] = fingerprint_;
  manifest["seed"] = cfg_.experiment.seed;
  manifest["dataset"] = cfg_.experiment.dataset;
  manifest["basis"] = cfg_.fingerprint_basis();

  RunSummary summary;
  summary.fingerprint = fingerprint_;
  auto done = [&](Stage s) {
    manifest["stages"][to_string(s)] = {{"fingerprint", fingerprint_}, {"status", "complete"}};
    save_manifest(manifest);
  };
  auto complete = [&](Stage s) {
    auto name = to_string(s);
    return manifest["stages"].contains(name) && manifest["stages"][name].value("status", "") == "complete";
  };
  const int workers = cfg_.gateway.max_in_flight;
  auto after_chunk = [this] { flush_ledger(); };

  // ingest
  {
    StageOutcome o{Stage::ingest, "skipped", 0};
    corpus();
    if (!complete(Stage::ingest) || !fs::exists(cfg_.output_dir / "corpus_stats.json")) {
      ingest();
      o.status = "ran";
      done(Stage::ingest);
    }
    o.records = corpus_->interaction_count();
    summary.stages.push_back(o);
  }
  if (until == Stage::ingest) return summary;

  // candidates
  corpus::SplitResult split;
  switch (cfg_.split.kind) {
    case corpus::SplitKind::standard: split = corpus::standard_split(*corpus_); break;
    case corpus::SplitKind::item_cold_start: split = corpus::item_cold_start_split(*corpus_, cfg_.split.fraction); break;
    case corpus::SplitKind::user_cold_start:
      split = corpus::user_cold_start_split(*corpus_, cfg_.split.fraction, cfg_.split.max_interactions);
      break;
  }
  experiment::Resources res{*corpus_, split, *gateway_, *schema_, prompts_, metadata_ ? &*metadata_ : nullptr};
  const auto& ecfg = cfg_.experiment;
  auto users = experiment::eligible_users(res, ecfg);

  StageOutcome oc{Stage::candidates, "", 0};
  {
    json sj = split.to_json();
    sj.update(st);
    io::write_json(cfg_.output_dir / "split.json", sj);
  }
  RecordIo<corpus::CandidateSet> cio{[](auto& c) { return c.user_id; }, [](auto& c) { return c.to_json(); },
                                     [](const json& j) { return corpus::CandidateSet::from_json(j); }};
  auto candidates = resume_stage<corpus::CandidateSet>(
      cfg_.output_dir / "candidates.jsonl", users, workers,
      [&](std::size_t i) { return experiment::make_candidates(res, ecfg, users[i]); }, cio, st, [] {}, oc);
  done(Stage::candidates);
  summary.stages.push_back(oc);
  if (until == Stage::candidates) return summary;

  // profiles
  StageOutcome op{Stage::profiles, "", 0};
  RecordIo<mope::ProfileRecord> pio{[](auto& r) { return r.user_id; }, [](auto& r) { return r.to_json(); },
                                    [](const json& j) { return mope::ProfileRecord::from_json(j); }};
  auto profiles = resume_stage<mope::ProfileRecord>(
      cfg_.output_dir / "profiles.jsonl", users, workers,
      [&](std::size_t i) { return experiment::make_profile(res, ecfg, users[i]); }, pio, st, after_chunk, op);
  done(Stage::profiles);
  summary.stages.push_back(op);
  if (until == Stage::profiles) return summary;

  // traits
  StageOutcome ot{Stage::traits, "", 0};
  std::map<std::string, mote::TraitRecord> traits;
  if (ecfg.ablation.raw_descriptions()) {
    ot.status = "ablated";
  } else {
    auto items = experiment::candidate_items(candidates);
    RecordIo<mote::TraitRecord> tio{[](auto& r) { return r.traits.item_id; }, [](auto& r) { return r.to_json(); },
                                    [](const json& j) { return mote::TraitRecord::from_json(j); }};
    auto recs = resume_stage<mote::TraitRecord>(
        cfg_.output_dir / "traits.jsonl", items, workers,
        [&](std::size_t i) { return experiment::make_traits(res, ecfg, items[i]); }, tio, st, after_chunk, ot);
    for (auto& r : recs) traits.emplace(r.traits.item_id, std::move(r));
  }
  done(Stage::traits);
  summary.stages.push_back(ot);
  if (until == Stage::traits) return summary;

  // rankings
  StageOutcome orr{Stage::rankings, "", 0};
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < users.size(); ++i) index[users[i]] = i;
  RecordIo<mar::RankedList> rio{[](auto& r) { return r.user_id; }, [](auto& r) { return r.to_json(); },
                                [](const json& j) { return mar::RankedList::from_json(j); }};
  auto rankings = resume_stage<mar::RankedList>(
      cfg_.output_dir / "rankings.jsonl", users, workers,
      [&](std::size_t i) { return experiment::make_ranking(res, ecfg, candidates[i], profiles[i], traits); }, rio, st,
      after_chunk, orr);
  done(Stage::rankings);
  summary.stages.push_back(orr);
  if (until == Stage::rankings) return summary;

  // report
  StageOutcome ors{Stage::report, "ran", 0};
  std::map<std::string, corpus::CandidateSet> by_user;
  for (auto& c : candidates) by_user.emplace(c.user_id, c);
  auto rep = eval::evaluate(rankings, by_user, ecfg.ks, ecfg.dataset, eval::to_string(ecfg.ablation.name));
  auto rj = rep.to_json();
  rj.update(st);
  io::write_json(cfg_.output_dir / "report.json", rj);
  io::write_file_atomic(cfg_.output_dir / "report.txt", eval::render_metric_table({rep}));
  ors.records = rep.user_count;
  if (cfg_.prices_path) {
    std::vector<gateway::LedgerEntry> ledger;
    for (auto& j : read_records(cfg_.output_dir / "ledger.jsonl")) ledger.push_back(gateway::LedgerEntry::from_json(j));
    auto prices = gateway::PriceTable::load(*cfg_.prices_path);
    auto cost = gateway::cost_report(ledger, prices, std::max<std::size_t>(candidates.size(), 1), ecfg.dataset);
    auto cj = cost.to_json();
    cj.update(st);
    io::write_json(cfg_.output_dir / "cost.json", cj);
    io::write_file_atomic(cfg_.output_dir / "cost.txt", gateway::render_cost_table({cost}));
  } else {
    spdlog::warn("no price table configured; cost report skipped");
  }
  done(Stage::report);
  summary.stages.push_back(ors);

  auto stats = gateway_->stats();
  summary.provider_calls = stats.total_provider_calls();
  for (auto& [_, n] : stats.cache_hits) summary.cache_hits += n;
  return summary;
}

// --- report ------------------------------------------------------------------------

json AggregateReport::to_json() const {
  json r = json::array(), c = json::array();
  for (auto& x : reports) r.push_back(x.to_json());
  for (auto& x : costs) c.push_back(x.to_json());
  return {{"reports", r}, {"costs", c}};
}

AggregateReport report(const std::vector<fs::path>& run_dirs, const std::optional<fs::path>& out_dir) {
  if (run_dirs.empty()) throw ArgumentError("report needs at least one run directory");
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<eval::EvalReport>> groups;
  std::vector<std::pair<std::string, std::string>> cost_order;
  std::map<std::pair<std::string, std::string>, std::vector<gateway::CostSummary>> cost_groups;
  for (auto& d : run_dirs) {
    auto rp = d / "report.json";
    if (!fs::exists(rp)) throw IoError("no report.json in " + d.string() + "; run the report stage first");
    auto rep = eval::EvalReport::from_json(io::read_json(rp));
    rep.per_user.clear();
    std::pair key{rep.dataset, rep.config_name};
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(std::move(rep));
    if (fs::exists(d / "cost.json")) {
      auto c = gateway::CostSummary::from_json(io::read_json(d / "cost.json"));
      std::pair ck{c.dataset, c.label};
      if (!cost_groups.count(ck)) cost_order.push_back(ck);
      cost_groups[ck].push_back(std::move(c));
    }
  }
  AggregateReport out;
  for (auto& k : order) out.reports.push_back(eval::aggregate_reports(groups[k]));
  for (auto& k : cost_order) {
    auto& g = cost_groups[k];
    auto c = g.front();
    if (g.size() > 1) {
      double total = 0.0, per = 0.0;
      for (auto& x : g) {
        total += x.total;
        per += x.per_interaction;
      }
      c.total = total / static_cast<double>(g.size());
      c.per_interaction = per / static_cast<double>(g.size());
    }
    out.costs.push_back(std::move(c));
  }
  std::size_t runs = 0;
  for (auto& r : out.reports) runs = std::max(runs, r.runs);
  out.text = fmt::format("Metrics (mean of {} run{})\n", runs, runs == 1 ? "" : "s") + eval::render_metric_table(out.reports);
  if (!out.costs.empty()) out.text += "\nCost per interaction (USD)\n" + gateway::render_cost_table(out.costs);
  if (out_dir) {
    fs::create_directories(*out_dir);
    io::write_json(*out_dir / "aggregate_report.json", out.to_json());
    io::write_file_atomic(*out_dir / "aggregate_report.txt", out.text);
  }
  return out;
}

}  // namespace mrec::runner
