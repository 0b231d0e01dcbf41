#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "experiment.hpp"
#include "gateway.hpp"
#include "prompt.hpp"
#include "schema.hpp"

namespace mrec::runner {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Stage { ingest, candidates, profiles, traits, rankings, report };
inline constexpr Stage kStages[] = {Stage::ingest, Stage::candidates, Stage::profiles,
                                    Stage::traits, Stage::rankings,   Stage::report};
std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

struct DataConfig {
  fs::path interactions;
  fs::path items;
  corpus::FieldMapping fields;
  std::optional<fs::path> metadata;
  std::set<std::string> metadata_whitelist = {"age_band", "gender", "region"};
  std::size_t min_interactions = 2;
};

struct SplitConfig {
  corpus::SplitKind kind = corpus::SplitKind::standard;
  double fraction = 0.10;
  std::size_t max_interactions = 3;
};

/// One JSON document. Relative paths resolve against the config file's
/// directory.
struct RunConfig {
  DataConfig data;
  fs::path schema_path;
  fs::path prompts_dir;
  std::string provider = "mock";
  gateway::RemoteOptions remote;
  gateway::GatewayConfig gateway = gateway::GatewayConfig::defaults();
  std::optional<fs::path> prices_path;
  SplitConfig split;
  experiment::ExperimentConfig experiment;
  fs::path output_dir;
  json document;  // the merged source document

  static RunConfig load(const fs::path& path, const json& overrides = json::object());
  static RunConfig from_json(const json& j, const fs::path& base_dir);

  /// Config minus output and cache locations, plus content hashes of the
  /// schema, prompt and data files.
  json fingerprint_basis() const;
  std::string fingerprint() const;
};

gateway::GatewayConfig gateway_config_from_json(const json& models, const json& gw, const json& cache_dir,
                                                const fs::path& base_dir);

struct StageOutcome {
  Stage stage;
  std::string status;  // "ran", "resumed", "skipped"
  std::size_t records = 0;
};

struct RunSummary {
  std::vector<StageOutcome> stages;
  long provider_calls = 0;
  long cache_hits = 0;
  std::string fingerprint;
  json to_json() const;
};

struct RunOptions {
  std::optional<Stage> until;  // last stage to execute
  std::optional<Stage> force;  // rerun this stage and everything after it
};

/// One run directory, one orchestrator.
class Session {
 public:
  explicit Session(RunConfig cfg, std::shared_ptr<gateway::Provider> provider = nullptr);

  const RunConfig& config() const { return cfg_; }
  gateway::Gateway& gateway() { return *gateway_; }
  const std::string& fingerprint() const { return fingerprint_; }

  /// Ingests (once per session) and writes corpus_stats.json.
  json ingest();
  RunSummary run(const RunOptions& opts = {});

 private:
  const corpus::Corpus& corpus();
  json load_manifest() const;
  void save_manifest(const json& m) const;
  void flush_ledger();

  RunConfig cfg_;
  std::string fingerprint_;
  std::unique_ptr<gateway::Gateway> gateway_;
  std::optional<schema::MotivationalSchema> schema_;
  prompt::PromptLibrary prompts_;
  std::optional<corpus::Corpus> corpus_;
  std::optional<std::map<std::string, schema::UserMetadata>> metadata_;
  json ingest_stats_;
  std::size_t ledger_flushed_ = 0;
};

struct AggregateReport {
  std::vector<eval::EvalReport> reports;
  std::vector<gateway::CostSummary> costs;
  std::string text;
  json to_json() const;
};

/// Mean-of-runs metric and cost tables over finished run directories.
/// Written to out_dir when given.
AggregateReport report(const std::vector<fs::path>& run_dirs, const std::optional<fs::path>& out_dir = std::nullopt);

}  // namespace mrec::runner
