#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "mar.hpp"

namespace mrec::eval {

using nlohmann::json;

inline const std::vector<std::size_t> kDefaultKs = {5, 10};

/// 1-based rank of `positive` in `ranking`; IntegrityError when absent.
std::size_t rank_of(const std::vector<std::string>& ranking, const std::string& positive);

int hit_rate_at_k(const std::vector<std::string>& ranking, const std::string& positive, std::size_t k);
/// Single relevant item, so IDCG = 1: 1/log2(r+1) for r <= k, else 0.
double ndcg_at_k(const std::vector<std::string>& ranking, const std::string& positive, std::size_t k);

struct UserMetrics {
  std::string user_id;
  std::size_t rank = 0;
  std::map<std::string, double> values;
};

/// "HR@5", "NDCG@5", "HR@10", "NDCG@10" for ks = {5, 10}.
std::vector<std::string> metric_names(const std::vector<std::size_t>& ks);

struct EvalReport {
  std::string dataset;
  std::string config_name = "full";
  std::vector<std::size_t> ks = kDefaultKs;
  std::map<std::string, double> metrics;
  std::size_t user_count = 0;         // successfully ranked users
  std::size_t failed_user_count = 0;  // excluded from the averages
  std::size_t runs = 1;
  std::vector<UserMetrics> per_user;  // sorted by user id; empty for aggregates

  json to_json() const;
  static EvalReport from_json(const json& j);
};

/// Per-user metrics averaged over successfully ranked users. Failed
/// rankings and candidate users without a ranking count as failed.
/// IntegrityError naming the offenders when a ranking's user has no
/// candidate set.
EvalReport evaluate(const std::vector<mar::RankedList>& rankings,
                    const std::map<std::string, corpus::CandidateSet>& candidates,
                    const std::vector<std::size_t>& ks = kDefaultKs, const std::string& dataset = "",
                    const std::string& config_name = "full");

EvalReport evaluate_run(const std::filesystem::path& rankings_file, const std::filesystem::path& candidates_file,
                        const std::vector<std::size_t>& ks = kDefaultKs, const std::string& dataset = "",
                        const std::string& config_name = "full");

/// Mean of runs, metric by metric. Runs must agree on dataset, config and ks.
EvalReport aggregate_reports(const std::vector<EvalReport>& runs);

/// Rows are configurations, column groups are datasets, each group lists
/// `metrics` (all of the reports' metrics when empty). Values "%.3f".
std::string render_metric_table(const std::vector<EvalReport>& reports, std::vector<std::string> metrics = {});

enum class Ablation { full, without_mope, without_mote };
std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);
/// Row label used in tables: "Full", "Without MOPE", "Without MOTE".
std::string display_name(const std::string& config_name);

struct AblationConfig {
  Ablation name = Ablation::full;

  /// MAR gets the raw semantic context instead of a profile.
  bool raw_context() const { return name == Ablation::without_mope; }
  /// MAR gets budget-truncated descriptions instead of trait sets.
  bool raw_descriptions() const { return name == Ablation::without_mote; }

  /// ConfigError when both substitutions are requested.
  static AblationConfig from_flags(bool without_mope, bool without_mote);
  static AblationConfig from_json(const json& j);
};

}  // namespace mrec::eval
