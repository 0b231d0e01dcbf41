#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "eval.hpp"
#include "gateway.hpp"
#include "mar.hpp"
#include "mope.hpp"
#include "mote.hpp"
#include "prompt.hpp"
#include "schema.hpp"

namespace mrec::experiment {

using nlohmann::json;

struct ExperimentConfig {
  std::string dataset = "dataset";
  std::uint64_t seed = 42;
  std::vector<std::size_t> ks = eval::kDefaultKs;
  eval::AblationConfig ablation;
  corpus::NegativeDistribution negatives = corpus::NegativeDistribution::uniform;
  corpus::ContextOptions context;
  std::size_t max_users = 0;  // 0 keeps every eligible test user
  mope::MotivationRunConfig mope;
  mote::MoteConfig mote;
  mar::MarConfig mar;

  json to_json() const;
  static ExperimentConfig from_json(const json& j);
};

struct Resources {
  const corpus::Corpus& corpus;
  const corpus::SplitResult& split;
  gateway::Gateway& gateway;
  const schema::MotivationalSchema& schema;
  const prompt::PromptLibrary& prompts;
  const std::map<std::string, schema::UserMetadata>* metadata = nullptr;
};

/// Test users holding a valid positive, sorted by id; a seeded subsample
/// when max_users is set.
std::vector<std::string> eligible_users(const Resources& res, const ExperimentConfig& cfg);

corpus::CandidateSet make_candidates(const Resources& res, const ExperimentConfig& cfg, const std::string& user_id);

/// What MOPE (or the raw-context substitute) reads for this user.
mope::UserContext user_context(const Resources& res, const ExperimentConfig& cfg, const std::string& user_id);

mope::ProfileRecord make_profile(const Resources& res, const ExperimentConfig& cfg, const std::string& user_id);

mote::TraitRecord make_traits(const Resources& res, const ExperimentConfig& cfg, const std::string& item_id);

/// Candidate text under the without-MOTE ablation: title plus the
/// description cut to the context character budget.
std::string raw_item_text(const corpus::ItemRecord& item, const corpus::ContextOptions& opts);

/// Unique candidate items over all sets, sorted.
std::vector<std::string> candidate_items(const std::vector<corpus::CandidateSet>& sets);

mar::RankedList make_ranking(const Resources& res, const ExperimentConfig& cfg, const corpus::CandidateSet& cand,
                             const mope::ProfileRecord& profile,
                             const std::map<std::string, mote::TraitRecord>& traits);

struct ExperimentResult {
  std::vector<corpus::CandidateSet> candidates;
  std::vector<mope::ProfileRecord> profiles;
  std::map<std::string, mote::TraitRecord> traits;
  std::vector<mar::RankedList> rankings;
  eval::EvalReport report;
  std::optional<gateway::CostSummary> cost;
};

/// In-memory pipeline: candidates, profiles, traits, rankings, report.
/// Cost is summarized when a price table is given.
ExperimentResult run_experiment(const Resources& res, const ExperimentConfig& cfg,
                                const gateway::PriceTable* prices = nullptr);

/// Applies fn to [0, n) on up to `workers` threads; results keep index
/// order. The first exception is rethrown after all workers stop.
template <typename R, typename F>
std::vector<R> parallel_map(std::size_t n, int workers, F&& fn) {
  std::vector<std::optional<R>> slots(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex err_mu;
  auto work = [&] {
    for (;;) {
      if (stop.load()) return;
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!first) first = std::current_exception();
        stop = true;
      }
    }
  };
  std::size_t t = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < t; ++i) pool.emplace_back(work);
  if (t > 0) work();
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace mrec::experiment
