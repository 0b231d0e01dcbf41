#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "error.hpp"
#include "io.hpp"

namespace mrec::eval {

std::size_t rank_of(const std::vector<std::string>& ranking, const std::string& positive) {
  for (std::size_t i = 0; i < ranking.size(); ++i)
    if (ranking[i] == positive) return i + 1;
  throw IntegrityError("positive '" + positive + "' absent from ranking");
}

namespace {
void check_k(std::size_t k, std::size_t n) {
  if (k < 1 || k > n) throw ArgumentError(fmt::format("k = {} outside [1, {}]", k, n));
}
}  // namespace

int hit_rate_at_k(const std::vector<std::string>& ranking, const std::string& positive, std::size_t k) {
  auto r = rank_of(ranking, positive);
  check_k(k, ranking.size());
  return r <= k ? 1 : 0;
}

double ndcg_at_k(const std::vector<std::string>& ranking, const std::string& positive, std::size_t k) {
  auto r = rank_of(ranking, positive);
  check_k(k, ranking.size());
  return r <= k ? 1.0 / std::log2(static_cast<double>(r) + 1.0) : 0.0;
}

std::vector<std::string> metric_names(const std::vector<std::size_t>& ks) {
  std::vector<std::string> out;
  for (auto k : ks) {
    out.push_back(fmt::format("HR@{}", k));
    out.push_back(fmt::format("NDCG@{}", k));
  }
  return out;
}

json EvalReport::to_json() const {
  json j = {{"dataset", dataset},      {"config", config_name},
            {"ks", ks},                {"metrics", metrics},
            {"user_count", user_count}, {"failed_user_count", failed_user_count},
            {"runs", runs}};
  json pu = json::array();
  for (auto& u : per_user) pu.push_back({{"user_id", u.user_id}, {"rank", u.rank}, {"metrics", u.values}});
  j["per_user"] = pu;
  return j;
}

EvalReport EvalReport::from_json(const json& j) {
  try {
    EvalReport r;
    r.dataset = j.at("dataset").get<std::string>();
    r.config_name = j.value("config", std::string("full"));
    r.ks = j.value("ks", kDefaultKs);
    r.metrics = j.at("metrics").get<std::map<std::string, double>>();
    r.user_count = j.at("user_count").get<std::size_t>();
    r.failed_user_count = j.value("failed_user_count", std::size_t{0});
    r.runs = j.value("runs", std::size_t{1});
    for (auto& u : j.value("per_user", json::array()))
      r.per_user.push_back({u.at("user_id").get<std::string>(), u.at("rank").get<std::size_t>(),
                            u.at("metrics").get<std::map<std::string, double>>()});
    return r;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed report: ") + e.what());
  }
}

EvalReport evaluate(const std::vector<mar::RankedList>& rankings,
                    const std::map<std::string, corpus::CandidateSet>& candidates,
                    const std::vector<std::size_t>& ks, const std::string& dataset,
                    const std::string& config_name) {
  std::vector<std::string> offenders;
  for (auto& r : rankings)
    if (!candidates.count(r.user_id)) offenders.push_back(r.user_id);
  if (!offenders.empty()) {
    std::sort(offenders.begin(), offenders.end());
    throw IntegrityError(fmt::format("rankings for users without candidate sets: {}", fmt::join(offenders, ", ")));
  }

  EvalReport rep;
  rep.dataset = dataset;
  rep.config_name = config_name;
  rep.ks = ks;
  auto names = metric_names(ks);

  std::map<std::string, const mar::RankedList*> by_user;
  for (auto& r : rankings) {
    if (!by_user.emplace(r.user_id, &r).second)
      throw IntegrityError("duplicate ranking for user '" + r.user_id + "'");
  }
  for (auto& [uid, cand] : candidates) {
    auto it = by_user.find(uid);
    if (it == by_user.end() || !it->second->ok) {
      ++rep.failed_user_count;
      continue;
    }
    const auto& ranking = it->second->ranking;
    std::set<std::string> got(ranking.begin(), ranking.end());
    std::set<std::string> want(cand.negative_ids.begin(), cand.negative_ids.end());
    want.insert(cand.positive_id);
    if (got != want || got.size() != ranking.size())
      throw IntegrityError("ranking for user '" + uid + "' is not a permutation of its candidate set");
    UserMetrics um{uid, rank_of(ranking, cand.positive_id), {}};
    for (auto k : ks) {
      um.values[fmt::format("HR@{}", k)] = hit_rate_at_k(ranking, cand.positive_id, k);
      um.values[fmt::format("NDCG@{}", k)] = ndcg_at_k(ranking, cand.positive_id, k);
    }
    rep.per_user.push_back(std::move(um));
  }
  rep.user_count = rep.per_user.size();
  for (auto& n : names) {
    double sum = 0.0;
    for (auto& u : rep.per_user) sum += u.values.at(n);
    rep.metrics[n] = rep.user_count ? sum / static_cast<double>(rep.user_count) : 0.0;
  }
  return rep;
}

EvalReport evaluate_run(const std::filesystem::path& rankings_file, const std::filesystem::path& candidates_file,
                        const std::vector<std::size_t>& ks, const std::string& dataset,
                        const std::string& config_name) {
  std::vector<mar::RankedList> rankings;
  for (auto& j : io::read_jsonl(rankings_file)) rankings.push_back(mar::RankedList::from_json(j));
  std::map<std::string, corpus::CandidateSet> cands;
  for (auto& j : io::read_jsonl(candidates_file)) {
    auto c = corpus::CandidateSet::from_json(j);
    cands.emplace(c.user_id, std::move(c));
  }
  return evaluate(rankings, cands, ks, dataset, config_name);
}

EvalReport aggregate_reports(const std::vector<EvalReport>& runs) {
  if (runs.empty()) throw ArgumentError("no runs to aggregate");
  if (runs.size() == 1) return runs.front();
  const auto& first = runs.front();
  for (auto& r : runs) {
    if (r.dataset != first.dataset)
      throw IntegrityError("cannot aggregate runs over different datasets: '" + first.dataset + "' vs '" + r.dataset + "'");
    if (r.config_name != first.config_name || r.ks != first.ks)
      throw IntegrityError("cannot aggregate runs with different configurations");
  }
  EvalReport out;
  out.dataset = first.dataset;
  out.config_name = first.config_name;
  out.ks = first.ks;
  out.runs = 0;
  for (auto& n : metric_names(first.ks)) {
    double sum = 0.0;
    for (auto& r : runs) sum += r.metrics.at(n);
    out.metrics[n] = sum / static_cast<double>(runs.size());
  }
  out.user_count = first.user_count;
  for (auto& r : runs) {
    out.user_count = std::min(out.user_count, r.user_count);
    out.failed_user_count = std::max(out.failed_user_count, r.failed_user_count);
    out.runs += r.runs;
  }
  return out;
}

std::string display_name(const std::string& config_name) {
  if (config_name == "full") return "Full";
  if (config_name == "without_mope") return "Without MOPE";
  if (config_name == "without_mote") return "Without MOTE";
  return config_name;
}

std::string render_metric_table(const std::vector<EvalReport>& reports, std::vector<std::string> metrics) {
  if (reports.empty()) return "";
  if (metrics.empty()) metrics = metric_names(reports.front().ks);
  std::vector<std::string> datasets, configs;
  std::map<std::pair<std::string, std::string>, const EvalReport*> cell;
  for (auto& r : reports) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
    if (std::find(configs.begin(), configs.end(), r.config_name) == configs.end()) configs.push_back(r.config_name);
    cell[{r.config_name, r.dataset}] = &r;
  }
  std::size_t label_w = 6;
  for (auto& c : configs) label_w = std::max(label_w, display_name(c).size());
  const std::size_t col_w = 8;
  const std::size_t group_w = metrics.size() * (col_w + 1) - 1;

  std::string out = fmt::format("{:<{}}", "", label_w);
  for (auto& d : datasets) out += fmt::format(" | {:^{}}", d.empty() ? "-" : d, group_w);
  out += '\n' + fmt::format("{:<{}}", "", label_w);
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    out += " |";
    for (auto& m : metrics) out += fmt::format(" {:>{}}", m, col_w);
  }
  out += '\n' + std::string(label_w + datasets.size() * (group_w + 3), '-') + '\n';
  for (auto& c : configs) {
    out += fmt::format("{:<{}}", display_name(c), label_w);
    for (auto& d : datasets) {
      out += " |";
      auto it = cell.find({c, d});
      for (auto& m : metrics) {
        if (it == cell.end() || !it->second->metrics.count(m)) out += fmt::format(" {:>{}}", "-", col_w);
        else out += fmt::format(" {:>{}.3f}", it->second->metrics.at(m), col_w);
      }
    }
    out += '\n';
  }
  return out;
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::without_mope: return "without_mope";
    case Ablation::without_mote: return "without_mote";
  }
  return "full";
}

Ablation ablation_from_string(const std::string& s) {
  if (s == "full") return Ablation::full;
  if (s == "without_mope") return Ablation::without_mope;
  if (s == "without_mote") return Ablation::without_mote;
  throw ConfigError("unknown ablation '" + s + "'");
}

AblationConfig AblationConfig::from_flags(bool without_mope, bool without_mote) {
  if (without_mope && without_mote) throw ConfigError("an ablation substitutes exactly one module; got both MOPE and MOTE");
  return {without_mope ? Ablation::without_mope : without_mote ? Ablation::without_mote : Ablation::full};
}

AblationConfig AblationConfig::from_json(const json& j) {
  if (j.is_null()) return {};
  if (j.is_string()) return {ablation_from_string(j.get<std::string>())};
  if (j.is_array()) {
    bool mope = false, mote = false;
    for (auto& e : j) {
      auto a = ablation_from_string(e.get<std::string>());
      mope |= a == Ablation::without_mope;
      mote |= a == Ablation::without_mote;
    }
    return from_flags(mope, mote);
  }
  if (j.is_object()) return from_flags(j.value("without_mope", false), j.value("without_mote", false));
  throw ConfigError("ablation must be a name, a list of names, or an object of flags");
}

}  // namespace mrec::eval
