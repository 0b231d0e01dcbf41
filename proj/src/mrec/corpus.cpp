#include "corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "error.hpp"
#include "io.hpp"
#include "rng.hpp"
#include "text.hpp"

namespace mrec::corpus {

namespace fs = std::filesystem;

// --- field mapping ---------------------------------------------------------

FieldMapping FieldMapping::from_json(const json& j) {
  FieldMapping m;
  if (j.is_null()) return m;
  if (!j.is_object()) throw ConfigError("field_mapping must be an object");
  auto take = [&](const char* key, std::string& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_string() || j[key].get<std::string>().empty())
      throw ConfigError(std::string("field_mapping.") + key + " must be a nonempty string");
    dst = j[key].get<std::string>();
  };
  static const std::set<std::string> known = {"user",    "item",        "rating",  "timestamp", "review",
                                              "item_id", "title", "description", "category"};
  for (auto& [k, _] : j.items())
    if (!known.count(k)) throw ConfigError("field_mapping: unknown key '" + k + "'");
  take("user", m.user);
  take("item", m.item);
  take("rating", m.rating);
  take("timestamp", m.timestamp);
  take("review", m.review);
  take("item_id", m.item_id);
  take("title", m.title);
  take("description", m.description);
  take("category", m.category);
  return m;
}

json FieldMapping::to_json() const {
  return {{"user", user},       {"item", item},   {"rating", rating},
          {"timestamp", timestamp}, {"review", review}, {"item_id", item_id},
          {"title", title},     {"description", description}, {"category", category}};
}

// --- corpus ------------------------------------------------------------------

Corpus Corpus::build(std::vector<Interaction> interactions, std::vector<ItemRecord> items,
                     std::size_t dropped) {
  Corpus c;
  c.dropped_ = dropped;
  for (auto& it : items) {
    if (it.item_id.empty()) continue;
    c.items_.try_emplace(it.item_id, std::move(it));
  }
  for (auto& x : interactions) {
    if (!c.items_.count(x.item_id)) {
      ItemRecord stub;
      stub.item_id = x.item_id;
      stub.stub = true;
      c.items_.emplace(x.item_id, std::move(stub));
      ++c.stub_items_;
    }
    auto& h = c.users_[x.user_id];
    h.user_id = x.user_id;
    h.interactions.push_back(std::move(x));
    ++c.interaction_count_;
  }
  for (auto& [_, h] : c.users_) {
    std::stable_sort(h.interactions.begin(), h.interactions.end(),
                     [](const Interaction& a, const Interaction& b) {
                       if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                       return a.file_order < b.file_order;
                     });
  }
  std::unordered_map<std::string_view, std::size_t> index;
  c.item_ids_.reserve(c.items_.size());
  for (auto& [id, _] : c.items_) {
    index.emplace(id, c.item_ids_.size());
    c.item_ids_.push_back(id);
  }
  c.item_counts_.assign(c.item_ids_.size(), 0);
  for (auto& [_, h] : c.users_)
    for (auto& x : h.interactions) ++c.item_counts_[index.at(x.item_id)];
  return c;
}

const ItemRecord* Corpus::find_item(const std::string& id) const {
  auto it = items_.find(id);
  return it == items_.end() ? nullptr : &it->second;
}

const ItemRecord& Corpus::item(const std::string& id) const {
  if (auto* p = find_item(id)) return *p;
  throw IntegrityError("item '" + id + "' not in corpus");
}

const UserHistory& Corpus::user(const std::string& id) const {
  auto it = users_.find(id);
  if (it == users_.end()) throw IntegrityError("user '" + id + "' not in corpus");
  return it->second;
}

json Corpus::stats_json(const std::string& dataset) const {
  return {{"dataset", dataset},
          {"users", users_.size()},
          {"items", items_.size()},
          {"interactions", interaction_count_},
          {"dropped_interactions", dropped_},
          {"stub_items", stub_items_}};
}

// --- ingestion ---------------------------------------------------------------

namespace {

std::optional<std::string> as_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return std::nullopt;
}

// Amazon metadata stores descriptions and categories as string arrays.
std::string flatten_text(const json& v, const char* sep) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (auto& e : v) {
      if (!e.is_string()) continue;
      auto s = text::trim(e.get<std::string>());
      if (s.empty()) continue;
      if (!out.empty()) out += sep;
      out += s;
    }
    return out;
  }
  return {};
}

std::optional<double> as_rating(const json& v) {
  double r;
  if (v.is_number()) {
    r = v.get<double>();
  } else if (v.is_string()) {
    try {
      std::size_t pos = 0;
      r = std::stod(v.get<std::string>(), &pos);
    } catch (...) {
      return std::nullopt;
    }
  } else {
    return std::nullopt;
  }
  if (!std::isfinite(r) || r < 1.0 || r > 5.0) return std::nullopt;
  return r;
}

std::int64_t as_timestamp(const json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number()) return static_cast<std::int64_t>(v.get<double>());
  if (v.is_string()) {
    try {
      return std::stoll(v.get<std::string>());
    } catch (...) {
    }
  }
  return 0;
}

}  // namespace

Corpus ingest_reviews(const fs::path& interactions_path, const fs::path& items_path,
                      const FieldMapping& f) {
  std::vector<Interaction> interactions;
  std::size_t dropped = 0;
  std::size_t order = 0;
  std::size_t records = 0;
  bool seen_user = false, seen_item = false, seen_rating = false;
  io::for_each_line(interactions_path, [&](std::size_t, std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      ++dropped;
      return;
    }
    ++records;
    seen_user = seen_user || j.contains(f.user);
    seen_item = seen_item || j.contains(f.item);
    seen_rating = seen_rating || j.contains(f.rating);
    auto user = j.contains(f.user) ? as_text(j[f.user]) : std::nullopt;
    auto item = j.contains(f.item) ? as_text(j[f.item]) : std::nullopt;
    auto rating = j.contains(f.rating) ? as_rating(j[f.rating]) : std::nullopt;
    if (!user || user->empty() || !item || item->empty() || !rating) {
      ++dropped;
      return;
    }
    Interaction x;
    x.user_id = *user;
    x.item_id = *item;
    x.rating = *rating;
    x.timestamp = j.contains(f.timestamp) ? as_timestamp(j[f.timestamp]) : 0;
    if (j.contains(f.review) && j[f.review].is_string()) x.review_text = j[f.review].get<std::string>();
    x.file_order = order++;
    interactions.push_back(std::move(x));
  });
  if (records > 0) {
    for (auto [seen, name] :
         {std::pair{seen_user, &f.user}, std::pair{seen_item, &f.item}, std::pair{seen_rating, &f.rating}})
      if (!seen) throw ConfigError("field mapping: no interaction record has field '" + *name + "'");
  }
  if (interactions.empty())
    throw EmptyCorpusError("no valid interactions in " + interactions_path.string());

  std::vector<ItemRecord> items;
  io::for_each_line(items_path, [&](std::size_t, std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return;
    auto id = j.contains(f.item_id) ? as_text(j[f.item_id]) : std::nullopt;
    if (!id || id->empty()) return;
    ItemRecord r;
    r.item_id = *id;
    if (j.contains(f.title)) r.title = text::trim(flatten_text(j[f.title], " "));
    if (j.contains(f.description)) r.description = text::trim(flatten_text(j[f.description], " "));
    if (j.contains(f.category)) {
      auto c = flatten_text(j[f.category], " > ");
      if (!c.empty()) r.category = c;
    }
    for (auto& [k, v] : j.items()) {
      if (k == f.item_id || k == f.title || k == f.description || k == f.category) continue;
      if (v.is_string() && !v.get<std::string>().empty()) r.metadata.emplace(k, v.get<std::string>());
    }
    items.push_back(std::move(r));
  });

  return Corpus::build(std::move(interactions), std::move(items), dropped);
}

Corpus filter_min_interactions(const Corpus& corpus, std::size_t min_count) {
  if (min_count < 1) throw ArgumentError("min_count must be >= 1");
  std::vector<Interaction> kept;
  for (auto& [_, h] : corpus.users())
    if (h.interactions.size() >= min_count)
      kept.insert(kept.end(), h.interactions.begin(), h.interactions.end());
  std::vector<ItemRecord> items;
  items.reserve(corpus.items().size());
  for (auto& [_, it] : corpus.items()) items.push_back(it);
  Corpus out = Corpus::build(std::move(kept), std::move(items), corpus.dropped_count());
  return out;
}

// --- positives and negatives -------------------------------------------------

PositiveSelection select_positive(const UserHistory& history, const std::set<std::string>* restrict_to) {
  const auto& xs = history.interactions;
  for (std::size_t i = xs.size(); i-- > 0;) {
    if (xs[i].rating <= 3.0) continue;
    if (restrict_to && !restrict_to->count(xs[i].item_id)) continue;
    PositiveSelection sel;
    sel.positive = xs[i];
    sel.index = i;
    for (std::size_t j = 0; j < i; ++j)
      if (!restrict_to || !restrict_to->count(xs[j].item_id)) sel.context.push_back(xs[j]);
    return sel;
  }
  throw NoPositiveError("user '" + history.user_id + "' has no interaction rated above 3");
}

namespace {

std::vector<std::size_t> history_indices(const Corpus& corpus, const UserHistory& history) {
  const auto& ids = corpus.item_ids();
  std::vector<std::size_t> out;
  for (auto& x : history.interactions) {
    auto it = std::lower_bound(ids.begin(), ids.end(), x.item_id);
    if (it != ids.end() && *it == x.item_id) out.push_back(static_cast<std::size_t>(it - ids.begin()));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> eligible_indices(std::size_t total, const std::vector<std::size_t>& excluded) {
  std::vector<std::size_t> out;
  out.reserve(total - excluded.size());
  std::size_t e = 0;
  for (std::size_t i = 0; i < total; ++i) {
    if (e < excluded.size() && excluded[e] == i) {
      ++e;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> sample_uniform(std::size_t total, const std::vector<std::size_t>& excluded,
                                        std::size_t n, Rng& rng) {
  const std::size_t eligible = total - excluded.size();
  std::vector<std::size_t> picked;
  picked.reserve(n);
  if (eligible >= 4 * n) {
    std::unordered_set<std::size_t> taken(excluded.begin(), excluded.end());
    while (picked.size() < n) {
      auto i = static_cast<std::size_t>(rng.below(total));
      if (taken.insert(i).second) picked.push_back(i);
    }
    return picked;
  }
  auto pool = eligible_indices(total, excluded);
  for (std::size_t k = 0; k < n; ++k) {
    auto j = k + static_cast<std::size_t>(rng.below(pool.size() - k));
    std::swap(pool[k], pool[j]);
    picked.push_back(pool[k]);
  }
  return picked;
}

// Weight = interaction count + 1 so never-interacted items stay reachable.
std::vector<std::size_t> sample_popularity(const std::vector<std::size_t>& counts,
                                           const std::vector<std::size_t>& excluded, std::size_t n,
                                           Rng& rng) {
  auto pool = eligible_indices(counts.size(), excluded);
  std::vector<double> w(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) w[i] = static_cast<double>(counts[pool[i]]) + 1.0;
  std::vector<std::size_t> picked;
  picked.reserve(n);
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double u = rng.unit() * total;
    std::size_t j = 0;
    for (; j + 1 < w.size(); ++j) {
      if (w[j] == 0.0) continue;
      if (u < w[j]) break;
      u -= w[j];
    }
    while (w[j] == 0.0) --j;  // float slack at the tail
    picked.push_back(pool[j]);
    total -= w[j];
    w[j] = 0.0;
  }
  return picked;
}

}  // namespace

std::vector<std::string> sample_negatives(const Corpus& corpus, const UserHistory& history, std::size_t n,
                                          std::uint64_t seed, NegativeDistribution dist) {
  if (n == 0) return {};
  auto excluded = history_indices(corpus, history);
  const std::size_t total = corpus.item_ids().size();
  const std::size_t eligible = total - excluded.size();
  if (eligible < n)
    throw SamplingError("user '" + history.user_id + "': only " + std::to_string(eligible) +
                        " eligible negatives, need " + std::to_string(n));
  Rng rng(seed);
  auto picked = dist == NegativeDistribution::uniform ? sample_uniform(total, excluded, n, rng)
                                                      : sample_popularity(corpus.item_counts(), excluded, n, rng);
  std::vector<std::string> out;
  out.reserve(n);
  for (auto i : picked) out.push_back(corpus.item_ids()[i]);
  return out;
}

json CandidateSet::to_json() const {
  return {{"user_id", user_id},
          {"positive_id", positive_id},
          {"negative_ids", negative_ids},
          {"seed", seed},
          {"candidates", presentation}};
}

CandidateSet CandidateSet::from_json(const json& j) {
  try {
    CandidateSet c;
    c.user_id = j.at("user_id").get<std::string>();
    c.positive_id = j.at("positive_id").get<std::string>();
    c.negative_ids = j.at("negative_ids").get<std::vector<std::string>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.presentation = j.at("candidates").get<std::vector<std::string>>();
    return c;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed candidate record: ") + e.what());
  }
}

CandidateSet build_candidate_set(const Corpus& corpus, const UserHistory& history, std::uint64_t seed,
                                 const CandidateOptions& opts) {
  auto sel = select_positive(history, opts.restrict_positive_to);
  CandidateSet c;
  c.user_id = history.user_id;
  c.positive_id = sel.positive.item_id;
  c.seed = seed;
  c.negative_ids = sample_negatives(corpus, history, opts.negatives, seed, opts.distribution);
  c.presentation.reserve(c.negative_ids.size() + 1);
  c.presentation.push_back(c.positive_id);
  c.presentation.insert(c.presentation.end(), c.negative_ids.begin(), c.negative_ids.end());
  Rng shuffle_rng(splitmix64(seed + 1));
  shuffle_rng.shuffle(c.presentation);
  return c;
}

// --- splits ------------------------------------------------------------------

std::string to_string(SplitKind k) {
  switch (k) {
    case SplitKind::standard: return "standard";
    case SplitKind::item_cold_start: return "item_cold_start";
    case SplitKind::user_cold_start: return "user_cold_start";
  }
  return "standard";
}

SplitKind split_kind_from_string(const std::string& s) {
  if (s == "standard") return SplitKind::standard;
  if (s == "item_cold_start") return SplitKind::item_cold_start;
  if (s == "user_cold_start") return SplitKind::user_cold_start;
  throw ConfigError("unknown split kind '" + s + "'");
}

json SplitResult::to_json() const {
  return {{"kind", to_string(kind)},
          {"test_users", test_users},
          {"held_items", held_items},
          {"prompt_excluded_users", prompt_excluded_users},
          {"parameters", {{"fraction", fraction}, {"max_interactions", max_interactions}}},
          {"pool_size", pool_size}};
}

SplitResult SplitResult::from_json(const json& j) {
  try {
    SplitResult s;
    s.kind = split_kind_from_string(j.at("kind").get<std::string>());
    s.test_users = j.at("test_users").get<std::set<std::string>>();
    s.held_items = j.at("held_items").get<std::set<std::string>>();
    s.prompt_excluded_users = j.value("prompt_excluded_users", std::set<std::string>{});
    s.fraction = j.at("parameters").value("fraction", 0.0);
    s.max_interactions = j.at("parameters").value("max_interactions", std::size_t{0});
    s.pool_size = j.value("pool_size", std::size_t{0});
    return s;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed split record: ") + e.what());
  }
}

namespace {

void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw ArgumentError("fraction must lie in (0, 1)");
}

}  // namespace

SplitResult standard_split(const Corpus& corpus) {
  SplitResult s;
  s.kind = SplitKind::standard;
  for (auto& [id, _] : corpus.users()) s.test_users.insert(id);
  s.pool_size = corpus.interaction_count();
  return s;
}

SplitResult item_cold_start_split(const Corpus& corpus, double fraction) {
  check_fraction(fraction);
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (std::size_t i = 0; i < corpus.item_ids().size(); ++i)
    if (corpus.item_counts()[i] > 0) ranked.emplace_back(corpus.item_counts()[i], corpus.item_ids()[i]);
  std::sort(ranked.begin(), ranked.end());
  const auto held = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ranked.size())));

  SplitResult s;
  s.kind = SplitKind::item_cold_start;
  s.fraction = fraction;
  s.pool_size = held;
  for (std::size_t i = 0; i < held; ++i) s.held_items.insert(ranked[i].second);
  for (auto& [uid, h] : corpus.users()) {
    bool qualifies = std::any_of(h.interactions.begin(), h.interactions.end(), [&](const Interaction& x) {
      return x.rating > 3.0 && s.held_items.count(x.item_id);
    });
    if (qualifies) s.test_users.insert(uid);
  }
  return s;
}

SplitResult user_cold_start_split(const Corpus& corpus, double fraction, std::size_t max_interactions) {
  check_fraction(fraction);
  if (max_interactions < 1) throw ArgumentError("max_interactions must be >= 1");
  std::vector<const Interaction*> all;
  all.reserve(corpus.interaction_count());
  for (auto& [_, h] : corpus.users())
    for (auto& x : h.interactions) all.push_back(&x);
  std::sort(all.begin(), all.end(), [](const Interaction* a, const Interaction* b) {
    if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
    return a->file_order < b->file_order;
  });
  const auto pool = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(all.size())));

  SplitResult s;
  s.kind = SplitKind::user_cold_start;
  s.fraction = fraction;
  s.max_interactions = max_interactions;
  s.pool_size = pool;
  for (std::size_t i = all.size() - pool; i < all.size(); ++i) {
    const auto& uid = all[i]->user_id;
    if (corpus.user(uid).interactions.size() < max_interactions) s.test_users.insert(uid);
  }
  s.prompt_excluded_users = s.test_users;
  return s;
}

// --- semantic context --------------------------------------------------------

std::size_t estimate_tokens(std::string_view t) { return (t.size() + 3) / 4; }

std::string interaction_block(const ItemRecord* item, const Interaction& x, std::size_t description_chars) {
  std::string title = item ? text::collapse_whitespace(item->title) : std::string();
  std::string desc = item ? text::collapse_whitespace(item->description) : std::string();
  if (title.empty() && desc.empty()) title = x.item_id;
  if (description_chars != std::string::npos) desc = text::utf8_prefix(desc, description_chars);
  std::string out = "[" + title + " | ";
  if (!desc.empty()) out += desc + " ";
  out += "| " + text::format_rating(x.rating) + "]";
  return out;
}

namespace {

std::string join_blocks(const std::vector<std::string>& blocks, std::size_t from) {
  std::string out;
  for (std::size_t i = from; i < blocks.size(); ++i) {
    if (!out.empty()) out += '\n';
    out += blocks[i];
  }
  return out;
}

}  // namespace

std::string build_semantic_context(const std::vector<Interaction>& history, const Corpus& corpus,
                                   const ContextOptions& opts) {
  if (history.empty()) return {};
  std::vector<std::string> blocks;
  blocks.reserve(history.size());
  for (auto& x : history) blocks.push_back(interaction_block(corpus.find_item(x.item_id), x));

  std::size_t first = 0;
  std::string joined = join_blocks(blocks, first);
  while (estimate_tokens(joined) > opts.token_budget && first + 1 < blocks.size())
    joined = join_blocks(blocks, ++first);
  if (estimate_tokens(joined) <= opts.token_budget) return joined;

  // A single block remains and is still too large.
  const auto& last = history.back();
  const auto* item = corpus.find_item(last.item_id);
  std::string block = interaction_block(item, last, opts.description_chars);
  if (estimate_tokens(block) <= opts.token_budget) return block;
  std::size_t bare = interaction_block(item, last, 0).size();
  std::size_t room = opts.token_budget * 4 > bare + 1 ? opts.token_budget * 4 - bare - 1 : 0;
  return interaction_block(item, last, std::min(room, opts.description_chars));
}

}  // namespace mrec::corpus
