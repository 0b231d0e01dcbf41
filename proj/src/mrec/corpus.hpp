#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace mrec::corpus {

using nlohmann::json;

struct Interaction {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::int64_t timestamp = 0;
  std::optional<std::string> review_text;
  std::size_t file_order = 0;  // line position in the source; breaks timestamp ties
};

struct ItemRecord {
  std::string item_id;
  std::string title;
  std::string description;
  std::optional<std::string> category;
  std::map<std::string, std::string> metadata;
  bool stub = false;  // referenced by an interaction but absent from the items file
};

struct UserHistory {
  std::string user_id;
  std::vector<Interaction> interactions;  // ascending (timestamp, file_order)
};

/// Source field names. Defaults follow the Amazon review dumps.
struct FieldMapping {
  std::string user = "reviewerID";
  std::string item = "asin";
  std::string rating = "overall";
  std::string timestamp = "unixReviewTime";
  std::string review = "reviewText";
  std::string item_id = "asin";
  std::string title = "title";
  std::string description = "description";
  std::string category = "category";

  static FieldMapping from_json(const json& j);
  json to_json() const;
};

/// Immutable once built; safe to share between threads.
class Corpus {
 public:
  Corpus() = default;
  static Corpus build(std::vector<Interaction> interactions, std::vector<ItemRecord> items,
                      std::size_t dropped = 0);

  const std::map<std::string, UserHistory>& users() const { return users_; }
  const std::map<std::string, ItemRecord>& items() const { return items_; }
  /// Sorted item ids; index space for sampling.
  const std::vector<std::string>& item_ids() const { return item_ids_; }
  /// Interaction counts aligned with item_ids().
  const std::vector<std::size_t>& item_counts() const { return item_counts_; }

  std::size_t interaction_count() const { return interaction_count_; }
  std::size_t dropped_count() const { return dropped_; }
  std::size_t stub_item_count() const { return stub_items_; }

  const ItemRecord* find_item(const std::string& id) const;
  /// Throws IntegrityError when the id is unknown.
  const ItemRecord& item(const std::string& id) const;
  const UserHistory& user(const std::string& id) const;

  json stats_json(const std::string& dataset) const;

 private:
  std::map<std::string, UserHistory> users_;
  std::map<std::string, ItemRecord> items_;
  std::vector<std::string> item_ids_;
  std::vector<std::size_t> item_counts_;
  std::size_t interaction_count_ = 0;
  std::size_t dropped_ = 0;
  std::size_t stub_items_ = 0;
};

Corpus ingest_reviews(const std::filesystem::path& interactions_path,
                      const std::filesystem::path& items_path, const FieldMapping& fields = {});

Corpus filter_min_interactions(const Corpus& corpus, std::size_t min_count = 2);

struct PositiveSelection {
  Interaction positive;
  std::size_t index = 0;             // position within the history
  std::vector<Interaction> context;  // observed interactions before the positive
};

/// Latest interaction with rating > 3. When `restrict_to` is given the
/// positive must be one of those items and the context omits all of them.
PositiveSelection select_positive(const UserHistory& history,
                                  const std::set<std::string>* restrict_to = nullptr);

enum class NegativeDistribution { uniform, popularity };

std::vector<std::string> sample_negatives(const Corpus& corpus, const UserHistory& history,
                                          std::size_t n, std::uint64_t seed,
                                          NegativeDistribution dist = NegativeDistribution::uniform);

inline constexpr std::size_t kNegativeCount = 29;
inline constexpr std::size_t kCandidatePoolSize = kNegativeCount + 1;

struct CandidateSet {
  std::string user_id;
  std::string positive_id;
  std::vector<std::string> negative_ids;
  std::uint64_t seed = 0;
  std::vector<std::string> presentation;  // seeded shuffle of positive + negatives

  json to_json() const;
  static CandidateSet from_json(const json& j);
};

struct CandidateOptions {
  std::size_t negatives = kNegativeCount;
  NegativeDistribution distribution = NegativeDistribution::uniform;
  const std::set<std::string>* restrict_positive_to = nullptr;
};

CandidateSet build_candidate_set(const Corpus& corpus, const UserHistory& history,
                                 std::uint64_t seed, const CandidateOptions& opts = {});

enum class SplitKind { standard, item_cold_start, user_cold_start };
std::string to_string(SplitKind k);
SplitKind split_kind_from_string(const std::string& s);

struct SplitResult {
  SplitKind kind = SplitKind::standard;
  std::set<std::string> test_users;
  std::set<std::string> held_items;
  std::set<std::string> prompt_excluded_users;
  double fraction = 0.0;
  std::size_t max_interactions = 0;
  std::size_t pool_size = 0;  // held items, or interactions in the latest-fraction window

  json to_json() const;
  static SplitResult from_json(const json& j);
};

SplitResult standard_split(const Corpus& corpus);
SplitResult item_cold_start_split(const Corpus& corpus, double fraction = 0.10);
SplitResult user_cold_start_split(const Corpus& corpus, double fraction = 0.10,
                                  std::size_t max_interactions = 3);

struct ContextOptions {
  std::size_t token_budget = 3000;
  std::size_t description_chars = 500;
};

/// Rough token estimate: one token per four characters, rounded up.
std::size_t estimate_tokens(std::string_view text);

std::string interaction_block(const ItemRecord* item, const Interaction& x,
                              std::size_t description_chars = std::string::npos);

/// "[title | description | rating]" blocks in time order, squeezed into the
/// token budget by dropping the oldest blocks and then truncating the
/// description of the most recent one.
std::string build_semantic_context(const std::vector<Interaction>& history, const Corpus& corpus,
                                   const ContextOptions& opts = {});

}  // namespace mrec::corpus
