#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mrec::schema {

using nlohmann::json;

struct Dimension {
  std::string name;
  std::string definition;
};

class MotivationalSchema {
 public:
  explicit MotivationalSchema(std::vector<Dimension> dims);

  /// functionality, aesthetic, sustainability, comfort, value, social,
  /// health, convenience.
  static MotivationalSchema default_schema();
  static MotivationalSchema from_json(const json& j);
  static MotivationalSchema load(const std::filesystem::path& p);

  const std::vector<Dimension>& dimensions() const { return dims_; }
  bool contains(const std::string& name) const;
  std::size_t size() const { return dims_.size(); }
  json to_json() const;

 private:
  std::vector<Dimension> dims_;
};

enum class Provenance { generated, reflected, ablation_raw };
std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

inline constexpr std::size_t kMaxDescriptorWords = 30;

struct MotivationalProfile {
  std::map<std::string, std::string> entries;
  std::string source_user;
  Provenance provenance = Provenance::generated;

  json entries_json() const;
  bool operator==(const MotivationalProfile&) const = default;
};

struct ValidatedProfile {
  MotivationalProfile profile;
  std::vector<std::string> dropped_keys;  // off-schema, duplicate, or empty
};

/// Case-folds keys, drops anything outside the schema, and caps
/// descriptors at 30 words. Throws SchemaViolation when nothing survives.
ValidatedProfile validate_profile(const json& candidate, const MotivationalSchema& schema);
ValidatedProfile validate_profile(const std::map<std::string, std::string>& candidate,
                                  const MotivationalSchema& schema);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

/// 0.5 * Jaccard(keys) + 0.5 * Jaccard(descriptor tokens).
double pairwise_sim(const MotivationalProfile& p, const MotivationalProfile& q);

/// Mean of pairwise_sim over all ordered pairs, diagonal included.
double consistency_score(const std::vector<MotivationalProfile>& profiles);

struct TraitSet {
  std::string item_id;
  std::vector<std::string> traits;
  json to_json() const { return {{"item_id", item_id}, {"traits", traits}}; }
};

inline constexpr std::size_t kMaxTraitWords = 8;
inline constexpr std::size_t kDefaultMaxTraits = 8;

/// Lowercase, trimmed, whitespace-collapsed, edge punctuation removed.
/// nullopt when the result is empty, longer than eight words, or holds a
/// digits-only token.
std::optional<std::string> normalize_trait(std::string_view raw);

struct UserMetadata {
  std::string user_id;
  std::map<std::string, std::string> attributes;

  /// Throws ConfigError for attribute names outside the whitelist.
  static UserMetadata make(std::string user_id, std::map<std::string, std::string> attrs,
                           const std::set<std::string>& whitelist);
};

/// JSONL sidecar: {"user_id": ..., "attributes": {...}} per line.
std::map<std::string, UserMetadata> load_metadata(const std::filesystem::path& p,
                                                  const std::set<std::string>& whitelist);

}  // namespace mrec::schema
