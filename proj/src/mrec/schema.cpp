#include "schema.hpp"

#include <cctype>

#include "error.hpp"
#include "io.hpp"
#include "text.hpp"

namespace mrec::schema {

MotivationalSchema::MotivationalSchema(std::vector<Dimension> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw ConfigError("motivational schema has no dimensions");
  std::set<std::string> seen;
  for (auto& d : dims_) {
    if (d.name.empty()) throw ConfigError("schema dimension with empty name");
    for (unsigned char c : d.name)
      if (std::isupper(c) || std::isspace(c))
        throw ConfigError("schema dimension '" + d.name + "' must be lowercase without spaces");
    if (!seen.insert(d.name).second) throw ConfigError("duplicate schema dimension '" + d.name + "'");
  }
}

MotivationalSchema MotivationalSchema::default_schema() {
  return MotivationalSchema({
      {"functionality", "practical performance, effectiveness, durability, reliable results"},
      {"aesthetic", "appearance, style, design, color, scent, elegant look"},
      {"sustainability", "environmental impact, organic, natural, recyclable, eco-friendly, cruelty-free"},
      {"comfort", "physical comfort, softness, gentle feel, fit, soothing"},
      {"value", "affordability, price-performance, long-lasting quantity, worth the money"},
      {"social", "gifting, sharing, recommendations, popularity, family, friends"},
      {"health", "wellbeing, safety, skin health, hypoallergenic, sensitive skin, nutrition"},
      {"convenience", "ease of use, time saving, portability, travel, quick application"},
  });
}

MotivationalSchema MotivationalSchema::from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("schema file must be a JSON list of {name, definition}");
  std::vector<Dimension> dims;
  for (auto& e : j) {
    if (!e.is_object() || !e.contains("name") || !e["name"].is_string())
      throw ConfigError("schema entry missing string 'name'");
    dims.push_back({e["name"].get<std::string>(), e.value("definition", std::string())});
  }
  return MotivationalSchema(std::move(dims));
}

MotivationalSchema MotivationalSchema::load(const std::filesystem::path& p) {
  return from_json(io::read_json(p));
}

bool MotivationalSchema::contains(const std::string& name) const {
  for (auto& d : dims_)
    if (d.name == name) return true;
  return false;
}

json MotivationalSchema::to_json() const {
  json out = json::array();
  for (auto& d : dims_) out.push_back({{"name", d.name}, {"definition", d.definition}});
  return out;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::generated: return "generated";
    case Provenance::reflected: return "reflected";
    case Provenance::ablation_raw: return "ablation_raw";
  }
  return "generated";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "generated") return Provenance::generated;
  if (s == "reflected") return Provenance::reflected;
  if (s == "ablation_raw") return Provenance::ablation_raw;
  throw IntegrityError("unknown provenance '" + s + "'");
}

json MotivationalProfile::entries_json() const {
  json out = json::object();
  for (auto& [k, v] : entries) out[k] = v;
  return out;
}

namespace {

std::optional<std::string> descriptor_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (auto& e : v) {
      if (!e.is_string()) continue;
      if (!out.empty()) out += ", ";
      out += e.get<std::string>();
    }
    return out;
  }
  return std::nullopt;
}

std::string cap_words(const std::string& s, std::size_t n) {
  auto words = text::split_whitespace(s);
  std::string out;
  for (std::size_t i = 0; i < words.size() && i < n; ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace

ValidatedProfile validate_profile(const json& candidate, const MotivationalSchema& schema) {
  if (!candidate.is_object() || candidate.empty()) throw SchemaViolation("profile candidate is not a nonempty object");
  ValidatedProfile out;
  for (auto& [raw_key, raw_value] : candidate.items()) {
    std::string key = text::to_lower(text::trim(raw_key));
    auto value = descriptor_text(raw_value);
    std::string desc = value ? cap_words(text::collapse_whitespace(*value), kMaxDescriptorWords) : std::string();
    if (!schema.contains(key) || desc.empty() || out.profile.entries.count(key)) {
      out.dropped_keys.push_back(raw_key);
      continue;
    }
    out.profile.entries.emplace(std::move(key), std::move(desc));
  }
  if (out.profile.entries.empty()) throw SchemaViolation("no profile keys fall within the motivational schema");
  return out;
}

ValidatedProfile validate_profile(const std::map<std::string, std::string>& candidate,
                                  const MotivationalSchema& schema) {
  json j = json::object();
  for (auto& [k, v] : candidate) j[k] = v;
  if (j.empty()) throw SchemaViolation("profile candidate is empty");
  return validate_profile(j, schema);
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

namespace {

std::set<std::string> descriptor_tokens(const MotivationalProfile& p) {
  std::set<std::string> out;
  for (auto& [_, d] : p.entries)
    for (auto& t : text::tokenize(d)) out.insert(t);
  return out;
}

std::set<std::string> keys(const MotivationalProfile& p) {
  std::set<std::string> out;
  for (auto& [k, _] : p.entries) out.insert(k);
  return out;
}

}  // namespace

double pairwise_sim(const MotivationalProfile& p, const MotivationalProfile& q) {
  return 0.5 * jaccard(keys(p), keys(q)) + 0.5 * jaccard(descriptor_tokens(p), descriptor_tokens(q));
}

double consistency_score(const std::vector<MotivationalProfile>& profiles) {
  if (profiles.empty()) throw ArgumentError("consistency_score needs at least one profile");
  const double k = static_cast<double>(profiles.size());
  double sum = 0.0;
  for (auto& p : profiles)
    for (auto& q : profiles) sum += pairwise_sim(p, q);
  return sum / (k * k);
}

std::optional<std::string> normalize_trait(std::string_view raw) {
  std::string s(raw);
  for (;;) {
    std::string next = text::collapse_whitespace(text::to_lower(text::trim(s)));
    std::size_t b = 0, e = next.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(next[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(next[e - 1]))) --e;
    next = text::trim(next.substr(b, e - b));
    if (next == s) break;
    s = std::move(next);
  }
  if (s.empty()) return std::nullopt;
  auto words = text::split_whitespace(s);
  if (words.size() > kMaxTraitWords) return std::nullopt;
  for (auto& w : words)
    if (text::is_digits(w)) return std::nullopt;
  return s;
}

UserMetadata UserMetadata::make(std::string user_id, std::map<std::string, std::string> attrs,
                                const std::set<std::string>& whitelist) {
  for (auto& [k, _] : attrs)
    if (!whitelist.count(k)) throw ConfigError("metadata attribute '" + k + "' is not whitelisted");
  return UserMetadata{std::move(user_id), std::move(attrs)};
}

std::map<std::string, UserMetadata> load_metadata(const std::filesystem::path& p,
                                                  const std::set<std::string>& whitelist) {
  std::map<std::string, UserMetadata> out;
  for (auto& rec : io::read_jsonl(p)) {
    if (!rec.contains("user_id") || !rec.contains("attributes") || !rec["attributes"].is_object())
      throw ConfigError("metadata record needs user_id and attributes object");
    std::map<std::string, std::string> attrs;
    for (auto& [k, v] : rec["attributes"].items())
      attrs[k] = v.is_string() ? v.get<std::string>() : v.dump();
    auto uid = rec["user_id"].get<std::string>();
    out.emplace(uid, UserMetadata::make(uid, std::move(attrs), whitelist));
  }
  return out;
}

}  // namespace mrec::schema
