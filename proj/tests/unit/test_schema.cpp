#include <doctest.h>

#include "mrec/error.hpp"
#include "mrec/rng.hpp"
#include "mrec/schema.hpp"
#include "mrec/text.hpp"

using namespace mrec;
using namespace mrec::schema;
using nlohmann::json;

namespace {

MotivationalProfile prof(std::map<std::string, std::string> e) {
  MotivationalProfile p;
  p.entries = std::move(e);
  return p;
}

MotivationalProfile random_profile(Rng& rng) {
  static const std::vector<std::string> dims = {"functionality", "aesthetic", "sustainability", "comfort",
                                                "value",         "social",    "health",         "convenience"};
  static const std::vector<std::string> words = {"soft", "durable", "organic", "cheap", "stylish", "gift", "quiet"};
  MotivationalProfile p;
  std::size_t n = 1 + rng.below(dims.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::string d;
    std::size_t w = 1 + rng.below(3);
    for (std::size_t k = 0; k < w; ++k) d += (k ? " " : "") + words[rng.below(words.size())];
    p.entries[dims[rng.below(dims.size())]] = d;
  }
  return p;
}

}  // namespace

TEST_CASE("default schema has eight dimensions") {
  auto s = MotivationalSchema::default_schema();
  CHECK(s.size() == 8);
  for (auto n : {"functionality", "aesthetic", "sustainability", "comfort", "value", "social", "health", "convenience"})
    CHECK(s.contains(n));
  CHECK(MotivationalSchema::from_json(s.to_json()).to_json() == s.to_json());
}

TEST_CASE("validate_profile") {
  auto s = MotivationalSchema::default_schema();
  auto v = validate_profile(json{{"Functionality", "long battery life"}}, s);
  REQUIRE(v.profile.entries.size() == 1);
  CHECK(v.profile.entries.count("functionality") == 1);

  CHECK_THROWS_AS(validate_profile(json{{"brand_love", "x"}}, s), SchemaViolation);

  MotivationalSchema narrow({{"aesthetic", "looks"}, {"comfort", "feel"}});
  auto d = validate_profile(json{{"aesthetic", "minimalist"}, {"price", "cheap"}}, narrow);
  CHECK(d.profile.entries.size() == 1);
  CHECK(d.dropped_keys == std::vector<std::string>{"price"});
}

TEST_CASE("validate_profile is idempotent") {
  auto s = MotivationalSchema::default_schema();
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    auto p = random_profile(rng);
    auto once = validate_profile(p.entries, s).profile;
    auto twice = validate_profile(once.entries, s).profile;
    CHECK(once.entries == twice.entries);
  }
}

TEST_CASE("validated descriptors respect the word cap") {
  auto s = MotivationalSchema::default_schema();
  std::string longd;
  for (int i = 0; i < 50; ++i) longd += "word ";
  auto v = validate_profile(json{{"comfort", longd}}, s);
  CHECK(text::word_count(v.profile.entries.at("comfort")) <= kMaxDescriptorWords);
}

TEST_CASE("pairwise_sim") {
  auto p = prof({{"functionality", "long battery"}, {"aesthetic", "minimal look"}});
  CHECK(pairwise_sim(p, p) == 1.0);
  auto q = prof({{"social", "gift giving"}});
  CHECK(pairwise_sim(p, q) == 0.0);
  auto a = prof({{"functionality", "long battery"}, {"aesthetic", "sleek"}});
  auto b = prof({{"functionality", "quiet motor"}, {"sustainability", "recycled"}});
  CHECK(pairwise_sim(a, b) == doctest::Approx(0.5 / 3.0).epsilon(1e-9));
}

TEST_CASE("pairwise_sim is symmetric and bounded") {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    auto p = random_profile(rng), q = random_profile(rng);
    double s = pairwise_sim(p, q);
    CHECK(s == pairwise_sim(q, p));
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    CHECK(pairwise_sim(p, p) == 1.0);
  }
}

TEST_CASE("consistency_score") {
  auto p = prof({{"comfort", "soft fabric"}});
  auto q = prof({{"value", "low price"}});
  CHECK(consistency_score({p}) == 1.0);
  CHECK(consistency_score({p, p}) == 1.0);
  CHECK(consistency_score({p, q}) == 0.5);

  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    std::vector<MotivationalProfile> ps;
    std::size_t k = 1 + rng.below(6);
    for (std::size_t i = 0; i < k; ++i) ps.push_back(random_profile(rng));
    double sum = 0;
    for (auto& x : ps)
      for (auto& y : ps) sum += pairwise_sim(x, y);
    CHECK(consistency_score(ps) == sum / static_cast<double>(k * k));
  }
}

TEST_CASE("normalize_trait") {
  CHECK(normalize_trait("  Easy to Clean. ") == std::optional<std::string>("easy to clean"));
  CHECK(normalize_trait("supports joint health") == std::optional<std::string>("supports joint health"));
  CHECK_FALSE(normalize_trait("this amazing product will change the way you clean your whole house").has_value());
  CHECK_FALSE(normalize_trait("   ").has_value());
  for (auto raw : {"Gentle, Fragrance-Free!", "  SOFT touch ", "Suitable for Sensitive Skin."}) {
    auto once = normalize_trait(raw);
    REQUIRE(once.has_value());
    CHECK(normalize_trait(*once) == once);
  }
}

TEST_CASE("user metadata whitelist") {
  auto m = UserMetadata::make("u", {{"age_band", "25-34"}}, {"age_band"});
  CHECK(m.attributes.at("age_band") == "25-34");
  CHECK_THROWS_AS(UserMetadata::make("u", {{"income", "high"}}, {"age_band"}), ConfigError);
}

TEST_CASE("provenance round trip") {
  for (auto p : {Provenance::generated, Provenance::reflected, Provenance::ablation_raw})
    CHECK(provenance_from_string(to_string(p)) == p);
}
