#include <algorithm>
#include <fstream>
#include <set>

#include <doctest.h>

#include "mrec/corpus.hpp"
#include "mrec/error.hpp"
#include "synth.hpp"

using namespace mrec;
using namespace mrec::corpus;
namespace fs = std::filesystem;

namespace {

Interaction ix(std::string u, std::string i, double r, std::int64_t ts, std::size_t order = 0) {
  Interaction x;
  x.user_id = std::move(u);
  x.item_id = std::move(i);
  x.rating = r;
  x.timestamp = ts;
  x.file_order = order;
  return x;
}

UserHistory history_of(const std::vector<double>& ratings) {
  UserHistory h{"u", {}};
  for (std::size_t i = 0; i < ratings.size(); ++i)
    h.interactions.push_back(ix("u", "i" + std::to_string(i), ratings[i], static_cast<std::int64_t>(i), i));
  return h;
}

std::string iid(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "i%05d", i);
  return buf;
}

}  // namespace

TEST_CASE("ingest drops malformed lines and counts them") {
  auto dir = testing::temp_dir("ingest");
  {
    std::ofstream f(dir / "interactions.jsonl");
    f << R"({"reviewerID":"u1","asin":"a","overall":5,"unixReviewTime":1})" << "\n"
      << R"({"reviewerID":"u1","asin":"b","unixReviewTime":2})" << "\n"
      << R"({"reviewerID":"u2","asin":"a","overall":4,"unixReviewTime":3})" << "\n";
    std::ofstream g(dir / "items.jsonl");
    g << R"({"asin":"a","title":"Lamp","description":"Warm light"})" << "\n";
  }
  auto c = ingest_reviews(dir / "interactions.jsonl", dir / "items.jsonl");
  CHECK(c.interaction_count() == 2);
  CHECK(c.dropped_count() == 1);
  CHECK(c.users().size() == 2);
}

TEST_CASE("ingest of an empty file is an empty-corpus error") {
  auto dir = testing::temp_dir("ingest-empty");
  std::ofstream(dir / "interactions.jsonl").close();
  std::ofstream(dir / "items.jsonl").close();
  CHECK_THROWS_AS(ingest_reviews(dir / "interactions.jsonl", dir / "items.jsonl"), EmptyCorpusError);
}

TEST_CASE("field mapping renames are honored") {
  auto dir = testing::temp_dir("ingest-map");
  {
    std::ofstream f(dir / "interactions.jsonl");
    f << R"({"user":"u1","item":"a","stars":5,"time":1})" << "\n";
    std::ofstream g(dir / "items.jsonl");
    g << R"({"item":"a","name":"Lamp","description":""})" << "\n";
  }
  FieldMapping m;
  m.user = "user";
  m.item = "item";
  m.rating = "stars";
  m.timestamp = "time";
  m.item_id = "item";
  m.title = "name";
  auto c = ingest_reviews(dir / "interactions.jsonl", dir / "items.jsonl", m);
  CHECK(c.interaction_count() == 1);
  CHECK(c.item("a").title == "Lamp");
}

TEST_CASE("filter_min_interactions") {
  std::vector<Interaction> xs;
  std::size_t order = 0;
  auto add = [&](const std::string& u, int n) {
    for (int i = 0; i < n; ++i) xs.push_back(ix(u, "i" + std::to_string(i), 5, i, order++));
  };
  add("u1", 1);
  add("u2", 2);
  add("u5", 5);
  auto c = Corpus::build(xs, {});
  auto f = filter_min_interactions(c, 2);
  CHECK(f.users().size() == 2);
  CHECK(f.users().count("u2") == 1);
  CHECK(f.users().count("u5") == 1);

  auto same = filter_min_interactions(c, 1);
  CHECK(same.users().size() == 3);
  CHECK(same.interaction_count() == c.interaction_count());

  auto singles = Corpus::build({ix("a", "x", 5, 1), ix("b", "y", 5, 1)}, {});
  auto none = filter_min_interactions(singles, 2);
  CHECK(none.users().empty());
  CHECK_FALSE(none.items().empty());
}

TEST_CASE("select_positive picks the latest rating above 3") {
  auto sel = select_positive(history_of({5, 2, 4, 3}));
  CHECK(sel.index == 2);
  CHECK(sel.positive.rating == 4);
  CHECK(sel.context.size() == 2);

  CHECK_THROWS_AS(select_positive(history_of({3, 3})), NoPositiveError);

  auto last = select_positive(history_of({1, 2, 5}));
  CHECK(last.index == 2);
  CHECK(last.context.size() == 2);
}

TEST_CASE("select_positive breaks timestamp ties by file order") {
  UserHistory h{"u", {ix("u", "a", 5, 10, 0), ix("u", "b", 5, 10, 1)}};
  CHECK(select_positive(h).positive.item_id == "b");
}

TEST_CASE("sample_negatives") {
  auto reviews = std::vector<testing::Review>{{"u", iid(0), 5, 1}, {"u", iid(1), 5, 2}, {"u", iid(2), 5, 3}};
  auto items = testing::plain_items(100);
  auto c = testing::build_corpus(reviews, items);
  const auto& h = c.user("u");
  auto a = sample_negatives(c, h, 29, 7);
  auto b = sample_negatives(c, h, 29, 7);
  CHECK(a == b);
  std::set<std::string> s(a.begin(), a.end());
  CHECK(s.size() == 29);
  for (auto& x : h.interactions) CHECK(s.count(x.item_id) == 0);
  CHECK(sample_negatives(c, h, 0, 7).empty());

  auto small = testing::build_corpus({{"u", iid(0), 5, 1}, {"u", iid(1), 5, 2}}, testing::plain_items(30));
  CHECK_THROWS_AS(sample_negatives(small, small.user("u"), 29, 7), SamplingError);
}

TEST_CASE("build_candidate_set") {
  auto c = testing::build_corpus({{"u", iid(0), 2, 1}, {"u", iid(1), 5, 2}, {"v", iid(2), 3, 1}},
                                 testing::plain_items(100));
  auto a = build_candidate_set(c, c.user("u"), 11);
  auto b = build_candidate_set(c, c.user("u"), 11);
  CHECK(a.presentation.size() == 30);
  CHECK(a.positive_id == iid(1));
  CHECK(std::count(a.presentation.begin(), a.presentation.end(), iid(1)) == 1);
  CHECK(a.presentation == b.presentation);
  CHECK(a.to_json() == CandidateSet::from_json(a.to_json()).to_json());
  CHECK_THROWS_AS(build_candidate_set(c, c.user("v"), 11), NoPositiveError);
}

TEST_CASE("item cold-start split holds the fewest-interaction items") {
  // counts 2,1,1,3,4,...: the two count-1 items are held
  std::vector<testing::Review> rs;
  int n = 0;
  std::vector<int> counts = {2, 1, 1, 3, 4, 5, 6, 7, 8, 9};
  for (int i = 0; i < 10; ++i)
    for (int k = 0; k < counts[i]; ++k) rs.push_back({"u" + std::to_string(n++ % 7), iid(i), 5, n});
  auto c = testing::build_corpus(rs, testing::plain_items(10));
  auto s = item_cold_start_split(c, 0.2);
  CHECK(s.held_items == std::set<std::string>{iid(1), iid(2)});

  auto empty = item_cold_start_split(c, 0.05);
  CHECK(empty.held_items.empty());
  CHECK(empty.test_users.empty());
  CHECK_THROWS(item_cold_start_split(c, 1.5));
}

TEST_CASE("item cold-start breaks count ties lexicographically") {
  std::vector<testing::Review> rs;
  for (int i = 0; i < 10; ++i) rs.push_back({"u" + std::to_string(i), iid(i), 5, i});
  auto c = testing::build_corpus(rs, testing::plain_items(10));
  CHECK(item_cold_start_split(c, 0.2).held_items == std::set<std::string>{iid(0), iid(1)});
}

TEST_CASE("user cold-start split") {
  std::vector<testing::Review> rs;
  // 90 older interactions by a heavy user, then 10 latest.
  for (int i = 0; i < 90; ++i) rs.push_back({"heavy", iid(10 + i % 50), 5, i});
  rs.push_back({"five", iid(1), 5, 100});
  for (int i = 0; i < 4; ++i) rs.push_back({"five", iid(2 + i), 5, 1 + i});
  rs.push_back({"two", iid(7), 5, 101});
  rs.push_back({"two", iid(8), 5, 102});
  for (int i = 0; i < 3; ++i) rs.push_back({"x" + std::to_string(i), iid(9), 5, 103 + i});
  // total so far 90 + 5 + 2 + 3 = 100
  REQUIRE(rs.size() == 100);
  auto c = testing::build_corpus(rs, testing::plain_items(60));
  auto s = user_cold_start_split(c, 0.1, 3);
  CHECK(s.pool_size == 10);
  CHECK(s.test_users.count("five") == 0);
  CHECK(s.test_users.count("two") == 1);
  CHECK(s.test_users.count("heavy") == 0);
}

TEST_CASE("semantic context") {
  auto c = testing::build_corpus({{"u", "A", 5, 1}, {"u", "B", 4, 2}},
                                 {{"A", "Lamp", "Warm light for reading."}, {"B", "Mug", ""}});
  const auto& h = c.user("u").interactions;
  auto big = build_semantic_context(h, c, {3000, 500});
  auto pa = big.find("[Lamp | Warm light for reading. | 5]");
  auto pb = big.find("[Mug | | 4]");
  CHECK(pa != std::string::npos);
  CHECK(pb != std::string::npos);
  CHECK(pa < pb);

  std::string longdesc(2000, 'x');
  auto c2 = testing::build_corpus({{"u", "A", 5, 1}, {"u", "B", 4, 2}}, {{"A", "Lamp", longdesc}, {"B", "Kettle", longdesc}});
  auto small = build_semantic_context(c2.user("u").interactions, c2, {100, 500});
  CHECK(small.find("Kettle") != std::string::npos);
  CHECK(small.find("Lamp") == std::string::npos);
  CHECK(estimate_tokens(small) <= 100);
}

TEST_CASE("context respects the budget whenever one block fits") {
  auto reviews = testing::random_reviews(40, 60, 3, 2, 12);
  auto items = testing::plain_items(60);
  auto c = testing::build_corpus(reviews, items);
  for (std::size_t budget : {20u, 50u, 200u, 3000u})
    for (auto& [uid, h] : c.users()) {
      auto ctx = build_semantic_context(h.interactions, c, {budget, 500});
      CHECK(estimate_tokens(ctx) <= budget);
    }
}
