#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <doctest.h>

#include "mrec/error.hpp"
#include "mrec/gateway.hpp"
#include "mrec/rng.hpp"
#include "mrec/runner.hpp"
#include "synth.hpp"

using namespace mrec;
using namespace mrec::gateway;
using nlohmann::json;

namespace {

ChatRequest sample_request(const Gateway& gw) {
  return gw.make_request(ModuleTag::mote, "Distill traits.", "Item: Lamp\nDescription: warm soft light");
}

}  // namespace

TEST_CASE("mock provider is deterministic") {
  Gateway gw(GatewayConfig::defaults(), make_mock_provider());
  auto req = sample_request(gw);
  auto a = gw.complete(req), b = gw.complete(req);
  CHECK(a.text == b.text);
  CHECK(a.provider == ProviderKind::mock);
  CHECK(gw.ledger().size() == 2);
}

TEST_CASE("default params per module") {
  auto mote = default_params(ModuleTag::mote);
  CHECK(mote.max_tokens == 4095);
  CHECK(mote.temperature == 0.9);
  CHECK(mote.top_p == 0.9);
  auto mope = default_params(ModuleTag::mope);
  CHECK(mope.temperature == 1.0);
  CHECK(mope.top_p == 1.0);
  CHECK(default_params(ModuleTag::mar).model_name == "gpt-4o");
  CHECK(mope.model_name == "gpt-3.5-turbo");
  CHECK(mote.model_name == "gpt-3.5-turbo");
}

TEST_CASE("invalid generation params are rejected") {
  GenerationParams p = default_params(ModuleTag::mar);
  p.temperature = -1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = default_params(ModuleTag::mar);
  p.max_tokens = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("cached_complete serves repeats from the cache") {
  auto dir = testing::temp_dir("cache");
  auto cfg = GatewayConfig::defaults();
  cfg.cache_dir = dir;
  auto rec = std::make_shared<testing::RecordingProvider>(make_mock_provider());
  Gateway gw(cfg, rec);
  auto req = sample_request(gw);
  auto first = gw.cached_complete(req, {"d", "item:x"});
  auto second = gw.cached_complete(req, {"d", "item:x"});
  CHECK(rec->count() == 1);
  CHECK(second.provider == ProviderKind::cache);
  CHECK(second.text == first.text);
  auto entries = gw.ledger().entries();
  REQUIRE(entries.size() == 2);
  CHECK(entries[1].provider == ProviderKind::cache);
  CHECK(entries[1].prompt_tokens == 0);
  CHECK(entries[1].completion_tokens == 0);
}

TEST_CASE("corrupted cache entry is a miss and gets rewritten") {
  auto dir = testing::temp_dir("cache-corrupt");
  auto cfg = GatewayConfig::defaults();
  cfg.cache_dir = dir;
  auto rec = std::make_shared<testing::RecordingProvider>(make_mock_provider());
  Gateway gw(cfg, rec);
  auto req = sample_request(gw);
  gw.cached_complete(req);
  auto path = gw.cache()->path_for(cache_key(req));
  REQUIRE(std::filesystem::exists(path));
  std::ofstream(path) << "{not json";
  auto resp = gw.cached_complete(req);
  CHECK(rec->count() == 2);
  CHECK(resp.provider == ProviderKind::mock);
  CHECK(json::parse(testing::read_text(path), nullptr, false).is_object());
  CHECK(gw.cache()->corrupt_entries() == 1);
  CHECK(gw.cached_complete(req).provider == ProviderKind::cache);
}

TEST_CASE("cache key changes with every field") {
  Gateway gw(GatewayConfig::defaults(), make_mock_provider());
  auto base = sample_request(gw);
  auto k0 = cache_key(base);
  CHECK(k0 == cache_key(base));
  std::vector<std::function<void(ChatRequest&)>> perturb = {
      [](ChatRequest& r) { r.module_tag = ModuleTag::mar; },
      [](ChatRequest& r) { r.system_text += "."; },
      [](ChatRequest& r) { r.user_text += "."; },
      [](ChatRequest& r) { r.params.model_name = "other"; },
      [](ChatRequest& r) { r.params.temperature = 0.5; },
      [](ChatRequest& r) { r.params.top_p = 0.5; },
      [](ChatRequest& r) { r.params.max_tokens = 7; },
  };
  for (auto& f : perturb) {
    auto r = base;
    f(r);
    CHECK(cache_key(r) != k0);
  }
}

TEST_CASE("entry cost matches the closed form") {
  PriceTable prices({{"m", {0.5, 1.5}}});
  LedgerEntry e;
  e.model_name = "m";
  e.prompt_tokens = 1000;
  e.completion_tokens = 500;
  CHECK(entry_cost(e, prices) == doctest::Approx(1.25).epsilon(1e-12));

  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    e.prompt_tokens = static_cast<long>(rng.below(100000));
    e.completion_tokens = static_cast<long>(rng.below(100000));
    double expect = e.prompt_tokens / 1000.0 * 0.5 + e.completion_tokens / 1000.0 * 1.5;
    CHECK(std::abs(entry_cost(e, prices) - expect) <= 1e-9);
  }
}

TEST_CASE("cost report") {
  PriceTable prices({{"m", {0.5, 1.5}}});
  auto empty = cost_report({}, prices, 10, "d");
  CHECK(empty.total == 0.0);
  CHECK(empty.per_interaction == 0.0);

  LedgerEntry e;
  e.model_name = "m";
  e.prompt_tokens = 1000;
  e.completion_tokens = 500;
  auto r = cost_report({e, e}, prices, 4, "d");
  CHECK(r.total == doctest::Approx(2.5));
  CHECK(r.per_interaction == doctest::Approx(0.625));
  CHECK(CostSummary::from_json(r.to_json()).to_json() == r.to_json());

  e.model_name = "unknown-model";
  CHECK_THROWS_AS(cost_report({e}, prices, 4, "d"), ReportingError);
  auto table = render_cost_table({r});
  CHECK(table.find("d") != std::string::npos);
}

TEST_CASE("ledger accepts concurrent appends") {
  CostLedger ledger;
  std::vector<std::thread> ts;
  for (int t = 0; t < 8; ++t)
    ts.emplace_back([&] {
      for (int i = 0; i < 250; ++i) ledger.append({});
    });
  for (auto& t : ts) t.join();
  CHECK(ledger.size() == 2000);
}

TEST_CASE("hybrid deployment maps each module to its own model") {
  json models = {{"mar", "model-a"}, {"mope", "model-b"}, {"mote", "model-b"}};
  auto cfg = runner::gateway_config_from_json(models, json(), json(), ".");
  CHECK(cfg.params_for(ModuleTag::mar).model_name == "model-a");
  CHECK(cfg.params_for(ModuleTag::mar_reflect).model_name == "model-a");
  CHECK(cfg.params_for(ModuleTag::mope).model_name == "model-b");
  CHECK(cfg.params_for(ModuleTag::mope_reflect).model_name == "model-b");
  CHECK(cfg.params_for(ModuleTag::mote).model_name == "model-b");

  Gateway gw(cfg, make_mock_provider());
  gw.complete(gw.make_request(ModuleTag::mar, "s", "u"));
  gw.complete(gw.make_request(ModuleTag::mope, "s", "u"));
  auto es = gw.ledger().entries();
  CHECK(es[0].model_name == "model-a");
  CHECK(es[1].model_name == "model-b");
}

TEST_CASE("remote provider without a credential is a config error") {
  RemoteOptions o;
  o.api_key_env = "MREC_TEST_UNSET_CREDENTIAL";
  ::unsetenv(o.api_key_env.c_str());
  CHECK_THROWS_AS(make_remote_provider(o), ConfigError);
}

TEST_CASE("remote provider retries 429 then succeeds") {
  httplib::Server srv;
  std::atomic<int> hits{0};
  std::string seen_auth;
  srv.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits++ < 2) {
      res.status = 429;
      return;
    }
    seen_auth = req.get_header_value("Authorization");
    json body = json::parse(req.body);
    json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "ok " + body["model"].get<std::string>()}}}}}},
                  {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 3}}}};
    res.set_content(reply.dump(), "application/json");
  });
  int port = srv.bind_to_any_port("127.0.0.1");
  std::thread th([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  ::setenv("MREC_TEST_STUB_CREDENTIAL", "stub-value", 1);
  RemoteOptions o;
  o.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  o.api_key_env = "MREC_TEST_STUB_CREDENTIAL";
  o.timeout_seconds = 5;
  auto cfg = GatewayConfig::defaults();
  cfg.retry.base_delay_ms = 1;
  Gateway gw(cfg, make_remote_provider(o));
  gw.set_sleep_scale(0.0);
  auto resp = gw.complete(gw.make_request(ModuleTag::mar, "s", "u"));
  srv.stop();
  th.join();
  ::unsetenv("MREC_TEST_STUB_CREDENTIAL");

  CHECK(resp.retry_count == 2);
  CHECK(resp.text == "ok gpt-4o");
  CHECK(resp.provider == ProviderKind::remote);
  CHECK(resp.prompt_tokens == 12);
  CHECK(seen_auth == "Bearer stub-value");
  CHECK(gw.ledger().entries().at(0).retry_count == 2);
}

TEST_CASE("exhausted retries raise a gateway error") {
  httplib::Server srv;
  srv.Post("/c", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  int port = srv.bind_to_any_port("127.0.0.1");
  std::thread th([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  ::setenv("MREC_TEST_STUB_CREDENTIAL", "stub-value", 1);
  RemoteOptions o;
  o.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/c";
  o.api_key_env = "MREC_TEST_STUB_CREDENTIAL";
  auto cfg = GatewayConfig::defaults();
  cfg.retry.max_retries = 2;
  Gateway gw(cfg, make_remote_provider(o));
  gw.set_sleep_scale(0.0);
  CHECK_THROWS_AS(gw.complete(gw.make_request(ModuleTag::mar, "s", "u")), GatewayError);
  srv.stop();
  th.join();
  ::unsetenv("MREC_TEST_STUB_CREDENTIAL");
}
