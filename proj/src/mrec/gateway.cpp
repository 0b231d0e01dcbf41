#include "gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "error.hpp"
#include "hash.hpp"

namespace mrec::gateway {

namespace fs = std::filesystem;

std::string to_string(ModuleTag t) {
  switch (t) {
    case ModuleTag::mope: return "mope";
    case ModuleTag::mote: return "mote";
    case ModuleTag::mar: return "mar";
    case ModuleTag::mar_reflect: return "mar_reflect";
    case ModuleTag::mope_reflect: return "mope_reflect";
  }
  return "mope";
}

ModuleTag module_tag_from_string(const std::string& s) {
  for (auto t : kAllTags)
    if (to_string(t) == s) return t;
  throw ConfigError("unknown module tag '" + s + "'");
}

std::string to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::remote: return "remote";
    case ProviderKind::mock: return "mock";
    case ProviderKind::cache: return "cache";
  }
  return "mock";
}

namespace {

ProviderKind provider_from_string(const std::string& s) {
  if (s == "remote") return ProviderKind::remote;
  if (s == "mock") return ProviderKind::mock;
  if (s == "cache") return ProviderKind::cache;
  throw IntegrityError("unknown provider kind '" + s + "'");
}

}  // namespace

void GenerationParams::validate() const {
  if (model_name.empty()) throw ConfigError("model name must be nonempty");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

json GenerationParams::to_json() const {
  return {{"model", model_name}, {"temperature", temperature}, {"top_p", top_p}, {"max_tokens", max_tokens}};
}

GenerationParams GenerationParams::from_json(const json& j, GenerationParams base) {
  if (!j.is_object()) throw ConfigError("module params must be an object");
  try {
    if (j.contains("model")) base.model_name = j["model"].get<std::string>();
    if (j.contains("temperature")) base.temperature = j["temperature"].get<double>();
    if (j.contains("top_p")) base.top_p = j["top_p"].get<double>();
    if (j.contains("max_tokens")) base.max_tokens = j["max_tokens"].get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("module params: ") + e.what());
  }
  base.validate();
  return base;
}

GenerationParams default_params(ModuleTag tag) {
  switch (tag) {
    case ModuleTag::mote: return {"gpt-3.5-turbo", 0.9, 0.9, 4095};
    case ModuleTag::mope:
    case ModuleTag::mope_reflect: return {"gpt-3.5-turbo", 1.0, 1.0, 1024};
    case ModuleTag::mar:
    case ModuleTag::mar_reflect: return {"gpt-4o", 0.9, 0.9, 1024};
  }
  return {};
}

GatewayConfig GatewayConfig::defaults() {
  GatewayConfig c;
  for (auto t : kAllTags) c.module_params[t] = default_params(t);
  return c;
}

const GenerationParams& GatewayConfig::params_for(ModuleTag t) const {
  auto it = module_params.find(t);
  if (it == module_params.end()) throw ConfigError("no generation params for module " + to_string(t));
  return it->second;
}

// --- ledger ------------------------------------------------------------------------

json LedgerEntry::to_json() const {
  return {{"module", to_string(module_tag)},  {"model", model_name},
          {"prompt_tokens", prompt_tokens},    {"completion_tokens", completion_tokens},
          {"provider", to_string(provider)},   {"dataset", dataset},
          {"subject", subject},                {"retries", retry_count}};
}

LedgerEntry LedgerEntry::from_json(const json& j) {
  try {
    LedgerEntry e;
    e.module_tag = module_tag_from_string(j.at("module").get<std::string>());
    e.model_name = j.at("model").get<std::string>();
    e.prompt_tokens = j.at("prompt_tokens").get<long>();
    e.completion_tokens = j.at("completion_tokens").get<long>();
    e.provider = provider_from_string(j.value("provider", std::string("remote")));
    e.dataset = j.value("dataset", std::string());
    e.subject = j.value("subject", std::string());
    e.retry_count = j.value("retries", 0);
    return e;
  } catch (const json::exception& ex) {
    throw IntegrityError(std::string("malformed ledger entry: ") + ex.what());
  }
}

void CostLedger::append(LedgerEntry e) {
  std::lock_guard lk(mu_);
  if (sink_.is_open()) sink_.append(e.to_json());
  entries_.push_back(std::move(e));
}

std::vector<LedgerEntry> CostLedger::entries() const {
  std::lock_guard lk(mu_);
  return entries_;
}

std::size_t CostLedger::size() const {
  std::lock_guard lk(mu_);
  return entries_.size();
}

void CostLedger::set_sink(io::JsonlAppender sink) {
  std::lock_guard lk(mu_);
  sink_ = std::move(sink);
}

void CostLedger::clear() {
  std::lock_guard lk(mu_);
  entries_.clear();
}

PriceTable::PriceTable(std::map<std::string, Price> prices) : prices_(std::move(prices)) {
  for (auto& [m, p] : prices_)
    if (!(p.input_per_1k >= 0.0 && p.output_per_1k >= 0.0))
      throw ConfigError("negative price for model '" + m + "'");
}

PriceTable PriceTable::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("price table must be an object keyed by model");
  std::map<std::string, Price> prices;
  try {
    for (auto& [model, p] : j.items())
      prices[model] = {p.at("input_per_1k").get<double>(), p.at("output_per_1k").get<double>()};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("price table: ") + e.what());
  }
  return PriceTable(std::move(prices));
}

PriceTable PriceTable::load(const fs::path& p) { return from_json(io::read_json(p)); }

const Price& PriceTable::at(const std::string& model) const {
  auto it = prices_.find(model);
  if (it == prices_.end()) throw ReportingError("model '" + model + "' missing from price table");
  return it->second;
}

double entry_cost(const LedgerEntry& e, const PriceTable& prices) {
  const auto& p = prices.at(e.model_name);
  return static_cast<double>(e.prompt_tokens) / 1000.0 * p.input_per_1k +
         static_cast<double>(e.completion_tokens) / 1000.0 * p.output_per_1k;
}

json CostSummary::to_json() const {
  json models = json::object();
  for (auto& [m, c] : per_model)
    models[m] = {{"calls", c.calls},
                 {"prompt_tokens", c.prompt_tokens},
                 {"completion_tokens", c.completion_tokens},
                 {"cost", c.cost}};
  return {{"dataset", dataset},
          {"label", label},
          {"per_model", models},
          {"per_module", per_module},
          {"total", total},
          {"interaction_count", interaction_count},
          {"per_interaction", per_interaction}};
}

CostSummary CostSummary::from_json(const json& j) {
  try {
    CostSummary s;
    s.dataset = j.at("dataset").get<std::string>();
    s.label = j.at("label").get<std::string>();
    for (auto& [m, c] : j.at("per_model").items())
      s.per_model[m] = {c.at("calls").get<long>(), c.at("prompt_tokens").get<long>(),
                        c.at("completion_tokens").get<long>(), c.at("cost").get<double>()};
    s.per_module = j.value("per_module", std::map<std::string, double>{});
    s.total = j.at("total").get<double>();
    s.interaction_count = j.at("interaction_count").get<std::size_t>();
    s.per_interaction = j.at("per_interaction").get<double>();
    return s;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed cost summary: ") + e.what());
  }
}

CostSummary cost_report(const std::vector<LedgerEntry>& ledger, const PriceTable& prices,
                        std::size_t interaction_count, const std::string& dataset) {
  if (interaction_count == 0) throw ArgumentError("interaction_count must be positive");
  CostSummary s;
  s.dataset = dataset;
  s.interaction_count = interaction_count;
  std::set<std::string> models;
  for (auto& e : ledger) {
    double c = entry_cost(e, prices);
    auto& m = s.per_model[e.model_name];
    ++m.calls;
    m.prompt_tokens += e.prompt_tokens;
    m.completion_tokens += e.completion_tokens;
    m.cost += c;
    s.per_module[to_string(e.module_tag)] += c;
    s.total += c;
    models.insert(e.model_name);
  }
  for (auto it = models.rbegin(); it != models.rend(); ++it) {
    if (!s.label.empty()) s.label += " & ";
    s.label += *it;
  }
  if (s.label.empty()) s.label = "(no calls)";
  s.per_interaction = s.total / static_cast<double>(interaction_count);
  return s;
}

std::string render_cost_table(const std::vector<CostSummary>& summaries) {
  std::vector<std::string> rows, cols;
  std::map<std::pair<std::string, std::string>, double> cell;
  for (auto& s : summaries) {
    if (std::find(rows.begin(), rows.end(), s.label) == rows.end()) rows.push_back(s.label);
    if (std::find(cols.begin(), cols.end(), s.dataset) == cols.end()) cols.push_back(s.dataset);
    cell[{s.label, s.dataset}] = s.per_interaction;
  }
  std::size_t w0 = 5;
  for (auto& r : rows) w0 = std::max(w0, r.size());
  std::ostringstream out;
  char buf[64];
  out << std::string(w0, ' ');
  for (auto& c : cols) {
    std::snprintf(buf, sizeof buf, " | %10s", c.c_str());
    out << buf;
  }
  out << '\n' << std::string(w0, '-');
  for (std::size_t i = 0; i < cols.size(); ++i) out << "-+-" << std::string(10, '-');
  out << '\n';
  for (auto& r : rows) {
    out << r << std::string(w0 - r.size(), ' ');
    for (auto& c : cols) {
      auto it = cell.find({r, c});
      if (it == cell.end())
        std::snprintf(buf, sizeof buf, " | %10s", "-");
      else
        std::snprintf(buf, sizeof buf, " | %10.3f", it->second);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

// --- cache -------------------------------------------------------------------------

json request_fingerprint(const ChatRequest& req) {
  return {{"module", to_string(req.module_tag)},
          {"model", req.params.model_name},
          {"temperature", req.params.temperature},
          {"top_p", req.params.top_p},
          {"max_tokens", req.params.max_tokens},
          {"system", req.system_text},
          {"user", req.user_text}};
}

std::string cache_key(const ChatRequest& req) {
  json fields = json::array({to_string(req.module_tag), req.params.model_name, req.params.temperature,
                             req.params.top_p, req.params.max_tokens, req.system_text, req.user_text});
  return sha256_hex(fields.dump());
}

fs::path ResponseCache::path_for(const std::string& key) const {
  return dir_ / key.substr(0, 2) / key.substr(2, 2) / (key + ".json");
}

std::optional<ChatResponse> ResponseCache::get(const ChatRequest& req) {
  auto p = path_for(cache_key(req));
  std::error_code ec;
  if (!fs::exists(p, ec)) return std::nullopt;
  try {
    json j = json::parse(io::read_file(p));
    if (j.at("request") != request_fingerprint(req)) throw std::runtime_error("fingerprint mismatch");
    const auto& r = j.at("response");
    ChatResponse out;
    out.text = r.at("text").get<std::string>();
    out.prompt_tokens = r.at("prompt_tokens").get<long>();
    out.completion_tokens = r.at("completion_tokens").get<long>();
    out.provider = ProviderKind::cache;
    return out;
  } catch (const std::exception& e) {
    ++corrupt_;
    spdlog::warn("cache entry {} unusable ({}); treating as miss", p.string(), e.what());
    return std::nullopt;
  }
}

void ResponseCache::put(const ChatRequest& req, const ChatResponse& resp) {
  json j = {{"request", request_fingerprint(req)},
            {"response",
             {{"text", resp.text},
              {"prompt_tokens", resp.prompt_tokens},
              {"completion_tokens", resp.completion_tokens},
              {"provider", to_string(resp.provider)}}}};
  io::write_file_atomic(path_for(cache_key(req)), j.dump());
}

// --- gateway -----------------------------------------------------------------------

long GatewayStats::total_provider_calls() const {
  long n = 0;
  for (auto& [_, c] : provider_calls) n += c;
  return n;
}

long GatewayStats::calls_for(ModuleTag t) const {
  auto it = provider_calls.find(t);
  return it == provider_calls.end() ? 0 : it->second;
}

Gateway::Gateway(GatewayConfig cfg, std::shared_ptr<Provider> provider)
    : cfg_(std::move(cfg)), provider_(std::move(provider)) {
  if (!provider_) throw ConfigError("gateway needs a provider");
  if (cfg_.max_in_flight < 1 || cfg_.max_in_flight > 1024) throw ConfigError("max_in_flight must lie in [1, 1024]");
  if (cfg_.retry.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  for (auto& [_, p] : cfg_.module_params) p.validate();
  in_flight_ = std::make_unique<std::counting_semaphore<1024>>(cfg_.max_in_flight);
  if (cfg_.cache_dir) cache_ = std::make_unique<ResponseCache>(*cfg_.cache_dir);
}

ChatRequest Gateway::make_request(ModuleTag tag, std::string system_text, std::string user_text) const {
  if (system_text.empty() || user_text.empty()) throw ArgumentError("chat request texts must be nonempty");
  return ChatRequest{tag, std::move(system_text), std::move(user_text), cfg_.params_for(tag)};
}

void Gateway::sleep_ms(double ms) const {
  ms *= sleep_scale_;
  if (ms > 0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
}

void Gateway::admit() {
  if (cfg_.requests_per_minute <= 0) return;
  using clock = std::chrono::steady_clock;
  for (;;) {
    std::chrono::duration<double, std::milli> wait{0};
    {
      std::lock_guard lk(rate_mu_);
      auto now = clock::now();
      while (!recent_.empty() && now - recent_.front() >= std::chrono::minutes(1)) recent_.pop_front();
      if (recent_.size() < static_cast<std::size_t>(cfg_.requests_per_minute)) {
        recent_.push_back(now);
        return;
      }
      wait = recent_.front() + std::chrono::minutes(1) - now;
    }
    std::this_thread::sleep_for(wait);
  }
}

ChatResponse Gateway::complete(const ChatRequest& req, const CallContext& ctx) {
  if (req.system_text.empty() || req.user_text.empty()) throw ArgumentError("chat request texts must be nonempty");
  struct Slot {
    std::counting_semaphore<1024>& s;
    explicit Slot(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
    ~Slot() { s.release(); }
  } slot(*in_flight_);

  const auto start = std::chrono::steady_clock::now();
  int attempt = 0;
  for (;;) {
    admit();
    try {
      ProviderReply reply = provider_->send(req);
      ChatResponse resp;
      resp.text = std::move(reply.text);
      resp.prompt_tokens = std::max(0L, reply.prompt_tokens);
      resp.completion_tokens = std::max(0L, reply.completion_tokens);
      resp.provider = provider_->kind();
      resp.retry_count = attempt;
      resp.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      {
        std::lock_guard lk(stats_mu_);
        ++stats_.provider_calls[req.module_tag];
        stats_.retries += attempt;
      }
      ledger_.append({req.module_tag, req.params.model_name, resp.prompt_tokens, resp.completion_tokens,
                      resp.provider, ctx.dataset, ctx.subject, attempt});
      return resp;
    } catch (const TransientFailure& f) {
      if (attempt >= cfg_.retry.max_retries)
        throw GatewayError("gateway: retries exhausted after " + std::to_string(attempt + 1) +
                               " attempts; last failure: " + f.what(),
                           f.status);
      double delay = std::min<double>(cfg_.retry.max_delay_ms, cfg_.retry.base_delay_ms * std::pow(2.0, attempt));
      spdlog::debug("transient failure ({}), retry {} in {} ms", f.what(), attempt + 1, delay);
      ++attempt;
      sleep_ms(delay);
    }
  }
}

ChatResponse Gateway::cached_complete(const ChatRequest& req, const CallContext& ctx) {
  if (!cache_) return complete(req, ctx);
  if (auto hit = cache_->get(req)) {
    {
      std::lock_guard lk(stats_mu_);
      ++stats_.cache_hits[req.module_tag];
    }
    ledger_.append({req.module_tag, req.params.model_name, 0, 0, ProviderKind::cache, ctx.dataset, ctx.subject, 0});
    hit->prompt_tokens = 0;
    hit->completion_tokens = 0;
    return *hit;
  }
  auto resp = complete(req, ctx);
  cache_->put(req, resp);
  return resp;
}

GatewayStats Gateway::stats() const {
  std::lock_guard lk(stats_mu_);
  return stats_;
}

}  // namespace mrec::gateway
