#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

#include "io.hpp"

namespace mrec::gateway {

using nlohmann::json;

enum class ModuleTag { mope, mote, mar, mar_reflect, mope_reflect };
inline constexpr ModuleTag kAllTags[] = {ModuleTag::mope, ModuleTag::mote, ModuleTag::mar,
                                         ModuleTag::mar_reflect, ModuleTag::mope_reflect};
std::string to_string(ModuleTag t);
ModuleTag module_tag_from_string(const std::string& s);

struct GenerationParams {
  std::string model_name;
  double temperature = 1.0;
  double top_p = 1.0;
  int max_tokens = 1024;

  void validate() const;
  json to_json() const;
  static GenerationParams from_json(const json& j, GenerationParams base);
};

/// Defaults per module: MOTE 0.9/0.9 with 4095 tokens, MOPE 1.0/1.0,
/// MAR 0.9/0.9 on gpt-4o.
GenerationParams default_params(ModuleTag tag);

struct ChatRequest {
  ModuleTag module_tag = ModuleTag::mope;
  std::string system_text;
  std::string user_text;
  GenerationParams params;
};

enum class ProviderKind { remote, mock, cache };
std::string to_string(ProviderKind k);

struct ChatResponse {
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  ProviderKind provider = ProviderKind::mock;
  double latency_ms = 0.0;
  int retry_count = 0;
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
  int calls = 0;

  void add(const ChatResponse& r) {
    prompt_tokens += r.prompt_tokens;
    completion_tokens += r.completion_tokens;
    ++calls;
  }
  TokenUsage& operator+=(const TokenUsage& o) {
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    calls += o.calls;
    return *this;
  }
  json to_json() const {
    return {{"prompt_tokens", prompt_tokens}, {"completion_tokens", completion_tokens}, {"calls", calls}};
  }
  static TokenUsage from_json(const json& j) {
    return {j.value("prompt_tokens", 0L), j.value("completion_tokens", 0L), j.value("calls", 0)};
  }
};

struct ProviderReply {
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

/// Thrown by providers for failures worth retrying (timeouts, 429, 5xx).
struct TransientFailure : std::runtime_error {
  TransientFailure(const std::string& w, int status) : std::runtime_error(w), status(status) {}
  int status;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderReply send(const ChatRequest& req) = 0;
  virtual ProviderKind kind() const = 0;
};

struct RemoteOptions {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 120;
};

/// OpenAI-compatible chat completions over HTTP(S). Reads the credential
/// from the environment at construction; throws ConfigError when unset.
std::shared_ptr<Provider> make_remote_provider(const RemoteOptions& opts);

/// Deterministic rule engine keyed on the prompt markup; see mock_provider.cpp.
std::shared_ptr<Provider> make_mock_provider();

struct RetryPolicy {
  int max_retries = 5;
  int base_delay_ms = 500;
  int max_delay_ms = 30000;
};

struct GatewayConfig {
  std::map<ModuleTag, GenerationParams> module_params;
  RetryPolicy retry;
  int max_in_flight = 4;
  int requests_per_minute = 0;  // 0 disables the budget
  std::optional<std::filesystem::path> cache_dir;

  static GatewayConfig defaults();
  const GenerationParams& params_for(ModuleTag t) const;
};

// --- ledger and cost ---------------------------------------------------------

struct LedgerEntry {
  ModuleTag module_tag = ModuleTag::mope;
  std::string model_name;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  ProviderKind provider = ProviderKind::mock;
  std::string dataset;
  std::string subject;  // user id, or "item:<id>" for trait distillation
  int retry_count = 0;

  json to_json() const;
  static LedgerEntry from_json(const json& j);
};

/// Concurrent appends never lose entries. An optional sink mirrors each
/// entry to an append-only JSONL file.
class CostLedger {
 public:
  void append(LedgerEntry e);
  std::vector<LedgerEntry> entries() const;
  std::size_t size() const;
  void set_sink(io::JsonlAppender sink);
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<LedgerEntry> entries_;
  io::JsonlAppender sink_;
};

struct Price {
  double input_per_1k = 0.0;
  double output_per_1k = 0.0;
};

class PriceTable {
 public:
  PriceTable() = default;
  explicit PriceTable(std::map<std::string, Price> prices);
  static PriceTable from_json(const json& j);
  static PriceTable load(const std::filesystem::path& p);

  /// Throws ReportingError naming the model when absent.
  const Price& at(const std::string& model) const;
  bool contains(const std::string& model) const { return prices_.count(model) > 0; }

 private:
  std::map<std::string, Price> prices_;
};

/// prompt/1000 * input price + completion/1000 * output price.
double entry_cost(const LedgerEntry& e, const PriceTable& prices);

struct ModelCost {
  long calls = 0;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double cost = 0.0;
};

struct CostSummary {
  std::string dataset;
  std::string label;  // model configuration, e.g. "gpt-4o & gpt-3.5-turbo"
  std::map<std::string, ModelCost> per_model;
  std::map<std::string, double> per_module;
  double total = 0.0;
  std::size_t interaction_count = 0;
  double per_interaction = 0.0;

  json to_json() const;
  static CostSummary from_json(const json& j);
};

CostSummary cost_report(const std::vector<LedgerEntry>& ledger, const PriceTable& prices,
                        std::size_t interaction_count, const std::string& dataset = "");

/// Model configuration rows by dataset columns, cost per interaction.
std::string render_cost_table(const std::vector<CostSummary>& summaries);

// --- cache ---------------------------------------------------------------------

/// Hex SHA-256 over the request fingerprint fields.
std::string cache_key(const ChatRequest& req);
json request_fingerprint(const ChatRequest& req);

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::optional<ChatResponse> get(const ChatRequest& req);
  void put(const ChatRequest& req, const ChatResponse& resp);
  std::filesystem::path path_for(const std::string& key) const;
  std::size_t corrupt_entries() const { return corrupt_.load(); }

 private:
  std::filesystem::path dir_;
  std::atomic<std::size_t> corrupt_{0};
};

// --- gateway ---------------------------------------------------------------------

struct CallContext {
  std::string dataset;
  std::string subject;
};

struct GatewayStats {
  std::map<ModuleTag, long> provider_calls;
  std::map<ModuleTag, long> cache_hits;
  long retries = 0;

  long total_provider_calls() const;
  long calls_for(ModuleTag t) const;
};

/// Safe for concurrent callers.
class Gateway {
 public:
  Gateway(GatewayConfig cfg, std::shared_ptr<Provider> provider);

  const GatewayConfig& config() const { return cfg_; }
  ChatRequest make_request(ModuleTag tag, std::string system_text, std::string user_text) const;

  /// Provider call with retries; records usage in the ledger.
  ChatResponse complete(const ChatRequest& req, const CallContext& ctx = {});
  /// Cache lookup first; falls through to complete() on a miss, or always
  /// when no cache directory is configured.
  ChatResponse cached_complete(const ChatRequest& req, const CallContext& ctx = {});

  CostLedger& ledger() { return ledger_; }
  GatewayStats stats() const;
  ResponseCache* cache() { return cache_ ? cache_.get() : nullptr; }
  void set_sleep_scale(double s) { sleep_scale_ = s; }

 private:
  void admit();
  void sleep_ms(double ms) const;

  GatewayConfig cfg_;
  std::shared_ptr<Provider> provider_;
  std::unique_ptr<ResponseCache> cache_;
  CostLedger ledger_;
  std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
  std::mutex rate_mu_;
  std::deque<std::chrono::steady_clock::time_point> recent_;
  mutable std::mutex stats_mu_;
  GatewayStats stats_;
  double sleep_scale_ = 1.0;
};

}  // namespace mrec::gateway
