#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "error.hpp"
#include "gateway.hpp"

namespace mrec::gateway {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + url + "' lacks a scheme");
  auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("endpoint scheme must be http or https");
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class RemoteProvider final : public Provider {
 public:
  RemoteProvider(const RemoteOptions& opts, std::string key)
      : endpoint_(split_endpoint(opts.endpoint)), key_(std::move(key)), timeout_(opts.timeout_seconds) {}

  ProviderKind kind() const override { return ProviderKind::remote; }

  ProviderReply send(const ChatRequest& req) override {
    json body = {{"model", req.params.model_name},
                 {"messages",
                  json::array({{{"role", "system"}, {"content", req.system_text}},
                               {{"role", "user"}, {"content", req.user_text}}})},
                 {"temperature", req.params.temperature},
                 {"top_p", req.params.top_p},
                 {"max_tokens", req.params.max_tokens}};

    httplib::Client cli(endpoint_.origin);
    cli.set_connection_timeout(timeout_, 0);
    cli.set_read_timeout(timeout_, 0);
    cli.set_write_timeout(timeout_, 0);
    httplib::Headers headers = {{"Authorization", "Bearer " + key_}};
    auto res = cli.Post(endpoint_.path, headers, body.dump(), "application/json");
    if (!res) throw TransientFailure("transport error: " + httplib::to_string(res.error()), 0);
    const int status = res->status;
    if (status == 429 || status == 408 || status >= 500)
      throw TransientFailure("HTTP " + std::to_string(status), status);
    if (status < 200 || status >= 300)
      throw GatewayError("HTTP " + std::to_string(status) + ": " + res->body.substr(0, 300), status);

    json j = json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw GatewayError("provider returned non-JSON body", status);
    try {
      ProviderReply out;
      const auto& content = j.at("choices").at(0).at("message").at("content");
      out.text = content.is_string() ? content.get<std::string>() : std::string();
      if (j.contains("usage") && j["usage"].is_object()) {
        out.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
        out.completion_tokens = j["usage"].value("completion_tokens", 0L);
      }
      return out;
    } catch (const json::exception& e) {
      throw GatewayError(std::string("unexpected completion payload: ") + e.what(), status);
    }
  }

 private:
  Endpoint endpoint_;
  std::string key_;
  int timeout_;
};

}  // namespace

std::shared_ptr<Provider> make_remote_provider(const RemoteOptions& opts) {
  const char* key = std::getenv(opts.api_key_env.c_str());
  if (!key || !*key) throw ConfigError("remote provider needs credential in $" + opts.api_key_env);
  return std::make_shared<RemoteProvider>(opts, key);
}

}  // namespace mrec::gateway
