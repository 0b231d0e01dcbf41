#include "mrec/mrec.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrec/error.hpp"
#include "mrec/eval.hpp"
#include "mrec/runner.hpp"
#include "mrec/schema.hpp"

struct mrec_session {
  std::unique_ptr<mrec::runner::Session> impl;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
mrec_status guarded(F&& fn) {
  g_last_error.clear();
  try {
    fn();
    return MREC_OK;
  } catch (const mrec::Error& e) {
    g_last_error = e.what();
    return static_cast<mrec_status>(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return MREC_ERR_ARGUMENT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MREC_ERR_GENERIC;
  } catch (...) {
    g_last_error = "unknown failure";
    return MREC_ERR_GENERIC;
  }
}

char* dup(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void require(bool ok, const char* what) {
  if (!ok) throw mrec::ArgumentError(what);
}

std::vector<std::string> ids(const char* const* ranking, size_t n) {
  require(ranking != nullptr || n == 0, "ranking is null");
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) {
    require(ranking[i] != nullptr, "ranking holds a null id");
    out.emplace_back(ranking[i]);
  }
  return out;
}

}  // namespace

extern "C" {

const char* mrec_version(void) { return "0.3.0"; }

const char* mrec_status_name(mrec_status s) {
  switch (s) {
    case MREC_OK: return "ok";
    case MREC_ERR_GENERIC: return "error";
    case MREC_ERR_CONFIG: return "config";
    case MREC_ERR_INTEGRITY: return "integrity";
    case MREC_ERR_GATEWAY: return "gateway";
    case MREC_ERR_EXTRACTION: return "extraction";
    case MREC_ERR_FINGERPRINT: return "fingerprint";
    case MREC_ERR_IO: return "io";
    case MREC_ERR_ARGUMENT: return "argument";
  }
  return "unknown";
}

const char* mrec_last_error(void) { return g_last_error.c_str(); }

mrec_status mrec_session_open(const char* config_path, const char* overrides_json, mrec_session** out) {
  return guarded([&] {
    require(config_path && out, "config_path and out are required");
    *out = nullptr;
    nlohmann::json ov = nlohmann::json::object();
    if (overrides_json && *overrides_json) {
      try {
        ov = nlohmann::json::parse(overrides_json);
      } catch (const nlohmann::json::parse_error& e) {
        throw mrec::ConfigError(std::string("overrides are not valid JSON: ") + e.what());
      }
    }
    auto cfg = mrec::runner::RunConfig::load(config_path, ov);
    auto s = std::make_unique<mrec_session>();
    s->impl = std::make_unique<mrec::runner::Session>(std::move(cfg));
    *out = s.release();
  });
}

void mrec_session_close(mrec_session* session) { delete session; }

mrec_status mrec_session_ingest(mrec_session* session, char** stats_json) {
  return guarded([&] {
    require(session, "session is null");
    auto stats = session->impl->ingest();
    if (stats_json) *stats_json = dup(stats.dump());
  });
}

mrec_status mrec_session_run(mrec_session* session, const char* until, const char* force, char** summary_json) {
  return guarded([&] {
    require(session, "session is null");
    mrec::runner::RunOptions opts;
    if (until && *until) opts.until = mrec::runner::stage_from_string(until);
    if (force && *force) opts.force = mrec::runner::stage_from_string(force);
    auto summary = session->impl->run(opts);
    if (summary_json) *summary_json = dup(summary.to_json().dump());
  });
}

const char* mrec_session_fingerprint(const mrec_session* session) {
  return session ? session->impl->fingerprint().c_str() : "";
}

mrec_status mrec_session_info(const mrec_session* session, char** info_json) {
  return guarded([&] {
    require(session && info_json, "session and info_json are required");
    const auto& c = session->impl->config();
    nlohmann::json j = {{"fingerprint", session->impl->fingerprint()},
                        {"seed", c.experiment.seed},
                        {"dataset", c.experiment.dataset},
                        {"output_dir", c.output_dir.string()},
                        {"provider", c.provider}};
    *info_json = dup(j.dump());
  });
}

mrec_status mrec_report(const char* const* run_dirs, size_t n_dirs, const char* out_dir, char** out_text) {
  return guarded([&] {
    std::vector<std::filesystem::path> dirs;
    for (auto& d : ids(run_dirs, n_dirs)) dirs.emplace_back(d);
    std::optional<std::filesystem::path> od;
    if (out_dir && *out_dir) od = out_dir;
    auto rep = mrec::runner::report(dirs, od);
    if (out_text) *out_text = dup(rep.text);
  });
}

mrec_status mrec_hit_rate_at_k(const char* const* ranking, size_t n, const char* positive, size_t k, int* out) {
  return guarded([&] {
    require(positive && out, "positive and out are required");
    *out = mrec::eval::hit_rate_at_k(ids(ranking, n), positive, k);
  });
}

mrec_status mrec_ndcg_at_k(const char* const* ranking, size_t n, const char* positive, size_t k, double* out) {
  return guarded([&] {
    require(positive && out, "positive and out are required");
    *out = mrec::eval::ndcg_at_k(ids(ranking, n), positive, k);
  });
}

mrec_status mrec_consistency_score(const char* profiles_json, double* out) {
  return guarded([&] {
    require(profiles_json && out, "profiles_json and out are required");
    auto arr = nlohmann::json::parse(profiles_json);
    require(arr.is_array(), "profiles_json must be an array");
    std::vector<mrec::schema::MotivationalProfile> ps;
    for (auto& p : arr) {
      require(p.is_object(), "each profile must be an object");
      mrec::schema::MotivationalProfile mp;
      for (auto& [k, v] : p.items()) mp.entries[k] = v.get<std::string>();
      ps.push_back(std::move(mp));
    }
    *out = mrec::schema::consistency_score(ps);
  });
}

void mrec_string_free(char* s) { std::free(s); }

}  // extern "C"
