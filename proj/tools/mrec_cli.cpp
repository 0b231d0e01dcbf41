#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrec/mrec.h"

using nlohmann::json;

namespace {

int fail(mrec_status st) {
  std::fprintf(stderr, "mrec: %s error: %s\n", mrec_status_name(st), mrec_last_error());
  return static_cast<int>(st);
}

struct Common {
  std::string config;
  std::string provider;
  long long seed = 0;
  bool has_seed = false;
};

json overrides(const Common& c) {
  json o = json::object();
  if (!c.provider.empty()) o["provider"] = c.provider;
  if (c.has_seed) o["seed"] = c.seed;
  return o;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  mrec_string_free(s);
  return out;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--provider", c.provider, "override the configured provider")
      ->check(CLI::IsMember({"mock", "remote"}));
  cmd->add_option_function<long long>(
      "--seed",
      [&c](const long long& v) {
        c.seed = v;
        c.has_seed = true;
      },
      "override the configured seed");
}

void print_summary(const std::string& summary) {
  auto j = json::parse(summary);
  for (auto& s : j["stages"])
    std::printf("%-10s %-8s %zu\n", s["stage"].get<std::string>().c_str(), s["status"].get<std::string>().c_str(),
                s["records"].get<std::size_t>());
  std::printf("provider calls: %ld, cache hits: %ld\n", j["provider_calls"].get<long>(), j["cache_hits"].get<long>());
}

int open_session(const std::string& config, const json& ov, mrec_session** s) {
  auto st = mrec_session_open(config.c_str(), ov.dump().c_str(), s);
  return st == MREC_OK ? 0 : fail(st);
}

int do_ingest(const Common& c) {
  mrec_session* s = nullptr;
  if (int rc = open_session(c.config, overrides(c), &s)) return rc;
  char* stats = nullptr;
  auto st = mrec_session_ingest(s, &stats);
  mrec_session_close(s);
  if (st != MREC_OK) return fail(st);
  std::printf("%s\n", json::parse(take(stats)).dump(2).c_str());
  return 0;
}

int run_one(const std::string& config, const json& ov, const std::string& stage, const std::string& force,
            std::string* out_dir) {
  mrec_session* s = nullptr;
  if (int rc = open_session(config, ov, &s)) return rc;
  char* info = nullptr;
  mrec_session_info(s, &info);
  auto dir = json::parse(take(info))["output_dir"].get<std::string>();
  if (out_dir) *out_dir = dir;
  char* summary = nullptr;
  auto st = mrec_session_run(s, stage.empty() ? nullptr : stage.c_str(), force.empty() ? nullptr : force.c_str(),
                             &summary);
  mrec_session_close(s);
  if (st != MREC_OK) return fail(st);
  std::printf("run directory: %s\n", dir.c_str());
  print_summary(take(summary));
  return 0;
}

int do_report(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<const char*> ptrs;
  for (auto& d : dirs) ptrs.push_back(d.c_str());
  char* text = nullptr;
  auto st = mrec_report(ptrs.data(), ptrs.size(), out.empty() ? nullptr : out.c_str(), &text);
  if (st != MREC_OK) return fail(st);
  std::printf("%s", take(text).c_str());
  return 0;
}

int do_run(const Common& c, const std::string& stage, const std::string& force, int runs) {
  if (runs <= 1) {
    std::string dir;
    if (int rc = run_one(c.config, overrides(c), stage, force, &dir)) return rc;
    if (stage.empty() || stage == "report") return do_report({dir}, "");
    return 0;
  }
  mrec_session* s = nullptr;
  if (int rc = open_session(c.config, overrides(c), &s)) return rc;
  char* info = nullptr;
  auto st = mrec_session_info(s, &info);
  mrec_session_close(s);
  if (st != MREC_OK) return fail(st);
  auto base = json::parse(take(info));
  const auto root = base["output_dir"].get<std::string>();
  const auto seed = base["seed"].get<long long>();
  std::vector<std::string> dirs;
  for (int i = 0; i < runs; ++i) {
    json ov = overrides(c);
    ov["seed"] = seed + i;
    ov["output_dir"] = root + "/run-" + std::to_string(i + 1);
    std::string dir;
    if (int rc = run_one(c.config, ov, stage, force, &dir)) return rc;
    dirs.push_back(dir);
  }
  if (stage.empty() || stage == "report") return do_report(dirs, root);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motivation-aware recommendation pipeline"};
  app.set_version_flag("--version", std::string(mrec_version()));
  app.require_subcommand(1);

  Common ingest_opts;
  auto* ingest = app.add_subcommand("ingest", "parse and filter the corpus, write corpus_stats.json");
  add_common(ingest, ingest_opts);

  Common run_opts;
  std::string stage, force;
  int runs = 1;
  auto* run = app.add_subcommand("run", "execute pipeline stages, resuming finished work");
  add_common(run, run_opts);
  const std::vector<std::string> stages = {"ingest", "candidates", "profiles", "traits", "rankings", "report"};
  run->add_option("--stage", stage, "stop after this stage")->check(CLI::IsMember(stages));
  run->add_option("--force-stage", force, "rerun this stage and all later ones")->check(CLI::IsMember(stages));
  run->add_option("--runs", runs, "independent runs with consecutive seeds, reported as their mean")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> report_dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "mean-of-runs metric and cost tables");
  report->add_option("--runs", report_dirs, "run directories")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", report_out, "write aggregate_report.{json,txt} here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : MREC_ERR_ARGUMENT;
  }
  if (*ingest) return do_ingest(ingest_opts);
  if (*run) return do_run(run_opts, stage, force, runs);
  return do_report(report_dirs, report_out);
}
