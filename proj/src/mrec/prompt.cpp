#include "prompt.hpp"

#include <algorithm>

#include "error.hpp"
#include "hash.hpp"
#include "io.hpp"
#include "text.hpp"

namespace mrec::prompt {

namespace fs = std::filesystem;

PromptTemplate PromptTemplate::from_json(const json& j) {
  try {
    PromptTemplate t;
    t.name = j.at("name").get<std::string>();
    t.module = j.value("module", std::string());
    t.system_text = j.at("system").get<std::string>();
    t.user_text = j.at("user").get<std::string>();
    t.output_format_note = j.value("output_format", std::string());
    t.reminder = j.value("reminder", std::string());
    if (j.contains("exemplars")) {
      for (auto& e : j["exemplars"]) {
        const auto& out = e.at("output");
        t.exemplars.push_back({e.at("input").get<std::string>(), out.is_string() ? out.get<std::string>() : out.dump()});
      }
    }
    if (t.name.empty()) throw TemplateError("template with empty name");
    return t;
  } catch (const json::exception& e) {
    throw TemplateError(std::string("malformed prompt template: ") + e.what());
  }
}

void PromptTemplate::require(const std::vector<std::string>& names) const {
  auto have = text::placeholders(system_text);
  for (auto& n : text::placeholders(user_text)) have.insert(n);
  for (auto& n : names)
    if (!have.count(n)) throw TemplateError("template '" + name + "' lacks placeholder {" + n + "}");
}

std::string PromptTemplate::render_exemplars() const {
  std::string out;
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    out += "Example " + std::to_string(i + 1) + "\nInput:\n" + exemplars[i].input + "\nOutput:\n" +
           exemplars[i].output + "\n\n";
  }
  return out;
}

std::pair<std::string, std::string> PromptTemplate::render(const Bindings& values) const {
  Bindings all = values;
  all.emplace_back("exemplars", render_exemplars());
  all.emplace_back("output_format", output_format_note);
  return {text::substitute(system_text, all), text::substitute(user_text, all)};
}

PromptLibrary PromptLibrary::load_dir(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw ConfigError("prompt directory '" + dir.string() + "' not found");
  std::vector<fs::path> files;
  for (auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  PromptLibrary lib;
  for (auto& f : files) {
    auto raw = io::read_file(f);
    json j = json::parse(raw, nullptr, false);
    if (j.is_discarded()) throw TemplateError("prompt file " + f.string() + " is not valid JSON");
    auto t = PromptTemplate::from_json(j);
    lib.hashes_[t.name] = sha256_hex(raw);
    lib.add(std::move(t));
  }
  return lib;
}

void PromptLibrary::add(PromptTemplate t) {
  if (!hashes_.count(t.name)) {
    json j = {{"system", t.system_text}, {"user", t.user_text}, {"format", t.output_format_note}, {"reminder", t.reminder}};
    for (auto& e : t.exemplars) j["exemplars"].push_back({e.input, e.output});
    hashes_[t.name] = sha256_hex(j.dump());
  }
  auto name = t.name;
  templates_.insert_or_assign(name, std::move(t));
}

const PromptTemplate& PromptLibrary::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw TemplateError("prompt template '" + name + "' not found");
  return it->second;
}

json PromptLibrary::digest() const { return hashes_; }

}  // namespace mrec::prompt
