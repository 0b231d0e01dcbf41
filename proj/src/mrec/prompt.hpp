#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mrec::prompt {

using nlohmann::json;
using Bindings = std::vector<std::pair<std::string, std::string>>;

struct Exemplar {
  std::string input;
  std::string output;
};

/// A prompt document from the prompts/ directory. `{name}` placeholders in
/// system/user text are bound at render time; {exemplars} and
/// {output_format} are always bound from the template itself.
struct PromptTemplate {
  std::string name;
  std::string module;
  std::string system_text;
  std::string user_text;
  std::vector<Exemplar> exemplars;
  std::string output_format_note;
  std::string reminder;  // appended to the user turn on a format retry

  static PromptTemplate from_json(const json& j);

  /// TemplateError unless every name appears in system or user text.
  void require(const std::vector<std::string>& names) const;
  std::string render_exemplars() const;
  std::pair<std::string, std::string> render(const Bindings& values) const;
};

class PromptLibrary {
 public:
  PromptLibrary() = default;
  static PromptLibrary load_dir(const std::filesystem::path& dir);
  void add(PromptTemplate t);
  const PromptTemplate& get(const std::string& name) const;
  bool contains(const std::string& name) const { return templates_.count(name) > 0; }
  /// Content hash per template; feeds the run fingerprint.
  json digest() const;

 private:
  std::map<std::string, PromptTemplate> templates_;
  std::map<std::string, std::string> hashes_;
};

}  // namespace mrec::prompt
