#pragma once

#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace mrec::io {

using nlohmann::json;

std::string read_file(const std::filesystem::path& p);

/// Write-temp-then-rename; concurrent writers of one path converge to one
/// complete file.
void write_file_atomic(const std::filesystem::path& p, std::string_view content);

void write_json(const std::filesystem::path& p, const json& j);
json read_json(const std::filesystem::path& p);

/// Calls fn(line_number, line) for each nonblank line.
void for_each_line(const std::filesystem::path& p,
                   const std::function<void(std::size_t, std::string_view)>& fn);

std::vector<json> read_jsonl(const std::filesystem::path& p);
void write_jsonl(const std::filesystem::path& p, const std::vector<json>& records);

/// Append-only JSONL sink; each append is flushed so an interrupted run keeps
/// every completed record.
class JsonlAppender {
 public:
  JsonlAppender() = default;
  explicit JsonlAppender(const std::filesystem::path& p);
  void append(const json& record);
  bool is_open() const { return file_ != nullptr; }

 private:
  std::shared_ptr<std::FILE> file_;
  std::shared_ptr<std::mutex> mu_;
};

}  // namespace mrec::io
