#include "io.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "error.hpp"

namespace mrec::io {

namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& p, std::string_view content) {
  static std::atomic<unsigned long> counter{0};
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ostringstream tmp_name;
  tmp_name << p.filename().string() << ".tmp." << ::getpid() << '.'
           << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '.' << counter++;
  fs::path tmp = p.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename into " + p.string() + ": " + ec.message());
  }
}

void write_json(const fs::path& p, const json& j) { write_file_atomic(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

void for_each_line(const fs::path& p, const std::function<void(std::size_t, std::string_view)>& fn) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    fn(n, line);
  }
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  for_each_line(p, [&](std::size_t n, std::string_view line) {
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error&) {
      throw IoError(p.string() + ":" + std::to_string(n) + ": malformed JSON line");
    }
  });
  return out;
}

void write_jsonl(const fs::path& p, const std::vector<json>& records) {
  std::string buf;
  for (auto& r : records) {
    buf += r.dump();
    buf += '\n';
  }
  write_file_atomic(p, buf);
}

JsonlAppender::JsonlAppender(const fs::path& p) : mu_(std::make_shared<std::mutex>()) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::FILE* f = std::fopen(p.c_str(), "ab");
  if (!f) throw IoError("cannot open " + p.string() + " for append");
  file_.reset(f, [](std::FILE* fp) { std::fclose(fp); });
}

void JsonlAppender::append(const json& record) {
  if (!file_) return;
  std::string line = record.dump();
  line += '\n';
  std::lock_guard lk(*mu_);
  std::fwrite(line.data(), 1, line.size(), file_.get());
  std::fflush(file_.get());
}

}  // namespace mrec::io
