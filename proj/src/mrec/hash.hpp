#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mrec {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's bytes; throws IoError when unreadable.
std::string sha256_file(const std::string& path);

std::uint64_t fnv1a64(std::string_view s);

}  // namespace mrec
