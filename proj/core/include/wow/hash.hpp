#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace wow {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view data);

}  // namespace wow
