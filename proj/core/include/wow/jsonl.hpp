#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace wow {

/// Insertion-ordered JSON keeps every emitted record's field order stable.
using Json = nlohmann::ordered_json;

/// Parses a line-delimited JSON file. Blank lines are skipped; a malformed
/// line raises IngestError carrying its 1-based line number.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

std::vector<Json> parse_jsonl(const std::string& text);

void write_jsonl(const std::filesystem::path& path, std::span<const Json> records);

std::string to_jsonl(std::span<const Json> records);

std::string read_text_file(const std::filesystem::path& path);

/// Writes `content` atomically enough for stage outputs: parent directories
/// are created, and the file is replaced as a whole.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace wow
