#pragma once

#include "wow/jsonl.hpp"

#include <cstdlib>
#include <filesystem>
#include <string>

namespace golden {

inline bool updating() {
    const char* v = std::getenv("WOW_UPDATE_GOLDEN");
    return v && *v && std::string(v) != "0";
}

inline std::filesystem::path path(const std::string& rel) { return std::filesystem::path(WOW_TEST_DATA) / "golden" / rel; }

/// Returns the recorded content; with WOW_UPDATE_GOLDEN set, records
/// `actual` first.
inline std::string expect(const std::string& rel, const std::string& actual) {
    const auto p = path(rel);
    if (updating() || !std::filesystem::exists(p)) wow::write_text_file(p, actual);
    return wow::read_text_file(p);
}

}  // namespace golden
