#pragma once

#include "wow/jsonl.hpp"

#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace wow {

/// Thread-safe collector for warnings and counters that stages report
/// alongside their outputs (CapabilityWarning, dropped samples, ...).
class Diagnostics {
public:
    void warn(const std::string& kind, const std::string& message);
    void count(const std::string& counter, long long delta = 1);

    std::vector<std::pair<std::string, std::string>> warnings() const;
    long long counter(const std::string& name) const;
    bool has_warning(const std::string& kind) const;

    /// Counters and de-duplicated warnings, sorted for stable output.
    Json to_json() const;

private:
    mutable std::mutex mutex_;
    std::vector<std::pair<std::string, std::string>> warnings_;
    std::map<std::string, long long> counters_;
};

}  // namespace wow
