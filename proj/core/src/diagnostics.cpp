#include "wow/diagnostics.hpp"

#include <set>

namespace wow {

void Diagnostics::warn(const std::string& kind, const std::string& message) {
    std::lock_guard lock(mutex_);
    warnings_.emplace_back(kind, message);
    ++counters_["warning." + kind];
}

void Diagnostics::count(const std::string& counter, long long delta) {
    std::lock_guard lock(mutex_);
    counters_[counter] += delta;
}

std::vector<std::pair<std::string, std::string>> Diagnostics::warnings() const {
    std::lock_guard lock(mutex_);
    return warnings_;
}

long long Diagnostics::counter(const std::string& name) const {
    std::lock_guard lock(mutex_);
    const auto it = counters_.find(name);
    return it == counters_.end() ? 0 : it->second;
}

bool Diagnostics::has_warning(const std::string& kind) const {
    std::lock_guard lock(mutex_);
    for (const auto& [k, m] : warnings_)
        if (k == kind) return true;
    return false;
}

Json Diagnostics::to_json() const {
    std::lock_guard lock(mutex_);
    Json j;
    j["counters"] = Json::object();
    for (const auto& [k, v] : counters_) j["counters"][k] = v;
    std::set<std::pair<std::string, std::string>> unique(warnings_.begin(), warnings_.end());
    j["warnings"] = Json::array();
    for (const auto& [k, m] : unique) j["warnings"].push_back(Json{{"kind", k}, {"message", m}});
    return j;
}

}  // namespace wow
