#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wow {

enum class TemplateId { shortest_path, max_flow, matching, multiple_choice, pairwise, score };

struct PromptTemplate {
    std::string_view name;
    std::string_view version;
    std::string_view text;
};

/// Built-in templates, compiled from core/templates/*.txt.
const PromptTemplate& prompt_template(TemplateId id);

using TemplateVars = std::vector<std::pair<std::string, std::string>>;

/// Substitutes every `{{name}}` placeholder. Throws SchemaError for a
/// placeholder without a value.
std::string render_template(std::string_view text, const TemplateVars& vars);

inline std::string render(TemplateId id, const TemplateVars& vars) {
    return render_template(prompt_template(id).text, vars);
}

}  // namespace wow
