#include "wow/templates.hpp"

#include "wow/errors.hpp"

namespace wow {

namespace {

#include "wow_templates.inc"

std::string_view trim_final_newline(std::string_view s) {
    if (!s.empty() && s.back() == '\n') s.remove_suffix(1);
    return s;
}

}  // namespace

const PromptTemplate& prompt_template(TemplateId id) {
    static const PromptTemplate kTemplates[] = {
        {"shortest_path", "v1", trim_final_newline(kShortestPathV1)},
        {"max_flow", "v1", trim_final_newline(kMaxFlowV1)},
        {"matching", "v1", trim_final_newline(kMatchingV1)},
        {"multiple_choice", "v1", trim_final_newline(kMultipleChoiceV1)},
        {"pairwise", "v1", trim_final_newline(kPairwiseV1)},
        {"score", "v1", trim_final_newline(kScoreV1)},
    };
    return kTemplates[static_cast<int>(id)];
}

std::string render_template(std::string_view text, const TemplateVars& vars) {
    std::string out;
    out.reserve(text.size() * 2);
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto open = text.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        const auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) throw SchemaError("unterminated template placeholder");
        out.append(text.substr(pos, open - pos));
        const auto name = text.substr(open + 2, close - open - 2);
        bool found = false;
        for (const auto& [key, value] : vars) {
            if (key == name) {
                out.append(value);
                found = true;
                break;
            }
        }
        if (!found) throw SchemaError("no value for template placeholder '" + std::string(name) + "'");
        pos = close + 2;
    }
    return out;
}

}  // namespace wow
