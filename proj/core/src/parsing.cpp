#include "wow/parsing.hpp"

#include "wow/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>
#include <set>

namespace wow {

namespace {

constexpr auto kIcase = std::regex::ECMAScript | std::regex::icase;

struct NamedPattern {
    const char* name;
    std::regex re;
};

// Multiple-choice letters, strongest pattern first. The letter must end the
// clause so that "Final answer: a detailed..." does not read as option A.
const std::vector<NamedPattern>& option_patterns() {
    static const std::vector<NamedPattern> kPatterns = {
        {"mcq.final_answer",
         std::regex(R"(final\s+answer\s*(?:is)?\s*[:\-]?\s*(?:option\s*)?[\(\[]?\**([A-Za-z])\**[\)\]]?(?=[ \t*]*(?:[.,;:!\r\n]|$)))",
                    kIcase)},
        {"mcq.answer_is",
         std::regex(R"(\banswer\s*(?:is|:)\s*(?:option\s*)?[\(\[]?\**([A-Za-z])\**[\)\]]?(?=[ \t*]*(?:[.,;:!\r\n]|$)))",
                    kIcase)},
    };
    return kPatterns;
}

const std::vector<NamedPattern>& scalar_patterns() {
    static const std::vector<NamedPattern> kPatterns = {
        {"scalar.final_answer", std::regex(R"(final\s+answer[^0-9\-\n]{0,40}?(-?\d+(?:\.\d+)?))", kIcase)},
        {"scalar.answer_is", std::regex(R"(\banswer\s+is[^0-9\-\n]{0,20}?(-?\d+(?:\.\d+)?))", kIcase)},
        {"scalar.maximum_is",
         std::regex(R"(maximum\s+(?:flow|number)[^\n]{0,80}?\bis\s*[:=]?\s*(-?\d+(?:\.\d+)?))", kIcase)},
    };
    return kPatterns;
}

const std::regex& path_chain_pattern() {
    static const std::regex kChain(
        R"((?:node\s*)?\d+(?:\s*(?:->|→|=>|⇒|\\rightarrow|\\to)\s*(?:node\s*)?\d+)+)", kIcase);
    return kChain;
}

const std::regex& weight_keyword_pattern() {
    static const std::regex kKeyword(R"(total\s+(?:weight|length|distance|cost))", kIcase);
    return kKeyword;
}

const std::regex& blanks_pattern() {
    static const std::regex kBlanks(R"(final\s+answer\s*(?:is)?\s*[:\-]?\s*([^\n]+))", kIcase);
    return kBlanks;
}

const std::regex& number_pattern() {
    static const std::regex kNumber(R"(-?\d+(?:\.\d+)?)");
    return kNumber;
}

using Trace = std::vector<MatchSpan>*;

void note(Trace trace, const char* name, std::size_t begin, std::size_t end, const std::string& text, bool selected) {
    if (trace) trace->push_back({name, begin, end, text.substr(begin, end - begin), selected});
}

/// Last match (of capture group 1) of the first pattern in priority order
/// that matches at all.
std::optional<std::pair<std::string, std::size_t>> last_match(const std::vector<NamedPattern>& patterns,
                                                              const std::string& text, Trace trace) {
    std::optional<std::pair<std::string, std::size_t>> chosen;
    for (const auto& p : patterns) {
        std::vector<std::smatch> hits;
        for (auto it = std::sregex_iterator(text.begin(), text.end(), p.re); it != std::sregex_iterator(); ++it)
            hits.push_back(*it);
        for (std::size_t i = 0; i < hits.size(); ++i) {
            const bool selected = !chosen && i + 1 == hits.size();
            note(trace, p.name, hits[i].position(0), hits[i].position(0) + hits[i].length(0), text, selected);
        }
        if (!chosen && !hits.empty()) chosen = std::make_pair(hits.back()[1].str(), hits.back().position(1));
        if (chosen && !trace) break;
    }
    return chosen;
}

std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<ExtractedAnswer> extract_option(const AnswerContext& ctx, const std::string& text, Trace trace) {
    const auto hit = last_match(option_patterns(), text, trace);
    if (!hit) return std::nullopt;
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(hit->first[0])));
    const int index = letter - 'A';
    if (index < 0 || index >= ctx.option_count) return std::nullopt;
    return OptionChoice{index};
}

std::optional<ExtractedAnswer> extract_scalar(const std::string& text, Trace trace) {
    const auto hit = last_match(scalar_patterns(), text, trace);
    if (!hit) return std::nullopt;
    const auto v = to_double(hit->first);
    if (!v) return std::nullopt;
    return ScalarAnswer{*v};
}

struct Chain {
    std::size_t begin;
    std::size_t end;
    std::vector<int> nodes;
};

std::vector<int> chain_nodes(const std::string& chain_text) {
    static const std::regex kDigits(R"(\d+)");
    std::vector<int> nodes;
    for (auto it = std::sregex_iterator(chain_text.begin(), chain_text.end(), kDigits); it != std::sregex_iterator();
         ++it) {
        const auto s = it->str();
        if (s.size() > 6) return {};
        nodes.push_back(std::stoi(s));
    }
    return nodes;
}

std::optional<Chain> last_path(const std::string& text, Trace trace) {
    std::vector<Chain> chains;
    const auto& re = path_chain_pattern();
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        const auto b = static_cast<std::size_t>(it->position(0));
        chains.push_back({b, b + static_cast<std::size_t>(it->length(0)), chain_nodes(it->str())});
    }
    if (chains.empty()) return std::nullopt;

    // Edge-by-edge listings such as "0 → 2 (weight 2), 2 → 3 (weight 1)" are
    // stitched back into a single path when consecutive pieces share a node.
    std::size_t first = chains.size() - 1;
    Chain merged = chains.back();
    while (first > 0) {
        const auto& prev = chains[first - 1];
        const auto gap = text.substr(prev.end, merged.begin - prev.end);
        if (gap.size() > 24 || gap.find('\n') != std::string::npos || prev.nodes.empty() || merged.nodes.empty() ||
            prev.nodes.back() != merged.nodes.front())
            break;
        std::vector<int> nodes = prev.nodes;
        nodes.insert(nodes.end(), merged.nodes.begin() + 1, merged.nodes.end());
        merged = {prev.begin, merged.end, std::move(nodes)};
        --first;
    }
    for (std::size_t i = 0; i < chains.size(); ++i)
        note(trace, "sp.path_chain", chains[i].begin, chains[i].end, text, i >= first);
    return merged;
}

std::optional<double> last_claimed_weight(const std::string& text, Trace trace) {
    const auto& re = weight_keyword_pattern();
    std::optional<std::size_t> keyword_end;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it)
        keyword_end = static_cast<std::size_t>(it->position(0) + it->length(0));
    if (!keyword_end) return std::nullopt;

    // The claim runs to the end of the clause: a newline, a semicolon, or a
    // full stop that is not a decimal point.
    std::size_t stop = *keyword_end;
    while (stop < text.size()) {
        const char c = text[stop];
        if (c == '\n' || c == ';') break;
        if (c == '.' && !(stop + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[stop + 1])))) break;
        ++stop;
    }
    const auto segment = text.substr(*keyword_end, stop - *keyword_end);
    std::optional<std::smatch> last;
    for (auto it = std::sregex_iterator(segment.begin(), segment.end(), number_pattern());
         it != std::sregex_iterator(); ++it)
        last = *it;
    if (!last) return std::nullopt;
    const auto begin = *keyword_end + static_cast<std::size_t>(last->position(0));
    note(trace, "sp.total_weight", begin, begin + static_cast<std::size_t>(last->length(0)), text, true);
    return to_double(last->str());
}

std::optional<ExtractedAnswer> extract_path(const AnswerContext& ctx, const std::string& text, Trace trace) {
    const auto chain = last_path(text, trace);
    if (!chain || chain->nodes.size() < 2) return std::nullopt;
    for (int v : chain->nodes)
        if (v < 0 || (ctx.node_count > 0 && v >= ctx.node_count)) return std::nullopt;
    return PathAnswer{chain->nodes, last_claimed_weight(text, trace)};
}

std::vector<std::string> split_blanks(const std::string& s) {
    std::vector<std::string> out;
    std::string current;
    for (char c : s) {
        if (c == ',' || c == ';') {
            out.push_back(normalize_text(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    out.push_back(normalize_text(current));
    for (auto& b : out)
        while (!b.empty() && (b.back() == '.' || b.back() == '!')) b.pop_back();
    return out;
}

std::optional<ExtractedAnswer> extract_blanks(const AnswerContext& ctx, const std::string& text, Trace trace) {
    const auto& re = blanks_pattern();
    std::optional<std::smatch> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        if (last) note(trace, "blanks.final_answer", last->position(0), last->position(0) + last->length(0), text, false);
        last = *it;
    }
    if (!last) return std::nullopt;
    note(trace, "blanks.final_answer", last->position(0), last->position(0) + last->length(0), text, true);
    auto blanks = split_blanks((*last)[1].str());
    if (ctx.blank_count > 0 && static_cast<int>(blanks.size()) != ctx.blank_count) return std::nullopt;
    for (const auto& b : blanks)
        if (b.empty()) return std::nullopt;
    return BlanksAnswer{std::move(blanks)};
}

std::optional<ExtractedAnswer> extract_impl(const AnswerContext& ctx, std::string_view raw, Trace trace) {
    const std::string text(raw);
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return std::nullopt;
    if (ctx.option_count > 0) return extract_option(ctx, text, trace);
    switch (ctx.domain) {
        case Domain::sp:
            return extract_path(ctx, text, trace);
        case Domain::bg: {
            auto canonical = normalize_text(text);
            note(trace, "bg.full_text", 0, text.size(), text, true);
            return FreeText{std::move(canonical)};
        }
        case Domain::mf:
        case Domain::matching:
            return extract_scalar(text, trace);
        default:
            if (ctx.blank_count > 0) return extract_blanks(ctx, text, trace);
            return extract_scalar(text, trace);
    }
}

}  // namespace

AnswerContext answer_context(const TaskInstance& task) {
    AnswerContext ctx;
    ctx.domain = task.domain;
    ctx.option_count = static_cast<int>(task.options.size());
    if (task.graph) ctx.node_count = task.graph->n;
    if (const auto* bf = std::get_if<BlanksFill>(&task.ground_truth); bf && !task.is_multiple_choice())
        ctx.blank_count = static_cast<int>(bf->blanks.size());
    return ctx;
}

std::optional<ExtractedAnswer> extract_answer(const AnswerContext& ctx, std::string_view raw_text) {
    return extract_impl(ctx, raw_text, nullptr);
}

std::vector<MatchSpan> explain_extraction(const AnswerContext& ctx, std::string_view raw_text) {
    std::vector<MatchSpan> spans;
    extract_impl(ctx, raw_text, &spans);
    std::stable_sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.begin < b.begin; });
    return spans;
}

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::string format_number(double value) {
    if (value == 0.0) return "0";
    if (std::isfinite(value) && value == std::floor(value) && std::fabs(value) < 9.0e15)
        return std::to_string(static_cast<long long>(value));
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

std::string normalize_key(const ExtractedAnswer& answer) {
    return std::visit(
        [](const auto& a) -> std::string {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, OptionChoice>) {
                return option_letter(a.index);
            } else if constexpr (std::is_same_v<T, PathAnswer>) {
                std::string key = "w=" + (a.claimed_weight ? format_number(*a.claimed_weight) : std::string("?")) + "|";
                for (std::size_t i = 0; i < a.nodes.size(); ++i) {
                    if (i) key.push_back('-');
                    key += std::to_string(a.nodes[i]);
                }
                return key;
            } else if constexpr (std::is_same_v<T, ScalarAnswer>) {
                return format_number(a.value);
            } else if constexpr (std::is_same_v<T, BlanksAnswer>) {
                std::string key;
                for (std::size_t i = 0; i < a.blanks.size(); ++i) {
                    if (i) key.push_back('|');
                    key += normalize_text(a.blanks[i]);
                }
                return key;
            } else {
                return normalize_text(a.text);
            }
        },
        answer);
}

Json to_json(const ExtractedAnswer& answer) {
    Json j;
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, OptionChoice>) {
                j["type"] = "option";
                j["index"] = a.index;
                j["letter"] = option_letter(a.index);
            } else if constexpr (std::is_same_v<T, PathAnswer>) {
                j["type"] = "path";
                j["nodes"] = a.nodes;
                if (a.claimed_weight) j["claimed_weight"] = *a.claimed_weight;
            } else if constexpr (std::is_same_v<T, ScalarAnswer>) {
                j["type"] = "scalar";
                j["value"] = a.value;
            } else if constexpr (std::is_same_v<T, BlanksAnswer>) {
                j["type"] = "blanks";
                j["blanks"] = a.blanks;
            } else {
                j["type"] = "text";
                j["text"] = a.text;
            }
        },
        answer);
    return j;
}

ExtractedAnswer extracted_answer_from_json(const Json& j) {
    try {
        const auto type = j.at("type").get<std::string>();
        if (type == "option") return OptionChoice{j.at("index").get<int>()};
        if (type == "path") {
            PathAnswer p{j.at("nodes").get<std::vector<int>>(), std::nullopt};
            if (j.contains("claimed_weight")) p.claimed_weight = j.at("claimed_weight").get<double>();
            return p;
        }
        if (type == "scalar") return ScalarAnswer{j.at("value").get<double>()};
        if (type == "blanks") return BlanksAnswer{j.at("blanks").get<std::vector<std::string>>()};
        if (type == "text") return FreeText{j.at("text").get<std::string>()};
        throw SchemaError("unknown extracted answer type '" + type + "'");
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad extracted answer: ") + e.what());
    }
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::output1: return "output1";
        case Verdict::output2: return "output2";
        default: return "invalid";
    }
}

Verdict parse_pairwise_verdict(std::string_view judge_text) {
    static const std::regex kLine(R"(preferred\s+output)", kIcase);
    static const std::regex kChoice(R"(\b([12])\b)");
    const std::string text(judge_text);
    std::optional<std::size_t> after;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kLine); it != std::sregex_iterator(); ++it)
        after = static_cast<std::size_t>(it->position(0) + it->length(0));
    if (!after) return Verdict::invalid;
    const auto line_end = text.find('\n', *after);
    const auto tail = text.substr(*after, line_end == std::string::npos ? std::string::npos : line_end - *after);
    std::set<std::string> picks;
    for (auto it = std::sregex_iterator(tail.begin(), tail.end(), kChoice); it != std::sregex_iterator(); ++it)
        picks.insert(it->str(1));
    if (picks.size() != 1) return Verdict::invalid;
    return *picks.begin() == "1" ? Verdict::output1 : Verdict::output2;
}

std::vector<int> parse_scores(std::string_view judge_text, int expected_count) {
    if (expected_count < 1) throw ScoreParseError("expected_count must be >= 1");
    static const std::regex kScoreLine(R"(^[\s*#>\-]*score[\s*]*[:=](.*)$)", kIcase);
    std::vector<int> scores;
    std::size_t pos = 0;
    const std::string text(judge_text);
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        auto line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::smatch m;
        if (std::regex_match(line, m, kScoreLine)) {
            std::string value = m[1].str();
            const auto strip = [](char c) { return std::isspace(static_cast<unsigned char>(c)) || c == '*'; };
            while (!value.empty() && strip(value.front())) value.erase(value.begin());
            while (!value.empty() && (strip(value.back()) || value.back() == '.')) value.pop_back();
            if (value.empty() || !std::all_of(value.begin(), value.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
                throw ScoreParseError("non-integer score '" + m[1].str() + "'");
            if (value.size() > 2 || std::stoi(value) > 5)
                throw ScoreParseError("score '" + value + "' outside 0..5");
            scores.push_back(std::stoi(value));
        }
        if (end == std::string::npos) break;
        pos = end + 1;
    }
    if (static_cast<int>(scores.size()) != expected_count)
        throw ScoreParseError("expected " + std::to_string(expected_count) + " scores, found " +
                              std::to_string(scores.size()));
    return scores;
}

}  // namespace wow
