#pragma once

#include "wow/corpus.hpp"
#include "wow/jsonl.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wow {

/// Version of the extraction pattern set; documented in docs/patterns.md.
inline constexpr std::string_view kPatternSetVersion = "v1";

struct OptionChoice {
    int index = 0;
    bool operator==(const OptionChoice&) const = default;
};

struct PathAnswer {
    std::vector<int> nodes;
    std::optional<double> claimed_weight;
    bool operator==(const PathAnswer&) const = default;
};

struct ScalarAnswer {
    double value = 0.0;
    bool operator==(const ScalarAnswer&) const = default;
};

struct BlanksAnswer {
    std::vector<std::string> blanks;
    bool operator==(const BlanksAnswer&) const = default;
};

struct FreeText {
    std::string text;
    bool operator==(const FreeText&) const = default;
};

using ExtractedAnswer = std::variant<OptionChoice, PathAnswer, ScalarAnswer, BlanksAnswer, FreeText>;

/// What the extractor needs to know about the task an answer belongs to.
struct AnswerContext {
    Domain domain = Domain::generic;
    int option_count = 0;
    int node_count = 0;
    int blank_count = 0;
};

AnswerContext answer_context(const TaskInstance& task);

/// One regex hit, as reported by `explain_extraction`.
struct MatchSpan {
    std::string pattern;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string text;
    bool selected = false;
};

/// Extracts the final answer. The last match of the highest-priority
/// pattern wins. nullopt means Unparseable.
std::optional<ExtractedAnswer> extract_answer(const AnswerContext& ctx, std::string_view raw_text);

inline std::optional<ExtractedAnswer> extract_answer(const TaskInstance& task, std::string_view raw_text) {
    return extract_answer(answer_context(task), raw_text);
}

/// Every pattern hit in `raw_text` for this context, in text order, with the
/// spans that produced the extracted answer marked `selected`.
std::vector<MatchSpan> explain_extraction(const AnswerContext& ctx, std::string_view raw_text);

/// Lowercases ASCII, collapses whitespace runs and trims. Idempotent.
std::string normalize_text(std::string_view text);

/// Shortest round-trip decimal; integral values print without a point.
std::string format_number(double value);

/// Canonical equality key: equal answers map to equal keys.
std::string normalize_key(const ExtractedAnswer& answer);

Json to_json(const ExtractedAnswer& answer);
ExtractedAnswer extracted_answer_from_json(const Json& j);

enum class Verdict { output1, output2, invalid };

std::string_view to_string(Verdict v);

/// Reads the last "Preferred output" line of a pairwise judgement.
Verdict parse_pairwise_verdict(std::string_view judge_text);

/// Reads `expected_count` "Score: <int>" lines in order. Throws
/// ScoreParseError on a count mismatch, a non-integer or a value outside
/// 0..5.
std::vector<int> parse_scores(std::string_view judge_text, int expected_count);

}  // namespace wow
