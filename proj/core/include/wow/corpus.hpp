#pragma once

#include "wow/graph.hpp"
#include "wow/jsonl.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wow {

enum class Domain { kc, sp, mf, matching, bg, com2, generic };
enum class Split { train, val, test, unassigned };

std::string_view to_string(Domain d);
std::string_view to_string(Split s);
Domain parse_domain(std::string_view name);
Split parse_split(std::string_view name);

/// Fill-in-the-blank truth. `correct_option` indexes the task's options, or
/// is -1 for a blanks task without options.
struct BlanksFill {
    std::vector<std::string> blanks;
    int correct_option = -1;

    bool operator==(const BlanksFill&) const = default;
};

/// Shortest-path truth: optimal weight, longest simple path weight, and an
/// optimal witness path.
struct PathValue {
    std::int64_t w_gt = 0;
    std::int64_t w_worst = 0;
    std::vector<int> witness;

    bool operator==(const PathValue&) const = default;
};

struct ScalarValue {
    double value = 0.0;

    bool operator==(const ScalarValue&) const = default;
};

/// No closed-form truth; correctness comes from an external scorer. MCQ
/// tasks scored this way may still pin the reference option.
struct ExternalScored {
    std::optional<int> correct_option;

    bool operator==(const ExternalScored&) const = default;
};

using GroundTruth = std::variant<BlanksFill, PathValue, ScalarValue, ExternalScored>;

struct TaskInstance {
    std::string id;
    Domain domain = Domain::generic;
    std::string prompt;
    GroundTruth ground_truth;
    std::vector<std::string> options;
    std::optional<GraphSpec> graph;
    /// kc only: blank values spelled out by each option, aligned with `options`.
    std::vector<std::vector<std::string>> option_blanks;
    Split split = Split::unassigned;

    bool is_multiple_choice() const { return !options.empty(); }

    /// Throws SchemaError when the record violates a corpus invariant.
    void validate() const;

    bool operator==(const TaskInstance&) const = default;
};

Json to_json(const GraphSpec& g);
GraphSpec graph_from_json(const Json& j);
Json to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const Json& j);
Json to_json(const TaskInstance& task);
TaskInstance task_from_json(const Json& j);

/// The text shown to generators and judges: the stem plus lettered options
/// for multiple-choice tasks.
std::string render_question(const TaskInstance& task);

std::string option_letter(int index);

// --- generation -------------------------------------------------------------

struct ShortestPathParams {
    int n = 6;
    double edge_density = 0.5;
    int weight_max = 10;
    std::uint64_t seed = 42;
    int max_retries = 200;
};

struct MaxFlowParams {
    int n = 6;
    double edge_density = 0.5;
    int capacity_max = 10;
    std::uint64_t seed = 42;
    int max_retries = 200;
};

struct MatchingParams {
    int left = 4;
    int right = 4;
    double edge_density = 0.4;
    std::uint64_t seed = 42;
    int max_retries = 200;
};

TaskInstance generate_shortest_path_task(const ShortestPathParams& params);
TaskInstance generate_maxflow_task(const MaxFlowParams& params);
TaskInstance generate_matching_task(const MatchingParams& params);

/// Builds a task from an explicit graph whose `source` and `sink` are set.
TaskInstance make_shortest_path_task(std::string id, GraphSpec graph);
TaskInstance make_maxflow_task(std::string id, GraphSpec graph);
TaskInstance make_matching_task(std::string id, GraphSpec graph);

// --- ingestion and splitting ------------------------------------------------

struct IngestIssue {
    std::size_t line = 0;
    std::string reason;
};

/// Every schema problem in a task file, one entry per offending line.
std::vector<IngestIssue> validate_task_file(const std::filesystem::path& path);

/// Reads a task file; records without a `domain` field take `domain`.
/// Throws IngestError for the first offending line.
std::vector<TaskInstance> ingest_tasks(const std::filesystem::path& path, std::optional<Domain> domain);

std::vector<TaskInstance> read_tasks(const std::filesystem::path& path);
void write_tasks(const std::filesystem::path& path, const std::vector<TaskInstance>& tasks);

struct SplitPlan {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
    std::uint64_t seed = 42;

    void validate() const;
};

struct SplitCounts {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

/// Per-group counts: floor for val and test, the remainder to train.
SplitCounts split_counts(std::size_t n, const SplitPlan& plan);

/// Assigns splits per domain. Requires every task to be unassigned.
std::vector<TaskInstance> assign_splits(std::vector<TaskInstance> tasks, const SplitPlan& plan);

struct OptionShuffle {
    TaskInstance task;
    /// order[shown position] = original option index.
    std::vector<int> order;
};

/// Seed 0 is the identity permutation.
inline constexpr std::uint64_t kIdentityShuffleSeed = 0;

/// Permutes the options of a multiple-choice task and remaps every index
/// that refers to them. Throws NotApplicable for other tasks.
OptionShuffle shuffle_options(const TaskInstance& task, std::uint64_t seed);

}  // namespace wow
