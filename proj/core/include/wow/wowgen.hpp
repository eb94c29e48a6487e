#pragma once

#include "wow/elicit.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wow {

enum class PairKind { wow, row };

std::string_view to_string(PairKind k);
PairKind parse_pair_kind(std::string_view name);

/// Silver preference of (chosen, rejected).
struct PairSilver {
    int direction = 0;
    ProxyScore chosen;
    ProxyScore rejected;
};

/// One preference-dataset row: the chosen answer is considered less wrong
/// (or, for right-over-wrong rows, correct).
struct WowPair {
    std::string task_id;
    std::string prompt;
    std::string chosen;
    std::string rejected;
    AnswerRef chosen_ref;
    AnswerRef rejected_ref;
    PairKind kind = PairKind::wow;
    std::string method;
    std::string evaluator;
    std::optional<double> margin;
    Json judgement = Json::object();
    std::optional<PairSilver> silver;
};

struct ClassifyOptions {
    /// Only tasks in this split take part; nullopt keeps every task.
    std::optional<Split> split = Split::train;
    /// Keep one wrong answer per normalized key (ablation).
    bool dedup_wrong = false;
};

/// Groups samples by task and separates correct from wrong answers.
/// Samples from several generators are pooled, ordered by
/// (generator, sample_index). Tasks come out sorted by id.
std::vector<TaskAnswers> classify_answers(const std::vector<TaskInstance>& tasks,
                                          const std::vector<GenerationRecord>& records, const ProxyContext& proxy,
                                          const ClassifyOptions& options, Diagnostics& diagnostics);

/// Judges every unordered combination of wrong answers per task, in
/// (task_id, i, j) order, attaching silver labels where proxies exist.
std::vector<PreferenceJudgement> judge_all_pairs(const std::vector<TaskAnswers>& run, Elicitor& elicitor,
                                                 Diagnostics& diagnostics);

/// Turns judgements into pairs: 1 keeps (first, second) as (chosen,
/// rejected), -1 swaps them, 0 drops the pair.
std::vector<WowPair> assemble_wow(const std::vector<TaskAnswers>& run,
                                  const std::vector<PreferenceJudgement>& judgements);

struct WowBuild {
    std::vector<PreferenceJudgement> judgements;
    std::vector<WowPair> pairs;
};

WowBuild build_wow(const std::vector<TaskAnswers>& run, Elicitor& elicitor, Diagnostics& diagnostics);

/// (correct, wrong) pairs for every combination, optionally capped per task
/// (first pairs in (correct, wrong) sample order).
std::vector<WowPair> build_row(const std::vector<TaskAnswers>& run, std::optional<std::size_t> cap_per_task = {});

/// Uniform sampling without replacement; `stratified` draws round-robin
/// across tasks instead.
std::vector<WowPair> sample_pairs(const std::vector<WowPair>& pairs, std::size_t n, std::uint64_t seed,
                                  bool stratified = false);

/// `ratio` is the wrong-over-wrong share of `target_size`.
std::vector<WowPair> mix_datasets(const std::vector<WowPair>& wow, const std::vector<WowPair>& row, double ratio,
                                  std::size_t target_size, std::uint64_t seed);

Json to_json(const WowPair& p);
WowPair wow_pair_from_json(const Json& j);
std::vector<WowPair> read_pairs(const std::filesystem::path& path);
void write_pairs(const std::filesystem::path& path, const std::vector<WowPair>& pairs);

struct DatasetManifest {
    std::string format = "wow-preferences/v1";
    std::string export_file;
    std::string export_sha256;
    std::size_t pair_count = 0;
    std::string source_corpus_sha256;
    std::vector<std::string> generators;
    std::string evaluator;
    std::string method;
    int margin = 100;
    std::uint64_t seed = 42;
    Json created_by = Json::object();
};

Json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const Json& j);

/// Sidecar path: `x.jsonl` -> `x.manifest.json`.
std::filesystem::path manifest_path(const std::filesystem::path& export_path);

/// One export record: {prompt, chosen, rejected, meta{...}}.
Json export_record(const WowPair& p);
WowPair pair_from_export_record(const Json& j);

/// Writes the export and its manifest sidecar (with the export's SHA-256
/// filled in). Refuses an empty pair list.
DatasetManifest export_preferences(const std::vector<WowPair>& pairs, const std::filesystem::path& path,
                                   DatasetManifest manifest);

/// Reads an export back, verifying the sidecar hash when present.
std::vector<WowPair> import_preferences(const std::filesystem::path& path);

}  // namespace wow
