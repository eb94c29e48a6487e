#pragma once

#include "wow/corpus.hpp"
#include "wow/diagnostics.hpp"
#include "wow/elicit.hpp"
#include "wow/gateway.hpp"
#include "wow/simulated_llm.hpp"
#include "wow/toydpo.hpp"
#include "wow/wowgen.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wow {

/// An LLM endpoint: OpenAI-compatible over HTTP, or the run's mock script.
struct EndpointConfig {
    std::string name;
    std::string model;
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key_env = "OPENAI_API_KEY";
};

struct GeneratorConfig {
    EndpointConfig endpoint;
    SamplingConfig sampling;
};

struct CorpusGenerateConfig {
    Domain domain = Domain::sp;
    std::size_t count = 0;
    /// sp / mf node count, or matching left side.
    int n = 6;
    /// matching right side.
    int right = 4;
    double edge_density = 0.5;
    int weight_max = 10;
};

struct CorpusIngestConfig {
    std::filesystem::path path;
    std::optional<Domain> domain;
};

struct RunConfig {
    std::uint64_t seed = 42;
    std::filesystem::path output_dir = "run";
    int parallelism = 4;
    std::optional<std::filesystem::path> mock_script;

    std::vector<CorpusGenerateConfig> generate;
    std::vector<CorpusIngestConfig> ingest;
    SplitPlan split;

    std::vector<GeneratorConfig> generators;
    EndpointConfig evaluator;
    ElicitConfig elicit;

    ProxyKind scalar_proxy = ProxyKind::mf;
    std::optional<std::filesystem::path> scorer_fixture;
    std::optional<EndpointConfig> scorer_endpoint;

    std::optional<Split> wow_split = Split::train;
    bool dedup_wrong = false;
    std::optional<std::size_t> wow_sample;
    bool stratified_sample = false;

    std::optional<std::size_t> row_cap;
    double mix_ratio = 0.5;
    std::optional<std::size_t> mix_target;

    std::string export_source = "wow";

    std::optional<Split> metrics_split;
    bool emit_plot_data = false;

    DpoConfig toy;

    /// Base directory for relative input paths in the config file.
    std::filesystem::path base_dir = ".";

    void validate() const;
};

RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir = ".");

/// Defaults filled in; paths reduced to file names so manifests do not
/// depend on where a run was launched from.
Json to_json(const RunConfig& c);

RunConfig load_run_config(const std::filesystem::path& path);

struct StageResult {
    std::string stage;
    /// Output files relative to the run directory.
    std::vector<std::string> outputs;
    /// Human-facing headline numbers, also written to the stage manifest.
    Json summary = Json::object();
};

StageResult stage_gen_tasks(const RunConfig& cfg);
StageResult stage_sample(const RunConfig& cfg);
StageResult stage_elicit(const RunConfig& cfg);
StageResult stage_build_wow(const RunConfig& cfg);
StageResult stage_build_row(const RunConfig& cfg);
StageResult stage_mix(const RunConfig& cfg);
StageResult stage_eval_prefs(const RunConfig& cfg);
StageResult stage_metrics(const RunConfig& cfg);
StageResult stage_export(const RunConfig& cfg);
StageResult stage_toy_align(const RunConfig& cfg);

/// gen-tasks, sample, elicit, build-wow, export, metrics.
std::vector<StageResult> run_all(const RunConfig& cfg);

/// Stage names in pipeline order, for the CLI.
const std::vector<std::string>& stage_names();
StageResult run_stage(const std::string& name, const RunConfig& cfg);

/// Builds the toy preference problem from wrong-over-wrong pairs: one
/// question per task, one candidate per distinct answer.
struct ToyProblem {
    std::vector<std::string> questions;
    std::vector<std::vector<std::string>> candidates;
    std::vector<ToyPair> pairs;
};

ToyProblem toy_problem_from_pairs(const std::vector<WowPair>& pairs);

}  // namespace wow
