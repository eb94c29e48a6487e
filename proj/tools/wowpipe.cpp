#include "wow/errors.hpp"
#include "wow/parsing.hpp"
#include "wow/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> parallelism;
    std::optional<std::string> mock;
    std::optional<int> margin;
    std::optional<int> batch_size;
    std::optional<std::string> method;
    std::optional<std::string> out;
    bool emit_plot_data = false;
};

wow::RunConfig load_config(const Overrides& o) {
    const fs::path path = o.config;
    wow::Json j;
    try {
        j = wow::Json::parse(wow::read_text_file(path));
    } catch (const wow::Json::exception& e) {
        throw wow::ConfigError("run config " + path.string() + " is not valid JSON: " + e.what());
    }
    // Command-line paths are relative to the working directory, config paths
    // to the config file.
    if (o.seed) j["seed"] = *o.seed;
    if (o.parallelism) j["parallelism"] = *o.parallelism;
    if (o.mock) j["mock"] = fs::absolute(*o.mock).string();
    if (o.out) j["output_dir"] = fs::absolute(*o.out).string();
    if (o.margin) j["elicit"]["margin"] = *o.margin;
    if (o.batch_size) j["elicit"]["batch_size"] = *o.batch_size;
    if (o.method) j["elicit"]["method"] = *o.method;
    if (o.emit_plot_data) j["metrics"]["emit_plot_data"] = true;
    const auto base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    return wow::run_config_from_json(j, base);
}

void print_result(const wow::StageResult& r) {
    std::cout << wow::Json{{"stage", r.stage}, {"outputs", r.outputs}, {"summary", r.summary}}.dump() << "\n";
}

int parse_debug(const std::string& domain, std::optional<int> options, int nodes, int blanks, const std::string& file) {
    wow::AnswerContext ctx;
    ctx.domain = wow::parse_domain(domain);
    // Only multiple-choice domains get the default option count.
    const bool mcq = ctx.domain == wow::Domain::kc || ctx.domain == wow::Domain::com2;
    ctx.option_count = options ? *options : (mcq ? 4 : 0);
    ctx.node_count = nodes;
    ctx.blank_count = blanks;
    std::string text;
    if (file.empty() || file == "-") {
        text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
    } else {
        text = wow::read_text_file(file);
    }
    wow::Json spans = wow::Json::array();
    for (const auto& s : wow::explain_extraction(ctx, text))
        spans.push_back(wow::Json{
            {"pattern", s.pattern}, {"begin", s.begin}, {"end", s.end}, {"text", s.text}, {"selected", s.selected}});
    const auto answer = wow::extract_answer(ctx, text);
    wow::Json out{{"pattern_set", wow::kPatternSetVersion},
                  {"spans", spans},
                  {"extracted", answer ? wow::to_json(*answer) : wow::Json(nullptr)},
                  {"key", answer ? wow::Json(wow::normalize_key(*answer)) : wow::Json(nullptr)}};
    std::cout << out.dump(2) << "\n";
    return answer ? 0 : 3;
}

int validate_tasks(const std::string& file) {
    const auto issues = wow::validate_task_file(file);
    for (const auto& i : issues)
        std::cout << wow::Json{{"line", i.line}, {"reason", i.reason}}.dump() << "\n";
    std::cerr << issues.size() << " issue(s) in " << file << "\n";
    return issues.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wowpipe: wrong-over-wrong preference data pipeline"};
    app.require_subcommand(1);
    Overrides o;

    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("-c,--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "Run seed");
        sub->add_option("--parallelism", o.parallelism, "Maximum in-flight LLM requests")->check(CLI::PositiveNumber);
        sub->add_option("--mock", o.mock, "Mock transport script (replaces every endpoint)")->check(CLI::ExistingFile);
        sub->add_option("--margin", o.margin, "Retained-fraction percentage m")->check(CLI::Range(1, 100));
        sub->add_option("--batch-size", o.batch_size, "Answers per score prompt")->check(CLI::PositiveNumber);
        sub->add_option("--method", o.method, "Elicitation method")
            ->check(CLI::IsMember({"heuristic", "consistency", "logits", "pairwise", "score", "oracle"}));
        sub->add_option("--out", o.out, "Output directory (overrides the config)");
        sub->add_flag("--emit-plot-data", o.emit_plot_data, "Write (x, y) series for plotting");
    };

    std::string chosen_stage;
    for (const auto& name : wow::stage_names()) {
        auto* sub = app.add_subcommand(name, "Run the " + name + " stage");
        add_run_flags(sub);
        sub->callback([&chosen_stage, name] { chosen_stage = name; });
    }
    auto* all = app.add_subcommand("run-all", "gen-tasks, sample, elicit, build-wow, export, metrics");
    add_run_flags(all);
    all->callback([&chosen_stage] { chosen_stage = "run-all"; });

    std::string pd_domain = "generic", pd_file;
    std::optional<int> pd_options;
    int pd_nodes = 10, pd_blanks = 3;
    auto* pd = app.add_subcommand("parse-debug", "Show answer-extraction matches for a completion");
    pd->add_option("--domain", pd_domain, "Task domain")->required();
    pd->add_option("--options", pd_options, "Option count (default 4 for kc and com2, else none)");
    pd->add_option("--nodes", pd_nodes, "Node count (graph tasks)");
    pd->add_option("--blanks", pd_blanks, "Blank count (kc)");
    pd->add_option("file", pd_file, "Completion text file; stdin when omitted");
    pd->callback([&chosen_stage] { chosen_stage = "parse-debug"; });

    std::string vt_file;
    auto* vt = app.add_subcommand("validate-tasks", "Check a task file against the schema");
    vt->add_option("file", vt_file, "Task file")->required();
    vt->callback([&chosen_stage] { chosen_stage = "validate-tasks"; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (chosen_stage == "parse-debug") return parse_debug(pd_domain, pd_options, pd_nodes, pd_blanks, pd_file);
        if (chosen_stage == "validate-tasks") return validate_tasks(vt_file);
        const auto cfg = load_config(o);
        if (chosen_stage == "run-all") {
            for (const auto& r : wow::run_all(cfg)) print_result(r);
        } else {
            print_result(wow::run_stage(chosen_stage, cfg));
        }
        return 0;
    } catch (const wow::Error& e) {
        wow::Json err{{"error", e.kind()}, {"message", e.what()}};
        if (const auto* dep = dynamic_cast<const wow::StageDependencyError*>(&e)) err["path"] = dep->path();
        if (const auto* ing = dynamic_cast<const wow::IngestError*>(&e)) err["line"] = ing->line();
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << wow::Json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
}
