#pragma once

// Small end-to-end experiments on the simulated model, shared by the unit
// tests and the acceptance binary.

#include "oracles.hpp"

#include "wow/jsonl.hpp"
#include "wow/metrics.hpp"
#include "wow/pipeline.hpp"

#include <map>
#include <vector>

namespace experiment {

/// The e2e fixture config pointed at `dir`, with `task_count` sp tasks.
inline wow::RunConfig simulated_run(const std::filesystem::path& dir, std::size_t task_count) {
    auto j = wow::Json::parse(wow::read_text_file(oracle::test_data("fixtures/e2e/config.json")));
    j["corpus"]["generate"][0]["count"] = task_count;
    j["output_dir"] = dir.string();
    j["mock"] = oracle::test_data("fixtures/e2e/mock.jsonl").string();
    return wow::run_config_from_json(j, oracle::test_data("fixtures/e2e"));
}

struct TrendPoint {
    int m = 100;
    std::size_t judgements = 0;
    wow::WowAccuracyReport report;
};

/// Samples once, then elicits score-based preferences at each margin m and
/// measures Acc_WoW on what the filter keeps.
inline std::vector<TrendPoint> margin_trend(const std::filesystem::path& dir, std::size_t task_count,
                                            const std::vector<int>& ms) {
    auto cfg = simulated_run(dir, task_count);
    wow::stage_gen_tasks(cfg);
    wow::stage_sample(cfg);
    std::vector<TrendPoint> out;
    for (int m : ms) {
        cfg.elicit.margin = m;
        wow::stage_elicit(cfg);
        const auto js = wow::read_judgements(dir / "judgements.jsonl");
        out.push_back({m, js.size(), wow::acc_wow(std::span<const wow::PreferenceJudgement>(js))});
    }
    return out;
}

}  // namespace experiment
