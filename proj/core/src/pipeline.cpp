#include "wow/pipeline.hpp"

#include "wow/errors.hpp"
#include "wow/hash.hpp"
#include "wow/metrics.hpp"
#include "wow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

namespace wow {

namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// Run directory layout.
constexpr const char* kTasks = "tasks.jsonl";
constexpr const char* kSamples = "samples.jsonl";
constexpr const char* kJudgements = "judgements.jsonl";
constexpr const char* kElicitLog = "elicit_log.jsonl";
constexpr const char* kWow = "wow.jsonl";
constexpr const char* kRow = "row.jsonl";
constexpr const char* kMix = "mix.jsonl";
constexpr const char* kEval = "eval.json";
constexpr const char* kExport = "export/preferences.jsonl";
constexpr const char* kReport = "metrics/report.jsonl";
constexpr const char* kReportText = "metrics/report.txt";
constexpr const char* kTrace = "toy/trace.jsonl";
constexpr const char* kPolicy = "toy/policy.json";

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<T>();
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

std::optional<Split> optional_split(const Json& j, const char* key, std::optional<Split> fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (j.at(key).is_null()) return std::nullopt;
    const auto name = j.at(key).get<std::string>();
    if (name == "all") return std::nullopt;
    return parse_split(name);
}

EndpointConfig endpoint_from_json(const Json& j, const std::string& fallback_name) {
    EndpointConfig e;
    e.name = get_or<std::string>(j, "name", fallback_name);
    e.model = get_or<std::string>(j, "model", e.name);
    e.base_url = get_or<std::string>(j, "base_url", e.base_url);
    e.api_key_env = get_or<std::string>(j, "api_key_env", e.api_key_env);
    return e;
}

Json endpoint_json(const EndpointConfig& e) {
    return Json{{"name", e.name}, {"model", e.model}, {"base_url", e.base_url}, {"api_key_env", e.api_key_env}};
}

template <class T>
Json opt_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

std::string split_name(const std::optional<Split>& s) { return s ? std::string(to_string(*s)) : "all"; }

// --- run context ------------------------------------------------------------------

/// Owns the transports and gateways of one stage invocation.
class Endpoints {
public:
    explicit Endpoints(const RunConfig& cfg) : cfg_(cfg) {
        retry_.jitter_seed = cfg.seed;
        retry_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
        if (cfg.mock_script) mock_ = MockTransport::from_file(*cfg.mock_script);
    }

    const Gateway& gateway(const EndpointConfig& e) {
        auto it = gateways_.find(e.name);
        if (it != gateways_.end()) return *it->second;
        Transport* t = mock_.get();
        if (!t) {
            HttpTransportConfig hc;
            hc.base_url = e.base_url;
            hc.api_key_env = e.api_key_env;
            transports_.push_back(make_http_transport(hc));
            t = transports_.back().get();
        }
        auto g = std::make_unique<Gateway>(*t, cfg_.parallelism, retry_);
        return *gateways_.emplace(e.name, std::move(g)).first->second;
    }

private:
    const RunConfig& cfg_;
    RetryPolicy retry_;
    std::unique_ptr<Transport> mock_;
    std::vector<std::unique_ptr<Transport>> transports_;
    std::map<std::string, std::unique_ptr<Gateway>> gateways_;
};

/// External scorer for bg/cs proxies, when the run configures one.
struct ScorerHolder {
    std::unique_ptr<ExternalScorer> inner;
    std::unique_ptr<CachingScorer> cache;
    std::optional<Endpoints> endpoints;

    explicit ScorerHolder(const RunConfig& cfg) {
        if (cfg.scorer_fixture) {
            inner = FixtureScorer::from_file(*cfg.scorer_fixture);
        } else if (cfg.scorer_endpoint) {
            endpoints.emplace(cfg);
            JudgeConfig jc;
            jc.evaluator_name = cfg.scorer_endpoint->name;
            jc.model_name = cfg.scorer_endpoint->model;
            inner = std::make_unique<TransportScorer>(endpoints->gateway(*cfg.scorer_endpoint), jc);
        }
        if (inner) cache = std::make_unique<CachingScorer>(*inner);
    }

    ProxyContext context(const RunConfig& cfg) const { return ProxyContext{cache.get(), cfg.scalar_proxy}; }
};

fs::path out_path(const RunConfig& cfg, const char* rel) { return cfg.output_dir / rel; }

fs::path require(const RunConfig& cfg, const char* rel) {
    const auto p = out_path(cfg, rel);
    if (!fs::exists(p)) throw StageDependencyError(p.string());
    return p;
}

std::vector<std::string> generator_names(const RunConfig& cfg) {
    std::vector<std::string> names;
    for (const auto& g : cfg.generators) names.push_back(g.endpoint.name);
    return names;
}

void write_manifest(const RunConfig& cfg, StageResult& result, const std::vector<std::string>& inputs,
                    const Diagnostics& diagnostics) {
    Json in = Json::object();
    for (const auto& rel : inputs) in[rel] = sha256_file(cfg.output_dir / rel);
    Json external = Json::object();
    auto add_external = [&](const std::optional<fs::path>& p) {
        if (p) external[p->filename().string()] = sha256_file(*p);
    };
    add_external(cfg.mock_script);
    add_external(cfg.scorer_fixture);
    for (const auto& ing : cfg.ingest) add_external(ing.path);
    Json out = Json::object();
    for (const auto& rel : result.outputs) out[rel] = sha256_file(cfg.output_dir / rel);
    const auto config = to_json(cfg);
    Json m;
    m["stage"] = result.stage;
    m["tool"] = Json{{"name", "wowpipe"}, {"version", kToolVersion}};
    m["seed"] = cfg.seed;
    m["config_sha256"] = sha256_hex(config.dump());
    m["config"] = config;
    m["inputs"] = in;
    m["external"] = external;
    m["outputs"] = out;
    m["summary"] = result.summary;
    m["diagnostics"] = diagnostics.to_json();
    write_text_file(cfg.output_dir / "manifests" / (result.stage + ".json"), m.dump(2) + "\n");
}

std::vector<TaskInstance> load_tasks(const RunConfig& cfg) { return read_tasks(require(cfg, kTasks)); }

std::vector<GenerationRecord> load_samples(const RunConfig& cfg) { return read_records(require(cfg, kSamples)); }

ElicitConfig effective_elicit(const RunConfig& cfg) {
    auto e = cfg.elicit;
    e.judge.evaluator_name = cfg.evaluator.name;
    e.judge.model_name = cfg.evaluator.model;
    if (e.method == Method::consistency || e.method == Method::logits)
        e.judge.evaluator_name = cfg.generators.size() == 1 ? cfg.generators.front().endpoint.name : "self";
    if (e.method == Method::heuristic) e.judge.evaluator_name = "length";
    if (e.method == Method::oracle) e.judge.evaluator_name = "silver";
    return e;
}

std::string dataset_name(const TaskInstance& t) { return std::string(to_string(t.domain)); }

}  // namespace

// --- config -----------------------------------------------------------------------------

void RunConfig::validate() const {
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    split.validate();
    elicit.validate();
    toy.validate();
    if (generators.empty()) throw ConfigError("at least one generator is required");
    std::set<std::string> names;
    for (const auto& g : generators) {
        if (g.endpoint.name.empty()) throw ConfigError("generator without a name");
        if (!names.insert(g.endpoint.name).second) throw ConfigError("duplicate generator '" + g.endpoint.name + "'");
        g.sampling.validate();
    }
    if (!(mix_ratio >= 0.0 && mix_ratio <= 1.0)) throw ConfigError("mix ratio must be in [0, 1]");
    if (export_source != "wow" && export_source != "row" && export_source != "mix")
        throw ConfigError("export source must be wow, row or mix");
    if (scalar_proxy != ProxyKind::mf && scalar_proxy != ProxyKind::nl)
        throw ConfigError("scalar proxy must be mf or nl");
}

RunConfig run_config_from_json(const Json& j, const fs::path& base_dir) {
    try {
        RunConfig c;
        c.base_dir = base_dir;
        c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
        c.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", c.output_dir.string()));
        c.parallelism = get_or<int>(j, "parallelism", c.parallelism);
        if (j.contains("mock") && !j.at("mock").is_null())
            c.mock_script = resolve(base_dir, j.at("mock").get<std::string>());

        const Json corpus = j.value("corpus", Json::object());
        for (const auto& g : corpus.value("generate", Json::array())) {
            CorpusGenerateConfig gc;
            gc.domain = parse_domain(g.at("domain").get<std::string>());
            if (gc.domain != Domain::sp && gc.domain != Domain::mf && gc.domain != Domain::matching)
                throw ConfigError("only sp, mf and matching tasks can be generated");
            gc.count = g.at("count").get<std::size_t>();
            gc.n = get_or<int>(g, "n", gc.domain == Domain::matching ? 4 : 6);
            gc.right = get_or<int>(g, "right", 4);
            gc.edge_density = get_or<double>(g, "edge_density", gc.domain == Domain::matching ? 0.4 : 0.5);
            gc.weight_max = get_or<int>(g, "weight_max", 10);
            c.generate.push_back(gc);
        }
        for (const auto& g : corpus.value("ingest", Json::array())) {
            CorpusIngestConfig ic;
            ic.path = resolve(base_dir, g.at("path").get<std::string>());
            if (g.contains("domain")) ic.domain = parse_domain(g.at("domain").get<std::string>());
            c.ingest.push_back(ic);
        }
        const Json split = corpus.value("split", Json::object());
        c.split.train = get_or<double>(split, "train", c.split.train);
        c.split.val = get_or<double>(split, "val", c.split.val);
        c.split.test = get_or<double>(split, "test", c.split.test);
        c.split.seed = c.seed;

        for (const auto& g : j.value("generators", Json::array())) {
            GeneratorConfig gc;
            gc.endpoint = endpoint_from_json(g, "");
            const Json s = g.value("sampling", Json::object());
            gc.sampling.temperature = get_or<double>(s, "temperature", gc.sampling.temperature);
            gc.sampling.max_tokens = get_or<int>(s, "max_tokens", gc.sampling.max_tokens);
            gc.sampling.samples_per_task = get_or<int>(s, "samples_per_task", gc.sampling.samples_per_task);
            gc.sampling.want_logprobs = get_or<bool>(s, "logprobs", gc.sampling.want_logprobs);
            gc.sampling.n_per_call = get_or<int>(s, "n_per_call", gc.sampling.n_per_call);
            gc.sampling.model_name = gc.endpoint.model;
            gc.sampling.seed = derive_seed(c.seed, gc.endpoint.name);
            c.generators.push_back(gc);
        }
        const Json ev = j.value("evaluator", Json::object());
        c.evaluator = endpoint_from_json(ev, "judge");

        const Json el = j.value("elicit", Json::object());
        c.elicit.method = parse_method(get_or<std::string>(el, "method", "score"));
        c.elicit.margin = get_or<int>(el, "margin", 100);
        c.elicit.batch_size = get_or<int>(el, "batch_size", 5);
        c.elicit.judge.temperature = get_or<double>(ev, "temperature", 0.0);
        c.elicit.judge.max_tokens = get_or<int>(ev, "max_tokens", 1024);

        const Json px = j.value("proxy", Json::object());
        c.scalar_proxy = parse_proxy_kind(get_or<std::string>(px, "scalar_kind", "mf"));
        if (px.contains("scorer") && !px.at("scorer").is_null()) {
            const auto& s = px.at("scorer");
            if (s.contains("fixture"))
                c.scorer_fixture = resolve(base_dir, s.at("fixture").get<std::string>());
            else
                c.scorer_endpoint = endpoint_from_json(s, "scorer");
        }

        const Json wow = j.value("wow", Json::object());
        c.wow_split = optional_split(wow, "split", Split::train);
        c.dedup_wrong = get_or<bool>(wow, "dedup", false);
        if (wow.contains("sample") && !wow.at("sample").is_null()) c.wow_sample = wow.at("sample").get<std::size_t>();
        c.stratified_sample = get_or<bool>(wow, "stratified", false);

        const Json row = j.value("row", Json::object());
        if (row.contains("cap_per_task") && !row.at("cap_per_task").is_null())
            c.row_cap = row.at("cap_per_task").get<std::size_t>();

        const Json mix = j.value("mix", Json::object());
        c.mix_ratio = get_or<double>(mix, "ratio", 0.5);
        if (mix.contains("target") && !mix.at("target").is_null()) c.mix_target = mix.at("target").get<std::size_t>();

        c.export_source = get_or<std::string>(j.value("export", Json::object()), "source", "wow");

        const Json met = j.value("metrics", Json::object());
        c.metrics_split = optional_split(met, "split", std::nullopt);
        c.emit_plot_data = get_or<bool>(met, "emit_plot_data", false);

        const Json toy = j.value("toy", Json::object());
        c.toy.beta = get_or<double>(toy, "beta", c.toy.beta);
        c.toy.learning_rate = get_or<double>(toy, "learning_rate", c.toy.learning_rate);
        c.toy.steps = get_or<int>(toy, "steps", c.toy.steps);
        c.toy.asymmetric = get_or<bool>(toy, "asymmetric", false);

        c.validate();
        return c;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("bad run config: ") + e.what());
    } catch (const SchemaError& e) {
        throw ConfigError(e.what());
    }
}

Json to_json(const RunConfig& c) {
    auto name_of = [](const fs::path& p) { return p.filename().string(); };
    Json gens = Json::array();
    for (const auto& g : c.generators) {
        auto e = endpoint_json(g.endpoint);
        e["sampling"] = Json{{"temperature", g.sampling.temperature},
                             {"max_tokens", g.sampling.max_tokens},
                             {"samples_per_task", g.sampling.samples_per_task},
                             {"logprobs", g.sampling.want_logprobs},
                             {"n_per_call", g.sampling.n_per_call}};
        gens.push_back(e);
    }
    Json generate = Json::array();
    for (const auto& g : c.generate)
        generate.push_back(Json{{"domain", to_string(g.domain)},
                                {"count", g.count},
                                {"n", g.n},
                                {"right", g.right},
                                {"edge_density", g.edge_density},
                                {"weight_max", g.weight_max}});
    Json ingest = Json::array();
    for (const auto& i : c.ingest)
        ingest.push_back(Json{{"path", name_of(i.path)}, {"domain", i.domain ? Json(to_string(*i.domain)) : Json(nullptr)}});
    auto ev = endpoint_json(c.evaluator);
    ev["temperature"] = c.elicit.judge.temperature;
    ev["max_tokens"] = c.elicit.judge.max_tokens;
    Json scorer = nullptr;
    if (c.scorer_fixture) scorer = Json{{"fixture", name_of(*c.scorer_fixture)}};
    if (c.scorer_endpoint) scorer = endpoint_json(*c.scorer_endpoint);
    return Json{
        {"seed", c.seed},
        {"parallelism", c.parallelism},
        {"mock", c.mock_script ? Json(name_of(*c.mock_script)) : Json(nullptr)},
        {"corpus",
         {{"generate", generate},
          {"ingest", ingest},
          {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}}}}},
        {"generators", gens},
        {"evaluator", ev},
        {"elicit", {{"method", to_string(c.elicit.method)}, {"margin", c.elicit.margin}, {"batch_size", c.elicit.batch_size}}},
        {"proxy", {{"scalar_kind", to_string(c.scalar_proxy)}, {"scorer", scorer}}},
        {"wow",
         {{"split", split_name(c.wow_split)},
          {"dedup", c.dedup_wrong},
          {"sample", opt_json(c.wow_sample)},
          {"stratified", c.stratified_sample}}},
        {"row", {{"cap_per_task", opt_json(c.row_cap)}}},
        {"mix", {{"ratio", c.mix_ratio}, {"target", opt_json(c.mix_target)}}},
        {"export", {{"source", c.export_source}}},
        {"metrics", {{"split", split_name(c.metrics_split)}, {"emit_plot_data", c.emit_plot_data}}},
        {"toy",
         {{"beta", c.toy.beta},
          {"learning_rate", c.toy.learning_rate},
          {"steps", c.toy.steps},
          {"asymmetric", c.toy.asymmetric}}},
    };
}

RunConfig load_run_config(const fs::path& path) {
    const auto text = read_text_file(path);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigError("run config " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

// --- stages ---------------------------------------------------------------------------------

StageResult stage_gen_tasks(const RunConfig& cfg) {
    Diagnostics diag;
    std::vector<TaskInstance> tasks;
    for (const auto& g : cfg.generate) {
        const auto tag = std::string(to_string(g.domain));
        for (std::size_t i = 0; i < g.count; ++i) {
            const auto seed = derive_seed(cfg.seed, "gen-" + tag, i);
            switch (g.domain) {
                case Domain::sp:
                    tasks.push_back(generate_shortest_path_task({g.n, g.edge_density, g.weight_max, seed, 200}));
                    break;
                case Domain::mf:
                    tasks.push_back(generate_maxflow_task({g.n, g.edge_density, g.weight_max, seed, 200}));
                    break;
                default:
                    tasks.push_back(generate_matching_task({g.n, g.right, g.edge_density, seed, 200}));
                    break;
            }
        }
    }
    for (const auto& ing : cfg.ingest) {
        auto more = ingest_tasks(ing.path, ing.domain);
        for (auto& t : more) t.split = Split::unassigned;
        tasks.insert(tasks.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    }
    std::set<std::string> ids;
    for (const auto& t : tasks)
        if (!ids.insert(t.id).second) throw SchemaError("duplicate task id '" + t.id + "'");
    tasks = assign_splits(std::move(tasks), cfg.split);
    std::sort(tasks.begin(), tasks.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    write_tasks(out_path(cfg, kTasks), tasks);

    StageResult r{"gen-tasks", {kTasks}, {}};
    std::map<std::string, std::size_t> per_split;
    for (const auto& t : tasks) ++per_split[std::string(to_string(t.split))];
    r.summary["tasks"] = tasks.size();
    r.summary["splits"] = per_split;
    write_manifest(cfg, r, {}, diag);
    return r;
}

StageResult stage_sample(const RunConfig& cfg) {
    const auto tasks = load_tasks(cfg);
    Diagnostics diag;
    Endpoints endpoints(cfg);
    std::vector<GenerationRecord> all;
    for (const auto& g : cfg.generators) {
        auto recs = sample_corpus(tasks, g.sampling, endpoints.gateway(g.endpoint), g.endpoint.name, diag);
        all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
    std::sort(all.begin(), all.end(), [](const GenerationRecord& a, const GenerationRecord& b) {
        return std::tie(a.task_id, a.generator, a.sample_index) < std::tie(b.task_id, b.generator, b.sample_index);
    });
    write_records(out_path(cfg, kSamples), all);
    StageResult r{"sample", {kSamples}, {}};
    r.summary["records"] = all.size();
    r.summary["unparseable"] = diag.counter("sample.unparseable");
    r.summary["failed_slots"] = diag.counter("sample.failed_slots");
    write_manifest(cfg, r, {kTasks}, diag);
    return r;
}

namespace {

struct LoadedRun {
    std::vector<TaskInstance> tasks;
    std::vector<GenerationRecord> samples;
    std::unique_ptr<ScorerHolder> scorer;
    std::vector<TaskAnswers> run;
};

LoadedRun load_run(const RunConfig& cfg, Diagnostics& diag) {
    LoadedRun lr;
    lr.tasks = load_tasks(cfg);
    lr.samples = load_samples(cfg);
    lr.scorer = std::make_unique<ScorerHolder>(cfg);
    lr.run = classify_answers(lr.tasks, lr.samples, lr.scorer->context(cfg), {cfg.wow_split, cfg.dedup_wrong}, diag);
    return lr;
}

}  // namespace

StageResult stage_elicit(const RunConfig& cfg) {
    Diagnostics diag;
    auto lr = load_run(cfg, diag);
    const auto ec = effective_elicit(cfg);
    std::optional<Endpoints> endpoints;
    const Gateway* gw = nullptr;
    if (ec.method == Method::pairwise || ec.method == Method::score) {
        endpoints.emplace(cfg);
        gw = &endpoints->gateway(cfg.evaluator);
    }
    auto elicitor = make_elicitor(ec, gw);
    const auto judgements = judge_all_pairs(lr.run, *elicitor, diag);
    write_judgements(out_path(cfg, kJudgements), judgements);
    const auto log = elicitor->audit_log();
    write_jsonl(out_path(cfg, kElicitLog), log);

    StageResult r{"elicit", {kJudgements, kElicitLog}, {}};
    std::size_t decided = 0;
    for (const auto& j : judgements) decided += j.direction != 0;
    r.summary["method"] = to_string(ec.method);
    r.summary["evaluator"] = elicitor->evaluator();
    r.summary["judgements"] = judgements.size();
    r.summary["decided"] = decided;
    try {
        r.summary["acc_wow"] = acc_wow(std::span<const PreferenceJudgement>(judgements)).overall.accuracy;
    } catch (const EmptyInput&) {
        r.summary["acc_wow"] = nullptr;
    }
    write_manifest(cfg, r, {kTasks, kSamples}, diag);
    return r;
}

StageResult stage_build_wow(const RunConfig& cfg) {
    Diagnostics diag;
    auto lr = load_run(cfg, diag);
    const auto judgements = read_judgements(require(cfg, kJudgements));
    auto pairs = assemble_wow(lr.run, judgements);
    const auto assembled = pairs.size();
    if (cfg.wow_sample) pairs = sample_pairs(pairs, std::min(*cfg.wow_sample, pairs.size()), cfg.seed, cfg.stratified_sample);
    if (pairs.empty()) diag.warn("EmptyDataset", "no wrong-over-wrong pairs were produced");
    write_pairs(out_path(cfg, kWow), pairs);
    StageResult r{"build-wow", {kWow}, {}};
    r.summary["pairs"] = pairs.size();
    r.summary["assembled"] = assembled;
    try {
        r.summary["acc_wow_pairs"] = acc_wow_pairs(std::span<const WowPair>(pairs)).overall.accuracy;
    } catch (const EmptyInput&) {
        r.summary["acc_wow_pairs"] = nullptr;
    }
    write_manifest(cfg, r, {kTasks, kSamples, kJudgements}, diag);
    return r;
}

StageResult stage_build_row(const RunConfig& cfg) {
    Diagnostics diag;
    auto lr = load_run(cfg, diag);
    const auto pairs = build_row(lr.run, cfg.row_cap);
    write_pairs(out_path(cfg, kRow), pairs);
    StageResult r{"build-row", {kRow}, {}};
    r.summary["pairs"] = pairs.size();
    write_manifest(cfg, r, {kTasks, kSamples}, diag);
    return r;
}

StageResult stage_mix(const RunConfig& cfg) {
    Diagnostics diag;
    const auto wow = read_pairs(require(cfg, kWow));
    const auto row = read_pairs(require(cfg, kRow));
    const auto target = cfg.mix_target.value_or(2 * std::min(wow.size(), row.size()));
    const auto pairs = mix_datasets(wow, row, cfg.mix_ratio, target, cfg.seed);
    write_pairs(out_path(cfg, kMix), pairs);
    StageResult r{"mix", {kMix}, {}};
    r.summary["pairs"] = pairs.size();
    r.summary["ratio"] = cfg.mix_ratio;
    write_manifest(cfg, r, {kWow, kRow}, diag);
    return r;
}

StageResult stage_eval_prefs(const RunConfig& cfg) {
    Diagnostics diag;
    const auto judgements = read_judgements(require(cfg, kJudgements));
    std::map<std::string, std::string> domain_of;
    std::vector<std::string> inputs = {kJudgements};
    if (fs::exists(out_path(cfg, kTasks))) {
        for (const auto& t : load_tasks(cfg)) domain_of[t.id] = dataset_name(t);
        inputs.push_back(kTasks);
    }
    std::map<std::string, std::vector<PreferenceJudgement>> datasets;
    for (const auto& j : judgements) {
        const auto it = domain_of.find(j.task_id);
        datasets[it == domain_of.end() ? "all" : it->second].push_back(j);
    }
    const auto report = acc_wow(datasets);
    Json out = to_json(report);
    Json gaps = Json::array();
    for (const auto& [lo, e] : accuracy_by_proxy_gap(judgements))
        gaps.push_back(Json{{"gap_from", lo}, {"numerator", e.numerator}, {"denominator", e.denominator}, {"acc_wow", e.accuracy}});
    out["by_proxy_gap"] = gaps;
    write_text_file(out_path(cfg, kEval), out.dump(2) + "\n");
    StageResult r{"eval-prefs", {kEval}, {}};
    r.summary["acc_wow"] = report.overall.accuracy;
    r.summary["numerator"] = report.overall.numerator;
    r.summary["denominator"] = report.overall.denominator;
    write_manifest(cfg, r, inputs, diag);
    return r;
}

StageResult stage_metrics(const RunConfig& cfg) {
    Diagnostics diag;
    const auto tasks = load_tasks(cfg);
    const auto samples = load_samples(cfg);
    ScorerHolder scorer(cfg);
    const auto ctx = scorer.context(cfg);
    std::vector<std::string> inputs = {kTasks, kSamples};

    std::map<std::string, const TaskInstance*> by_id;
    for (const auto& t : tasks)
        if (!cfg.metrics_split || t.split == *cfg.metrics_split) by_id.emplace(t.id, &t);

    struct Group {
        std::vector<AnswerOutcome> outcomes;
        std::vector<double> conf;
        std::vector<bool> correct;
        std::size_t unparseable = 0;
    };
    std::map<std::pair<std::string, std::string>, Group> groups;  // (dataset, generator)
    for (const auto& s : samples) {
        const auto it = by_id.find(s.task_id);
        if (it == by_id.end()) continue;
        const auto& task = *it->second;
        auto& g = groups[{dataset_name(task), s.generator}];
        if (!s.extracted) {
            ++g.unparseable;
            continue;
        }
        AnswerOutcome o;
        o.correct = is_correct(task, *s.extracted, s.raw_text, ctx);
        if (!o.correct) {
            try {
                o.proxy = proxy_for(task, *s.extracted, s.raw_text, ctx).value;
            } catch (const ProxyError&) {
                diag.count("proxy.unavailable");
                continue;
            }
        }
        g.outcomes.push_back(o);
        if (s.token_logprobs) {
            g.conf.push_back(confidence(nll(s)));
            g.correct.push_back(o.correct);
        }
    }

    std::map<std::pair<std::string, std::string>, std::vector<PreferenceJudgement>> judged;
    const bool have_judgements = fs::exists(out_path(cfg, kJudgements));
    if (have_judgements) {
        inputs.push_back(kJudgements);
        std::map<std::string, std::string> domain_of;
        for (const auto& t : tasks) domain_of[t.id] = dataset_name(t);
        for (const auto& j : read_judgements(out_path(cfg, kJudgements))) {
            const auto gen = j.first.generator == j.second.generator ? j.first.generator : std::string("mixed");
            judged[{domain_of[j.task_id], gen}].push_back(j);
        }
    }

    std::vector<Json> rows;
    std::vector<double> xs_acc, xs_conf, ys_wow;
    Json plot_reliability = Json::array();
    for (const auto& [key, g] : groups) {
        Json row;
        row["kind"] = "dataset";
        row["dataset"] = key.first;
        row["generator"] = key.second;
        row["unparseable"] = g.unparseable;
        std::optional<WrongnessReport> w;
        if (!g.outcomes.empty()) w = wrongness(std::span<const AnswerOutcome>(g.outcomes));
        row["n"] = w ? w->n : 0;
        row["n_correct"] = w ? w->n_correct : 0;
        row["n_wrong"] = w ? w->n_wrong : 0;
        row["acc"] = w ? Json(w->accuracy) : Json(nullptr);
        row["p_wrong"] = w && w->p_wrong ? Json(*w->p_wrong) : Json(nullptr);
        std::optional<double> mean_conf;
        if (!g.conf.empty()) {
            std::vector<char> flags(g.correct.begin(), g.correct.end());
            std::unique_ptr<bool[]> bools(new bool[flags.size()]);
            for (std::size_t i = 0; i < flags.size(); ++i) bools[i] = flags[i];
            const auto e = ece(g.conf, std::span<const bool>(bools.get(), flags.size()));
            double sum = 0;
            for (double c : g.conf) sum += c;
            mean_conf = sum / static_cast<double>(g.conf.size());
            row["confidence"] = *mean_conf;
            row["ece"] = e.ece;
            for (std::size_t b = 0; b < 10; ++b)
                if (e.bins[b].count)
                    plot_reliability.push_back(Json{{"dataset", key.first},
                                                    {"generator", key.second},
                                                    {"mean_confidence", e.bins[b].mean_confidence},
                                                    {"accuracy", e.bins[b].accuracy},
                                                    {"count", e.bins[b].count}});
        } else {
            row["confidence"] = nullptr;
            row["ece"] = nullptr;
        }
        std::optional<double> acc_w;
        if (const auto it = judged.find(key); it != judged.end()) {
            try {
                const auto rep = acc_wow(std::span<const PreferenceJudgement>(it->second));
                acc_w = rep.overall.accuracy;
                row["wow_pairs"] = rep.overall.denominator;
            } catch (const EmptyInput&) {
            }
        }
        row["acc_wow"] = acc_w ? Json(*acc_w) : Json(nullptr);
        if (acc_w && w) {
            xs_acc.push_back(w->accuracy);
            ys_wow.push_back(*acc_w);
            xs_conf.push_back(mean_conf.value_or(std::nan("")));
        }
        rows.push_back(std::move(row));
    }

    auto safe_pearson = [](const std::vector<double>& xs, const std::vector<double>& ys) -> Json {
        if (xs.size() < 2) return nullptr;
        for (double x : xs)
            if (std::isnan(x)) return nullptr;
        const auto r = pearson(xs, ys);
        return r ? Json(*r) : Json(nullptr);
    };
    Json corr{{"kind", "correlation"},
              {"points", xs_acc.size()},
              {"acc_vs_acc_wow", safe_pearson(xs_acc, ys_wow)},
              {"confidence_vs_acc_wow", safe_pearson(xs_conf, ys_wow)}};

    auto all_rows = rows;
    all_rows.push_back(corr);
    write_jsonl(out_path(cfg, kReport), all_rows);
    std::vector<Json> table;
    for (const auto& row : rows) {
        Json t = row;
        t.erase("kind");
        table.push_back(t);
    }
    std::ostringstream text;
    text << format_table(table) << "\n";
    text << "pearson(acc, acc_wow) = " << (corr["acc_vs_acc_wow"].is_null() ? "-" : corr["acc_vs_acc_wow"].dump()) << "\n";
    text << "pearson(confidence, acc_wow) = "
         << (corr["confidence_vs_acc_wow"].is_null() ? "-" : corr["confidence_vs_acc_wow"].dump()) << "\n";
    write_text_file(out_path(cfg, kReportText), text.str());

    StageResult r{"metrics", {kReport, kReportText}, {}};
    if (cfg.emit_plot_data) {
        auto tsv = [&](const char* rel, const std::string& header, const std::vector<std::string>& lines) {
            std::string body = header + "\n";
            for (const auto& l : lines) body += l + "\n";
            write_text_file(out_path(cfg, rel), body);
            r.outputs.push_back(rel);
        };
        auto num = [](double v) { return Json(v).dump(); };
        std::vector<std::string> rel_lines;
        for (const auto& p : plot_reliability)
            rel_lines.push_back(p["dataset"].get<std::string>() + "\t" + p["generator"].get<std::string>() + "\t" +
                                num(p["mean_confidence"].get<double>()) + "\t" + num(p["accuracy"].get<double>()) + "\t" +
                                p["count"].dump());
        tsv("metrics/plot/reliability.tsv", "dataset\tgenerator\tmean_confidence\taccuracy\tcount", rel_lines);
        std::vector<std::string> a, c;
        for (std::size_t i = 0; i < xs_acc.size(); ++i) {
            a.push_back(num(xs_acc[i]) + "\t" + num(ys_wow[i]));
            if (!std::isnan(xs_conf[i])) c.push_back(num(xs_conf[i]) + "\t" + num(ys_wow[i]));
        }
        tsv("metrics/plot/acc_vs_acc_wow.tsv", "acc\tacc_wow", a);
        tsv("metrics/plot/confidence_vs_acc_wow.tsv", "confidence\tacc_wow", c);
        if (have_judgements) {
            std::vector<PreferenceJudgement> all;
            for (const auto& [k, v] : judged) all.insert(all.end(), v.begin(), v.end());
            std::vector<std::string> g;
            for (const auto& [lo, e] : accuracy_by_proxy_gap(all))
                g.push_back(num(lo) + "\t" + num(e.accuracy) + "\t" + std::to_string(e.denominator));
            tsv("metrics/plot/acc_wow_by_proxy_gap.tsv", "gap_from\tacc_wow\tpairs", g);
        }
    }
    r.summary["datasets"] = rows.size();
    r.summary["correlation"] = corr;
    write_manifest(cfg, r, inputs, diag);
    return r;
}

StageResult stage_export(const RunConfig& cfg) {
    Diagnostics diag;
    const std::string src = cfg.export_source + ".jsonl";
    const auto pairs = read_pairs(require(cfg, src.c_str()));
    DatasetManifest m;
    m.source_corpus_sha256 = sha256_file(require(cfg, kTasks));
    m.generators = generator_names(cfg);
    const auto ec = effective_elicit(cfg);
    m.evaluator = cfg.export_source == "row" ? "ground_truth" : ec.judge.evaluator_name;
    m.method = cfg.export_source == "row" ? "ground_truth" : std::string(to_string(ec.method));
    m.margin = ec.margin;
    m.seed = cfg.seed;
    m.created_by = Json{{"tool", "wowpipe"}, {"version", kToolVersion}, {"source", src}};
    const auto written = export_preferences(pairs, out_path(cfg, kExport), m);
    StageResult r{"export", {kExport, "export/preferences.manifest.json"}, {}};
    r.summary["pairs"] = written.pair_count;
    r.summary["export_sha256"] = written.export_sha256;
    write_manifest(cfg, r, {src, kTasks}, diag);
    return r;
}

ToyProblem toy_problem_from_pairs(const std::vector<WowPair>& pairs) {
    ToyProblem tp;
    std::map<std::string, std::size_t> q_index;
    std::vector<std::map<std::string, std::size_t>> a_index;
    auto question = [&](const std::string& id) {
        auto [it, fresh] = q_index.emplace(id, tp.questions.size());
        if (fresh) {
            tp.questions.push_back(id);
            tp.candidates.emplace_back();
            a_index.emplace_back();
        }
        return it->second;
    };
    auto answer = [&](std::size_t q, const AnswerRef& ref) {
        const auto key = to_string(ref);
        auto [it, fresh] = a_index[q].emplace(key, tp.candidates[q].size());
        if (fresh) tp.candidates[q].push_back(key);
        return it->second;
    };
    for (const auto& p : pairs) {
        const auto q = question(p.task_id);
        tp.pairs.push_back({q, answer(q, p.chosen_ref), answer(q, p.rejected_ref)});
    }
    return tp;
}

StageResult stage_toy_align(const RunConfig& cfg) {
    Diagnostics diag;
    const auto pairs = read_pairs(require(cfg, kWow));
    const auto tp = toy_problem_from_pairs(pairs);
    ToyPolicy init;
    Rng rng(derive_seed(cfg.seed, "toy-init"));
    for (const auto& c : tp.candidates) {
        std::vector<double> row(c.size());
        for (auto& v : row) v = 0.1 * (2.0 * rng.uniform01() - 1.0);
        init.logits.push_back(std::move(row));
    }
    const auto result = train_toy(init, tp.pairs, cfg.toy);
    std::vector<Json> trace;
    for (const auto& t : result.trace) trace.push_back(to_json(t));
    write_jsonl(out_path(cfg, kTrace), trace);
    Json policy = to_json(result.policy);
    policy["questions"] = tp.questions;
    policy["candidates"] = tp.candidates;
    write_text_file(out_path(cfg, kPolicy), policy.dump(2) + "\n");

    std::size_t improved = 0;
    for (const auto& p : tp.pairs) {
        const double before = init.logp(p.question, p.chosen) - init.logp(p.question, p.rejected);
        const double after = result.policy.logp(p.question, p.chosen) - result.policy.logp(p.question, p.rejected);
        improved += after > before;
    }
    StageResult r{"toy-align", {kTrace, kPolicy}, {}};
    r.summary["pairs"] = tp.pairs.size();
    r.summary["initial_loss"] = result.trace.front().loss;
    r.summary["final_loss"] = result.trace.back().loss;
    r.summary["margin_improved_fraction"] =
        tp.pairs.empty() ? Json(nullptr) : Json(static_cast<double>(improved) / static_cast<double>(tp.pairs.size()));
    write_manifest(cfg, r, {kWow}, diag);
    return r;
}

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {"gen-tasks", "sample",     "elicit", "build-wow", "build-row",
                                                   "mix",       "eval-prefs", "metrics", "export",   "toy-align"};
    return names;
}

StageResult run_stage(const std::string& name, const RunConfig& cfg) {
    if (name == "gen-tasks") return stage_gen_tasks(cfg);
    if (name == "sample") return stage_sample(cfg);
    if (name == "elicit") return stage_elicit(cfg);
    if (name == "build-wow") return stage_build_wow(cfg);
    if (name == "build-row") return stage_build_row(cfg);
    if (name == "mix") return stage_mix(cfg);
    if (name == "eval-prefs") return stage_eval_prefs(cfg);
    if (name == "metrics") return stage_metrics(cfg);
    if (name == "export") return stage_export(cfg);
    if (name == "toy-align") return stage_toy_align(cfg);
    throw ConfigError("unknown stage '" + name + "'");
}

std::vector<StageResult> run_all(const RunConfig& cfg) {
    std::vector<StageResult> out;
    for (const char* s : {"gen-tasks", "sample", "elicit", "build-wow", "export", "metrics"}) out.push_back(run_stage(s, cfg));
    return out;
}

}  // namespace wow
