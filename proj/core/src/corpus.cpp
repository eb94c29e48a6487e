#include "wow/corpus.hpp"

#include "wow/errors.hpp"
#include "wow/rng.hpp"
#include "wow/templates.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace wow {

namespace {

constexpr std::string_view kDomainNames[] = {"kc", "sp", "mf", "matching", "bg", "com2", "generic"};
constexpr std::string_view kSplitNames[] = {"train", "val", "test", "unassigned"};

bool requires_options(Domain d) { return d == Domain::kc || d == Domain::com2; }
bool forbids_options(Domain d) {
    return d == Domain::sp || d == Domain::mf || d == Domain::matching || d == Domain::bg;
}
bool has_graph(Domain d) { return d == Domain::sp || d == Domain::mf || d == Domain::matching; }

Json number_json(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9.0e15)
        return Json(static_cast<std::int64_t>(v));
    return Json(v);
}

template <class T>
T required(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw SchemaError(std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace

std::string_view to_string(Domain d) { return kDomainNames[static_cast<int>(d)]; }
std::string_view to_string(Split s) { return kSplitNames[static_cast<int>(s)]; }

Domain parse_domain(std::string_view name) {
    for (int i = 0; i < 7; ++i)
        if (kDomainNames[i] == name) return static_cast<Domain>(i);
    throw SchemaError("unknown domain '" + std::string(name) + "'");
}

Split parse_split(std::string_view name) {
    for (int i = 0; i < 4; ++i)
        if (kSplitNames[i] == name) return static_cast<Split>(i);
    throw SchemaError("unknown split '" + std::string(name) + "'");
}

std::string option_letter(int index) {
    if (index < 26) return std::string(1, static_cast<char>('A' + index));
    return "#" + std::to_string(index);
}

void TaskInstance::validate() const {
    if (id.empty()) throw SchemaError("task id must be non-empty");
    if (requires_options(domain) && options.empty())
        throw SchemaError(std::string(to_string(domain)) + " tasks are multiple-choice and need options");
    if (forbids_options(domain) && !options.empty())
        throw SchemaError(std::string(to_string(domain)) + " tasks must not carry options");
    if (has_graph(domain) != graph.has_value())
        throw SchemaError(has_graph(domain) ? "graph tasks need a GraphSpec in aux"
                                            : "only sp/mf/matching tasks carry a GraphSpec");
    if (!option_blanks.empty() && option_blanks.size() != options.size())
        throw SchemaError("option_blanks must align with options");
    if (graph) graph->validate();

    const auto option_in_range = [&](int idx) { return idx >= 0 && idx < static_cast<int>(options.size()); };

    switch (domain) {
        case Domain::sp: {
            const auto* pv = std::get_if<PathValue>(&ground_truth);
            if (!pv) throw SchemaError("sp tasks need a path ground truth");
            if (!graph->source || !graph->sink) throw SchemaError("sp graph needs source and sink");
            if (!is_connected(*graph)) throw SchemaError("sp graph must be connected");
            if (pv->w_gt > pv->w_worst) throw SchemaError("w_gt must not exceed w_worst");
            const auto w = path_weight(*graph, pv->witness);
            if (!w || pv->witness.front() != *graph->source || pv->witness.back() != *graph->sink)
                throw SchemaError("witness is not a valid source-to-sink path");
            if (*w != pv->w_gt) throw SchemaError("witness weight differs from w_gt");
            break;
        }
        case Domain::mf:
            if (!std::holds_alternative<ScalarValue>(ground_truth)) throw SchemaError("mf tasks need a scalar ground truth");
            if (!graph->source || !graph->sink) throw SchemaError("mf graph needs source and sink");
            if (*graph->source == *graph->sink) throw SchemaError("mf source must differ from sink");
            break;
        case Domain::matching:
            if (!std::holds_alternative<ScalarValue>(ground_truth))
                throw SchemaError("matching tasks need a scalar ground truth");
            if (!graph->left_size) throw SchemaError("matching graph needs left_size");
            break;
        case Domain::kc: {
            const auto* bf = std::get_if<BlanksFill>(&ground_truth);
            if (!bf) throw SchemaError("kc tasks need a blanks ground truth");
            if (!option_in_range(bf->correct_option)) throw SchemaError("correct_option out of range");
            break;
        }
        case Domain::bg:
        case Domain::com2: {
            const auto* ex = std::get_if<ExternalScored>(&ground_truth);
            if (!ex) throw SchemaError("bg/com2 tasks need an external ground truth");
            if (ex->correct_option && !option_in_range(*ex->correct_option))
                throw SchemaError("correct_option out of range");
            break;
        }
        case Domain::generic:
            if (std::holds_alternative<PathValue>(ground_truth))
                throw SchemaError("generic tasks cannot carry a path ground truth");
            if (const auto* bf = std::get_if<BlanksFill>(&ground_truth);
                bf && is_multiple_choice() && !option_in_range(bf->correct_option))
                throw SchemaError("correct_option out of range");
            break;
    }
}

// --- JSON -------------------------------------------------------------------

Json to_json(const GraphSpec& g) {
    Json j;
    j["n"] = g.n;
    Json edges = Json::array();
    for (const auto& e : g.edges) edges.push_back(Json::array({e.u, e.v, e.w}));
    j["edges"] = std::move(edges);
    if (g.source) j["source"] = *g.source;
    if (g.sink) j["sink"] = *g.sink;
    if (g.left_size) j["left_size"] = *g.left_size;
    return j;
}

GraphSpec graph_from_json(const Json& j) {
    GraphSpec g;
    g.n = required<int>(j, "n");
    const auto& edges = j.contains("edges") ? j.at("edges") : throw SchemaError("missing field 'edges'");
    if (!edges.is_array()) throw SchemaError("'edges' must be an array");
    for (const auto& e : edges) {
        if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
            !e[2].is_number_integer())
            throw SchemaError("each edge must be [u, v, w] with integer entries");
        g.edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<std::int64_t>()});
    }
    if (j.contains("source")) g.source = required<int>(j, "source");
    if (j.contains("sink")) g.sink = required<int>(j, "sink");
    if (j.contains("left_size")) g.left_size = required<int>(j, "left_size");
    return g;
}

Json to_json(const GroundTruth& gt) {
    Json j;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BlanksFill>) {
                j["type"] = "blanks";
                j["blanks"] = v.blanks;
                j["correct_option"] = v.correct_option;
            } else if constexpr (std::is_same_v<T, PathValue>) {
                j["type"] = "path";
                j["w_gt"] = v.w_gt;
                j["w_worst"] = v.w_worst;
                j["witness"] = v.witness;
            } else if constexpr (std::is_same_v<T, ScalarValue>) {
                j["type"] = "scalar";
                j["value"] = number_json(v.value);
            } else {
                j["type"] = "external";
                if (v.correct_option) j["correct_option"] = *v.correct_option;
            }
        },
        gt);
    return j;
}

GroundTruth ground_truth_from_json(const Json& j) {
    const auto type = required<std::string>(j, "type");
    if (type == "blanks") {
        BlanksFill b;
        b.blanks = required<std::vector<std::string>>(j, "blanks");
        b.correct_option = j.contains("correct_option") ? required<int>(j, "correct_option") : -1;
        return b;
    }
    if (type == "path") {
        return PathValue{required<std::int64_t>(j, "w_gt"), required<std::int64_t>(j, "w_worst"),
                         required<std::vector<int>>(j, "witness")};
    }
    if (type == "scalar") return ScalarValue{required<double>(j, "value")};
    if (type == "external") {
        ExternalScored e;
        if (j.contains("correct_option")) e.correct_option = required<int>(j, "correct_option");
        return e;
    }
    throw SchemaError("unknown ground_truth type '" + type + "'");
}

Json to_json(const TaskInstance& task) {
    Json j;
    j["id"] = task.id;
    j["domain"] = to_string(task.domain);
    j["prompt"] = task.prompt;
    if (task.is_multiple_choice()) j["options"] = task.options;
    j["ground_truth"] = to_json(task.ground_truth);
    if (task.graph) {
        j["aux"] = to_json(*task.graph);
    } else if (!task.option_blanks.empty()) {
        j["aux"] = Json{{"option_blanks", task.option_blanks}};
    }
    j["split"] = to_string(task.split);
    return j;
}

TaskInstance task_from_json(const Json& j) {
    if (!j.is_object()) throw SchemaError("record must be a JSON object");
    TaskInstance t;
    t.id = required<std::string>(j, "id");
    t.domain = parse_domain(required<std::string>(j, "domain"));
    t.prompt = required<std::string>(j, "prompt");
    if (j.contains("options")) t.options = required<std::vector<std::string>>(j, "options");
    if (!j.contains("ground_truth")) throw SchemaError("missing field 'ground_truth'");
    t.ground_truth = ground_truth_from_json(j.at("ground_truth"));
    if (j.contains("aux") && !j.at("aux").is_null()) {
        const auto& aux = j.at("aux");
        if (has_graph(t.domain)) {
            t.graph = graph_from_json(aux);
        } else if (aux.contains("option_blanks")) {
            t.option_blanks = required<std::vector<std::vector<std::string>>>(aux, "option_blanks");
        }
    }
    if (j.contains("split")) t.split = parse_split(required<std::string>(j, "split"));
    t.validate();
    return t;
}

std::string render_question(const TaskInstance& task) {
    if (!task.is_multiple_choice()) return task.prompt;
    std::string options;
    for (std::size_t i = 0; i < task.options.size(); ++i) {
        if (i) options.push_back('\n');
        options += option_letter(static_cast<int>(i)) + ". " + task.options[i];
    }
    return render(TemplateId::multiple_choice, {{"stem", task.prompt}, {"options", options}});
}

// --- generation -------------------------------------------------------------

namespace {

std::string edge_lines(const GraphSpec& g, std::string_view label) {
    std::string out;
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const auto& e = g.edges[i];
        out += "an edge between node " + std::to_string(e.u) + " and node " + std::to_string(e.v) + " with " +
               std::string(label) + " " + std::to_string(e.w);
        out += (i + 1 == g.edges.size()) ? "." : ",\n";
    }
    return out;
}

GraphSpec random_graph(Rng& rng, int n, double density, int weight_max) {
    GraphSpec g;
    g.n = n;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (rng.bernoulli(density))
                g.edges.push_back({u, v, rng.uniform_int(1, weight_max)});
    return g;
}

std::pair<int, int> random_endpoints(Rng& rng, int n) {
    const int a = static_cast<int>(rng.below(n));
    int b = static_cast<int>(rng.below(n - 1));
    if (b >= a) ++b;
    return {a, b};
}

void require_range(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

TaskInstance make_shortest_path_task(std::string id, GraphSpec graph) {
    graph.validate();
    if (!graph.source || !graph.sink) throw SchemaError("shortest-path graph needs source and sink");
    const auto best = shortest_path(graph, *graph.source, *graph.sink);
    if (!best) throw GenerationFailed("sink unreachable from source");
    const auto extremes = enumerate_simple_paths(graph, *graph.source, *graph.sink);

    TaskInstance t;
    t.id = std::move(id);
    t.domain = Domain::sp;
    t.prompt = render(TemplateId::shortest_path, {{"max_node", std::to_string(graph.n - 1)},
                                                  {"edges", edge_lines(graph, "weight")},
                                                  {"source", std::to_string(*graph.source)},
                                                  {"target", std::to_string(*graph.sink)}});
    t.ground_truth = PathValue{best->weight, extremes->longest.weight, best->nodes};
    t.graph = std::move(graph);
    return t;
}

TaskInstance make_maxflow_task(std::string id, GraphSpec graph) {
    graph.validate();
    if (!graph.source || !graph.sink) throw SchemaError("flow graph needs source and sink");
    TaskInstance t;
    t.id = std::move(id);
    t.domain = Domain::mf;
    t.prompt = render(TemplateId::max_flow, {{"max_node", std::to_string(graph.n - 1)},
                                             {"edges", edge_lines(graph, "capacity")},
                                             {"source", std::to_string(*graph.source)},
                                             {"sink", std::to_string(*graph.sink)}});
    t.ground_truth = ScalarValue{static_cast<double>(max_flow(graph, *graph.source, *graph.sink))};
    t.graph = std::move(graph);
    return t;
}

TaskInstance make_matching_task(std::string id, GraphSpec graph) {
    graph.validate();
    if (!graph.left_size) throw SchemaError("matching graph needs left_size");
    const int left = *graph.left_size;
    const int right = graph.n - left;
    std::vector<std::vector<int>> interests(left);
    for (const auto& e : graph.edges) interests[e.u].push_back(e.v - left);
    std::string lines;
    for (int a = 0; a < left; ++a) {
        if (a) lines.push_back('\n');
        lines += "Applicant " + std::to_string(a) + " is interested in ";
        if (interests[a].empty()) {
            lines += "no jobs.";
            continue;
        }
        for (std::size_t k = 0; k < interests[a].size(); ++k) {
            if (k) lines += ", ";
            lines += "job " + std::to_string(interests[a][k]);
        }
        lines += ".";
    }
    TaskInstance t;
    t.id = std::move(id);
    t.domain = Domain::matching;
    t.prompt = render(TemplateId::matching, {{"left_count", std::to_string(left)},
                                             {"left_max", std::to_string(left - 1)},
                                             {"right_count", std::to_string(right)},
                                             {"right_max", std::to_string(right - 1)},
                                             {"interests", lines}});
    t.ground_truth = ScalarValue{static_cast<double>(max_bipartite_matching(graph))};
    t.graph = std::move(graph);
    return t;
}

TaskInstance generate_shortest_path_task(const ShortestPathParams& p) {
    require_range(p.n >= 4 && p.n <= 10, "shortest-path tasks need 4 <= n <= 10");
    require_range(p.edge_density > 0.0 && p.edge_density <= 1.0, "edge_density must lie in (0, 1]");
    require_range(p.weight_max >= 1, "weight_max must be >= 1");
    Rng rng(derive_seed(p.seed, "sp", static_cast<std::uint64_t>(p.n)));
    for (int attempt = 0; attempt < p.max_retries; ++attempt) {
        auto g = random_graph(rng, p.n, p.edge_density, p.weight_max);
        if (!is_connected(g)) continue;
        const auto [s, t] = random_endpoints(rng, p.n);
        g.source = s;
        g.sink = t;
        auto task = make_shortest_path_task("sp-n" + std::to_string(p.n) + "-s" + std::to_string(p.seed), g);
        const auto& pv = std::get<PathValue>(task.ground_truth);
        // The wrongness proxy is undefined when every path ties.
        if (pv.w_worst == pv.w_gt) continue;
        return task;
    }
    throw GenerationFailed("no connected, non-degenerate graph within " + std::to_string(p.max_retries) +
                           " attempts");
}

TaskInstance generate_maxflow_task(const MaxFlowParams& p) {
    require_range(p.n >= 2 && p.n <= 10, "max-flow tasks need 2 <= n <= 10");
    require_range(p.edge_density > 0.0 && p.edge_density <= 1.0, "edge_density must lie in (0, 1]");
    require_range(p.capacity_max >= 1, "capacity_max must be >= 1");
    Rng rng(derive_seed(p.seed, "mf", static_cast<std::uint64_t>(p.n)));
    for (int attempt = 0; attempt < p.max_retries; ++attempt) {
        auto g = random_graph(rng, p.n, p.edge_density, p.capacity_max);
        const auto [s, t] = random_endpoints(rng, p.n);
        g.source = s;
        g.sink = t;
        if (max_flow(g, s, t) == 0) continue;
        return make_maxflow_task("mf-n" + std::to_string(p.n) + "-s" + std::to_string(p.seed), std::move(g));
    }
    throw GenerationFailed("only zero-flow networks within " + std::to_string(p.max_retries) + " attempts");
}

TaskInstance generate_matching_task(const MatchingParams& p) {
    require_range(p.left >= 1 && p.left <= 8 && p.right >= 1 && p.right <= 8,
                  "matching tasks need 1 <= left, right <= 8");
    require_range(p.edge_density > 0.0 && p.edge_density <= 1.0, "edge_density must lie in (0, 1]");
    Rng rng(derive_seed(p.seed, "matching", static_cast<std::uint64_t>(p.left * 16 + p.right)));
    for (int attempt = 0; attempt < p.max_retries; ++attempt) {
        GraphSpec g;
        g.n = p.left + p.right;
        g.left_size = p.left;
        for (int a = 0; a < p.left; ++a)
            for (int b = 0; b < p.right; ++b)
                if (rng.bernoulli(p.edge_density)) g.edges.push_back({a, p.left + b, 1});
        if (g.edges.empty()) continue;
        return make_matching_task("matching-" + std::to_string(p.left) + "x" + std::to_string(p.right) + "-s" +
                                      std::to_string(p.seed),
                                  std::move(g));
    }
    throw GenerationFailed("only empty bipartite graphs within " + std::to_string(p.max_retries) + " attempts");
}

// --- ingestion --------------------------------------------------------------

namespace {

struct ParsedLine {
    std::size_t line;
    Json record;
};

std::vector<ParsedLine> split_lines(const std::string& text, std::vector<IngestIssue>* issues) {
    std::vector<ParsedLine> out;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        const auto line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        ++lineno;
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            try {
                out.push_back({lineno, Json::parse(line)});
            } catch (const Json::parse_error& e) {
                if (!issues) throw IngestError(lineno, "malformed JSON");
                issues->push_back({lineno, "malformed JSON"});
            }
        }
        if (end == std::string::npos) break;
        pos = end + 1;
    }
    return out;
}

std::vector<TaskInstance> ingest_impl(const std::filesystem::path& path, std::optional<Domain> domain,
                                      std::vector<IngestIssue>* issues) {
    const auto text = read_text_file(path);
    std::vector<TaskInstance> out;
    std::set<std::string> ids;
    for (auto& [line, record] : split_lines(text, issues)) {
        try {
            if (domain) {
                if (!record.is_object()) throw SchemaError("record must be a JSON object");
                if (!record.contains("domain")) {
                    record["domain"] = to_string(*domain);
                } else if (record["domain"] != to_string(*domain)) {
                    throw SchemaError("domain '" + record["domain"].dump() + "' does not match requested '" +
                                      std::string(to_string(*domain)) + "'");
                }
            }
            auto task = task_from_json(record);
            if (!ids.insert(task.id).second) throw SchemaError("duplicate id '" + task.id + "'");
            out.push_back(std::move(task));
        } catch (const SchemaError& e) {
            if (!issues) throw IngestError(line, e.what());
            issues->push_back({line, e.what()});
        }
    }
    return out;
}

}  // namespace

std::vector<IngestIssue> validate_task_file(const std::filesystem::path& path) {
    std::vector<IngestIssue> issues;
    ingest_impl(path, std::nullopt, &issues);
    return issues;
}

std::vector<TaskInstance> ingest_tasks(const std::filesystem::path& path, std::optional<Domain> domain) {
    return ingest_impl(path, domain, nullptr);
}

std::vector<TaskInstance> read_tasks(const std::filesystem::path& path) { return ingest_tasks(path, std::nullopt); }

void write_tasks(const std::filesystem::path& path, const std::vector<TaskInstance>& tasks) {
    std::vector<Json> records;
    records.reserve(tasks.size());
    for (const auto& t : tasks) records.push_back(to_json(t));
    write_jsonl(path, records);
}

// --- splits -----------------------------------------------------------------

void SplitPlan::validate() const {
    if (train < 0 || val < 0 || test < 0) throw ConfigError("split ratios must be non-negative");
    if (std::fabs(train + val + test - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
}

SplitCounts split_counts(std::size_t n, const SplitPlan& plan) {
    // The epsilon absorbs representation error, e.g. 10 * 0.1.
    const auto floor_of = [n](double ratio) {
        return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
    };
    SplitCounts c;
    c.val = floor_of(plan.val);
    c.test = floor_of(plan.test);
    c.train = n - c.val - c.test;
    return c;
}

std::vector<TaskInstance> assign_splits(std::vector<TaskInstance> tasks, const SplitPlan& plan) {
    plan.validate();
    std::map<Domain, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].split != Split::unassigned)
            throw ConfigError("task '" + tasks[i].id + "' already has a split");
        groups[tasks[i].domain].push_back(i);
    }
    for (auto& [domain, indices] : groups) {
        Rng rng(derive_seed(plan.seed, to_string(domain)));
        rng.shuffle(std::span(indices));
        const auto counts = split_counts(indices.size(), plan);
        for (std::size_t k = 0; k < indices.size(); ++k) {
            auto& split = tasks[indices[k]].split;
            if (k < counts.val) split = Split::val;
            else if (k < counts.val + counts.test) split = Split::test;
            else split = Split::train;
        }
    }
    return tasks;
}

OptionShuffle shuffle_options(const TaskInstance& task, std::uint64_t seed) {
    if (!task.is_multiple_choice()) throw NotApplicable("task '" + task.id + "' is not multiple-choice");
    const int count = static_cast<int>(task.options.size());
    OptionShuffle out{task, std::vector<int>(count)};
    for (int i = 0; i < count; ++i) out.order[i] = i;
    if (seed != kIdentityShuffleSeed) {
        Rng rng(seed);
        rng.shuffle(std::span(out.order));
    }
    std::vector<int> new_position(count);
    for (int pos = 0; pos < count; ++pos) {
        out.task.options[pos] = task.options[out.order[pos]];
        if (!task.option_blanks.empty()) out.task.option_blanks[pos] = task.option_blanks[out.order[pos]];
        new_position[out.order[pos]] = pos;
    }
    std::visit(
        [&](auto& gt) {
            using T = std::decay_t<decltype(gt)>;
            if constexpr (std::is_same_v<T, BlanksFill>) {
                if (gt.correct_option >= 0) gt.correct_option = new_position[gt.correct_option];
            } else if constexpr (std::is_same_v<T, ExternalScored>) {
                if (gt.correct_option) gt.correct_option = new_position[*gt.correct_option];
            }
        },
        out.task.ground_truth);
    return out;
}

}  // namespace wow
