#include "wow/simulated_llm.hpp"

#include "wow/graph.hpp"
#include "wow/hash.hpp"
#include "wow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

namespace wow {

SimulationProfile simulation_profile_from_json(const Json& j) {
    SimulationProfile p;
    if (!j.is_object()) return p;
    p.seed = j.value("seed", p.seed);
    p.p_optimal = j.value("p_optimal", p.p_optimal);
    p.p_arithmetic_slip = j.value("p_arithmetic_slip", p.p_arithmetic_slip);
    p.judge_accuracy = j.value("judge_accuracy", p.judge_accuracy);
    p.position_bias = j.value("position_bias", p.position_bias);
    p.score_noise = j.value("score_noise", p.score_noise);
    return p;
}

namespace {

enum class GraphKind { shortest_path, max_flow, matching };

struct GraphQuestion {
    GraphKind kind;
    GraphSpec graph;
};

std::optional<GraphQuestion> parse_graph_question(const std::string& q) {
    static const std::regex kEdge(R"(an edge between node (\d+) and node (\d+) with (weight|capacity) (\d+))");
    static const std::regex kNodes(R"(nodes are numbered from 0 to (\d+))");
    static const std::regex kSp(R"(shortest path from node (\d+) to node (\d+))");
    static const std::regex kMf(R"(maximum flow from node (\d+) to node (\d+))");
    static const std::regex kApplicants(R"(There are (\d+) job applicants numbered from 0 to \d+, and (\d+) jobs)");
    static const std::regex kInterest(R"(Applicant (\d+) is interested in ([^\n]*))");
    static const std::regex kJob(R"(job (\d+))");

    std::smatch m;
    if (std::regex_search(q, m, kApplicants)) {
        GraphQuestion out{GraphKind::matching, {}};
        const int left = std::stoi(m[1]);
        out.graph.left_size = left;
        out.graph.n = left + std::stoi(m[2]);
        for (auto it = std::sregex_iterator(q.begin(), q.end(), kInterest); it != std::sregex_iterator(); ++it) {
            const int a = std::stoi((*it)[1]);
            const auto jobs = (*it)[2].str();
            for (auto jt = std::sregex_iterator(jobs.begin(), jobs.end(), kJob); jt != std::sregex_iterator(); ++jt)
                out.graph.edges.push_back({a, left + std::stoi((*jt)[1]), 1});
        }
        return out;
    }
    if (!std::regex_search(q, m, kNodes)) return std::nullopt;
    GraphQuestion out{GraphKind::shortest_path, {}};
    out.graph.n = std::stoi(m[1]) + 1;
    for (auto it = std::sregex_iterator(q.begin(), q.end(), kEdge); it != std::sregex_iterator(); ++it)
        out.graph.edges.push_back({std::stoi((*it)[1]), std::stoi((*it)[2]), std::stoll((*it)[4])});
    if (std::regex_search(q, m, kSp)) {
        out.kind = GraphKind::shortest_path;
    } else if (std::regex_search(q, m, kMf)) {
        out.kind = GraphKind::max_flow;
    } else {
        return std::nullopt;
    }
    out.graph.source = std::stoi(m[1]);
    out.graph.sink = std::stoi(m[2]);
    return out;
}

std::vector<int> random_simple_path(const GraphSpec& g, int from, int to, Rng& rng) {
    std::vector<std::vector<int>> adj(g.n);
    for (const auto& e : g.edges) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
    }
    std::vector<int> path{from};
    std::vector<char> on_path(g.n, 0);
    on_path[from] = 1;
    auto dfs = [&](auto&& self, int u) -> bool {
        if (u == to) return true;
        auto next = adj[u];
        rng.shuffle(std::span(next));
        for (int v : next) {
            if (on_path[v]) continue;
            on_path[v] = 1;
            path.push_back(v);
            if (self(self, v)) return true;
            path.pop_back();
            on_path[v] = 0;
        }
        return false;
    };
    dfs(dfs, from);
    return path;
}

std::string join_path(const std::vector<int>& nodes, bool with_node_word) {
    std::string out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i) out += " → ";
        if (with_node_word) out += "Node ";
        out += std::to_string(nodes[i]);
    }
    return out;
}

std::vector<double> synthetic_logprobs(Rng& rng, std::size_t tokens, double mean_nll) {
    std::vector<double> out(tokens);
    for (auto& lp : out) lp = -mean_nll * (0.5 + rng.uniform01());
    return out;
}

std::string between(const std::string& s, const std::string& open, const std::string& close) {
    const auto a = s.find(open);
    if (a == std::string::npos) return {};
    const auto start = a + open.size();
    const auto b = s.find(close, start);
    return s.substr(start, b == std::string::npos ? std::string::npos : b - start);
}

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

ChatResponse SimulatedLlm::complete(const ChatRequest& request) const {
    const auto& prompt = request.prompt();
    ChatResponse out;
    for (int k = 0; k < std::max(1, request.n); ++k) {
        const auto seed = derive_seed(profile_.seed, prompt_hash(prompt), request.slot + static_cast<std::uint64_t>(k));
        ChatChoice choice;
        if (starts_with(prompt, "You are a helpful assistant whose goal is to select")) {
            choice.text = judge_pairwise(prompt, seed);
        } else if (starts_with(prompt, "Below is an instruction from a user and")) {
            choice.text = judge_scores(prompt, seed);
        } else {
            choice.text = generate(prompt, seed);
            // Confidence tracks wrongness: less wrong answers get lower NLL.
            Rng rng(seed ^ 0x5bd1e995ULL);
            const auto quality = assess(prompt, choice.text).value_or(rng.uniform01());
            const std::size_t tokens = 8 + choice.text.size() / 4;
            choice.token_logprobs = synthetic_logprobs(rng, tokens, 0.02 + 0.3 * (1.0 - quality));
        }
        if (!request.logprobs) choice.token_logprobs.reset();
        out.choices.push_back(std::move(choice));
    }
    return out;
}

std::string SimulatedLlm::generate(const std::string& prompt, std::uint64_t seed) const {
    Rng rng(seed);
    if (const auto gq = parse_graph_question(prompt)) {
        const auto& g = gq->graph;
        switch (gq->kind) {
            case GraphKind::shortest_path: {
                const int s = *g.source;
                const int t = *g.sink;
                std::vector<int> nodes;
                if (rng.bernoulli(profile_.p_optimal)) {
                    const auto best = shortest_path(g, s, t);
                    if (best) nodes = best->nodes;
                }
                if (nodes.empty()) nodes = random_simple_path(g, s, t, rng);
                auto weight = path_weight(g, nodes).value_or(0);
                if (rng.bernoulli(profile_.p_arithmetic_slip)) weight = std::max<std::int64_t>(1, weight + (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform_int(1, 2));
                const auto w = std::to_string(weight);
                switch (rng.below(3)) {
                    case 0:
                        return "[CoT steps]. The final answer is: shortest path: " + join_path(nodes, false) +
                               "; total weight: " + w + ".";
                    case 1:
                        return "[CoT steps]. Therefore, the answer is: The shortest path from node " +
                               std::to_string(s) + " to node " + std::to_string(t) + " is " + join_path(nodes, false) +
                               ", with a total weight of " + w + ".";
                    default:
                        return "[CoT steps]. Final answer: The shortest path from node " + std::to_string(s) +
                               " to node " + std::to_string(t) + " is " + join_path(nodes, true) +
                               ", with a total weight of " + w + ".";
                }
            }
            case GraphKind::max_flow:
            case GraphKind::matching: {
                const auto truth = gq->kind == GraphKind::max_flow ? max_flow(g, *g.source, *g.sink)
                                                                    : max_bipartite_matching(g);
                auto answer = static_cast<std::int64_t>(truth);
                if (!rng.bernoulli(profile_.p_optimal)) {
                    const auto offset = rng.uniform_int(1, 3);
                    answer = rng.bernoulli(0.5) ? answer + offset : std::max<std::int64_t>(0, answer - offset);
                }
                return "[CoT steps]. The final answer is " + std::to_string(answer) + ".";
            }
        }
    }
    static const std::regex kOption(R"((^|\n)([A-Z])\. )");
    int options = 0;
    for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), kOption); it != std::sregex_iterator(); ++it)
        ++options;
    if (options > 0) {
        const char letter = static_cast<char>('A' + rng.below(static_cast<std::uint64_t>(options)));
        return "[CoT steps]. Final answer: " + std::string(1, letter) + ".";
    }
    return "[CoT steps]. The final answer is " + std::to_string(rng.below(10)) + ".";
}

std::optional<double> SimulatedLlm::assess(const std::string& question, const std::string& answer) const {
    const auto gq = parse_graph_question(question);
    if (!gq) return std::nullopt;
    const auto& g = gq->graph;
    if (gq->kind == GraphKind::shortest_path) {
        const auto extracted = extract_answer(AnswerContext{Domain::sp, 0, g.n, 0}, answer);
        if (!extracted) return 0.0;
        const auto& path = std::get<PathAnswer>(*extracted);
        const auto w = path_weight(g, path.nodes);
        if (!w || path.nodes.front() != *g.source || path.nodes.back() != *g.sink) return 0.0;
        const auto ext = enumerate_simple_paths(g, *g.source, *g.sink);
        if (!ext || ext->longest.weight == ext->shortest.weight) return 1.0;
        return static_cast<double>(ext->longest.weight - *w) /
               static_cast<double>(ext->longest.weight - ext->shortest.weight);
    }
    const auto extracted = extract_answer(AnswerContext{Domain::mf, 0, 0, 0}, answer);
    if (!extracted) return 0.0;
    const double value = std::get<ScalarAnswer>(*extracted).value;
    const double truth = gq->kind == GraphKind::max_flow ? static_cast<double>(max_flow(g, *g.source, *g.sink))
                                                         : static_cast<double>(max_bipartite_matching(g));
    if (truth <= 0) return value == truth ? 1.0 : 0.0;
    return std::clamp(1.0 - std::fabs(value - truth) / truth, 0.0, 1.0);
}

std::string SimulatedLlm::judge_pairwise(const std::string& prompt, std::uint64_t seed) const {
    Rng rng(seed);
    const auto question = between(prompt, "Instruction:\n", "\nOutput 1:\n");
    const auto first = between(prompt, "\nOutput 1:\n", "\nOutput 2:\n");
    const auto second = between(prompt, "\nOutput 2:\n", "\nPlease first briefly describe");
    const auto qa = assess(question, first);
    const auto qb = assess(question, second);
    int pick;
    if (rng.bernoulli(profile_.position_bias)) {
        pick = 1;
    } else if (qa && qb && *qa != *qb) {
        const int better = *qa > *qb ? 1 : 2;
        pick = rng.bernoulli(profile_.judge_accuracy) ? better : 3 - better;
    } else {
        pick = rng.bernoulli(0.5) ? 1 : 2;
    }
    return "Both outputs attempt the task; output " + std::to_string(pick) +
           " looks more accurate on inspection.\nPreferred output: " + std::to_string(pick) + ".";
}

std::string SimulatedLlm::judge_scores(const std::string& prompt, std::uint64_t seed) const {
    Rng rng(seed);
    const auto question = between(prompt, "Instruction:\n", "\nResponse 1:\n");
    std::string out;
    for (int k = 1;; ++k) {
        const auto open = "\nResponse " + std::to_string(k) + ":\n";
        if (prompt.find(open) == std::string::npos) break;
        auto close = "\nResponse " + std::to_string(k + 1) + ":\n";
        if (prompt.find(close) == std::string::npos) close = "\nPlease first briefly describe";
        const auto response = between(prompt, open, close);
        const auto q = assess(question, response);
        int score;
        if (q) {
            score = static_cast<int>(std::lround(5.0 * *q)) +
                    static_cast<int>(rng.uniform_int(-profile_.score_noise, profile_.score_noise));
        } else {
            score = static_cast<int>(rng.uniform_int(0, 5));
        }
        score = std::clamp(score, 0, 5);
        out += "Response " + std::to_string(k) + ": the reasoning was checked step by step.\nScore: " +
               std::to_string(score) + "\n";
    }
    return out;
}

}  // namespace wow
