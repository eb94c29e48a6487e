#include "wow/wowgen.hpp"

#include "wow/errors.hpp"
#include "wow/hash.hpp"
#include "wow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace wow {

namespace {

Json ref_json(const AnswerRef& r) { return Json{{"generator", r.generator}, {"sample_index", r.sample_index}}; }

AnswerRef ref_from_json(const Json& j) {
    return AnswerRef{j.at("generator").get<std::string>(), j.at("sample_index").get<int>()};
}

const GenerationRecord* find_wrong(const TaskAnswers& t, const AnswerRef& ref, std::optional<ProxyScore>* proxy) {
    for (std::size_t i = 0; i < t.wrong.size(); ++i)
        if (ref_of(*t.wrong[i]) == ref) {
            if (proxy) *proxy = t.wrong_proxy[i];
            return t.wrong[i];
        }
    return nullptr;
}

}  // namespace

std::string_view to_string(PairKind k) { return k == PairKind::wow ? "wow" : "row"; }

PairKind parse_pair_kind(std::string_view name) {
    if (name == "wow") return PairKind::wow;
    if (name == "row") return PairKind::row;
    throw SchemaError("unknown pair kind '" + std::string(name) + "'");
}

std::vector<TaskAnswers> classify_answers(const std::vector<TaskInstance>& tasks,
                                          const std::vector<GenerationRecord>& records, const ProxyContext& proxy,
                                          const ClassifyOptions& options, Diagnostics& diagnostics) {
    std::map<std::string, const TaskInstance*> by_id;
    for (const auto& t : tasks)
        if (!options.split || t.split == *options.split) by_id.emplace(t.id, &t);
    std::set<std::string> known;
    for (const auto& t : tasks) known.insert(t.id);

    std::map<std::string, std::vector<const GenerationRecord*>> grouped;
    for (const auto& r : records) {
        if (!known.count(r.task_id)) {
            diagnostics.warn("UnknownTask", "sample for unknown task '" + r.task_id + "' ignored");
            continue;
        }
        if (by_id.count(r.task_id)) grouped[r.task_id].push_back(&r);
    }

    std::vector<TaskAnswers> run;
    for (const auto& [id, samples] : grouped) {
        TaskAnswers t;
        t.task = by_id.at(id);
        t.samples = samples;
        std::sort(t.samples.begin(), t.samples.end(), [](const auto* a, const auto* b) {
            return std::tie(a->generator, a->sample_index) < std::tie(b->generator, b->sample_index);
        });
        std::set<std::string> seen_keys;
        for (const auto* r : t.samples) {
            diagnostics.count("classify.samples");
            if (!r->extracted) {
                diagnostics.count("classify.unparseable");
                continue;
            }
            if (is_correct(*t.task, *r->extracted, r->raw_text, proxy)) {
                diagnostics.count("classify.correct");
                t.correct.push_back(r);
                continue;
            }
            diagnostics.count("classify.wrong");
            if (options.dedup_wrong && !seen_keys.insert(normalize_key(*r->extracted)).second) {
                diagnostics.count("classify.deduplicated");
                continue;
            }
            std::optional<ProxyScore> p;
            try {
                p = proxy_for(*t.task, *r->extracted, r->raw_text, proxy);
                if (p->clamped) diagnostics.count("proxy.clamped");
                if (p->invalid_path) diagnostics.count("proxy.invalid_path");
            } catch (const ProxyError& e) {
                diagnostics.count("proxy.unavailable");
            }
            t.wrong.push_back(r);
            t.wrong_proxy.push_back(p);
        }
        run.push_back(std::move(t));
    }
    return run;
}

std::vector<PreferenceJudgement> judge_all_pairs(const std::vector<TaskAnswers>& run, Elicitor& elicitor,
                                                 Diagnostics& diagnostics) {
    std::vector<PairToJudge> pairs;
    for (const auto& t : run)
        for (int i = 0; i < static_cast<int>(t.wrong.size()); ++i)
            for (int k = i + 1; k < static_cast<int>(t.wrong.size()); ++k) pairs.push_back({&t, i, k});
    if (pairs.empty()) {
        diagnostics.warn("EmptyDataset", "no task has two or more wrong answers");
        return {};
    }
    elicitor.prepare(run, diagnostics);
    auto judgements = elicitor.judge(pairs, diagnostics);
    for (std::size_t n = 0; n < pairs.size(); ++n) {
        const auto& p = pairs[n];
        const auto& p1 = p.task->wrong_proxy[p.first];
        const auto& p2 = p.task->wrong_proxy[p.second];
        if (p1 && p2) judgements[n].silver = SilverLabel{silver_pref(*p1, *p2), *p1, *p2};
    }
    diagnostics.count("elicit.judgements", static_cast<long long>(judgements.size()));
    return judgements;
}

std::vector<WowPair> assemble_wow(const std::vector<TaskAnswers>& run,
                                  const std::vector<PreferenceJudgement>& judgements) {
    std::map<std::string, const TaskAnswers*> by_id;
    for (const auto& t : run) by_id.emplace(t.task->id, &t);
    std::vector<WowPair> out;
    for (const auto& j : judgements) {
        if (j.direction == 0) continue;
        const auto it = by_id.find(j.task_id);
        if (it == by_id.end()) throw SchemaError("judgement refers to unknown task '" + j.task_id + "'");
        const auto& t = *it->second;
        std::optional<ProxyScore> px1, px2;
        const auto* r1 = find_wrong(t, j.first, &px1);
        const auto* r2 = find_wrong(t, j.second, &px2);
        if (!r1 || !r2)
            throw SchemaError("judgement on task '" + j.task_id + "' refers to an answer that is not a wrong sample");
        const bool keep = j.direction == 1;
        const auto* chosen = keep ? r1 : r2;
        const auto* rejected = keep ? r2 : r1;
        WowPair p;
        p.task_id = j.task_id;
        p.prompt = render_question(*t.task);
        p.chosen = judge_view(*t.task, *chosen);
        p.rejected = judge_view(*t.task, *rejected);
        p.chosen_ref = ref_of(*chosen);
        p.rejected_ref = ref_of(*rejected);
        p.kind = PairKind::wow;
        p.method = std::string(to_string(j.method));
        p.evaluator = j.evaluator;
        p.margin = j.margin;
        p.judgement = j.raw;
        if (j.silver) {
            const auto& s = *j.silver;
            p.silver = keep ? PairSilver{s.direction, s.first, s.second} : PairSilver{-s.direction, s.second, s.first};
        }
        out.push_back(std::move(p));
    }
    return out;
}

WowBuild build_wow(const std::vector<TaskAnswers>& run, Elicitor& elicitor, Diagnostics& diagnostics) {
    WowBuild b;
    b.judgements = judge_all_pairs(run, elicitor, diagnostics);
    b.pairs = assemble_wow(run, b.judgements);
    return b;
}

std::vector<WowPair> build_row(const std::vector<TaskAnswers>& run, std::optional<std::size_t> cap_per_task) {
    std::vector<WowPair> out;
    for (const auto& t : run) {
        std::size_t emitted = 0;
        const auto prompt = render_question(*t.task);
        for (const auto* c : t.correct)
            for (std::size_t w = 0; w < t.wrong.size(); ++w) {
                if (cap_per_task && emitted >= *cap_per_task) break;
                WowPair p;
                p.task_id = t.task->id;
                p.prompt = prompt;
                p.chosen = judge_view(*t.task, *c);
                p.rejected = judge_view(*t.task, *t.wrong[w]);
                p.chosen_ref = ref_of(*c);
                p.rejected_ref = ref_of(*t.wrong[w]);
                p.kind = PairKind::row;
                p.method = "ground_truth";
                p.evaluator = "ground_truth";
                out.push_back(std::move(p));
                ++emitted;
            }
    }
    return out;
}

std::vector<WowPair> sample_pairs(const std::vector<WowPair>& pairs, std::size_t n, std::uint64_t seed,
                                  bool stratified) {
    if (n > pairs.size())
        throw InsufficientPairs("requested " + std::to_string(n) + " pairs but only " + std::to_string(pairs.size()) +
                                " are available");
    Rng rng(derive_seed(seed, stratified ? "sample-stratified" : "sample"));
    if (!stratified) {
        std::vector<std::size_t> idx(pairs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(std::span<std::size_t>(idx));
        std::vector<WowPair> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(pairs[idx[i]]);
        return out;
    }
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < pairs.size(); ++i) groups[pairs[i].task_id].push_back(i);
    std::vector<std::vector<std::size_t>> queues;
    for (auto& [id, g] : groups) {
        rng.shuffle(std::span<std::size_t>(g));
        queues.push_back(std::move(g));
    }
    rng.shuffle(std::span<std::vector<std::size_t>>(queues));
    std::vector<WowPair> out;
    out.reserve(n);
    for (std::size_t round = 0; out.size() < n; ++round)
        for (const auto& q : queues) {
            if (out.size() == n) break;
            if (round < q.size()) out.push_back(pairs[q[round]]);
        }
    return out;
}

std::vector<WowPair> mix_datasets(const std::vector<WowPair>& wow, const std::vector<WowPair>& row, double ratio,
                                  std::size_t target_size, std::uint64_t seed) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw ConfigError("mix ratio must be in [0, 1]");
    const auto n_wow = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(target_size)));
    const auto n_row = target_size - n_wow;
    if (n_wow > wow.size() || n_row > row.size())
        throw RatioUnsatisfiable("need " + std::to_string(n_wow) + " wrong-over-wrong and " + std::to_string(n_row) +
                                 " right-over-wrong pairs; have " + std::to_string(wow.size()) + " and " +
                                 std::to_string(row.size()));
    auto out = sample_pairs(wow, n_wow, derive_seed(seed, "mix-wow"));
    const auto r = sample_pairs(row, n_row, derive_seed(seed, "mix-row"));
    out.insert(out.end(), r.begin(), r.end());
    Rng rng(derive_seed(seed, "mix-order"));
    rng.shuffle(std::span<WowPair>(out));
    return out;
}

// --- serialization ------------------------------------------------------------------

namespace {

Json silver_json(const PairSilver& s) {
    return Json{{"direction", s.direction}, {"chosen", to_json(s.chosen)}, {"rejected", to_json(s.rejected)}};
}

PairSilver silver_from_json(const Json& j) {
    return PairSilver{j.at("direction").get<int>(), proxy_score_from_json(j.at("chosen")),
                      proxy_score_from_json(j.at("rejected"))};
}

Json meta_json(const WowPair& p) {
    Json meta;
    meta["task_id"] = p.task_id;
    meta["method"] = p.method;
    meta["evaluator"] = p.evaluator;
    meta["margin"] = p.margin ? Json(*p.margin) : Json(nullptr);
    if (p.silver) meta["silver"] = silver_json(*p.silver);
    meta["pair_kind"] = to_string(p.kind);
    meta["chosen_ref"] = ref_json(p.chosen_ref);
    meta["rejected_ref"] = ref_json(p.rejected_ref);
    meta["judgement"] = p.judgement;
    return meta;
}

WowPair pair_from_parts(const Json& j, const Json& meta) {
    WowPair p;
    p.prompt = j.at("prompt").get<std::string>();
    p.chosen = j.at("chosen").get<std::string>();
    p.rejected = j.at("rejected").get<std::string>();
    p.task_id = meta.at("task_id").get<std::string>();
    p.method = meta.at("method").get<std::string>();
    p.evaluator = meta.at("evaluator").get<std::string>();
    if (!meta.at("margin").is_null()) p.margin = meta.at("margin").get<double>();
    if (meta.contains("silver")) p.silver = silver_from_json(meta.at("silver"));
    p.kind = parse_pair_kind(meta.at("pair_kind").get<std::string>());
    p.chosen_ref = ref_from_json(meta.at("chosen_ref"));
    p.rejected_ref = ref_from_json(meta.at("rejected_ref"));
    p.judgement = meta.at("judgement");
    return p;
}

}  // namespace

Json export_record(const WowPair& p) {
    return Json{{"prompt", p.prompt}, {"chosen", p.chosen}, {"rejected", p.rejected}, {"meta", meta_json(p)}};
}

WowPair pair_from_export_record(const Json& j) {
    try {
        return pair_from_parts(j, j.at("meta"));
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad preference record: ") + e.what());
    }
}

Json to_json(const WowPair& p) { return export_record(p); }

WowPair wow_pair_from_json(const Json& j) { return pair_from_export_record(j); }

std::vector<WowPair> read_pairs(const std::filesystem::path& path) {
    std::vector<WowPair> out;
    std::size_t line = 0;
    for (const auto& j : read_jsonl(path)) {
        ++line;
        try {
            out.push_back(wow_pair_from_json(j));
        } catch (const SchemaError& e) {
            throw IngestError(line, e.what());
        }
    }
    return out;
}

void write_pairs(const std::filesystem::path& path, const std::vector<WowPair>& pairs) {
    std::vector<Json> rows;
    rows.reserve(pairs.size());
    for (const auto& p : pairs) rows.push_back(to_json(p));
    write_jsonl(path, rows);
}

Json to_json(const DatasetManifest& m) {
    return Json{{"format", m.format},
                {"export_file", m.export_file},
                {"export_sha256", m.export_sha256},
                {"pair_count", m.pair_count},
                {"source_corpus_sha256", m.source_corpus_sha256},
                {"generators", m.generators},
                {"evaluator", m.evaluator},
                {"method", m.method},
                {"margin", m.margin},
                {"seed", m.seed},
                {"created_by", m.created_by}};
}

DatasetManifest manifest_from_json(const Json& j) {
    try {
        DatasetManifest m;
        m.format = j.at("format").get<std::string>();
        m.export_file = j.at("export_file").get<std::string>();
        m.export_sha256 = j.at("export_sha256").get<std::string>();
        m.pair_count = j.at("pair_count").get<std::size_t>();
        m.source_corpus_sha256 = j.at("source_corpus_sha256").get<std::string>();
        m.generators = j.at("generators").get<std::vector<std::string>>();
        m.evaluator = j.at("evaluator").get<std::string>();
        m.method = j.at("method").get<std::string>();
        m.margin = j.at("margin").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.created_by = j.value("created_by", Json::object());
        return m;
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad dataset manifest: ") + e.what());
    }
}

std::filesystem::path manifest_path(const std::filesystem::path& export_path) {
    auto p = export_path;
    p.replace_extension(".manifest.json");
    return p;
}

DatasetManifest export_preferences(const std::vector<WowPair>& pairs, const std::filesystem::path& path,
                                   DatasetManifest manifest) {
    if (pairs.empty()) throw EmptyInput("refusing to export an empty preference dataset");
    std::vector<Json> rows;
    rows.reserve(pairs.size());
    for (const auto& p : pairs) rows.push_back(export_record(p));
    const auto body = to_jsonl(rows);
    write_text_file(path, body);
    manifest.export_file = path.filename().string();
    manifest.export_sha256 = sha256_hex(body);
    manifest.pair_count = pairs.size();
    write_text_file(manifest_path(path), to_json(manifest).dump(2) + "\n");
    return manifest;
}

std::vector<WowPair> import_preferences(const std::filesystem::path& path) {
    const auto body = read_text_file(path);
    const auto mpath = manifest_path(path);
    if (std::filesystem::exists(mpath)) {
        const auto manifest = manifest_from_json(Json::parse(read_text_file(mpath)));
        if (manifest.export_sha256 != sha256_hex(body))
            throw SchemaError("export hash does not match its manifest: " + mpath.string());
    }
    std::vector<WowPair> out;
    std::size_t line = 0;
    for (const auto& j : parse_jsonl(body)) {
        ++line;
        try {
            out.push_back(pair_from_export_record(j));
        } catch (const SchemaError& e) {
            throw IngestError(line, e.what());
        }
    }
    return out;
}

}  // namespace wow
