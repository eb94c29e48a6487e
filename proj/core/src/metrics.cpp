#include "wow/metrics.hpp"

#include "wow/errors.hpp"
#include "wow/parsing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wow {

namespace {

void finish(WowAccuracyReport::Entry& e) {
    e.accuracy = e.denominator ? static_cast<double>(e.numerator) / static_cast<double>(e.denominator) : 0.0;
}

Json entry_json(const WowAccuracyReport::Entry& e) {
    return Json{{"numerator", e.numerator}, {"denominator", e.denominator}, {"acc_wow", e.accuracy}};
}

}  // namespace

WowAccuracyReport acc_wow(std::span<const PreferenceJudgement> judgements) {
    WowAccuracyReport r;
    for (const auto& j : judgements) {
        if (!j.silver) {
            ++r.unlabeled;
            continue;
        }
        if (!j.filtered.empty()) {
            ++r.filtered;
            continue;
        }
        ++r.overall.denominator;
        if (j.direction == j.silver->direction) ++r.overall.numerator;
    }
    if (r.overall.denominator == 0) throw EmptyInput("no labeled, unfiltered judgements to score");
    finish(r.overall);
    return r;
}

WowAccuracyReport acc_wow(const std::map<std::string, std::vector<PreferenceJudgement>>& datasets) {
    WowAccuracyReport r;
    for (const auto& [name, js] : datasets) {
        WowAccuracyReport one;
        try {
            one = acc_wow(std::span<const PreferenceJudgement>(js));
        } catch (const EmptyInput&) {
            for (const auto& j : js) (j.silver ? r.filtered : r.unlabeled) += 1;
            continue;
        }
        r.per_dataset[name] = one.overall;
        r.overall.numerator += one.overall.numerator;
        r.overall.denominator += one.overall.denominator;
        r.filtered += one.filtered;
        r.unlabeled += one.unlabeled;
    }
    if (r.overall.denominator == 0) throw EmptyInput("no labeled, unfiltered judgements to score");
    finish(r.overall);
    return r;
}

WowAccuracyReport acc_wow_pairs(std::span<const WowPair> pairs) {
    WowAccuracyReport r;
    for (const auto& p : pairs) {
        if (!p.silver) {
            ++r.unlabeled;
            continue;
        }
        ++r.overall.denominator;
        if (p.silver->direction == 1) ++r.overall.numerator;
    }
    if (r.overall.denominator == 0) throw EmptyInput("no labeled pairs to score");
    finish(r.overall);
    return r;
}

WrongnessReport wrongness(std::span<const AnswerOutcome> answers) {
    if (answers.empty()) throw EmptyInput("wrongness needs at least one answer");
    WrongnessReport r;
    double sum = 0.0;
    for (const auto& a : answers) {
        ++r.n;
        if (a.correct) {
            ++r.n_correct;
            continue;
        }
        if (!a.proxy) throw MetricError("wrong answer without a proxy score");
        ++r.n_wrong;
        sum += *a.proxy;
    }
    r.accuracy = static_cast<double>(r.n_correct) / static_cast<double>(r.n);
    if (r.n_wrong) r.p_wrong = sum / static_cast<double>(r.n_wrong);
    return r;
}

double confidence(double nll_value) {
    if (!(nll_value >= 0.0)) throw MetricError("NLL must be non-negative");
    return std::exp(-nll_value);
}

std::size_t ece_bin(double c) {
    const auto b = static_cast<std::size_t>(std::floor(c * 10.0));
    return std::min<std::size_t>(b, 9);
}

EceReport ece(std::span<const double> confidences, std::span<const bool> correct) {
    if (confidences.size() != correct.size()) throw MetricError("confidences and correctness differ in length");
    if (confidences.empty()) throw EmptyInput("ECE needs at least one prediction");
    EceReport r;
    r.n = confidences.size();
    std::array<double, 10> conf_sum{};
    std::array<std::size_t, 10> hits{};
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        const double c = confidences[i];
        if (!(c >= 0.0 && c <= 1.0)) throw MetricError("confidence outside [0, 1]");
        const auto b = ece_bin(c);
        ++r.bins[b].count;
        conf_sum[b] += c;
        if (correct[i]) ++hits[b];
    }
    for (std::size_t b = 0; b < 10; ++b) {
        auto& bin = r.bins[b];
        if (!bin.count) continue;
        bin.mean_confidence = conf_sum[b] / static_cast<double>(bin.count);
        bin.accuracy = static_cast<double>(hits[b]) / static_cast<double>(bin.count);
        r.ece += static_cast<double>(bin.count) / static_cast<double>(r.n) * std::fabs(bin.accuracy - bin.mean_confidence);
    }
    return r;
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw MetricError("pearson inputs differ in length");
    if (xs.size() < 2) throw MetricError("pearson needs at least two points");
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::map<double, WowAccuracyReport::Entry> accuracy_by_proxy_gap(std::span<const PreferenceJudgement> judgements,
                                                                  double width) {
    std::map<double, WowAccuracyReport::Entry> out;
    for (const auto& j : judgements) {
        if (!j.silver || !j.filtered.empty()) continue;
        const double gap = std::fabs(j.silver->first.value - j.silver->second.value);
        const double lo = std::floor(gap / width + 1e-9) * width;
        auto& e = out[std::round(lo * 1e6) / 1e6];
        ++e.denominator;
        if (j.direction == j.silver->direction) ++e.numerator;
    }
    for (auto& [k, e] : out) finish(e);
    return out;
}

Json to_json(const WowAccuracyReport& r) {
    Json j = entry_json(r.overall);
    j["filtered"] = r.filtered;
    j["unlabeled"] = r.unlabeled;
    if (!r.per_dataset.empty()) {
        Json per = Json::object();
        for (const auto& [name, e] : r.per_dataset) per[name] = entry_json(e);
        j["per_dataset"] = per;
    }
    return j;
}

Json to_json(const WrongnessReport& r) {
    return Json{{"n", r.n},
                {"n_correct", r.n_correct},
                {"n_wrong", r.n_wrong},
                {"acc", r.accuracy},
                {"p_wrong", r.p_wrong ? Json(*r.p_wrong) : Json(nullptr)}};
}

Json to_json(const EceReport& r) {
    Json bins = Json::array();
    for (std::size_t b = 0; b < 10; ++b)
        bins.push_back(Json{{"lower", b / 10.0},
                            {"upper", (b + 1) / 10.0},
                            {"count", r.bins[b].count},
                            {"mean_confidence", r.bins[b].mean_confidence},
                            {"accuracy", r.bins[b].accuracy}});
    return Json{{"n", r.n}, {"ece", r.ece}, {"bins", bins}};
}

std::string format_table(const std::vector<Json>& rows) {
    if (rows.empty()) return "";
    std::vector<std::string> headers;
    for (const auto& row : rows)
        for (const auto& [k, v] : row.items())
            if (std::find(headers.begin(), headers.end(), k) == headers.end()) headers.push_back(k);
    auto cell = [](const Json& v) -> std::string {
        if (v.is_null()) return "-";
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_float()) {
            std::ostringstream os;
            os.setf(std::ios::fixed);
            os.precision(4);
            os << v.get<double>();
            return os.str();
        }
        return v.dump();
    };
    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> width(headers.size());
    for (std::size_t c = 0; c < headers.size(); ++c) width[c] = headers[c].size();
    for (const auto& row : rows) {
        std::vector<std::string> line;
        for (std::size_t c = 0; c < headers.size(); ++c) {
            line.push_back(row.contains(headers[c]) ? cell(row.at(headers[c])) : "-");
            width[c] = std::max(width[c], line.back().size());
        }
        cells.push_back(std::move(line));
    }
    std::ostringstream os;
    auto emit = [&](const std::vector<std::string>& line) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c) os << "  ";
            os << line[c];
            if (c + 1 < line.size()) os << std::string(width[c] - line[c].size(), ' ');
        }
        os << "\n";
    };
    emit(headers);
    std::vector<std::string> rule;
    for (auto w : width) rule.push_back(std::string(w, '-'));
    emit(rule);
    for (const auto& line : cells) emit(line);
    return os.str();
}

}  // namespace wow
