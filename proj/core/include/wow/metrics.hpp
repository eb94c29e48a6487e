#pragma once

#include "wow/elicit.hpp"
#include "wow/wowgen.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wow {

struct WowAccuracyReport {
    struct Entry {
        std::size_t numerator = 0;
        std::size_t denominator = 0;
        double accuracy = 0.0;
    };
    /// Judged pairs with a silver label that no filter removed.
    Entry overall;
    /// Per-dataset breakdown; `overall` is the pair-count-weighted mean.
    std::map<std::string, Entry> per_dataset;
    /// Judgements left out because a filter (margin, consistency) removed them.
    std::size_t filtered = 0;
    /// Judgements left out for lack of a silver label.
    std::size_t unlabeled = 0;
};

/// A judgement counts as correct iff its direction equals the silver
/// direction exactly, so a 0 against a silver ±1 counts as incorrect.
WowAccuracyReport acc_wow(std::span<const PreferenceJudgement> judgements);

/// Pair-count-weighted accuracy over several datasets.
WowAccuracyReport acc_wow(const std::map<std::string, std::vector<PreferenceJudgement>>& datasets);

/// Accuracy of emitted pairs: the share whose silver label prefers the
/// chosen answer.
WowAccuracyReport acc_wow_pairs(std::span<const WowPair> pairs);

struct WrongnessReport {
    std::size_t n = 0;
    std::size_t n_correct = 0;
    std::size_t n_wrong = 0;
    double accuracy = 0.0;
    /// nullopt when there are no wrong answers.
    std::optional<double> p_wrong;
};

struct AnswerOutcome {
    bool correct = false;
    /// Proxy of the answer; required for wrong answers.
    std::optional<double> proxy;
};

WrongnessReport wrongness(std::span<const AnswerOutcome> answers);

/// exp(-nll) in [0, 1].
double confidence(double nll_value);

struct EceReport {
    struct Bin {
        std::size_t count = 0;
        double mean_confidence = 0.0;
        double accuracy = 0.0;
    };
    std::array<Bin, 10> bins{};
    std::size_t n = 0;
    double ece = 0.0;
};

/// Bin i holds confidences in [0.1 i, 0.1 (i + 1)); 1.0 falls in bin 9.
std::size_t ece_bin(double confidence);

EceReport ece(std::span<const double> confidences, std::span<const bool> correct);

/// Sample Pearson r; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

/// Acc_WoW grouped by the silver proxy gap |p1 - p2| (bucket width `width`).
std::map<double, WowAccuracyReport::Entry> accuracy_by_proxy_gap(std::span<const PreferenceJudgement> judgements,
                                                                  double width = 0.2);

Json to_json(const WowAccuracyReport& r);
Json to_json(const WrongnessReport& r);
Json to_json(const EceReport& r);

/// Fixed-width text rendering of a list of flat records (one row each).
std::string format_table(const std::vector<Json>& rows);

}  // namespace wow
