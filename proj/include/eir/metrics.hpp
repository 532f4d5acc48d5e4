#pragma once

#include <string>
#include <vector>

namespace eir {

using Words = std::vector<std::string>;

// Clipped n-gram counts plus lengths; corpus scores aggregate these before
// taking the geometric mean.
struct BleuStats {
    int max_n = 4;
    std::vector<long> clipped;  // per order 1..max_n
    std::vector<long> total;
    long cand_len = 0;
    long ref_len = 0;

    BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const Words& candidate, const Words& reference, int max_n);
// Geometric mean of clipped precisions times the brevity penalty
// exp(1 - r/c) when c < r. Zero clipped counts are smoothed to 1e-9.
double bleu_from_stats(const BleuStats& stats);
double bleu(const Words& candidate, const Words& reference, int max_n);
// Clipped n-gram precision of a single order (1-based), before smoothing.
double bleu_precision(const Words& candidate, const Words& reference, int order);

// LCS F-measure with recall weight beta = 1.2.
double rouge_l(const Words& candidate, const Words& reference);

// Template inverse of the synthetic report language. State indices: 0 is
// positive, states-1 is unmentioned; negative and uncertain sit in between
// when the state count allows them.
struct LabelSchema {
    int topics = 0;
    int states = 0;
    std::vector<std::string> disease_terms;  // one per topic, topic order

    int positive_state() const { return 0; }
    int negative_state() const { return 1; }   // requires states >= 3
    int uncertain_state() const { return 2; }  // requires states == 4
    int unmentioned_state() const { return states - 1; }
};

// Deterministic keyword/negation matcher. Clauses split on "."; unmatched
// clauses bump the warning counter and are skipped; topics never mentioned
// stay unmentioned. On duplicate mentions the last clause wins.
std::vector<int> label_report(const Words& tokens, const LabelSchema& schema,
                              long* warnings = nullptr);

struct CeScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Micro-averaged precision/recall/F1 over (sample, topic) pairs on the
// positive state. Zero denominators yield 0.
CeScores clinical_efficacy(const std::vector<std::vector<int>>& pred_states,
                           const std::vector<std::vector<int>>& true_states);

}  // namespace eir
