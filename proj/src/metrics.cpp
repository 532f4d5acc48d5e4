#include "eir/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace eir {

namespace {

constexpr double kBleuSmooth = 1e-9;

std::map<Words, long> ngram_counts(const Words& tokens, int n) {
    std::map<Words, long> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i)
        counts[Words(tokens.begin() + i, tokens.begin() + i + n)] += 1;
    return counts;
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
    if (max_n != other.max_n) throw std::invalid_argument("mixed BLEU orders in aggregation");
    for (int i = 0; i < max_n; ++i) {
        clipped[i] += other.clipped[i];
        total[i] += other.total[i];
    }
    cand_len += other.cand_len;
    ref_len += other.ref_len;
    return *this;
}

BleuStats bleu_stats(const Words& candidate, const Words& reference, int max_n) {
    if (candidate.empty() || reference.empty())
        throw std::invalid_argument("BLEU requires non-empty candidate and reference");
    if (max_n < 1 || max_n > 4) throw std::invalid_argument("BLEU order must be 1..4");
    BleuStats st;
    st.max_n = max_n;
    st.clipped.assign(max_n, 0);
    st.total.assign(max_n, 0);
    st.cand_len = static_cast<long>(candidate.size());
    st.ref_len = static_cast<long>(reference.size());
    for (int n = 1; n <= max_n; ++n) {
        auto cand = ngram_counts(candidate, n);
        auto ref = ngram_counts(reference, n);
        long clipped = 0, total = 0;
        for (const auto& [gram, count] : cand) {
            total += count;
            auto it = ref.find(gram);
            if (it != ref.end()) clipped += std::min(count, it->second);
        }
        st.clipped[n - 1] = clipped;
        st.total[n - 1] = total;
    }
    return st;
}

double bleu_from_stats(const BleuStats& st) {
    double log_sum = 0.0;
    for (int i = 0; i < st.max_n; ++i) {
        double p = (st.total[i] > 0 && st.clipped[i] > 0)
                       ? static_cast<double>(st.clipped[i]) / st.total[i]
                       : kBleuSmooth;
        log_sum += std::log(p);
    }
    const double geo = std::exp(log_sum / st.max_n);
    const double bp =
        st.cand_len < st.ref_len
            ? std::exp(1.0 - static_cast<double>(st.ref_len) / static_cast<double>(st.cand_len))
            : 1.0;
    return geo * bp;
}

double bleu(const Words& candidate, const Words& reference, int max_n) {
    return bleu_from_stats(bleu_stats(candidate, reference, max_n));
}

double bleu_precision(const Words& candidate, const Words& reference, int order) {
    BleuStats st = bleu_stats(candidate, reference, order);
    if (st.total[order - 1] == 0) return 0.0;
    return static_cast<double>(st.clipped[order - 1]) / st.total[order - 1];
}

double rouge_l(const Words& candidate, const Words& reference) {
    if (candidate.empty() || reference.empty())
        throw std::invalid_argument("ROUGE-L requires non-empty candidate and reference");
    const size_t m = candidate.size(), n = reference.size();
    std::vector<long> prev(n + 1, 0), cur(n + 1, 0);
    for (size_t i = 1; i <= m; ++i) {
        for (size_t j = 1; j <= n; ++j) {
            if (candidate[i - 1] == reference[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    const double lcs = static_cast<double>(prev[n]);
    const double p = lcs / m;
    const double r = lcs / n;
    const double beta2 = 1.2 * 1.2;
    const double denom = r + beta2 * p;
    return denom > 0.0 ? (1.0 + beta2) * p * r / denom : 0.0;
}

std::vector<int> label_report(const Words& tokens, const LabelSchema& schema, long* warnings) {
    if (schema.states < 2 || schema.states > 4)
        throw std::invalid_argument("label schema supports 2..4 states");
    std::vector<int> states(schema.topics, schema.unmentioned_state());
    auto topic_of = [&](const std::string& term) {
        for (int t = 0; t < schema.topics; ++t)
            if (schema.disease_terms[t] == term) return t;
        return -1;
    };
    auto warn = [&] {
        if (warnings) ++(*warnings);
    };

    std::vector<Words> clauses;
    Words cur;
    for (const auto& tok : tokens) {
        if (tok == ".") {
            if (!cur.empty()) clauses.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(tok);
        }
    }
    if (!cur.empty()) clauses.push_back(std::move(cur));

    for (const Words& clause : clauses) {
        if (clause.size() == 2 && clause[0] == "findings" && clause[1] == "unremarkable") continue;
        int topic = -1, state = -1;
        if (clause.size() == 3 && clause[0] == "there" && clause[1] == "is") {
            topic = topic_of(clause[2]);
            state = schema.positive_state();
        } else if (clause.size() == 2 && clause[0] == "no" && schema.states >= 3) {
            topic = topic_of(clause[1]);
            state = schema.negative_state();
        } else if (clause.size() == 2 && clause[0] == "possible" && schema.states == 4) {
            topic = topic_of(clause[1]);
            state = schema.uncertain_state();
        }
        if (topic < 0 || state < 0) {
            warn();
            continue;
        }
        states[topic] = state;
    }
    return states;
}

CeScores clinical_efficacy(const std::vector<std::vector<int>>& pred_states,
                           const std::vector<std::vector<int>>& true_states) {
    if (pred_states.size() != true_states.size())
        throw std::invalid_argument("clinical_efficacy: prediction/truth length mismatch");
    long tp = 0, fp = 0, fn = 0;
    for (size_t s = 0; s < pred_states.size(); ++s) {
        if (pred_states[s].size() != true_states[s].size())
            throw std::invalid_argument("clinical_efficacy: topic count mismatch at sample " +
                                        std::to_string(s));
        for (size_t t = 0; t < pred_states[s].size(); ++t) {
            const bool p = pred_states[s][t] == 0;
            const bool y = true_states[s][t] == 0;
            if (p && y) ++tp;
            else if (p && !y) ++fp;
            else if (!p && y) ++fn;
        }
    }
    CeScores out;
    out.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    out.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    out.f1 = (out.precision + out.recall) > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

}  // namespace eir
