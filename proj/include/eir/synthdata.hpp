#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "eir/graph.hpp"
#include "eir/metrics.hpp"
#include "eir/tensor.hpp"

namespace eir {

// Deterministic synthetic clinical world: aligned multi-view images, history
// text, findings report and per-topic state labels, all derived from one seed.
struct WorldConfig {
    uint64_t seed = 7;
    int corpus = 200;
    int split_train = 80;  // percents, must sum to 100
    int split_val = 10;
    int split_test = 10;
    int topics = 8;    // n; one disease term per topic
    int states = 4;    // k: positive/negative/uncertain/unmentioned (trailing ones drop as k shrinks)
    int organs = 3;    // O
    int diseases = 8;  // Dz, must equal topics
    int image_size = 16;
    int views = 2;     // m
    double noise = 0.1;
    int eta = 3;

    void validate() const;
};

struct SyntheticSample {
    int id = 0;
    std::vector<int> states;                 // per-topic state index
    std::vector<std::vector<double>> views;  // m entries of image_size^2 pixels
    std::vector<int> history;                // token ids
    std::vector<int> report;                 // body token ids, no BOS/EOS

    Tensor y_tensor(int k) const;  // topics x k one-hot
};

struct Vocab {
    std::vector<std::string> words;
    std::unordered_map<std::string, int> index;
    int pad = 0, bos = 1, eos = 2;

    int id(const std::string& w) const;
    const std::string& word(int id) const;
    int size() const { return static_cast<int>(words.size()); }
    std::vector<std::string> to_words(const std::vector<int>& ids) const;
    uint64_t hash() const;
};

struct TripletEdge {
    std::string src;
    std::string dst;
    Relation kind = Relation::suggestive_of;
};

struct Dataset {
    WorldConfig cfg;
    Vocab vocab;
    std::vector<std::string> organ_terms;
    std::vector<std::string> disease_terms;  // topic order
    std::vector<std::string> symptom_terms;  // topic order
    std::vector<int> disease_organ;          // topic -> organ index
    KnowledgeGraph base_graph;               // schema plus static edges only
    std::vector<SyntheticSample> train, val, test;

    LabelSchema label_schema() const;
    const std::vector<SyntheticSample>& split(const std::string& name) const;
    int max_history_len() const;
    int max_report_len() const;  // including BOS/EOS
};

// Pure function of the config; every sample passes the three decodability
// oracles (blobs, history clauses, report labeling) before it is accepted.
Dataset generate_corpus(const WorldConfig& cfg);

// Plain-text persistence: train/val/test line files plus vocab.txt, graph.txt
// and meta.txt sidecars. Byte-identical for identical configs.
void write_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

// TF-IDF over report unigrams with cosine ranking. Ties break toward the
// lower sample id; the query's own report is excluded.
class TfIdfIndex {
public:
    static TfIdfIndex build(const std::vector<const SyntheticSample*>& corpus, int vocab_size);
    std::vector<std::pair<const SyntheticSample*, double>> retrieve(
        const std::vector<int>& query_report, int exclude_id, int eta) const;

private:
    std::vector<const SyntheticSample*> docs_;
    std::vector<std::unordered_map<int, double>> weights_;  // tf-idf per doc
    std::vector<double> norms_;
    std::vector<double> idf_;
};

std::vector<const SyntheticSample*> retrieve_top_eta(const SyntheticSample& query,
                                                     const TfIdfIndex& index, int eta);

// Relation triplets extracted from one report: positively asserted diseases
// co-occurring yield suggestive_of pairs, and each links located_at its organ.
std::vector<TripletEdge> extract_triplets(const std::vector<int>& report, const Dataset& ds);

// Base schema plus edges derived from the retrieved reports. Unknown terms in
// a triplet are counted and skipped, never fatal.
KnowledgeGraph build_graph(const std::vector<const SyntheticSample*>& retrieved,
                           const Dataset& ds, long* skipped_terms = nullptr);
// Unions newly derived edges into an existing graph; node set unchanged,
// idempotent for repeated identical retrievals.
void update_graph(KnowledgeGraph& g, const std::vector<const SyntheticSample*>& new_retrieval,
                  const Dataset& ds, long* skipped_terms = nullptr);
void apply_triplets(KnowledgeGraph& g, const std::vector<TripletEdge>& triplets,
                    const Dataset& ds, long* skipped_terms = nullptr);

// Decodability oracles used at generation time and by tests.
std::vector<bool> image_positive_topics(const SyntheticSample& s, const WorldConfig& cfg);
std::vector<int> history_states(const std::vector<int>& history, const Dataset& ds);

}  // namespace eir
