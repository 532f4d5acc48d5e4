#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "eir/config.hpp"
#include "eir/metrics.hpp"
#include "eir/model.hpp"
#include "eir/synthdata.hpp"

namespace eir {

// Per-sample knowledge graphs driven by top-eta retrieval over the training
// corpus. Graphs refresh once per epoch through update().
class GraphStore {
public:
    GraphStore(const Dataset& ds);
    const KnowledgeGraph* graph_for(const SyntheticSample& s);
    // Once-per-epoch refresh: unions newly retrieved edges into every cached
    // graph (idempotent while the corpus is static).
    void update();

private:
    const Dataset* ds_;
    TfIdfIndex index_;
    std::unordered_map<int, KnowledgeGraph> cache_;
    std::unordered_map<int, const SyntheticSample*> by_id_;
};

struct TrainLogRow {
    long step = 0;
    LossBundle losses;
    double val_bleu4 = 0.0;
};

struct TrainResult {
    std::vector<TrainLogRow> log;
    LossBundle first;
    LossBundle final;
};

// Runs the training schedule in cfg. When out_dir is non-empty, writes
// train_log.txt, curves.tsv (if requested) and checkpoint.bin (refreshed at
// every log step, so an aborted run keeps its last good parameters).
TrainResult train_model(EirModel& model, const Dataset& ds, const RunConfig& cfg,
                        const std::string& out_dir, bool write_curves = false,
                        std::ostream* console = nullptr);

struct SampleScore {
    int id = 0;
    double bl[4] = {0, 0, 0, 0};
    double rgl = 0.0;
};

struct EvalResult {
    double bl[4] = {0, 0, 0, 0};  // corpus BLEU-1..4
    double rgl = 0.0;             // mean sentence ROUGE-L
    CeScores ce;                  // labeler on generated reports vs ground truth
    CeScores cls;                 // classifier head vs ground truth
    long label_warnings = 0;
    std::vector<SampleScore> per_sample;
    std::vector<std::string> generations;  // one detokenized line per sample
};

// Scores externally supplied predictions; the decoding path feeds this, and
// tests can feed ground-truth reports to pin the oracle upper bound.
EvalResult score_predictions(const Dataset& ds, const std::vector<SyntheticSample>& samples,
                             const std::vector<std::vector<int>>& generated_reports,
                             const std::vector<std::vector<int>>& classifier_states);

// Greedy-decodes every sample of the split and scores it. cap < 0 means all.
EvalResult evaluate_model(const EirModel& model, const Dataset& ds, const std::string& split,
                          GraphStore& graphs, int cap = -1);

void write_eval_outputs(const EvalResult& r, const std::string& out_dir);

struct AblationCell {
    std::vector<double> per_seed;
    double mean() const;
    double spread() const;  // population standard deviation
};

struct AblationRow {
    Arm arm = Arm::mv;
    AblationCell bl[4];
    AblationCell rgl;
};

struct AblationResult {
    std::vector<uint64_t> seeds;
    std::vector<AblationRow> rows;
    std::string table;  // rendered arm x metric table
};

// Trains every configured arm for the same budget across the configured
// seeds, evaluates on the test split and renders the comparison table.
AblationResult run_ablation(const Dataset& ds, const RunConfig& cfg,
                            std::ostream* console = nullptr);

}  // namespace eir
