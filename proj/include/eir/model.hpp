#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eir/decoder.hpp"
#include "eir/encoders.hpp"
#include "eir/fusion.hpp"
#include "eir/synthdata.hpp"

namespace eir {

// Ablation arms. Arms without the cross-modal transformer fuse their streams
// through Add & LayerNorm; arms without the interpreter log L_I = 0.
enum class Arm { mv, mv_t, mv_g, mv_t_g, mv_t_g_ct, mv_t_i_g_ct };

std::string arm_name(Arm arm);
Arm arm_from_name(const std::string& name);
bool arm_has_text(Arm arm);
bool arm_has_graph(Arm arm);
bool arm_has_ct(Arm arm);
bool arm_has_interpreter(Arm arm);
const std::vector<Arm>& all_arms();

struct ModelDims {
    int width = 32;      // e
    int heads = 4;
    int ct_layers = 2;   // D
    int enc_layers = 2;
    int dec_layers = 2;
    int ffn_mult = 4;
    int patch = 4;

    void validate() const;
    int ffn_hidden() const { return width * ffn_mult; }
};

// The full architecture for one arm. Components are public so tests and the
// gradcheck scopes can reach their parameters directly.
class EirModel {
public:
    EirModel(const Dataset& ds, const ModelDims& dims, Arm arm, uint64_t seed);

    struct Forward {
        Tensor S_e;
        Tensor p;       // n x k
        Tensor p_word;  // l x v
        Tensor l_c, l_g, l_i;  // scalars; l_i is a constant 0 without the interpreter
    };
    // Graph may be null only for arms without the graph stream.
    Forward forward(Tape& tape, const SyntheticSample& sample, const KnowledgeGraph* graph,
                    ComposeMode mode) const;

    Tensor enriched(Tape& tape, const SyntheticSample& sample, const KnowledgeGraph* graph) const;
    ReportTokens generate_greedy(const SyntheticSample& sample, const KnowledgeGraph* graph) const;
    std::vector<int> classify_states(const SyntheticSample& sample,
                                     const KnowledgeGraph* graph) const;

    void save(const std::string& path) const;
    // Loads and verifies the stored vocabulary hash against the dataset this
    // model was built from; mismatch raises with both hashes.
    void load(const std::string& path);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    Arm arm() const { return arm_; }
    int topics() const { return topics_; }
    int state_count() const { return states_; }

    ImageEncoder img;
    std::optional<TextEncoder> txt;
    std::optional<GraphEncoder> graph_enc;
    std::optional<CrossModalBlock> ct_txt, ct_graph;
    std::optional<TopicAttention> graph_pool;  // graph stream for add-fusion arms
    LayerNormP fusion_ln;
    Classifier cls;
    Generator gen;
    std::optional<Interpreter> interp;

private:
    ParamStore params_;
    Arm arm_;
    ModelDims dims_;
    int topics_ = 0, states_ = 0, image_size_ = 0, views_ = 0;
    int max_history_ = 0;
    uint64_t vocab_hash_ = 0;

    ImageViewSet view_set(const SyntheticSample& s) const;
};

class AdamOptimizer {
public:
    AdamOptimizer(ParamStore& store, double lr, double beta1, double beta2, double eps);
    void zero_grads();
    // One Adam update on every trainable parameter; requires grads present.
    void step();

private:
    ParamStore* store_;
    std::vector<std::pair<Tensor, AdamState>> slots_;
};

struct BatchItem {
    const SyntheticSample* sample = nullptr;
    const KnowledgeGraph* graph = nullptr;
};

// Full forward over the batch (losses averaged), backward on the tape-level
// total, one optimizer step. Throws NumericError before touching parameters
// if any loss came out non-finite.
LossBundle training_step(EirModel& model, const std::vector<BatchItem>& batch,
                         AdamOptimizer& opt);

}  // namespace eir
