#pragma once

#include <string>
#include <vector>

#include "eir/nn.hpp"
#include "eir/params.hpp"
#include "eir/tensor.hpp"

namespace eir {

// Report token sequence: BOS first, EOS last.
struct ReportTokens {
    std::vector<int> ids;
    void validate(int bos, int eos, int max_len) const;
};

// Classifier block: learned state-embedding table S (k x e) shared between
// the Eq.-style softmax head and the state composition, plus the per-topic
// name embeddings.
struct Classifier {
    Tensor states;  // S, k x e
    Tensor topics;  // n x e

    static Classifier make(ParamStore& ps, const std::string& prefix, int topics, int states,
                           int width, std::mt19937_64& rng);
};

struct ClassifyResult {
    Tensor p;     // n x k, row-stochastic
    Tensor loss;  // scalar L_C
};

// p = softmax(S_e S^T); L_C = -(1/n) sum y log p. Rows of y must be one-hot.
ClassifyResult classify(Tape& tape, const Tensor& S_e, const Classifier& cls, const Tensor& y);

enum class ComposeMode { train, infer };

struct DiseaseEmbedding {
    Tensor S_d;       // n x e = S_states + S_topics + S_e
    Tensor S_states;
    Tensor S_topics;
    Tensor S_e;
};

// S_states is the expected state embedding p S in train mode and the argmax
// state's row in infer mode.
DiseaseEmbedding compose_disease_embedding(Tape& tape, const Tensor& p, const Classifier& cls,
                                           const Tensor& S_e, ComposeMode mode);

struct DecoderLayer {
    MultiHeadAttention self_attn;
    MultiHeadAttention cross_attn;
    FeedForward ffn;
    LayerNormP ln1, ln2, ln3;
    static DecoderLayer make(ParamStore& ps, const std::string& prefix, int width, int heads,
                             int ffn_hidden, std::mt19937_64& rng);
    Tensor forward(Tape& tape, const Tensor& x, const Tensor& memory, const Tensor& mask) const;
};

// Transformer decoder with causal self-attention and cross-attention over the
// n rows of S_d.
struct Generator {
    Tensor embed;  // v x e
    std::vector<DecoderLayer> layers;
    Linear out;    // e x v
    int bos = 0;
    int eos = 0;
    int max_len = 0;

    static Generator make(ParamStore& ps, const std::string& prefix, int vocab, int width,
                          int heads, int dec_layers, int ffn_hidden, int bos, int eos,
                          int max_len, std::mt19937_64& rng);
    // Per-position next-token distributions for a given input prefix, (l x v).
    Tensor word_distributions(Tape& tape, const std::vector<int>& input, const Tensor& S_d) const;

    struct TeacherForced {
        Tensor p_word;  // l x v
        Tensor loss;    // scalar L_G
    };
    TeacherForced teacher_forced(Tape& tape, const Tensor& S_d, const ReportTokens& target) const;
    // Deterministic argmax decoding until EOS or max_len; ties pick the
    // lowest token id.
    ReportTokens greedy(Tape& tape, const Tensor& S_d) const;
};

// Frozen copy of the classifier pathway applied to expected word embeddings:
// e_i = p_word_i E, pooled by mean, shifted onto the frozen topic rows and
// classified by the frozen state table. Parameters never require grad, so no
// gradient can reach them by construction.
struct Interpreter {
    Tensor embed;   // v x e, frozen
    Tensor topics;  // n x e, frozen
    Tensor states;  // k x e, frozen

    static Interpreter make(ParamStore& ps, const std::string& prefix, const Generator& gen,
                            const Classifier& cls);
    // Re-copies live classifier/generator values (warmup snapshot).
    void resnapshot(const Generator& gen, const Classifier& cls);
    Tensor loss(Tape& tape, const Tensor& p_word, const Tensor& y) const;
};

// Scalars read off the tape after one forward; total is the tape-level sum
// (L_C + L_G) + L_I, so the identity holds to machine exactness.
struct LossBundle {
    double l_c = 0.0;
    double l_g = 0.0;
    double l_i = 0.0;
    double l_total = 0.0;
};

}  // namespace eir
