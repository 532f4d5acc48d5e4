#pragma once

#include <string>
#include <vector>

#include "eir/encoders.hpp"
#include "eir/nn.hpp"

namespace eir {

// One layer of the cross-modal transformer. ln_in normalizes both attention
// inputs (target state and the layer-0 source), ln_ffn is the pre-FFN norm.
// The attention projections carry no biases and no output projection: heads
// are computed independently and concatenated.
struct CrossModalLayer {
    Linear wq, wk, wv;
    LayerNormP ln_in, ln_ffn;
    FeedForward ffn;
};

struct CrossModalBlock {
    std::vector<CrossModalLayer> layers;  // D entries
    int heads = 1;

    static CrossModalBlock make(ParamStore& ps, const std::string& prefix, int width, int heads,
                                int depth, int ffn_hidden, std::mt19937_64& rng);
};

// softmax(target W_Q (source W_K)^T / sqrt(d_k)) (source W_V), per head,
// concatenated. Output length always follows the target.
Tensor cross_modal_attention(Tape& tape, const Tensor& target, const Tensor& source,
                             const CrossModalLayer& layer, int heads,
                             std::vector<Tensor>* attn_out = nullptr);

// D layers of pre-norm residual cross-modal attention; the source is always
// the layer-0 sequence, re-normalized inside each layer. D = 0 returns the
// target untouched.
ModalSequence cross_modal_transformer(Tape& tape, const ModalSequence& target_init,
                                      const ModalSequence& source,
                                      const CrossModalBlock& block);

struct EnrichedRepresentation {
    Tensor S_e;          // n x e
    Modality stream_a = Modality::image;
    Modality stream_b = Modality::image;
};

// S_e = LayerNorm(s_it + s_ig)
EnrichedRepresentation entangle(Tape& tape, const Tensor& s_it, const Tensor& s_ig,
                                const LayerNormP& ln);

// The ablation baseline: LN(s_v + s_t + s_g). The vector overload fuses
// whatever streams an arm provides.
EnrichedRepresentation add_layernorm_fusion(Tape& tape, const Tensor& s_v, const Tensor& s_t,
                                            const Tensor& s_g, const LayerNormP& ln);
EnrichedRepresentation add_layernorm_fusion(Tape& tape, const std::vector<Tensor>& streams,
                                            const LayerNormP& ln);

}  // namespace eir
