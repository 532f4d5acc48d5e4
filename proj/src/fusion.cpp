#include "eir/fusion.hpp"

#include <cmath>
#include <stdexcept>

namespace eir {

CrossModalBlock CrossModalBlock::make(ParamStore& ps, const std::string& prefix, int width,
                                      int heads, int depth, int ffn_hidden,
                                      std::mt19937_64& rng) {
    if (width % heads != 0)
        throw std::invalid_argument("width " + std::to_string(width) +
                                    " not divisible by head count " + std::to_string(heads));
    CrossModalBlock b;
    b.heads = heads;
    for (int l = 0; l < depth; ++l) {
        const std::string lp = prefix + ".layer" + std::to_string(l);
        CrossModalLayer layer;
        layer.wq = Linear::make(ps, lp + ".wq", width, width, rng, /*bias=*/false);
        layer.wk = Linear::make(ps, lp + ".wk", width, width, rng, /*bias=*/false);
        layer.wv = Linear::make(ps, lp + ".wv", width, width, rng, /*bias=*/false);
        layer.ln_in = LayerNormP::make(ps, lp + ".ln_in", width);
        layer.ln_ffn = LayerNormP::make(ps, lp + ".ln_ffn", width);
        layer.ffn = FeedForward::make(ps, lp + ".ffn", width, ffn_hidden, rng);
        b.layers.push_back(std::move(layer));
    }
    return b;
}

Tensor cross_modal_attention(Tape& tape, const Tensor& target, const Tensor& source,
                             const CrossModalLayer& layer, int heads,
                             std::vector<Tensor>* attn_out) {
    if (target.cols() != source.cols())
        throw std::invalid_argument("cross-modal width mismatch: " + shape_str(target.shape()) +
                                    " vs " + shape_str(source.shape()));
    const int width = target.cols();
    const int dk = width / heads;
    Tensor Q = layer.wq.forward(tape, target);
    Tensor K = layer.wk.forward(tape, source);
    Tensor V = layer.wv.forward(tape, source);
    std::vector<Tensor> head_out;
    head_out.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        Tensor qh = slice_cols(tape, Q, h * dk, dk);
        Tensor kh = slice_cols(tape, K, h * dk, dk);
        Tensor vh = slice_cols(tape, V, h * dk, dk);
        Tensor logits = scale(tape, matmul_nt(tape, qh, kh), 1.0 / std::sqrt(double(dk)));
        Tensor w = softmax(tape, logits, 1);
        if (attn_out) attn_out->push_back(w);
        head_out.push_back(matmul(tape, w, vh));
    }
    return concat_cols(tape, head_out);
}

ModalSequence cross_modal_transformer(Tape& tape, const ModalSequence& target_init,
                                      const ModalSequence& source,
                                      const CrossModalBlock& block) {
    Tensor state = target_init.values;
    for (const CrossModalLayer& layer : block.layers) {
        Tensor ca = cross_modal_attention(tape, layer.ln_in.forward(tape, state),
                                          layer.ln_in.forward(tape, source.values), layer,
                                          block.heads);
        Tensor mid = add(tape, state, ca);
        state = add(tape, mid, layer.ffn.forward(tape, layer.ln_ffn.forward(tape, mid)));
    }
    return {state, target_init.tag};
}

EnrichedRepresentation entangle(Tape& tape, const Tensor& s_it, const Tensor& s_ig,
                                const LayerNormP& ln) {
    if (s_it.shape() != s_ig.shape())
        throw std::invalid_argument("entangle shape mismatch: " + shape_str(s_it.shape()) +
                                    " vs " + shape_str(s_ig.shape()));
    EnrichedRepresentation out;
    out.S_e = ln.forward(tape, add(tape, s_it, s_ig));
    out.stream_a = Modality::text;
    out.stream_b = Modality::graph;
    return out;
}

EnrichedRepresentation add_layernorm_fusion(Tape& tape, const std::vector<Tensor>& streams,
                                            const LayerNormP& ln) {
    if (streams.empty()) throw std::invalid_argument("fusion needs at least one stream");
    Tensor sum = streams[0];
    for (size_t i = 1; i < streams.size(); ++i) {
        if (streams[i].shape() != sum.shape())
            throw std::invalid_argument("fusion shape mismatch: " + shape_str(sum.shape()) +
                                        " vs " + shape_str(streams[i].shape()));
        sum = add(tape, sum, streams[i]);
    }
    EnrichedRepresentation out;
    out.S_e = ln.forward(tape, sum);
    return out;
}

EnrichedRepresentation add_layernorm_fusion(Tape& tape, const Tensor& s_v, const Tensor& s_t,
                                            const Tensor& s_g, const LayerNormP& ln) {
    return add_layernorm_fusion(tape, std::vector<Tensor>{s_v, s_t, s_g}, ln);
}

}  // namespace eir
