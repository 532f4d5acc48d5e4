#pragma once

#include <string>
#include <vector>

#include "eir/graph.hpp"
#include "eir/nn.hpp"
#include "eir/params.hpp"
#include "eir/tensor.hpp"

namespace eir {

enum class Modality { image, text, graph };

// A (length x width) feature matrix tagged with where it came from; the
// currency the fusion module trades in.
struct ModalSequence {
    Tensor values;
    Modality tag = Modality::image;
};

// m grayscale views of one study, all at the same resolution, pixels in [0,1].
struct ImageViewSet {
    int height = 0;
    int width = 0;
    std::vector<std::vector<double>> views;  // m entries of height*width values

    int count() const { return static_cast<int>(views.size()); }
    void validate() const;
};

// Token index sequence over a vocabulary of size v.
struct HistoryText {
    std::vector<int> tokens;
    int vocab = 0;
    void validate(int max_len) const;
};

// Patch-embed + transformer encoder per view, element-wise max pool across
// views patch-wise, then a learned topic attention down to n rows.
struct ImageEncoder {
    int image_size = 0;
    int patch = 0;
    Linear patch_embed;
    std::vector<EncoderLayer> layers;
    TopicAttention topic;

    static ImageEncoder make(ParamStore& ps, const std::string& prefix, int image_size,
                             int patch, int width, int topics, int heads, int enc_layers,
                             int ffn_hidden, std::mt19937_64& rng);
    int patches_per_view() const;
    // Patch features of a single view after the encoder stack, (P x e).
    Tensor encode_view(Tape& tape, const std::vector<double>& pixels) const;
    ModalSequence forward(Tape& tape, const ImageViewSet& views) const;
};

// Token embedding + sinusoidal positions + transformer encoder producing H,
// then S_txt = softmax(Q H^T) H.
struct TextEncoder {
    Tensor embed;  // v x e
    std::vector<EncoderLayer> layers;
    TopicAttention topic;  // Q, n x e
    int max_len = 0;

    static TextEncoder make(ParamStore& ps, const std::string& prefix, int vocab, int width,
                            int topics, int heads, int enc_layers, int ffn_hidden, int max_len,
                            std::mt19937_64& rng);
    Tensor hidden_states(Tape& tape, const std::vector<int>& tokens) const;
    ModalSequence forward(Tape& tape, const HistoryText& text) const;
};

// Graph self-attention with the adjacency visibility mask, then the FFN and
// layer-norm tail: S_graph = LN(FFN(e_gsa) + e_gsa), e_gsa = GSA(f_N, A) + f_N.
struct GraphEncoder {
    Tensor node_features;  // f_N, N x e
    MultiHeadAttention gsa;
    FeedForward ffn;
    LayerNormP ln;

    static GraphEncoder make(ParamStore& ps, const std::string& prefix, int nodes, int width,
                             int heads, int ffn_hidden, std::mt19937_64& rng);
    ModalSequence forward(Tape& tape, const KnowledgeGraph& g,
                          std::vector<Tensor>* attn_out = nullptr) const;
};

}  // namespace eir
