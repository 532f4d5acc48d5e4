#include "eir/encoders.hpp"

#include <stdexcept>

namespace eir {

void ImageViewSet::validate() const {
    if (views.empty()) throw std::invalid_argument("image view set needs at least one view");
    const size_t px = static_cast<size_t>(height) * width;
    for (const auto& v : views)
        if (v.size() != px)
            throw std::invalid_argument("view has " + std::to_string(v.size()) +
                                        " pixels, expected " + std::to_string(px));
}

void HistoryText::validate(int max_len) const {
    if (tokens.empty()) throw std::invalid_argument("history text must not be empty");
    if (static_cast<int>(tokens.size()) > max_len)
        throw std::invalid_argument("history length " + std::to_string(tokens.size()) +
                                    " exceeds maximum " + std::to_string(max_len));
    for (int t : tokens)
        if (t < 0 || t >= vocab)
            throw std::invalid_argument("history token " + std::to_string(t) +
                                        " outside vocabulary of " + std::to_string(vocab));
}

ImageEncoder ImageEncoder::make(ParamStore& ps, const std::string& prefix, int image_size,
                                int patch, int width, int topics, int heads, int enc_layers,
                                int ffn_hidden, std::mt19937_64& rng) {
    if (patch <= 0 || image_size % patch != 0)
        throw std::invalid_argument("image size " + std::to_string(image_size) +
                                    " not divisible by patch size " + std::to_string(patch));
    ImageEncoder enc;
    enc.image_size = image_size;
    enc.patch = patch;
    enc.patch_embed = Linear::make(ps, prefix + ".patch", patch * patch, width, rng);
    for (int l = 0; l < enc_layers; ++l)
        enc.layers.push_back(
            EncoderLayer::make(ps, prefix + ".layer" + std::to_string(l), width, heads,
                               ffn_hidden, rng));
    enc.topic = TopicAttention::make(ps, prefix + ".topic", topics, width, rng);
    return enc;
}

int ImageEncoder::patches_per_view() const {
    const int g = image_size / patch;
    return g * g;
}

Tensor ImageEncoder::encode_view(Tape& tape, const std::vector<double>& pixels) const {
    const int grid = image_size / patch;
    const int pdim = patch * patch;
    std::vector<double> rows(static_cast<size_t>(grid) * grid * pdim);
    for (int pr = 0; pr < grid; ++pr)
        for (int pc = 0; pc < grid; ++pc) {
            const size_t row = static_cast<size_t>(pr) * grid + pc;
            for (int y = 0; y < patch; ++y)
                for (int x = 0; x < patch; ++x)
                    rows[row * pdim + y * patch + x] =
                        pixels[static_cast<size_t>(pr * patch + y) * image_size + pc * patch + x];
        }
    Tensor patches = Tensor::from({grid * grid, pdim}, std::move(rows));
    Tensor h = patch_embed.forward(tape, patches);
    h = add(tape, h, sinusoid_positions(grid * grid, h.cols()));
    for (const auto& layer : layers) h = layer.forward(tape, h);
    return h;
}

ModalSequence ImageEncoder::forward(Tape& tape, const ImageViewSet& views) const {
    views.validate();
    if (views.height != image_size || views.width != image_size)
        throw std::invalid_argument("view resolution " + std::to_string(views.height) + "x" +
                                    std::to_string(views.width) + " does not match configured " +
                                    std::to_string(image_size));
    Tensor pooled = encode_view(tape, views.views[0]);
    for (int v = 1; v < views.count(); ++v)
        pooled = emax(tape, pooled, encode_view(tape, views.views[v]));
    return {topic.forward(tape, pooled), Modality::image};
}

TextEncoder TextEncoder::make(ParamStore& ps, const std::string& prefix, int vocab, int width,
                              int topics, int heads, int enc_layers, int ffn_hidden, int max_len,
                              std::mt19937_64& rng) {
    TextEncoder enc;
    enc.max_len = max_len;
    enc.embed = ps.create(prefix + ".embed", {vocab, width}, rng, init_bound(width));
    for (int l = 0; l < enc_layers; ++l)
        enc.layers.push_back(
            EncoderLayer::make(ps, prefix + ".layer" + std::to_string(l), width, heads,
                               ffn_hidden, rng));
    enc.topic = TopicAttention::make(ps, prefix + ".topic", topics, width, rng);
    return enc;
}

Tensor TextEncoder::hidden_states(Tape& tape, const std::vector<int>& tokens) const {
    Tensor h = embed_rows(tape, embed, tokens);
    h = add(tape, h, sinusoid_positions(static_cast<int>(tokens.size()), h.cols()));
    for (const auto& layer : layers) h = layer.forward(tape, h);
    return h;
}

ModalSequence TextEncoder::forward(Tape& tape, const HistoryText& text) const {
    text.validate(max_len);
    Tensor H = hidden_states(tape, text.tokens);
    return {topic.forward(tape, H), Modality::text};
}

GraphEncoder GraphEncoder::make(ParamStore& ps, const std::string& prefix, int nodes, int width,
                                int heads, int ffn_hidden, std::mt19937_64& rng) {
    GraphEncoder enc;
    enc.node_features = ps.create(prefix + ".nodes", {nodes, width}, rng, init_bound(width));
    enc.gsa = MultiHeadAttention::make(ps, prefix + ".gsa", width, heads, rng);
    enc.ffn = FeedForward::make(ps, prefix + ".ffn", width, ffn_hidden, rng);
    enc.ln = LayerNormP::make(ps, prefix + ".ln", width);
    return enc;
}

ModalSequence GraphEncoder::forward(Tape& tape, const KnowledgeGraph& g,
                                    std::vector<Tensor>* attn_out) const {
    g.validate();
    if (g.nodes() != node_features.rows())
        throw std::invalid_argument("graph has " + std::to_string(g.nodes()) +
                                    " nodes, encoder expects " +
                                    std::to_string(node_features.rows()));
    Tensor mask = visibility_mask(g.adjacency);
    Tensor gsa_out = gsa.forward(tape, node_features, node_features, &mask, attn_out);
    Tensor e_gsa = add(tape, gsa_out, node_features);
    Tensor out = ln.forward(tape, add(tape, ffn.forward(tape, e_gsa), e_gsa));
    return {out, Modality::graph};
}

}  // namespace eir
