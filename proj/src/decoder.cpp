#include "eir/decoder.hpp"

#include <algorithm>
#include <stdexcept>

namespace eir {

void ReportTokens::validate(int bos, int eos, int max_len) const {
    if (ids.size() < 2) throw std::invalid_argument("report needs at least BOS and EOS");
    if (static_cast<int>(ids.size()) > max_len)
        throw std::invalid_argument("report length " + std::to_string(ids.size()) +
                                    " exceeds maximum " + std::to_string(max_len));
    if (ids.front() != bos) throw std::invalid_argument("report must begin with BOS");
    if (ids.back() != eos) throw std::invalid_argument("report must end with EOS");
    for (size_t i = 1; i + 1 < ids.size(); ++i)
        if (ids[i] == bos || ids[i] == eos)
            throw std::invalid_argument("BOS/EOS inside report body");
}

Classifier Classifier::make(ParamStore& ps, const std::string& prefix, int topics, int states,
                            int width, std::mt19937_64& rng) {
    if (states < 2) throw std::invalid_argument("need at least 2 disease states");
    Classifier c;
    c.states = ps.create(prefix + ".states", {states, width}, rng, init_bound(width));
    c.topics = ps.create(prefix + ".topics", {topics, width}, rng, init_bound(width));
    return c;
}

ClassifyResult classify(Tape& tape, const Tensor& S_e, const Classifier& cls, const Tensor& y) {
    Tensor logits = matmul_nt(tape, S_e, cls.states);  // n x k
    Tensor p = softmax(tape, logits, 1);
    Tensor loss = cross_entropy(tape, p, y);  // validates one-hot targets
    return {p, loss};
}

DiseaseEmbedding compose_disease_embedding(Tape& tape, const Tensor& p, const Classifier& cls,
                                           const Tensor& S_e, ComposeMode mode) {
    DiseaseEmbedding out;
    if (mode == ComposeMode::train) {
        out.S_states = matmul(tape, p, cls.states);
    } else {
        std::vector<int> hard(p.rows());
        for (int i = 0; i < p.rows(); ++i) {
            int best = 0;
            for (int j = 1; j < p.cols(); ++j)
                if (p.at(i, j) > p.at(i, best)) best = j;
            hard[i] = best;
        }
        out.S_states = embed_rows(tape, cls.states, hard);
    }
    out.S_topics = cls.topics;
    out.S_e = S_e;
    out.S_d = add(tape, add(tape, out.S_states, out.S_topics), S_e);
    return out;
}

DecoderLayer DecoderLayer::make(ParamStore& ps, const std::string& prefix, int width, int heads,
                                int ffn_hidden, std::mt19937_64& rng) {
    DecoderLayer d;
    d.self_attn = MultiHeadAttention::make(ps, prefix + ".self", width, heads, rng);
    d.cross_attn = MultiHeadAttention::make(ps, prefix + ".cross", width, heads, rng);
    d.ffn = FeedForward::make(ps, prefix + ".ffn", width, ffn_hidden, rng);
    d.ln1 = LayerNormP::make(ps, prefix + ".ln1", width);
    d.ln2 = LayerNormP::make(ps, prefix + ".ln2", width);
    d.ln3 = LayerNormP::make(ps, prefix + ".ln3", width);
    return d;
}

Tensor DecoderLayer::forward(Tape& tape, const Tensor& x, const Tensor& memory,
                             const Tensor& mask) const {
    Tensor h = ln1.forward(tape, add(tape, x, self_attn.forward(tape, x, x, &mask)));
    h = ln2.forward(tape, add(tape, h, cross_attn.forward(tape, h, memory)));
    return ln3.forward(tape, add(tape, h, ffn.forward(tape, h)));
}

Generator Generator::make(ParamStore& ps, const std::string& prefix, int vocab, int width,
                          int heads, int dec_layers, int ffn_hidden, int bos, int eos,
                          int max_len, std::mt19937_64& rng) {
    Generator g;
    g.bos = bos;
    g.eos = eos;
    g.max_len = max_len;
    g.embed = ps.create(prefix + ".embed", {vocab, width}, rng, init_bound(width));
    for (int l = 0; l < dec_layers; ++l)
        g.layers.push_back(DecoderLayer::make(ps, prefix + ".layer" + std::to_string(l), width,
                                              heads, ffn_hidden, rng));
    g.out = Linear::make(ps, prefix + ".out", width, vocab, rng);
    return g;
}

Tensor Generator::word_distributions(Tape& tape, const std::vector<int>& input,
                                     const Tensor& S_d) const {
    Tensor x = embed_rows(tape, embed, input);
    x = add(tape, x, sinusoid_positions(static_cast<int>(input.size()), x.cols()));
    Tensor mask = causal_mask(static_cast<int>(input.size()));
    for (const auto& layer : layers) x = layer.forward(tape, x, S_d, mask);
    return softmax(tape, out.forward(tape, x), 1);
}

Generator::TeacherForced Generator::teacher_forced(Tape& tape, const Tensor& S_d,
                                                   const ReportTokens& target) const {
    if (target.ids.size() < 2)
        throw std::invalid_argument("teacher forcing requires a target report");
    std::vector<int> input(target.ids.begin(), target.ids.end() - 1);
    Tensor p_word = word_distributions(tape, input, S_d);
    const int l = p_word.rows();
    const int v = p_word.cols();
    Tensor y_word({l, v}, 0.0);
    for (int i = 0; i < l; ++i) y_word.at(i, target.ids[i + 1]) = 1.0;
    Tensor loss = cross_entropy(tape, p_word, y_word);
    return {p_word, loss};
}

ReportTokens Generator::greedy(Tape& tape, const Tensor& S_d) const {
    ReportTokens out;
    out.ids = {bos};
    while (static_cast<int>(out.ids.size()) < max_len) {
        Tensor p = word_distributions(tape, out.ids, S_d);
        const int last = p.rows() - 1;
        int best = 0;
        for (int j = 1; j < p.cols(); ++j)
            if (p.at(last, j) > p.at(last, best)) best = j;
        out.ids.push_back(best);
        if (best == eos) break;
    }
    return out;
}

Interpreter Interpreter::make(ParamStore& ps, const std::string& prefix, const Generator& gen,
                              const Classifier& cls) {
    Interpreter in;
    in.embed = ps.adopt(prefix + ".embed",
                        Tensor::from(gen.embed.shape(), gen.embed.vec(), /*requires_grad=*/false));
    in.topics = ps.adopt(prefix + ".topics",
                         Tensor::from(cls.topics.shape(), cls.topics.vec(), false));
    in.states = ps.adopt(prefix + ".states",
                         Tensor::from(cls.states.shape(), cls.states.vec(), false));
    return in;
}

void Interpreter::resnapshot(const Generator& gen, const Classifier& cls) {
    std::copy(gen.embed.vec().begin(), gen.embed.vec().end(), embed.vec().begin());
    std::copy(cls.topics.vec().begin(), cls.topics.vec().end(), topics.vec().begin());
    std::copy(cls.states.vec().begin(), cls.states.vec().end(), states.vec().begin());
}

Tensor Interpreter::loss(Tape& tape, const Tensor& p_word, const Tensor& y) const {
    Tensor expected = matmul(tape, p_word, embed);       // l x e soft embeddings
    Tensor pooled = mean_rows(tape, expected);           // 1 x e
    Tensor per_topic = add_bias_row(tape, topics, pooled);
    Tensor p_int = softmax(tape, matmul_nt(tape, per_topic, states), 1);
    return cross_entropy(tape, p_int, y);
}

}  // namespace eir
