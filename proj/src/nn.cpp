#include "eir/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace eir {

double init_bound(int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

Linear Linear::make(ParamStore& ps, const std::string& prefix, int in, int out,
                    std::mt19937_64& rng, bool bias) {
    Linear l;
    const double bound = init_bound(in);
    l.W = ps.create(prefix + ".W", {in, out}, rng, bound);
    if (bias) l.b = ps.create(prefix + ".b", {out}, rng, bound);
    return l;
}

Tensor Linear::forward(Tape& tape, const Tensor& x) const {
    Tensor y = matmul(tape, x, W);
    if (b.defined()) y = add_bias_row(tape, y, b);
    return y;
}

LayerNormP LayerNormP::make(ParamStore& ps, const std::string& prefix, int width) {
    LayerNormP ln;
    ln.gamma = ps.create_const(prefix + ".gamma", {width}, 1.0);
    ln.beta = ps.create_const(prefix + ".beta", {width}, 0.0);
    return ln;
}

FeedForward FeedForward::make(ParamStore& ps, const std::string& prefix, int width, int hidden,
                              std::mt19937_64& rng) {
    FeedForward f;
    f.fc1 = Linear::make(ps, prefix + ".fc1", width, hidden, rng);
    f.fc2 = Linear::make(ps, prefix + ".fc2", hidden, width, rng);
    return f;
}

Tensor FeedForward::forward(Tape& tape, const Tensor& x) const {
    return fc2.forward(tape, relu(tape, fc1.forward(tape, x)));
}

Tensor causal_mask(int len) {
    Tensor m({len, len}, 0.0);
    for (int i = 0; i < len; ++i)
        for (int j = i + 1; j < len; ++j) m.at(i, j) = kMaskValue;
    return m;
}

Tensor visibility_mask(const std::vector<std::vector<uint8_t>>& visible) {
    const int n = static_cast<int>(visible.size());
    Tensor m({n, n}, 0.0);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(visible[i].size()) != n)
            throw std::invalid_argument("visibility mask must be square");
        for (int j = 0; j < n; ++j)
            if (!visible[i][j]) m.at(i, j) = kMaskValue;
    }
    return m;
}

MultiHeadAttention MultiHeadAttention::make(ParamStore& ps, const std::string& prefix, int width,
                                            int heads, std::mt19937_64& rng) {
    if (width % heads != 0)
        throw std::invalid_argument("width " + std::to_string(width) +
                                    " not divisible by head count " + std::to_string(heads));
    MultiHeadAttention m;
    m.heads = heads;
    m.wq = Linear::make(ps, prefix + ".wq", width, width, rng);
    m.wk = Linear::make(ps, prefix + ".wk", width, width, rng);
    m.wv = Linear::make(ps, prefix + ".wv", width, width, rng);
    m.wo = Linear::make(ps, prefix + ".wo", width, width, rng);
    return m;
}

Tensor MultiHeadAttention::forward(Tape& tape, const Tensor& q_in, const Tensor& kv_in,
                                   const Tensor* mask, std::vector<Tensor>* attn_out) const {
    const int width = q_in.cols();
    const int dk = width / heads;
    Tensor Q = wq.forward(tape, q_in);
    Tensor K = wk.forward(tape, kv_in);
    Tensor V = wv.forward(tape, kv_in);
    std::vector<Tensor> head_out;
    head_out.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        Tensor qh = slice_cols(tape, Q, h * dk, dk);
        Tensor kh = slice_cols(tape, K, h * dk, dk);
        Tensor vh = slice_cols(tape, V, h * dk, dk);
        Tensor logits = scale(tape, matmul_nt(tape, qh, kh), 1.0 / std::sqrt(double(dk)));
        if (mask) logits = add(tape, logits, *mask);
        Tensor w = softmax(tape, logits, 1);
        if (attn_out) attn_out->push_back(w);
        head_out.push_back(matmul(tape, w, vh));
    }
    return wo.forward(tape, concat_cols(tape, head_out));
}

EncoderLayer EncoderLayer::make(ParamStore& ps, const std::string& prefix, int width, int heads,
                                int ffn_hidden, std::mt19937_64& rng) {
    EncoderLayer e;
    e.attn = MultiHeadAttention::make(ps, prefix + ".mha", width, heads, rng);
    e.ffn = FeedForward::make(ps, prefix + ".ffn", width, ffn_hidden, rng);
    e.ln1 = LayerNormP::make(ps, prefix + ".ln1", width);
    e.ln2 = LayerNormP::make(ps, prefix + ".ln2", width);
    return e;
}

Tensor EncoderLayer::forward(Tape& tape, const Tensor& x, const Tensor* mask) const {
    Tensor h = ln1.forward(tape, add(tape, x, attn.forward(tape, x, x, mask)));
    return ln2.forward(tape, add(tape, h, ffn.forward(tape, h)));
}

TopicAttention TopicAttention::make(ParamStore& ps, const std::string& prefix, int topics,
                                    int width, std::mt19937_64& rng) {
    TopicAttention t;
    t.Q = ps.create(prefix + ".Q", {topics, width}, rng, init_bound(width));
    return t;
}

Tensor TopicAttention::forward(Tape& tape, const Tensor& H) const {
    Tensor w = softmax(tape, matmul_nt(tape, Q, H), 1);
    return matmul(tape, w, H);
}

Tensor sinusoid_positions(int len, int width) {
    Tensor pe({len, width}, 0.0);
    for (int p = 0; p < len; ++p) {
        for (int i = 0; i < width; i += 2) {
            const double rate = std::pow(10000.0, -double(i) / width);
            pe.at(p, i) = std::sin(p * rate);
            if (i + 1 < width) pe.at(p, i + 1) = std::cos(p * rate);
        }
    }
    return pe;
}

}  // namespace eir
