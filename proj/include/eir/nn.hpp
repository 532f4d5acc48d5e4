#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eir/params.hpp"
#include "eir/tensor.hpp"

namespace eir {

// Building blocks shared by the encoders, the fusion stack and the decoder.
// Every block registers its parameters under a dotted prefix so checkpoints
// and the per-arm parameter audit can tell modules apart.

struct Linear {
    Tensor W;  // in x out
    Tensor b;  // absent when bias-free
    static Linear make(ParamStore& ps, const std::string& prefix, int in, int out,
                       std::mt19937_64& rng, bool bias = true);
    Tensor forward(Tape& tape, const Tensor& x) const;
};

struct LayerNormP {
    Tensor gamma;
    Tensor beta;
    double eps = 1e-5;
    static LayerNormP make(ParamStore& ps, const std::string& prefix, int width);
    Tensor forward(Tape& tape, const Tensor& x) const { return layer_norm(tape, x, gamma, beta, eps); }
};

struct FeedForward {
    Linear fc1;
    Linear fc2;
    static FeedForward make(ParamStore& ps, const std::string& prefix, int width, int hidden,
                            std::mt19937_64& rng);
    Tensor forward(Tape& tape, const Tensor& x) const;
};

// Additive attention mask: 0 where visible, -1e9 where masked. -1e9 keeps the
// softmax finite while pushing masked weights below 1e-30.
constexpr double kMaskValue = -1e9;
Tensor causal_mask(int len);
Tensor visibility_mask(const std::vector<std::vector<uint8_t>>& visible);

struct MultiHeadAttention {
    Linear wq, wk, wv, wo;
    int heads = 1;
    static MultiHeadAttention make(ParamStore& ps, const std::string& prefix, int width,
                                   int heads, std::mt19937_64& rng);
    // q_in attends over kv_in; mask (if any) is (len_q x len_kv). attn_out,
    // when given, receives the per-head weight matrices.
    Tensor forward(Tape& tape, const Tensor& q_in, const Tensor& kv_in,
                   const Tensor* mask = nullptr, std::vector<Tensor>* attn_out = nullptr) const;
};

// Post-norm transformer encoder layer: LN(x + MHA(x)) then LN(x + FFN(x)).
struct EncoderLayer {
    MultiHeadAttention attn;
    FeedForward ffn;
    LayerNormP ln1, ln2;
    static EncoderLayer make(ParamStore& ps, const std::string& prefix, int width, int heads,
                             int ffn_hidden, std::mt19937_64& rng);
    Tensor forward(Tape& tape, const Tensor& x, const Tensor* mask = nullptr) const;
};

// Pools a variable-length sequence H into n fixed topic rows via learned
// queries: softmax(Q H^T) H.
struct TopicAttention {
    Tensor Q;  // n x e
    static TopicAttention make(ParamStore& ps, const std::string& prefix, int topics, int width,
                               std::mt19937_64& rng);
    Tensor forward(Tape& tape, const Tensor& H) const;
};

// Fixed sine/cosine position table, (len x width), not a parameter.
Tensor sinusoid_positions(int len, int width);

double init_bound(int fan_in);

}  // namespace eir
