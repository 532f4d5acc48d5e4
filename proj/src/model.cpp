#include "eir/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace eir {

std::string arm_name(Arm arm) {
    switch (arm) {
        case Arm::mv: return "mv";
        case Arm::mv_t: return "mv+t";
        case Arm::mv_g: return "mv+g";
        case Arm::mv_t_g: return "mv+t+g";
        case Arm::mv_t_g_ct: return "mv+t+g+ct";
        case Arm::mv_t_i_g_ct: return "mv+t+i+g+ct";
    }
    return "?";
}

Arm arm_from_name(const std::string& raw) {
    std::string s;
    for (char c : raw) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "mv") return Arm::mv;
    if (s == "mv+t") return Arm::mv_t;
    if (s == "mv+g") return Arm::mv_g;
    if (s == "mv+t+g" || s == "mv+t+g(add)") return Arm::mv_t_g;
    if (s == "mv+t+g+ct") return Arm::mv_t_g_ct;
    if (s == "mv+t+i+g+ct") return Arm::mv_t_i_g_ct;
    throw std::invalid_argument(
        "unknown arm '" + raw +
        "' (expected mv, mv+t, mv+g, mv+t+g(add), mv+t+g+ct, mv+t+i+g+ct)");
}

bool arm_has_text(Arm arm) { return arm != Arm::mv && arm != Arm::mv_g; }
bool arm_has_graph(Arm arm) { return arm != Arm::mv && arm != Arm::mv_t; }
bool arm_has_ct(Arm arm) { return arm == Arm::mv_t_g_ct || arm == Arm::mv_t_i_g_ct; }
bool arm_has_interpreter(Arm arm) { return arm == Arm::mv_t_i_g_ct; }

const std::vector<Arm>& all_arms() {
    static const std::vector<Arm> arms = {Arm::mv,      Arm::mv_t,      Arm::mv_g,
                                          Arm::mv_t_g,  Arm::mv_t_g_ct, Arm::mv_t_i_g_ct};
    return arms;
}

void ModelDims::validate() const {
    auto check = [](bool ok, const std::string& msg) {
        if (!ok) throw std::invalid_argument("model config: " + msg);
    };
    check(width >= 2 && width <= 1024, "width must be in 2..1024");
    check(heads >= 1 && heads <= width && width % heads == 0,
          "heads must divide the model width");
    check(ct_layers >= 0 && ct_layers <= 12, "ct_layers must be in 0..12");
    check(enc_layers >= 1 && enc_layers <= 12, "enc_layers must be in 1..12");
    check(dec_layers >= 1 && dec_layers <= 12, "dec_layers must be in 1..12");
    check(ffn_mult >= 1 && ffn_mult <= 8, "ffn_mult must be in 1..8");
    check(patch >= 1 && patch <= 64, "patch must be in 1..64");
}

EirModel::EirModel(const Dataset& ds, const ModelDims& dims, Arm arm, uint64_t seed)
    : arm_(arm), dims_(dims) {
    dims.validate();
    topics_ = ds.cfg.topics;
    states_ = ds.cfg.states;
    image_size_ = ds.cfg.image_size;
    views_ = ds.cfg.views;
    max_history_ = ds.max_history_len();
    vocab_hash_ = ds.vocab.hash();

    std::mt19937_64 rng(seed);
    const int e = dims.width;
    const int hid = dims.ffn_hidden();

    img = ImageEncoder::make(params_, "img", image_size_, dims.patch, e, topics_, dims.heads,
                             dims.enc_layers, hid, rng);
    if (arm_has_text(arm))
        txt = TextEncoder::make(params_, "txt", ds.vocab.size(), e, topics_, dims.heads,
                                dims.enc_layers, hid, max_history_, rng);
    if (arm_has_graph(arm)) {
        graph_enc = GraphEncoder::make(params_, "graph", ds.base_graph.nodes(), e, dims.heads,
                                       hid, rng);
        if (!arm_has_ct(arm))
            graph_pool = TopicAttention::make(params_, "gpool", topics_, e, rng);
    }
    if (arm_has_ct(arm)) {
        ct_txt = CrossModalBlock::make(params_, "ct_txt", e, dims.heads, dims.ct_layers, hid, rng);
        ct_graph =
            CrossModalBlock::make(params_, "ct_graph", e, dims.heads, dims.ct_layers, hid, rng);
    }
    fusion_ln = LayerNormP::make(params_, "fusion.ln", e);
    cls = Classifier::make(params_, "cls", topics_, states_, e, rng);
    gen = Generator::make(params_, "gen", ds.vocab.size(), e, dims.heads, dims.dec_layers, hid,
                          ds.vocab.bos, ds.vocab.eos, ds.max_report_len(), rng);
    if (arm_has_interpreter(arm)) interp = Interpreter::make(params_, "interp", gen, cls);

    params_.adopt("meta.vocab_hash",
                  Tensor::from({1}, {std::bit_cast<double>(vocab_hash_)}, false));
}

ImageViewSet EirModel::view_set(const SyntheticSample& s) const {
    ImageViewSet vs;
    vs.height = image_size_;
    vs.width = image_size_;
    vs.views = s.views;
    return vs;
}

Tensor EirModel::enriched(Tape& tape, const SyntheticSample& sample,
                          const KnowledgeGraph* graph) const {
    ModalSequence s_img = img.forward(tape, view_set(sample));

    std::optional<ModalSequence> s_txt;
    if (txt) {
        HistoryText h;
        h.tokens = sample.history;
        h.vocab = txt->embed.rows();
        s_txt = txt->forward(tape, h);
    }
    std::optional<ModalSequence> s_graph;
    if (graph_enc) {
        if (!graph) throw std::invalid_argument("arm " + arm_name(arm_) + " needs a graph");
        s_graph = graph_enc->forward(tape, *graph);
    }

    if (arm_has_ct(arm_)) {
        ModalSequence s_it = cross_modal_transformer(tape, s_img, *s_txt, *ct_txt);
        ModalSequence s_ig = cross_modal_transformer(tape, s_img, *s_graph, *ct_graph);
        return entangle(tape, s_it.values, s_ig.values, fusion_ln).S_e;
    }
    std::vector<Tensor> streams = {s_img.values};
    if (s_txt) streams.push_back(s_txt->values);
    if (s_graph) streams.push_back(graph_pool->forward(tape, s_graph->values));
    return add_layernorm_fusion(tape, streams, fusion_ln).S_e;
}

EirModel::Forward EirModel::forward(Tape& tape, const SyntheticSample& sample,
                                    const KnowledgeGraph* graph, ComposeMode mode) const {
    Forward out;
    out.S_e = enriched(tape, sample, graph);
    Tensor y = sample.y_tensor(states_);
    ClassifyResult cr = classify(tape, out.S_e, cls, y);
    out.p = cr.p;
    out.l_c = cr.loss;
    DiseaseEmbedding emb = compose_disease_embedding(tape, cr.p, cls, out.S_e, mode);

    ReportTokens target;
    target.ids.reserve(sample.report.size() + 2);
    target.ids.push_back(gen.bos);
    target.ids.insert(target.ids.end(), sample.report.begin(), sample.report.end());
    target.ids.push_back(gen.eos);
    Generator::TeacherForced tf = gen.teacher_forced(tape, emb.S_d, target);
    out.p_word = tf.p_word;
    out.l_g = tf.loss;

    out.l_i = interp ? interp->loss(tape, tf.p_word, y) : Tensor::scalar(0.0);
    return out;
}

ReportTokens EirModel::generate_greedy(const SyntheticSample& sample,
                                       const KnowledgeGraph* graph) const {
    Tape tape;  // scratch; inference discards the recorded closures
    Tensor S_e = enriched(tape, sample, graph);
    Tensor p = softmax(tape, matmul_nt(tape, S_e, cls.states), 1);
    DiseaseEmbedding emb = compose_disease_embedding(tape, p, cls, S_e, ComposeMode::infer);
    return gen.greedy(tape, emb.S_d);
}

std::vector<int> EirModel::classify_states(const SyntheticSample& sample,
                                           const KnowledgeGraph* graph) const {
    Tape tape;
    Tensor S_e = enriched(tape, sample, graph);
    Tensor p = softmax(tape, matmul_nt(tape, S_e, cls.states), 1);
    std::vector<int> out(p.rows());
    for (int i = 0; i < p.rows(); ++i) {
        int best = 0;
        for (int j = 1; j < p.cols(); ++j)
            if (p.at(i, j) > p.at(i, best)) best = j;
        out[i] = best;
    }
    return out;
}

void EirModel::save(const std::string& path) const { save_checkpoint(params_, path); }

void EirModel::load(const std::string& path) {
    load_checkpoint(params_, path);
    const uint64_t stored = std::bit_cast<uint64_t>(params_.get("meta.vocab_hash").vec()[0]);
    if (stored != vocab_hash_) {
        std::ostringstream os;
        os << "vocabulary mismatch: checkpoint hash " << std::hex << stored << ", dataset hash "
           << vocab_hash_;
        throw std::runtime_error(os.str());
    }
}

AdamOptimizer::AdamOptimizer(ParamStore& store, double lr, double beta1, double beta2,
                             double eps)
    : store_(&store) {
    for (Tensor t : store.trainable()) {
        AdamState st;
        st.lr = lr;
        st.beta1 = beta1;
        st.beta2 = beta2;
        st.eps = eps;
        slots_.emplace_back(t, st);
    }
}

void AdamOptimizer::zero_grads() { store_->zero_grads(); }

void AdamOptimizer::step() {
    for (auto& [param, state] : slots_) adam_step(param, state);
}

LossBundle training_step(EirModel& model, const std::vector<BatchItem>& batch,
                         AdamOptimizer& opt) {
    if (batch.empty()) throw std::invalid_argument("training_step: empty batch");
    opt.zero_grads();
    Tape tape;
    Tensor lc, lg, li;
    for (const BatchItem& item : batch) {
        EirModel::Forward f = model.forward(tape, *item.sample, item.graph, ComposeMode::train);
        lc = lc.defined() ? add(tape, lc, f.l_c) : f.l_c;
        lg = lg.defined() ? add(tape, lg, f.l_g) : f.l_g;
        li = li.defined() ? add(tape, li, f.l_i) : f.l_i;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    lc = scale(tape, lc, inv);
    lg = scale(tape, lg, inv);
    li = scale(tape, li, inv);
    Tensor total = add(tape, add(tape, lc, lg), li);

    LossBundle losses;
    losses.l_c = lc.item();
    losses.l_g = lg.item();
    losses.l_i = li.item();
    losses.l_total = total.item();
    if (!std::isfinite(losses.l_total)) {
        std::ostringstream os;
        os << "non-finite loss: L_C=" << losses.l_c << " L_G=" << losses.l_g
           << " L_I=" << losses.l_i;
        throw NumericError(os.str());
    }
    tape.backward(total);
    opt.step();
    return losses;
}

}  // namespace eir
