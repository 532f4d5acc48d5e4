#include <algorithm>
#include <memory>
#include <random>
#include <stdexcept>

#include "eir/gradcheck.hpp"
#include "eir/model.hpp"
#include "eir/synthdata.hpp"

namespace eir {

double ScopeReport::worst() const {
    double w = 0.0;
    for (const auto& g : groups) w = std::max(w, g.worst_rel);
    return w;
}

const std::vector<std::string>& gradcheck_scope_names() {
    static const std::vector<std::string> names = {"ops", "encoders", "fusion", "decoder",
                                                   "end2end"};
    return names;
}

namespace {

Tensor rand_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad = true) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

// A composite expression that routes through every differentiable op.
ScopeReport check_ops(double, uint64_t seed) {
    ScopeReport report;
    report.scope = "ops";
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dim(2, 8);
    for (int rep = 0; rep < 4; ++rep) {
        const int r = dim(rng), s = dim(rng), t = dim(rng);
        Tensor a = rand_tensor({r, s}, rng);
        Tensor b = rand_tensor({s, t}, rng);
        Tensor b_nt = rand_tensor({t, s}, rng);
        Tensor c = rand_tensor({r, s}, rng);
        Tensor gamma = rand_tensor({s}, rng);
        Tensor beta = rand_tensor({s}, rng);
        Tensor bias = rand_tensor({s}, rng);
        Tensor table = rand_tensor({5, t}, rng);
        Tensor wsum = rand_tensor({t, 1}, rng, false);
        Tensor wsum_s = rand_tensor({s, 1}, rng, false);
        std::vector<int> ids = {4, 0, 2};

        // one-hot targets for the softmax + cross-entropy path
        Tensor y({r, t}, 0.0);
        for (int i = 0; i < r; ++i) y.at(i, i % t) = 1.0;

        auto build = [&](Tape& tape) {
            Tensor mm = matmul(tape, a, b);
            Tensor mnt = matmul_nt(tape, a, b_nt);
            Tensor sm = softmax(tape, add(tape, mm, mnt), 1);
            Tensor ce = cross_entropy(tape, sm, y);
            Tensor ln = layer_norm(tape, add_bias_row(tape, c, bias), gamma, beta, 1e-5);
            Tensor mx = emax(tape, relu(tape, a), scale(tape, mul(tape, c, a), 0.7));
            Tensor emb = embed_rows(tape, table, ids);
            Tensor joined = concat_cols(tape, {sub(tape, mx, c), ln});
            Tensor left = slice_cols(tape, joined, 1, s);
            Tensor red = matmul(tape, mean_rows(tape, left), wsum_s);
            Tensor red2 = matmul(tape, mean_rows(tape, sm), wsum);
            Tensor red3 = matmul(tape, mean_rows(tape, emb), wsum);
            return add(tape, add(tape, add(tape, red, red2), red3), ce);
        };

        Tape tape;
        tape.backward(build(tape));
        auto forward = [&]() {
            Tape inner;
            return build(inner).item();
        };
        GradCheckOptions opt;
        opt.probes_per_tensor = 0;
        opt.seed = seed + rep;
        const std::string tag = "rep" + std::to_string(rep) + ".";
        for (auto& res : gradcheck(forward,
                                   {{tag + "a", a},
                                    {tag + "b", b},
                                    {tag + "b_nt", b_nt},
                                    {tag + "c", c},
                                    {tag + "gamma", gamma},
                                    {tag + "beta", beta},
                                    {tag + "bias", bias},
                                    {tag + "table", table}},
                                   opt))
            report.groups.push_back(std::move(res));
    }
    return report;
}

struct ModelFixture {
    Dataset ds;
    std::unique_ptr<EirModel> model;
    std::vector<KnowledgeGraph> graphs;
    std::vector<const SyntheticSample*> samples;

    static ModelFixture make(uint64_t seed, int batch) {
        ModelFixture fx;
        WorldConfig cfg;
        cfg.seed = seed;
        cfg.corpus = 10;
        cfg.split_train = 80;
        cfg.split_val = 10;
        cfg.split_test = 10;
        cfg.topics = cfg.diseases = 4;
        cfg.organs = 2;
        cfg.states = 4;
        cfg.image_size = 8;
        cfg.views = 2;
        cfg.eta = 2;
        fx.ds = generate_corpus(cfg);

        ModelDims dims;
        dims.width = 16;
        dims.heads = 2;
        dims.ct_layers = 2;
        dims.enc_layers = 2;
        dims.dec_layers = 2;
        dims.ffn_mult = 2;
        dims.patch = 4;
        fx.model = std::make_unique<EirModel>(fx.ds, dims, Arm::mv_t_i_g_ct, seed + 1);

        std::vector<const SyntheticSample*> corpus;
        for (const auto& s : fx.ds.train) corpus.push_back(&s);
        TfIdfIndex index = TfIdfIndex::build(corpus, fx.ds.vocab.size());
        for (int i = 0; i < batch; ++i) {
            const SyntheticSample& s = fx.ds.train[i];
            fx.graphs.push_back(build_graph(retrieve_top_eta(s, index, cfg.eta), fx.ds));
            fx.samples.push_back(&s);
        }
        return fx;
    }

    double forward_loss() const {
        Tape tape;
        Tensor total;
        for (size_t i = 0; i < samples.size(); ++i) {
            EirModel::Forward f =
                model->forward(tape, *samples[i], &graphs[i], ComposeMode::train);
            Tensor l = add(tape, add(tape, f.l_c, f.l_g), f.l_i);
            total = total.defined() ? add(tape, total, l) : l;
        }
        return scale(tape, total, 1.0 / samples.size()).item();
    }

    void backward_once() const {
        Tape tape;
        Tensor total;
        for (size_t i = 0; i < samples.size(); ++i) {
            EirModel::Forward f =
                model->forward(tape, *samples[i], &graphs[i], ComposeMode::train);
            Tensor l = add(tape, add(tape, f.l_c, f.l_g), f.l_i);
            total = total.defined() ? add(tape, total, l) : l;
        }
        tape.backward(scale(tape, total, 1.0 / samples.size()));
    }
};

ScopeReport check_model_scope(const std::string& scope, uint64_t seed) {
    const int batch = scope == "end2end" ? 1 : 2;
    ModelFixture fx = ModelFixture::make(seed, batch);
    fx.model->params().zero_grads();
    fx.backward_once();

    const std::vector<std::string> prefixes =
        scope == "encoders" ? std::vector<std::string>{"img.", "txt.", "graph."}
        : scope == "fusion" ? std::vector<std::string>{"ct_txt.", "ct_graph.", "fusion."}
        : scope == "decoder" ? std::vector<std::string>{"cls.", "gen."}
                             : std::vector<std::string>{};  // end2end probes everything

    std::vector<std::pair<std::string, Tensor>> targets;
    for (const auto& [name, t] : fx.model->params().entries()) {
        if (!t.requires_grad()) continue;
        if (!prefixes.empty() &&
            std::none_of(prefixes.begin(), prefixes.end(),
                         [&](const std::string& p) { return name.rfind(p, 0) == 0; }))
            continue;
        targets.emplace_back(name, t);
    }

    GradCheckOptions opt;
    opt.probes_per_tensor = scope == "end2end" ? 2 : 4;
    opt.seed = seed;
    ScopeReport report;
    report.scope = scope;
    report.groups = gradcheck([&fx] { return fx.forward_loss(); }, targets, opt);
    return report;
}

}  // namespace

ScopeReport run_gradcheck_scope(const std::string& scope, double threshold, uint64_t seed) {
    (void)threshold;
    if (scope == "ops") return check_ops(threshold, seed);
    const auto& names = gradcheck_scope_names();
    if (std::find(names.begin(), names.end(), scope) == names.end())
        throw std::invalid_argument("unknown gradcheck scope: " + scope);
    return check_model_scope(scope, seed);
}

}  // namespace eir
