#include "eir/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace eir {

namespace {

std::vector<const SyntheticSample*> train_pointers(const Dataset& ds) {
    std::vector<const SyntheticSample*> out;
    out.reserve(ds.train.size());
    for (const auto& s : ds.train) out.push_back(&s);
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

GraphStore::GraphStore(const Dataset& ds)
    : ds_(&ds), index_(TfIdfIndex::build(train_pointers(ds), ds.vocab.size())) {
    for (const auto* split : {&ds.train, &ds.val, &ds.test})
        for (const auto& s : *split) by_id_[s.id] = &s;
}

const KnowledgeGraph* GraphStore::graph_for(const SyntheticSample& s) {
    auto it = cache_.find(s.id);
    if (it == cache_.end())
        it = cache_.emplace(s.id, build_graph(retrieve_top_eta(s, index_, ds_->cfg.eta), *ds_))
                 .first;
    return &it->second;
}

void GraphStore::update() {
    for (auto& [id, graph] : cache_) {
        auto it = by_id_.find(id);
        if (it != by_id_.end())
            update_graph(graph, retrieve_top_eta(*it->second, index_, ds_->cfg.eta), *ds_);
    }
}

namespace {

double val_bleu4(const EirModel& model, const Dataset& ds, GraphStore& graphs, int cap) {
    const auto& val = ds.val.empty() ? ds.train : ds.val;
    const int n = std::min<int>(cap, static_cast<int>(val.size()));
    if (n == 0) return 0.0;
    BleuStats agg;
    bool any = false;
    for (int i = 0; i < n; ++i) {
        const SyntheticSample& s = val[i];
        ReportTokens out = model.generate_greedy(s, graphs.graph_for(s));
        std::vector<int> body(out.ids.begin() + 1, out.ids.end());
        if (!body.empty() && body.back() == model.gen.eos) body.pop_back();
        if (body.empty()) continue;  // scores zero, contributes nothing
        BleuStats st = bleu_stats(ds.vocab.to_words(body), ds.vocab.to_words(s.report), 4);
        if (!any) {
            agg = st;
            any = true;
        } else {
            agg += st;
        }
    }
    return any ? bleu_from_stats(agg) : 0.0;
}

}  // namespace

TrainResult train_model(EirModel& model, const Dataset& ds, const RunConfig& cfg,
                        const std::string& out_dir, bool write_curves, std::ostream* console) {
    if (ds.train.empty()) throw std::invalid_argument("training split is empty");
    GraphStore graphs(ds);
    AdamOptimizer opt(model.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);

    std::unique_ptr<std::ofstream> log_file, curve_file;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        log_file = std::make_unique<std::ofstream>(out_dir + "/train_log.txt", std::ios::trunc);
        if (write_curves)
            curve_file = std::make_unique<std::ofstream>(out_dir + "/curves.tsv", std::ios::trunc);
        if (curve_file) *curve_file << "step\tL_C\tL_G\tL_I\tL_total\tval_bleu4\n";
    }

    std::mt19937_64 shuffle_rng(cfg.seed);
    std::vector<size_t> order(ds.train.size());
    std::iota(order.begin(), order.end(), size_t{0});
    size_t cursor = order.size();  // forces a shuffle at step 1

    TrainResult result;
    const bool needs_graph = arm_has_graph(model.arm());
    for (long step = 1; step <= cfg.steps; ++step) {
        std::vector<BatchItem> batch;
        batch.reserve(cfg.batch);
        for (int b = 0; b < cfg.batch; ++b) {
            if (cursor >= order.size()) {
                std::shuffle(order.begin(), order.end(), shuffle_rng);
                cursor = 0;
                graphs.update();  // per-epoch graph refresh
            }
            const SyntheticSample& s = ds.train[order[cursor++]];
            batch.push_back({&s, needs_graph ? graphs.graph_for(s) : nullptr});
        }
        if (cfg.interp_warmup > 0 && step == cfg.interp_warmup && model.interp)
            model.interp->resnapshot(model.gen, model.cls);

        LossBundle losses = training_step(model, batch, opt);
        if (step == 1) result.first = losses;
        result.final = losses;

        if (step % cfg.log_every == 0 || step == cfg.steps) {
            TrainLogRow row;
            row.step = step;
            row.losses = losses;
            row.val_bleu4 = val_bleu4(model, ds, graphs, cfg.eval_samples);
            result.log.push_back(row);
            std::ostringstream line;
            line << "step=" << step << " L_C=" << fmt(losses.l_c) << " L_G=" << fmt(losses.l_g)
                 << " L_I=" << fmt(losses.l_i) << " L_total=" << fmt(losses.l_total)
                 << " val_bleu4=" << fmt(row.val_bleu4);
            if (log_file) *log_file << line.str() << '\n' << std::flush;
            if (curve_file)
                *curve_file << step << '\t' << fmt(losses.l_c) << '\t' << fmt(losses.l_g) << '\t'
                            << fmt(losses.l_i) << '\t' << fmt(losses.l_total) << '\t'
                            << fmt(row.val_bleu4) << '\n';
            if (console) *console << line.str() << '\n';
            if (!out_dir.empty()) model.save(out_dir + "/checkpoint.bin");
        }
    }
    if (!out_dir.empty()) model.save(out_dir + "/checkpoint.bin");
    return result;
}

EvalResult score_predictions(const Dataset& ds, const std::vector<SyntheticSample>& samples,
                             const std::vector<std::vector<int>>& generated_reports,
                             const std::vector<std::vector<int>>& classifier_states) {
    if (samples.size() != generated_reports.size() ||
        samples.size() != classifier_states.size())
        throw std::invalid_argument("score_predictions: length mismatch");
    EvalResult r;
    const LabelSchema schema = ds.label_schema();
    BleuStats agg[4];
    bool agg_any = false;
    std::vector<std::vector<int>> pred_states, true_states, cls_states;
    double rouge_sum = 0.0;

    for (size_t i = 0; i < samples.size(); ++i) {
        const SyntheticSample& s = samples[i];
        const Words ref = ds.vocab.to_words(s.report);
        const Words cand = ds.vocab.to_words(generated_reports[i]);

        SampleScore ss;
        ss.id = s.id;
        if (!cand.empty()) {
            for (int n = 1; n <= 4; ++n) ss.bl[n - 1] = bleu(cand, ref, n);
            ss.rgl = rouge_l(cand, ref);
            if (!agg_any) {
                for (int n = 1; n <= 4; ++n) agg[n - 1] = bleu_stats(cand, ref, n);
                agg_any = true;
            } else {
                for (int n = 1; n <= 4; ++n) agg[n - 1] += bleu_stats(cand, ref, n);
            }
        }
        rouge_sum += ss.rgl;
        r.per_sample.push_back(ss);

        std::string joined;
        for (size_t w = 0; w < cand.size(); ++w) {
            if (w) joined += ' ';
            joined += cand[w];
        }
        r.generations.push_back(joined);

        pred_states.push_back(label_report(cand, schema, &r.label_warnings));
        true_states.push_back(s.states);
        cls_states.push_back(classifier_states[i]);
    }
    for (int n = 1; n <= 4; ++n) r.bl[n - 1] = agg_any ? bleu_from_stats(agg[n - 1]) : 0.0;
    r.rgl = samples.empty() ? 0.0 : rouge_sum / samples.size();
    r.ce = clinical_efficacy(pred_states, true_states);
    r.cls = clinical_efficacy(cls_states, true_states);
    return r;
}

EvalResult evaluate_model(const EirModel& model, const Dataset& ds, const std::string& split,
                          GraphStore& graphs, int cap) {
    const std::vector<SyntheticSample>& all = ds.split(split);
    std::vector<SyntheticSample> samples(
        all.begin(),
        cap < 0 ? all.end() : all.begin() + std::min<size_t>(cap, all.size()));
    const bool needs_graph = arm_has_graph(model.arm());

    std::vector<std::vector<int>> reports, states;
    for (const SyntheticSample& s : samples) {
        const KnowledgeGraph* g = needs_graph ? graphs.graph_for(s) : nullptr;
        ReportTokens out = model.generate_greedy(s, g);
        std::vector<int> body(out.ids.begin() + 1, out.ids.end());
        if (!body.empty() && body.back() == model.gen.eos) body.pop_back();
        reports.push_back(std::move(body));
        states.push_back(model.classify_states(s, g));
    }
    return score_predictions(ds, samples, reports, states);
}

void write_eval_outputs(const EvalResult& r, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream scores(out_dir + "/scores.txt", std::ios::trunc);
    scores << "samples=" << r.per_sample.size() << '\n';
    for (int n = 0; n < 4; ++n) scores << "bl" << (n + 1) << '=' << fmt(r.bl[n]) << '\n';
    scores << "rgl=" << fmt(r.rgl) << '\n'
           << "ce_precision=" << fmt(r.ce.precision) << '\n'
           << "ce_recall=" << fmt(r.ce.recall) << '\n'
           << "ce_f1=" << fmt(r.ce.f1) << '\n'
           << "cls_precision=" << fmt(r.cls.precision) << '\n'
           << "cls_recall=" << fmt(r.cls.recall) << '\n'
           << "cls_f1=" << fmt(r.cls.f1) << '\n'
           << "label_warnings=" << r.label_warnings << '\n';

    std::ofstream table(out_dir + "/per_sample.tsv", std::ios::trunc);
    table << "id\tbl1\tbl2\tbl3\tbl4\trgl\n";
    for (const auto& s : r.per_sample)
        table << s.id << '\t' << fmt(s.bl[0]) << '\t' << fmt(s.bl[1]) << '\t' << fmt(s.bl[2])
              << '\t' << fmt(s.bl[3]) << '\t' << fmt(s.rgl) << '\n';

    std::ofstream gen(out_dir + "/generations.txt", std::ios::trunc);
    for (const auto& line : r.generations) gen << line << '\n';
}

double AblationCell::mean() const {
    if (per_seed.empty()) return 0.0;
    return std::accumulate(per_seed.begin(), per_seed.end(), 0.0) / per_seed.size();
}

double AblationCell::spread() const {
    if (per_seed.size() < 2) return 0.0;
    const double m = mean();
    double acc = 0.0;
    for (double v : per_seed) acc += (v - m) * (v - m);
    return std::sqrt(acc / per_seed.size());
}

AblationResult run_ablation(const Dataset& ds, const RunConfig& cfg, std::ostream* console) {
    if (cfg.arms.empty()) throw std::invalid_argument("ablation: run.arms must not be empty");
    if (cfg.seeds.empty()) throw std::invalid_argument("ablation: run.seeds must not be empty");

    AblationResult result;
    result.seeds = cfg.seeds;
    for (Arm arm : cfg.arms) {
        AblationRow row;
        row.arm = arm;
        for (uint64_t seed : cfg.seeds) {
            RunConfig run_cfg = cfg;
            run_cfg.arm = arm;
            run_cfg.seed = seed;
            EirModel model(ds, cfg.model, arm, seed);
            train_model(model, ds, run_cfg, "", false, nullptr);
            GraphStore graphs(ds);
            EvalResult ev = evaluate_model(model, ds, "test", graphs);
            for (int n = 0; n < 4; ++n) row.bl[n].per_seed.push_back(ev.bl[n]);
            row.rgl.per_seed.push_back(ev.rgl);
            if (console)
                *console << "arm=" << arm_name(arm) << " seed=" << seed
                         << " BL-4=" << fmt(ev.bl[3]) << " RG-L=" << fmt(ev.rgl) << '\n';
        }
        result.rows.push_back(std::move(row));
    }

    std::ostringstream os;
    os << "seeds=";
    for (size_t i = 0; i < result.seeds.size(); ++i)
        os << (i ? "," : "") << result.seeds[i];
    os << "\narm\tBL-1\tBL-2\tBL-3\tBL-4\tRG-L\n";
    for (const auto& row : result.rows) {
        os << arm_name(row.arm);
        for (int n = 0; n < 4; ++n)
            os << '\t' << fmt(row.bl[n].mean()) << "±" << fmt(row.bl[n].spread());
        os << '\t' << fmt(row.rgl.mean()) << "±" << fmt(row.rgl.spread()) << '\n';
    }
    result.table = os.str();
    return result;
}

}  // namespace eir
