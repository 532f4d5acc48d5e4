// Command-line surface: dataset generation, training, evaluation, gradient
// checking, single-sample generation and the ablation runner.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "eir/config.hpp"
#include "eir/gradcheck.hpp"
#include "eir/model.hpp"
#include "eir/runner.hpp"
#include "eir/synthdata.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

struct CommonArgs {
    std::string config_path;
    std::string out;
    long seed = -1;
    bool overwrite = false;
};

eir::RunConfig load_cfg(const CommonArgs& args) {
    eir::RunConfig cfg = eir::load_config(args.config_path);
    if (!args.out.empty()) cfg.out_dir = args.out;
    return cfg;
}

int cmd_gen_data(const CommonArgs& args) {
    eir::RunConfig cfg = load_cfg(args);
    if (args.seed >= 0) cfg.world.seed = static_cast<uint64_t>(args.seed);
    const std::string dir = args.out.empty() ? cfg.data_dir : args.out;
    if (std::filesystem::exists(dir) && !args.overwrite)
        throw std::invalid_argument("output directory '" + dir +
                                    "' exists; pass --overwrite to replace it");
    eir::Dataset ds = eir::generate_corpus(cfg.world);
    eir::write_dataset(ds, dir);

    std::printf("wrote %s: train=%zu val=%zu test=%zu vocab=%d nodes=%d\n", dir.c_str(),
                ds.train.size(), ds.val.size(), ds.test.size(), ds.vocab.size(),
                ds.base_graph.nodes());
    std::vector<long> positives(ds.cfg.topics, 0);
    long total = 0;
    for (const auto* split : {&ds.train, &ds.val, &ds.test})
        for (const auto& s : *split) {
            for (int t = 0; t < ds.cfg.topics; ++t)
                if (s.states[t] == 0) ++positives[t];
            ++total;
        }
    std::printf("label marginals (positive fraction per topic):\n");
    for (int t = 0; t < ds.cfg.topics; ++t)
        std::printf("  %-14s %.3f\n", ds.disease_terms[t].c_str(),
                    double(positives[t]) / total);
    return kExitOk;
}

int cmd_train(const CommonArgs& args, bool curves) {
    eir::RunConfig cfg = load_cfg(args);
    if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
    eir::Dataset ds = eir::load_dataset(cfg.data_dir);
    eir::EirModel model(ds, cfg.model, cfg.arm, cfg.seed);
    eir::train_model(model, ds, cfg, cfg.out_dir, curves, &std::cout);
    std::printf("checkpoint: %s/checkpoint.bin\n", cfg.out_dir.c_str());
    return kExitOk;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint, const std::string& split) {
    eir::RunConfig cfg = load_cfg(args);
    eir::Dataset ds = eir::load_dataset(cfg.data_dir);
    eir::EirModel model(ds, cfg.model, cfg.arm, cfg.seed);
    model.load(checkpoint.empty() ? cfg.out_dir + "/checkpoint.bin" : checkpoint);
    eir::GraphStore graphs(ds);
    eir::EvalResult r = eir::evaluate_model(model, ds, split, graphs);
    eir::write_eval_outputs(r, cfg.out_dir);
    std::printf(
        "%s: samples=%zu BL-1=%.4f BL-2=%.4f BL-3=%.4f BL-4=%.4f RG-L=%.4f "
        "CE P/R/F1=%.4f/%.4f/%.4f cls F1=%.4f\n",
        split.c_str(), r.per_sample.size(), r.bl[0], r.bl[1], r.bl[2], r.bl[3], r.rgl,
        r.ce.precision, r.ce.recall, r.ce.f1, r.cls.f1);
    return kExitOk;
}

int cmd_generate(const CommonArgs& args, const std::string& checkpoint, const std::string& split,
                 int index) {
    eir::RunConfig cfg = load_cfg(args);
    eir::Dataset ds = eir::load_dataset(cfg.data_dir);
    eir::EirModel model(ds, cfg.model, cfg.arm, cfg.seed);
    model.load(checkpoint.empty() ? cfg.out_dir + "/checkpoint.bin" : checkpoint);
    const auto& samples = ds.split(split);
    if (index < 0 || index >= static_cast<int>(samples.size()))
        throw std::invalid_argument("--index " + std::to_string(index) + " outside split of " +
                                    std::to_string(samples.size()));
    const eir::SyntheticSample& s = samples[index];
    eir::GraphStore graphs(ds);
    eir::ReportTokens out = model.generate_greedy(
        s, eir::arm_has_graph(model.arm()) ? graphs.graph_for(s) : nullptr);
    std::vector<int> body(out.ids.begin() + 1, out.ids.end());
    if (!body.empty() && body.back() == model.gen.eos) body.pop_back();
    std::string text;
    for (const auto& w : ds.vocab.to_words(body)) {
        if (!text.empty()) text += ' ';
        text += w;
    }
    std::printf("sample %d (%s[%d])\n", s.id, split.c_str(), index);
    std::printf("generated: %s\n", text.c_str());
    std::string ref;
    for (const auto& w : ds.vocab.to_words(s.report)) {
        if (!ref.empty()) ref += ' ';
        ref += w;
    }
    std::printf("reference: %s\n", ref.c_str());
    return kExitOk;
}

int cmd_gradcheck(const std::string& scope, double threshold, long seed) {
    std::vector<std::string> scopes;
    if (scope == "all")
        scopes = eir::gradcheck_scope_names();
    else
        scopes.push_back(scope);
    bool all_pass = true;
    for (const std::string& sc : scopes) {
        eir::ScopeReport report = eir::run_gradcheck_scope(
            sc, threshold, seed < 0 ? 17 : static_cast<uint64_t>(seed));
        const bool pass = report.pass(threshold);
        all_pass = all_pass && pass;
        std::printf("scope %-9s worst_rel=%.3e probes=%zu groups=%zu [%s]\n", sc.c_str(),
                    report.worst(),
                    [&] {
                        size_t n = 0;
                        for (const auto& g : report.groups) n += g.probes;
                        return n;
                    }(),
                    report.groups.size(), pass ? "PASS" : "FAIL");
        // per-group detail for anything near or over the threshold
        for (const auto& g : report.groups)
            if (g.worst_rel >= threshold * 0.5)
                std::printf("    %-28s worst_rel=%.3e\n", g.group.c_str(), g.worst_rel);
    }
    return all_pass ? kExitOk : kExitNumeric;
}

int cmd_ablate(const CommonArgs& args) {
    eir::RunConfig cfg = load_cfg(args);
    eir::Dataset ds = eir::load_dataset(cfg.data_dir);
    eir::AblationResult result = eir::run_ablation(ds, cfg, &std::cout);
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream f(cfg.out_dir + "/ablation.txt", std::ios::trunc);
    f << result.table;
    std::printf("%s", result.table.c_str());
    std::printf("table written to %s/ablation.txt\n", cfg.out_dir.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EIR synthetic report-generation workbench"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string checkpoint, split = "test", scope = "all";
    double threshold = 1e-4;
    int index = 0;
    bool curves = false;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        auto* opt = cmd->add_option("--config", args.config_path, "config file");
        if (needs_config) opt->required();
        cmd->add_option("--out", args.out, "output directory override");
        cmd->add_option("--seed", args.seed, "seed override");
        cmd->add_flag("--overwrite", args.overwrite, "replace existing outputs");
    };

    auto* gen_data = app.add_subcommand("gen-data", "generate the synthetic dataset");
    add_common(gen_data);
    auto* train = app.add_subcommand("train", "train a model");
    add_common(train);
    train->add_flag("--curves", curves, "also write a tab-separated loss curve file");
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    add_common(eval);
    eval->add_option("--checkpoint", checkpoint, "checkpoint path (default <out>/checkpoint.bin)");
    eval->add_option("--split", split, "train, val or test");
    auto* generate = app.add_subcommand("generate", "greedy-decode one sample");
    add_common(generate);
    generate->add_option("--checkpoint", checkpoint, "checkpoint path");
    generate->add_option("--split", split, "train, val or test");
    generate->add_option("--index", index, "sample index within the split");
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
    gradcheck->add_option("--scope", scope, "ops, encoders, fusion, decoder, end2end or all");
    gradcheck->add_option("--threshold", threshold, "relative-error pass threshold");
    gradcheck->add_option("--seed", args.seed, "seed override");
    auto* ablate = app.add_subcommand("ablate", "train and score every configured arm");
    add_common(ablate);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_data->parsed()) return cmd_gen_data(args);
        if (train->parsed()) return cmd_train(args, curves);
        if (eval->parsed()) return cmd_eval(args, checkpoint, split);
        if (generate->parsed()) return cmd_generate(args, checkpoint, split, index);
        if (gradcheck->parsed()) return cmd_gradcheck(scope, threshold, args.seed);
        if (ablate->parsed()) return cmd_ablate(args);
    } catch (const eir::NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitValidation;
}
