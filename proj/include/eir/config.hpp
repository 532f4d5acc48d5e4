#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eir/model.hpp"
#include "eir/synthdata.hpp"

namespace eir {

// Flat key=value configuration with section prefixes (world., model., optim.,
// run.). '#' starts a comment. Unknown keys are rejected by name; every field
// is range-checked.
struct RunConfig {
    WorldConfig world;
    ModelDims model;

    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    long steps = 2000;
    int batch = 8;
    int log_every = 100;
    uint64_t seed = 1;
    Arm arm = Arm::mv_t_i_g_ct;
    int eval_samples = 16;     // validation subset scored during training
    long interp_warmup = 0;    // step at which the interpreter re-snapshots
    std::vector<Arm> arms;     // ablation arm list
    std::vector<uint64_t> seeds;  // ablation seeds
    std::string data_dir = "data";
    std::string out_dir = "out";

    void validate() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace eir
