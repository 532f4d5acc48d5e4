#include "eir/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace eir {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

long to_long(const std::string& key, const std::string& v) {
    try {
        size_t idx = 0;
        const long out = std::stol(v, &idx);
        if (idx != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": not an integer: '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t idx = 0;
        const double out = std::stod(v, &idx);
        if (idx != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": not a number: '" + v + "'");
    }
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',') {
            if (!trim(cur).empty()) out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "world.seed") cfg.world.seed = static_cast<uint64_t>(to_long(key, value));
        else if (key == "world.corpus") cfg.world.corpus = static_cast<int>(to_long(key, value));
        else if (key == "world.split") {
            const auto parts = split_list(value);
            bool ok = parts.size() == 3;
            if (ok) {
                cfg.world.split_train = static_cast<int>(to_long(key, parts[0]));
                cfg.world.split_val = static_cast<int>(to_long(key, parts[1]));
                cfg.world.split_test = static_cast<int>(to_long(key, parts[2]));
            } else {
                throw std::invalid_argument("config key world.split: expected three percents");
            }
        }
        else if (key == "world.topics") cfg.world.topics = cfg.world.diseases = static_cast<int>(to_long(key, value));
        else if (key == "world.states") cfg.world.states = static_cast<int>(to_long(key, value));
        else if (key == "world.organs") cfg.world.organs = static_cast<int>(to_long(key, value));
        else if (key == "world.image_size") cfg.world.image_size = static_cast<int>(to_long(key, value));
        else if (key == "world.views") cfg.world.views = static_cast<int>(to_long(key, value));
        else if (key == "world.noise") cfg.world.noise = to_double(key, value);
        else if (key == "world.eta") cfg.world.eta = static_cast<int>(to_long(key, value));
        else if (key == "model.width") cfg.model.width = static_cast<int>(to_long(key, value));
        else if (key == "model.heads") cfg.model.heads = static_cast<int>(to_long(key, value));
        else if (key == "model.ct_layers") cfg.model.ct_layers = static_cast<int>(to_long(key, value));
        else if (key == "model.enc_layers") cfg.model.enc_layers = static_cast<int>(to_long(key, value));
        else if (key == "model.dec_layers") cfg.model.dec_layers = static_cast<int>(to_long(key, value));
        else if (key == "model.ffn_mult") cfg.model.ffn_mult = static_cast<int>(to_long(key, value));
        else if (key == "model.patch") cfg.model.patch = static_cast<int>(to_long(key, value));
        else if (key == "optim.lr") cfg.lr = to_double(key, value);
        else if (key == "optim.beta1") cfg.beta1 = to_double(key, value);
        else if (key == "optim.beta2") cfg.beta2 = to_double(key, value);
        else if (key == "optim.eps") cfg.adam_eps = to_double(key, value);
        else if (key == "run.steps") cfg.steps = to_long(key, value);
        else if (key == "run.batch") cfg.batch = static_cast<int>(to_long(key, value));
        else if (key == "run.log_every") cfg.log_every = static_cast<int>(to_long(key, value));
        else if (key == "run.seed") cfg.seed = static_cast<uint64_t>(to_long(key, value));
        else if (key == "run.arm") cfg.arm = arm_from_name(value);
        else if (key == "run.eval_samples") cfg.eval_samples = static_cast<int>(to_long(key, value));
        else if (key == "run.interp_warmup") cfg.interp_warmup = to_long(key, value);
        else if (key == "run.arms") {
            cfg.arms.clear();
            for (const auto& a : split_list(value)) cfg.arms.push_back(arm_from_name(a));
        }
        else if (key == "run.seeds") {
            cfg.seeds.clear();
            for (const auto& s : split_list(value))
                cfg.seeds.push_back(static_cast<uint64_t>(to_long(key, s)));
        }
        else if (key == "run.data") cfg.data_dir = value;
        else if (key == "run.out") cfg.out_dir = value;
        else
            throw std::invalid_argument("unknown config key: " + key);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

void RunConfig::validate() const {
    world.validate();
    model.validate();
    auto check = [](bool ok, const std::string& msg) {
        if (!ok) throw std::invalid_argument("run config: " + msg);
    };
    check(lr > 0.0 && lr < 1.0, "optim.lr must be in (0, 1)");
    check(beta1 >= 0.0 && beta1 < 1.0, "optim.beta1 must be in [0, 1)");
    check(beta2 >= 0.0 && beta2 < 1.0, "optim.beta2 must be in [0, 1)");
    check(adam_eps > 0.0, "optim.eps must be positive");
    check(steps >= 1 && steps <= 10000000, "run.steps must be in 1..1e7");
    check(batch >= 1 && batch <= 1024, "run.batch must be in 1..1024");
    check(log_every >= 1, "run.log_every must be positive");
    check(eval_samples >= 1, "run.eval_samples must be positive");
    check(interp_warmup >= 0 && interp_warmup <= steps,
          "run.interp_warmup must be in 0..run.steps");
    check(!data_dir.empty() && !out_dir.empty(), "run.data and run.out must be non-empty");
    // the image patch grid must cover the blob grid
    check(world.image_size % model.patch == 0, "model.patch must divide world.image_size");
}

}  // namespace eir
