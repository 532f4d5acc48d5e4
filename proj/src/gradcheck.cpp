#include "eir/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace eir {

double gradcheck_rel_err(double analytic, double numeric) {
    const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    return std::abs(analytic - numeric) / denom;
}

std::vector<GradCheckResult> gradcheck(
    const std::function<double()>& forward,
    const std::vector<std::pair<std::string, Tensor>>& targets, const GradCheckOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    std::vector<GradCheckResult> results;
    results.reserve(targets.size());
    for (const auto& [name, t] : targets) {
        GradCheckResult res;
        res.group = name;
        std::vector<double> grad(t.numel(), 0.0);
        if (t.has_grad()) grad = t.grad();

        std::vector<size_t> slots(t.numel());
        std::iota(slots.begin(), slots.end(), size_t{0});
        if (opt.probes_per_tensor > 0 &&
            slots.size() > static_cast<size_t>(opt.probes_per_tensor)) {
            std::shuffle(slots.begin(), slots.end(), rng);
            slots.resize(opt.probes_per_tensor);
        }
        double* data = const_cast<Tensor&>(t).data();
        for (size_t i : slots) {
            const double saved = data[i];
            data[i] = saved + opt.h;
            const double up = forward();
            data[i] = saved - opt.h;
            const double down = forward();
            data[i] = saved;
            const double numeric = (up - down) / (2.0 * opt.h);
            res.worst_rel = std::max(res.worst_rel, gradcheck_rel_err(grad[i], numeric));
            ++res.probes;
        }
        results.push_back(res);
    }
    return results;
}

}  // namespace eir
