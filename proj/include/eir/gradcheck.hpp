#pragma once

#include <functional>
#include <string>
#include <vector>

#include "eir/tensor.hpp"

namespace eir {

// Central finite differences against analytic gradients. The forward closure
// must rebuild the loss from current tensor values on every call.
struct GradCheckResult {
    std::string group;
    double worst_rel = 0.0;   // |analytic - numeric| / max(1, |analytic|, |numeric|)
    size_t probes = 0;
    bool pass(double threshold) const { return worst_rel < threshold; }
};

struct GradCheckOptions {
    double h = 1e-5;
    double threshold = 1e-4;
    int probes_per_tensor = 6;  // sampled scalar slots per tensor; <=0 means all
    uint64_t seed = 17;
};

double gradcheck_rel_err(double analytic, double numeric);

// Compares d(forward)/d(target[i]) for sampled slots i of each target. The
// analytic gradients must already be populated (one backward over the same
// forward). Returns one result per named target group.
std::vector<GradCheckResult> gradcheck(
    const std::function<double()>& forward,
    const std::vector<std::pair<std::string, Tensor>>& targets, const GradCheckOptions& opt);

// Named finite-difference suites behind the gradcheck CLI verb. "ops" probes
// every tensor operation on randomized shapes; the remaining scopes probe the
// parameter groups of a small full-architecture fixture.
struct ScopeReport {
    std::string scope;
    std::vector<GradCheckResult> groups;
    double worst() const;
    bool pass(double threshold) const { return worst() < threshold; }
};

const std::vector<std::string>& gradcheck_scope_names();
ScopeReport run_gradcheck_scope(const std::string& scope, double threshold, uint64_t seed);

}  // namespace eir
