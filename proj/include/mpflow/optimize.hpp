#pragma once

#include <functional>

#include "mpflow/objective.hpp"

namespace mpf {

struct TraceRecord {
    std::size_t iter = 0;
    double objective = 0.0;
    double grad_inf_norm = 0.0;
    double elapsed_s = 0.0;
};

struct OptimizeTrace {
    std::vector<TraceRecord> records;
};

enum class OptimizeStatus {
    Converged,       // gradient or objective-change tolerance reached
    MaxIterations,
    LineSearchFailed,  // best point so far is returned
    NonFiniteGradient,
};

struct OptimizerOptions {
    std::size_t memory = 10;       // stored correction pairs
    std::size_t max_iters = 2000;
    double grad_tol = 1e-7;        // infinity-norm stopping threshold
    double f_tol = 1e-12;          // relative objective-change threshold
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    // Called after every accepted step (and once for the initial point).
    std::function<void(const TraceRecord&, std::span<const double>)> observer;
};

using Objective = std::function<ObjectiveEval(std::span<const double>)>;

struct OptimizeResult {
    ParameterVector theta;
    double objective = 0.0;
    OptimizeTrace trace;
    OptimizeStatus status = OptimizeStatus::Converged;
    EvalDiagnostics diagnostics;  // merged over all evaluations
};

// Limited-memory quasi-Newton minimization: two-loop recursion over `memory`
// correction pairs with a strong-Wolfe line search. Line-search failure
// returns the best point found so far with a flagged status; it never throws.
OptimizeResult lbfgs_minimize(const Objective& objective, std::span<const double> theta0,
                              const OptimizerOptions& opts = {});

// rate(t) interpolates linearly from `start` at update 0 to `end` at update
// n-1 (start when n == 1).
struct LinearSchedule {
    double start = 1.0;
    double end = 1.0;
    double rate(std::size_t t, std::size_t n_updates) const {
        if (n_updates <= 1) return start;
        double frac = static_cast<double>(t) / static_cast<double>(n_updates - 1);
        return start + (end - start) * frac;
    }
};

// Plain gradient descent with a fixed rate schedule and no line search.
OptimizeResult gd_minimize(const Objective& objective, std::span<const double> theta0,
                           const LinearSchedule& schedule, std::size_t n_updates);

}  // namespace mpf
