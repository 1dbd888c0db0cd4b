#pragma once

#include <cstddef>
#include <limits>

#include "mpflow/params.hpp"

namespace mpf {

// Numeric bookkeeping for one objective evaluation. `max_exponent` is the
// largest raw argument passed to exp() before clamping; exponents beyond
// +/-kExpClamp are clamped and counted.
struct EvalDiagnostics {
    double max_exponent = -std::numeric_limits<double>::infinity();
    std::size_t term_count = 0;
    std::size_t clamped_terms = 0;
    bool finite_difference_used = false;

    void merge(const EvalDiagnostics& o) {
        if (o.max_exponent > max_exponent) max_exponent = o.max_exponent;
        term_count += o.term_count;
        clamped_terms += o.clamped_terms;
        finite_difference_used = finite_difference_used || o.finite_difference_used;
    }
};

inline constexpr double kExpClamp = 700.0;

struct ObjectiveEval {
    double value = 0.0;
    ParameterVector gradient;
    EvalDiagnostics diagnostics;
};

}  // namespace mpf
