#pragma once

#include <cstddef>
#include <functional>

namespace mpf {

// Global cap on worker threads used by objective evaluations. Defaults to the
// hardware concurrency (capped at 8). Set to 1 for strictly serial runs, e.g.
// timing measurements.
std::size_t max_threads();
void set_max_threads(std::size_t n);

// Runs work(block, begin, end) over [0, n) split into fixed blocks of
// `block_size`, possibly on several threads. The block partition is a pure
// function of (n, block_size), never of the thread count, so callers that
// store per-block partials and fold them in block order get bit-identical
// results for any thread count.
void for_each_block(std::size_t n, std::size_t block_size,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& work);

}  // namespace mpf
