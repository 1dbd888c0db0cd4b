#include "mpflow/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace mpf {

namespace {
std::size_t g_max_threads = std::min<std::size_t>(std::thread::hardware_concurrency(), 8);
}

std::size_t max_threads() { return g_max_threads == 0 ? 1 : g_max_threads; }

void set_max_threads(std::size_t n) { g_max_threads = n == 0 ? 1 : n; }

void for_each_block(std::size_t n, std::size_t block_size,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& work) {
    if (n == 0) return;
    if (block_size == 0) block_size = 1;
    const std::size_t n_blocks = (n + block_size - 1) / block_size;
    const std::size_t n_threads = std::min(max_threads(), n_blocks);

    auto run_block = [&](std::size_t b) {
        const std::size_t begin = b * block_size;
        const std::size_t end = std::min(begin + block_size, n);
        work(b, begin, end);
    };

    if (n_threads <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) run_block(b);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace mpf
