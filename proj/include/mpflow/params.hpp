#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mpf {

// Flat parameter vector shared by all estimators and optimizers.
using ParameterVector = std::vector<double>;

struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
};

// Maps named model parameter blocks (pair couplings, biases, filter entries)
// onto contiguous ranges of a flat vector.
class ParamLayout {
public:
    ParamLayout() = default;
    explicit ParamLayout(std::vector<ParamBlock> blocks) : blocks_(std::move(blocks)) {
        std::size_t expected = 0;
        for (const auto& b : blocks_) {
            if (b.offset != expected) throw std::invalid_argument("ParamLayout: blocks not contiguous");
            expected += b.size;
        }
        total_ = expected;
    }

    std::size_t total() const { return total_; }
    const std::vector<ParamBlock>& blocks() const { return blocks_; }

    const ParamBlock& block(std::string_view name) const {
        for (const auto& b : blocks_)
            if (b.name == name) return b;
        throw std::invalid_argument("ParamLayout: no block named " + std::string(name));
    }

    std::span<const double> view(std::span<const double> v, std::string_view name) const {
        const ParamBlock& b = block(name);
        return v.subspan(b.offset, b.size);
    }

    std::span<double> view(std::span<double> v, std::string_view name) const {
        const ParamBlock& b = block(name);
        return v.subspan(b.offset, b.size);
    }

private:
    std::vector<ParamBlock> blocks_;
    std::size_t total_ = 0;
};

inline double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        double a = x < 0 ? -x : x;
        if (a > m) m = a;
    }
    return m;
}

}  // namespace mpf
