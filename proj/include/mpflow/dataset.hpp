#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "mpflow/binary_state.hpp"

namespace mpf {

// Weighted multiset of d-bit states. Duplicates are consolidated at insertion:
// each distinct state appears once, in first-seen order, with accumulated
// weight, so objective evaluations cost O(distinct states) instead of O(M).
class DiscreteDataset {
public:
    explicit DiscreteDataset(std::size_t d);

    void add(const BinaryState& x, double weight = 1.0);

    std::size_t dim() const { return d_; }
    std::size_t distinct_count() const { return states_.size(); }
    // The exact sum of the stored weights, recomputed lazily so that identical
    // stored weights always give the identical total.
    double total_weight() const;

    const BinaryState& state(std::size_t i) const { return states_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    const StateKey& key(std::size_t i) const { return keys_[i]; }

    bool contains(const StateKey& key) const { return index_.count(key) != 0; }

    void scale_weights(double c);

    bool operator==(const DiscreteDataset& o) const {
        return d_ == o.d_ && states_ == o.states_ && weights_ == o.weights_;
    }

private:
    std::size_t d_;
    std::vector<BinaryState> states_;
    std::vector<double> weights_;
    std::vector<StateKey> keys_;
    mutable double total_weight_ = 0.0;
    mutable bool total_dirty_ = false;
    std::unordered_map<StateKey, std::size_t, StateKeyHash> index_;
};

// Rows of continuous observations, stored row-major.
struct RealDataset {
    std::size_t d = 0;
    std::vector<double> values;

    RealDataset() = default;
    explicit RealDataset(std::size_t dim) : d(dim) {}

    std::size_t rows() const { return d == 0 ? 0 : values.size() / d; }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(values.data() + i * d, d);
    }
    void add_row(std::span<const double> r);
};

}  // namespace mpf
