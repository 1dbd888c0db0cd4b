#include "mpflow/dataset.hpp"

#include <stdexcept>

namespace mpf {

DiscreteDataset::DiscreteDataset(std::size_t d) : d_(d) {
    if (d < 1) throw std::invalid_argument("DiscreteDataset: d must be >= 1");
}

void DiscreteDataset::add(const BinaryState& x, double weight) {
    if (x.size() != d_) throw std::invalid_argument("DiscreteDataset: state dimension mismatch");
    if (!(weight > 0.0)) throw std::invalid_argument("DiscreteDataset: weights must be > 0");
    validate_state(x);
    StateKey key = state_key(x);
    auto it = index_.find(key);
    if (it == index_.end()) {
        index_.emplace(key, states_.size());
        states_.push_back(x);
        keys_.push_back(std::move(key));
        weights_.push_back(weight);
    } else {
        weights_[it->second] += weight;
    }
    total_dirty_ = true;
}

void DiscreteDataset::scale_weights(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("DiscreteDataset: scale must be > 0");
    for (double& w : weights_) w *= c;
    total_dirty_ = true;
}

double DiscreteDataset::total_weight() const {
    if (total_dirty_) {
        double total = 0.0;
        for (double w : weights_) total += w;
        total_weight_ = total;
        total_dirty_ = false;
    }
    return total_weight_;
}

void RealDataset::add_row(std::span<const double> r) {
    if (r.size() != d) throw std::invalid_argument("RealDataset: row dimension mismatch");
    values.insert(values.end(), r.begin(), r.end());
}

}  // namespace mpf
