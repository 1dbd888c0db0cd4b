#pragma once

#include "mpflow/dataset.hpp"
#include "mpflow/ising.hpp"
#include "mpflow/model.hpp"

namespace mpf {

struct ChainConfig {
    std::size_t burn_in = 1000;  // discarded sweeps
    std::size_t thin = 10;       // sweeps between kept samples
    std::uint64_t seed = 0;
};

// Sequential single-site heat-bath sweeps in fixed ascending site order;
// site k is set to 1 with probability 1/(1 + exp(gap)) where gap is the
// on-minus-off energy difference. Keeps every `thin`-th post-burn-in state.
DiscreteDataset gibbs_sample(const DiscreteEnergyModel& model, std::span<const double> theta,
                             std::size_t n_samples, const ChainConfig& cfg);
DiscreteDataset gibbs_sample(const CouplingMatrix& J, std::size_t n_samples,
                             const ChainConfig& cfg);

// Swendsen-Wang cluster sweeps on the +/-1 spin representation of the {0,1}
// model. Bonds activate with probability 1 - exp(-2|J~|) only when satisfied
// (valid for either coupling sign); on-site fields are handled by per-cluster
// Metropolis proposals rather than a ghost spin.
DiscreteDataset swendsen_wang_sample(const CouplingMatrix& J, std::size_t n_samples,
                                     const ChainConfig& cfg);

// I.i.d. draws from the enumerated model distribution. Requires d <= 20.
DiscreteDataset exact_sample(const DiscreteEnergyModel& model, std::span<const double> theta,
                             std::size_t n_samples, std::uint64_t seed);
DiscreteDataset exact_sample(const CouplingMatrix& J, std::size_t n_samples, std::uint64_t seed);

}  // namespace mpf
