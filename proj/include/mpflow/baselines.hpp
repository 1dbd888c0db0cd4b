#pragma once

#include <functional>
#include <string>

#include "mpflow/dataset.hpp"
#include "mpflow/ising.hpp"
#include "mpflow/model.hpp"
#include "mpflow/objective.hpp"

namespace mpf {

// Negative log pseudolikelihood: the joint is replaced by the product of each
// unit's conditional given the rest,
//   value = (1/W) sum_samples w sum_i -log p(x_i | x_-i),
// with the same logistic conditional the Gibbs sampler uses. The analytic
// gradient is returned.
ObjectiveEval pseudolikelihood_objective(const DiscreteEnergyModel& model,
                                         std::span<const double> theta,
                                         const DiscreteDataset& data);

struct CdConfig {
    std::size_t k = 1;          // Gibbs sweeps per reconstruction
    double rate_start = 3.0;    // annealed linearly
    double rate_end = 0.1;
    std::size_t n_updates = 1000;
    std::uint64_t seed = 0;
};

struct CdResult {
    std::vector<ParameterVector> trajectory;  // theta after each update
    std::vector<double> timestamps;           // elapsed seconds per update
};

// Reconstruction hook: maps a data state to its k-step reconstruction under
// the current parameters. The default runs k full sequential Gibbs sweeps
// with a per-(update, sample) derived stream; tests may freeze the chain.
using CdReconstructor = std::function<BinaryState(
    const DiscreteEnergyModel&, std::span<const double> theta, const BinaryState&, std::size_t k,
    std::uint64_t update, std::size_t sample_index, std::uint64_t seed)>;

CdReconstructor gibbs_reconstructor();

// Contrastive divergence: each update contrasts data statistics against
// statistics of one fresh k-sweep reconstruction per distinct data state,
//   theta <- theta - rate * (<dE/dtheta>_data - <dE/dtheta>_recon),
// with the rate annealed linearly over the updates.
CdResult cd_train(const DiscreteEnergyModel& model, std::span<const double> theta0,
                  const DiscreteDataset& data, const CdConfig& cfg,
                  const CdReconstructor& reconstruct = gibbs_reconstructor());

struct MftTapConfig {
    double lambda = 1e-6;   // pseudoinverse regularization
    bool tap_enabled = true;
};

struct MftTapResult {
    CouplingMatrix estimate;  // full pair support
    std::vector<std::string> warnings;
};

// Mean-field inversion of the empirical susceptibility with a regularized
// pseudoinverse A = (X^T X + lambda I)^+ X^T, computed on +/-1 spin
// variables and mapped back to the {0,1} parameterization. When enabled, the
// pair estimates take the second-order (Onsager) correction: the physical
// root of 2 mu_i mu_j K^2 + K + (X^-1)_ij = 0 that is continuous with the
// naive mean-field solution.
MftTapResult mft_tap_fit(const DiscreteDataset& data, const MftTapConfig& cfg);

}  // namespace mpf
