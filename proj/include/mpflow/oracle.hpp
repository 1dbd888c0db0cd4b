#pragma once

#include <Eigen/Dense>

#include "mpflow/dataset.hpp"
#include "mpflow/ica.hpp"
#include "mpflow/model.hpp"
#include "mpflow/optimize.hpp"

namespace mpf {

// Brute-force ground truth for small systems. Everything here is O(2^d) and
// hard-gated: enumeration requires d <= 20, the dense flow matrix d <= 14.

struct EnumeratedDistribution {
    std::size_t d = 0;
    std::vector<double> probs;  // indexed by state_to_index
    double log_z = 0.0;
};

// probs_i = exp(-E_i) / Z with log-sum-exp stabilized normalization.
EnumeratedDistribution enumerate_distribution(const DiscreteEnergyModel& model,
                                              std::span<const double> theta);

// Dense rate matrix: entry (i, j) is the flow rate from state j to state i,
// exp(0.5 (E_j - E_i)) on single-bit-flip pairs and zero elsewhere; diagonal
// entries make every column sum to zero. Detailed balance holds by
// construction.
struct FullGamma {
    std::size_t d = 0;
    Eigen::MatrixXd matrix;
};

FullGamma full_gamma(const DiscreteEnergyModel& model, std::span<const double> theta);

// p(t) = exp(t Gamma) p0 via scaling-and-squaring with series truncation;
// the output is renormalized only to absorb round-off drift below 1e-12 in
// the total probability.
std::vector<double> propagate(std::span<const double> p0, const FullGamma& gamma, double t);

// KL divergence sum p log(p/q) with 0 log 0 = 0; throws on support violation.
double exact_kl(std::span<const double> p, std::span<const double> q);

// Exact maximum likelihood by minimizing the enumerated negative
// log-likelihood; the analytic gradient is data moments minus enumerated
// model moments.
OptimizeResult exact_ml_fit(const DiscreteEnergyModel& model, const DiscreteDataset& data,
                            std::span<const double> theta0, const OptimizerOptions& opts = {});

// Central finite differences; the universal gradient oracle.
ParameterVector finite_diff_grad(const std::function<double(std::span<const double>)>& objective,
                                 std::span<const double> theta, double h);

// Connected pair correlations <x_i x_j> - <x_i><x_j> of the model
// distribution: exact enumeration when d <= 20, otherwise a seeded Gibbs
// chain with the stated sweep budget. The diagonal holds variances.
struct CorrelationBudget {
    std::size_t sweeps = 200000;  // kept sweeps after burn-in (sampled path)
    std::size_t burn_in = 1000;
    std::uint64_t seed = 0;
    bool force_sampled = false;  // take the Gibbs path even when d <= 20
};

Eigen::MatrixXd model_pair_correlations(const DiscreteEnergyModel& model,
                                        std::span<const double> theta,
                                        const CorrelationBudget& budget = {});

// Exact ICA likelihood: mean over rows of
//   -sum_k |J_k x| + log |det J| - d log 2   (nats per sample).
double ica_mean_log_likelihood(const RealDataset& data, const IcaParameters& J);

// Exact maximum likelihood for the ICA model via L-BFGS on the analytic
// negative log-likelihood.
OptimizeResult ica_ml_fit(const RealDataset& data, const IcaParameters& init,
                          const OptimizerOptions& opts = {});

}  // namespace mpf
