#pragma once

#include "mpflow/baselines.hpp"
#include "mpflow/io.hpp"
#include "mpflow/metrics.hpp"
#include "mpflow/mpf_continuous.hpp"
#include "mpflow/mpf_discrete.hpp"
#include "mpflow/optimize.hpp"
#include "mpflow/oracle.hpp"
#include "mpflow/samplers.hpp"

namespace mpf {

// One estimator selection with all of its knobs. `name` is one of
// "mpf", "pl", "cd", "mft-tap", "mpf-hmc".
struct EstimatorSpec {
    std::string name = "mpf";
    ConnectivityMode mode = ConnectivityMode::Strict;
    CdConfig cd;
    MftTapConfig mft;
    LeapfrogConfig leapfrog;
    MpfHmcSchedule hmc;
    OptimizerOptions optimizer;
};

struct TrackingOptions {
    double interval_s = 0.5;
    bool track_eps_corr = true;
    CorrelationBudget corr_budget;  // used for model correlations when d > 20
};

// Fits an Ising-family estimator on `data` over the declared support,
// starting from zero parameters; when `truth` is given, eps_J / eps_corr are
// sampled at the tracking interval and reported in the final metrics.
io::FitReport fit_ising_estimator(const EstimatorSpec& spec, const CouplingMatrix& structure,
                                  const DiscreteDataset& data, const CouplingMatrix* truth,
                                  const TrackingOptions& tracking, std::uint64_t seed);

// Fits the ICA model with Hamiltonian-connectivity MPF; reports the exact
// mean train log-likelihood of the estimate (and of the truth, when given).
io::FitReport fit_ica_mpf_hmc(const EstimatorSpec& spec, const RealDataset& data,
                              const IcaParameters* truth, std::uint64_t seed);

// Synthetic ICA data: sources u with unit Laplace density, observations
// x = J^-1 u. Generates a well-conditioned seeded filter matrix.
IcaParameters random_ica_filters(std::size_t d, std::uint64_t seed);
RealDataset sample_ica_data(const IcaParameters& truth, std::size_t n_samples, std::uint64_t seed);

// Measures the MPF objective evaluation time as a function of the batch size
// on a synthetic weak-coupling model with i.i.d. uniform states (so batches
// stay duplicate-free). Single-threaded; each point is the median over
// repetitions sized to dominate timer noise.
struct TimingPoint {
    std::size_t batch_size = 0;
    double seconds = 0.0;
};
std::vector<TimingPoint> mpf_evaluation_timing(const std::vector<std::size_t>& batch_sizes,
                                               std::uint64_t seed);

// R^2 of the least-squares affine fit y = a + b x.
double linear_fit_r2(const std::vector<TimingPoint>& points);

// Named oracle checks used by the CLI: "gradient", "taylor", "convexity",
// "detailed-balance", "stationarity".
struct OracleCheckResult {
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string detail;
};
OracleCheckResult run_oracle_check(const std::string& name, std::size_t d, double sigma2,
                                   std::uint64_t seed);

// CSV rows for bench output: method, elapsed_s, eps_j, eps_corr.
std::string bench_csv(const std::vector<io::FitReport>& reports);

}  // namespace mpf
