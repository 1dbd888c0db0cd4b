#pragma once

#include <functional>

#include "mpflow/dataset.hpp"
#include "mpflow/model.hpp"
#include "mpflow/objective.hpp"

namespace mpf {

// Which single-bit-flip neighbors of a data state contribute probability-flow
// terms. Strict excludes neighbors that are themselves data states (the
// literal flow out of the data set); AllNeighbors keeps every neighbor, which
// coincides with Strict whenever no two data states are bit-flip adjacent and
// is exactly stationary at the generating parameters for full-support
// weighted data.
enum class ConnectivityMode { Strict, AllNeighbors };

// Objective: value = (1/W) sum_j w_j sum_{i in N(j)} exp(0.5 (E_j - E_i)),
// gradient = (1/2W) sum_j w_j sum_i exp(.) (dE_j - dE_i). One pass computes
// both from bit-flip energy gaps; exponents beyond the overflow guard are
// clamped and counted in the diagnostics.
ObjectiveEval mpf_objective(const DiscreteEnergyModel& model, std::span<const double> theta,
                            const DiscreteDataset& data, ConnectivityMode mode);

// One candidate connection from a data state j to a state `target`:
// the forward connection probability g_ij and the reverse probability g_ji.
struct ConnectionProposal {
    BinaryState target;
    double g_forward = 1.0;
    double g_reverse = 1.0;
};

// Stochastic connectivity: `propose` lists the candidate connections of a
// data state; each is realized independently with probability g_forward, and
// realized terms carry the (g_ji/g_ij)^(1/2) bias correction. Evaluation is
// deterministic given the seed (one derived stream per data state).
struct SampledConnectivity {
    std::function<std::vector<ConnectionProposal>(const BinaryState&)> propose;
    std::uint64_t seed = 0;
};

ObjectiveEval mpf_objective_sampled(const DiscreteEnergyModel& model, std::span<const double> theta,
                                    const DiscreteDataset& data, const SampledConnectivity& conn);

// Proposal function realizing g = `g_value` on every single-bit-flip pair.
std::function<std::vector<ConnectionProposal>(const BinaryState&)> bit_flip_proposals(
    double g_value);

// Infinity norm of the MPF gradient when the data distribution is the exact
// model distribution at theta (full support, AllNeighbors). Detailed balance
// forces this to zero at the generating parameters. Requires dim <= 20.
double stationarity_residual(const DiscreteEnergyModel& model, std::span<const double> theta);

}  // namespace mpf
