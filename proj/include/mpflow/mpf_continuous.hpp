#pragma once

#include "mpflow/dataset.hpp"
#include "mpflow/model.hpp"
#include "mpflow/objective.hpp"
#include "mpflow/optimize.hpp"

namespace mpf {

// Position/momentum pair in the extended state space.
struct PhaseState {
    std::vector<double> q;
    std::vector<double> v;
};

struct LeapfrogConfig {
    double step_size = 0.1;
    std::size_t n_steps = 10;
};

// Hamiltonian-dynamics connectivity: the transit map runs under theta_h,
// which is held fixed and never differentiated through.
struct HmcConnectivity {
    ParameterVector theta_h;
    LeapfrogConfig config;
};

// One phase point per data row, with momenta drawn from a unit isotropic
// Gaussian; deterministic given the seed.
std::vector<PhaseState> augment_momenta(const RealDataset& data, std::uint64_t seed);

// n_steps leapfrog steps (half-kick, drift, half-kick) under
// H = E(q; theta_h) + v.v/2, followed by momentum negation. The map is an
// involution: applying it twice returns the input up to round-off.
PhaseState leapfrog_transit(const PhaseState& x, const ContinuousEnergyModel& model,
                            std::span<const double> theta_h, const LeapfrogConfig& config);

// Reduced continuous MPF objective under Hamiltonian connectivity:
//   value = (1/M) sum_j exp(0.5 [H(x_j; theta) - H(transit(x_j); theta)]).
// Transits are computed once at construction and reused while theta_h is
// unchanged; eval() only re-evaluates energies at the cached endpoints.
class HmpfObjective {
public:
    HmpfObjective(const ContinuousEnergyModel& model, std::vector<PhaseState> phase_data,
                  HmcConnectivity conn);

    ObjectiveEval eval(std::span<const double> theta) const;
    const std::vector<PhaseState>& transits() const { return transits_; }

private:
    const ContinuousEnergyModel& model_;
    std::vector<PhaseState> phase_data_;
    HmcConnectivity conn_;
    std::vector<PhaseState> transits_;
    std::vector<double> kinetic_gap_;  // v.v/2 - v'.v'/2 per phase point
};

ObjectiveEval hmpf_objective(std::span<const double> theta, const std::vector<PhaseState>& phase_data,
                             const HmcConnectivity& conn, const ContinuousEnergyModel& model);

struct MpfHmcSchedule {
    std::size_t outer_rounds = 10;
    std::size_t inner_steps = 100;  // truncated L-BFGS budget per round
};

struct MpfHmcResult {
    std::vector<ParameterVector> trajectory;  // theta0, then one entry per round
    std::vector<double> round_objectives;
    std::vector<double> round_elapsed_s;
};

// Alternates truncated L-BFGS minimization of the objective with resetting
// theta_h to the current estimate; momenta are redrawn each round from a
// round-derived seed.
MpfHmcResult iterate_mpf_hmc(const ContinuousEnergyModel& model, std::span<const double> theta0,
                             const RealDataset& data, const MpfHmcSchedule& schedule,
                             const LeapfrogConfig& leapfrog, std::uint64_t seed,
                             OptimizerOptions inner_opts = {});

// K_SM = (1/N) sum_x [ 0.5 |grad E|^2 - laplacian E ]. The Laplacian uses the
// model's analytic form when available, otherwise central finite differences
// with h = 1e-4 (recorded in the diagnostics); same for the theta-gradient.
ObjectiveEval score_matching_objective(const ContinuousEnergyModel& model,
                                       std::span<const double> theta, const RealDataset& data);

// Hypercube-connectivity objective
//   (1/N) sum_x integral over the side-epsilon cube of exp(0.5 (E(x) - E(x+a)))
// by tensor-product Gauss-Legendre quadrature. Requires dim <= 2 and at least
// 8 nodes per axis.
double cube_mpf_objective(const ContinuousEnergyModel& model, std::span<const double> theta,
                          const RealDataset& data, double epsilon, std::size_t quad_points);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace mpf
