#include "mpflow/mpf_discrete.hpp"

#include <cmath>
#include <stdexcept>

#include "mpflow/oracle.hpp"
#include "mpflow/parallel.hpp"
#include "mpflow/rng.hpp"

namespace mpf {

namespace {

struct Partial {
    double value = 0.0;
    ParameterVector gradient;
    EvalDiagnostics diag;
};

inline double guarded_exp(double u, EvalDiagnostics& diag) {
    if (u > diag.max_exponent) diag.max_exponent = u;
    ++diag.term_count;
    if (u > kExpClamp) {
        ++diag.clamped_terms;
        u = kExpClamp;
    } else if (u < -kExpClamp) {
        ++diag.clamped_terms;
        u = -kExpClamp;
    }
    return std::exp(u);
}

constexpr std::size_t kBlockSize = 256;

}  // namespace

ObjectiveEval mpf_objective(const DiscreteEnergyModel& model, std::span<const double> theta,
                            const DiscreteDataset& data, ConnectivityMode mode) {
    if (data.dim() != model.dim()) throw std::invalid_argument("mpf_objective: dimension mismatch");
    model.check_theta(theta);
    const std::size_t d = model.dim();
    const std::size_t n_params = model.param_count();
    const std::size_t n_states = data.distinct_count();
    const double w_total = data.total_weight();

    ObjectiveEval out;
    out.gradient.assign(n_params, 0.0);
    if (n_states == 0 || w_total <= 0.0) return out;

    const std::size_t n_blocks = (n_states + kBlockSize - 1) / kBlockSize;
    std::vector<Partial> partials(n_blocks);

    for_each_block(n_states, kBlockSize, [&](std::size_t b, std::size_t begin, std::size_t end) {
        Partial& part = partials[b];
        part.gradient.assign(n_params, 0.0);
        StateKey scratch;
        for (std::size_t jdx = begin; jdx < end; ++jdx) {
            const BinaryState& x = data.state(jdx);
            const double w = data.weight(jdx);
            for (std::size_t k = 0; k < d; ++k) {
                if (mode == ConnectivityMode::Strict) {
                    scratch = data.key(jdx);
                    flip_key_bit(scratch, k);
                    if (data.contains(scratch)) continue;
                }
                const double delta = model.flip_delta(x, k, theta);
                if (!std::isfinite(delta)) throw std::runtime_error("mpf_objective: non-finite energy gap");
                // E_j - E_i = -delta for the neighbor i reached by flipping bit k.
                const double term = guarded_exp(-0.5 * delta, part.diag);
                part.value += w * term;
                model.add_flip_grad_diff(x, k, theta, 0.5 * w * term, part.gradient);
            }
        }
    });

    for (const Partial& part : partials) {
        out.value += part.value;
        for (std::size_t p = 0; p < n_params; ++p) out.gradient[p] += part.gradient[p];
        out.diagnostics.merge(part.diag);
    }
    out.value /= w_total;
    for (double& g : out.gradient) g /= w_total;
    return out;
}

ObjectiveEval mpf_objective_sampled(const DiscreteEnergyModel& model, std::span<const double> theta,
                                    const DiscreteDataset& data, const SampledConnectivity& conn) {
    if (data.dim() != model.dim())
        throw std::invalid_argument("mpf_objective_sampled: dimension mismatch");
    model.check_theta(theta);
    if (!conn.propose) throw std::invalid_argument("mpf_objective_sampled: no proposal function");
    const std::size_t n_params = model.param_count();
    const std::size_t n_states = data.distinct_count();
    const double w_total = data.total_weight();

    ObjectiveEval out;
    out.gradient.assign(n_params, 0.0);
    if (n_states == 0 || w_total <= 0.0) return out;

    const std::size_t n_blocks = (n_states + kBlockSize - 1) / kBlockSize;
    std::vector<Partial> partials(n_blocks);

    for_each_block(n_states, kBlockSize, [&](std::size_t b, std::size_t begin, std::size_t end) {
        Partial& part = partials[b];
        part.gradient.assign(n_params, 0.0);
        ParameterVector grad_j(n_params), grad_i(n_params);
        for (std::size_t jdx = begin; jdx < end; ++jdx) {
            const BinaryState& x = data.state(jdx);
            const double w = data.weight(jdx);
            auto rng = make_rng(conn.seed, jdx);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            const double e_j = model.energy(x, theta);

            for (const ConnectionProposal& prop : conn.propose(x)) {
                if (!(prop.g_forward > 0.0) || !(prop.g_reverse > 0.0))
                    throw std::invalid_argument("mpf_objective_sampled: proposal probabilities must be > 0");
                if (prop.g_forward > 1.0)
                    throw std::invalid_argument("mpf_objective_sampled: g_forward must be <= 1");
                const double r = unit(rng);
                if (r >= prop.g_forward) continue;

                const double e_i = model.energy(prop.target, theta);
                if (!std::isfinite(e_i) || !std::isfinite(e_j))
                    throw std::runtime_error("mpf_objective_sampled: non-finite energy");
                const double scale = std::sqrt(prop.g_reverse / prop.g_forward);
                const double term = scale * guarded_exp(0.5 * (e_j - e_i), part.diag);
                part.value += w * term;

                std::fill(grad_j.begin(), grad_j.end(), 0.0);
                model.add_param_grad(x, theta, 1.0, grad_j);
                std::fill(grad_i.begin(), grad_i.end(), 0.0);
                model.add_param_grad(prop.target, theta, 1.0, grad_i);
                const double c = 0.5 * w * term;
                for (std::size_t p = 0; p < n_params; ++p)
                    part.gradient[p] += c * (grad_j[p] - grad_i[p]);
            }
        }
    });

    for (const Partial& part : partials) {
        out.value += part.value;
        for (std::size_t p = 0; p < n_params; ++p) out.gradient[p] += part.gradient[p];
        out.diagnostics.merge(part.diag);
    }
    out.value /= w_total;
    for (double& g : out.gradient) g /= w_total;
    return out;
}

std::function<std::vector<ConnectionProposal>(const BinaryState&)> bit_flip_proposals(
    double g_value) {
    return [g_value](const BinaryState& x) {
        std::vector<ConnectionProposal> props;
        props.reserve(x.size());
        for (std::size_t k = 0; k < x.size(); ++k)
            props.push_back({x.flipped(k), g_value, g_value});
        return props;
    };
}

double stationarity_residual(const DiscreteEnergyModel& model, std::span<const double> theta) {
    const std::size_t d = model.dim();
    if (d > 20) throw std::invalid_argument("stationarity_residual: d must be <= 20");
    EnumeratedDistribution dist = enumerate_distribution(model, theta);
    DiscreteDataset data(d);
    const std::uint64_t n = std::uint64_t{1} << d;
    for (std::uint64_t idx = 0; idx < n; ++idx) {
        if (dist.probs[idx] > 0.0) data.add(state_from_index(idx, d), dist.probs[idx]);
    }
    ObjectiveEval eval = mpf_objective(model, theta, data, ConnectivityMode::AllNeighbors);
    return inf_norm(eval.gradient);
}

}  // namespace mpf
