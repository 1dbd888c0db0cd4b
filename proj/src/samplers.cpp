#include "mpflow/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mpflow/oracle.hpp"
#include "mpflow/rng.hpp"

namespace mpf {

namespace {

BinaryState random_state(std::size_t d, std::mt19937_64& rng) {
    BinaryState x(d);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < d; ++i) x.bits[i] = unit(rng) < 0.5 ? 1 : 0;
    return x;
}

void gibbs_sweep(const DiscreteEnergyModel& model, std::span<const double> theta, BinaryState& x,
                 std::mt19937_64& rng, std::uniform_real_distribution<double>& unit) {
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double gap = on_off_gap(model, x, k, theta);
        const double p_on = conditional_on_probability(gap);
        x.bits[k] = unit(rng) < p_on ? 1 : 0;
    }
}

// Union-find over sites, path-halving.
struct DisjointSets {
    std::vector<std::uint32_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0u);
    }
    std::uint32_t find(std::uint32_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[b] = a;
    }
};

}  // namespace

DiscreteDataset gibbs_sample(const DiscreteEnergyModel& model, std::span<const double> theta,
                             std::size_t n_samples, const ChainConfig& cfg) {
    if (cfg.thin < 1) throw std::invalid_argument("gibbs_sample: thin must be >= 1");
    model.check_theta(theta);
    const std::size_t d = model.dim();
    DiscreteDataset data(d);

    auto rng = make_rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    BinaryState x = random_state(d, rng);

    for (std::size_t s = 0; s < cfg.burn_in; ++s) gibbs_sweep(model, theta, x, rng, unit);
    for (std::size_t kept = 0; kept < n_samples; ++kept) {
        for (std::size_t s = 0; s < cfg.thin; ++s) gibbs_sweep(model, theta, x, rng, unit);
        data.add(x);
    }
    return data;
}

DiscreteDataset gibbs_sample(const CouplingMatrix& J, std::size_t n_samples,
                             const ChainConfig& cfg) {
    IsingModel model(J);
    return gibbs_sample(model, J.pack(), n_samples, cfg);
}

DiscreteDataset swendsen_wang_sample(const CouplingMatrix& J, std::size_t n_samples,
                                     const ChainConfig& cfg) {
    if (cfg.thin < 1) throw std::invalid_argument("swendsen_wang_sample: thin must be >= 1");
    const std::size_t d = J.d;
    const std::size_t n_edges = J.support.size();

    // {0,1} energy in spin variables s = 2x - 1:
    //   E = sum_edges (J_e/2) s_i s_j + sum_i h_i s_i + const,
    //   h_i = J_ii/2 + (1/2) sum_{edges at i} J_e.
    std::vector<double> spin_coupling(n_edges);
    std::vector<double> field(d);
    for (std::size_t i = 0; i < d; ++i) field[i] = 0.5 * J.biases[i];
    for (std::size_t e = 0; e < n_edges; ++e) {
        spin_coupling[e] = 0.5 * J.pair_values[e];
        field[J.support[e].first] += 0.5 * J.pair_values[e];
        field[J.support[e].second] += 0.5 * J.pair_values[e];
    }
    std::vector<double> activation(n_edges);
    for (std::size_t e = 0; e < n_edges; ++e)
        activation[e] = 1.0 - std::exp(-2.0 * std::abs(spin_coupling[e]));

    auto rng = make_rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> s(d);
    for (std::size_t i = 0; i < d; ++i) s[i] = unit(rng) < 0.5 ? 1 : -1;

    std::vector<double> cluster_field(d);
    std::vector<std::uint8_t> flip(d);

    auto sweep = [&] {
        DisjointSets sets(d);
        for (std::size_t e = 0; e < n_edges; ++e) {
            if (spin_coupling[e] == 0.0) continue;
            const auto [i, j] = J.support[e];
            // Bond satisfied when its energy term sits at the lower value.
            const bool satisfied = spin_coupling[e] * s[i] * s[j] < 0.0;
            if (satisfied && unit(rng) < activation[e]) sets.unite(i, j);
        }
        std::fill(cluster_field.begin(), cluster_field.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i) cluster_field[sets.find(static_cast<std::uint32_t>(i))] += field[i] * s[i];
        // Propose a flip of each cluster with probability 1/2, accept with
        // Metropolis on the field energy change (bond terms are unchanged by
        // whole-cluster flips).
        for (std::size_t root = 0; root < d; ++root) {
            if (sets.find(static_cast<std::uint32_t>(root)) != root) {
                flip[root] = 0;
                continue;
            }
            bool do_flip = false;
            if (unit(rng) < 0.5) {
                const double delta_e = -2.0 * cluster_field[root];
                do_flip = delta_e <= 0.0 || unit(rng) < std::exp(-delta_e);
            }
            flip[root] = do_flip ? 1 : 0;
        }
        for (std::size_t i = 0; i < d; ++i)
            if (flip[sets.find(static_cast<std::uint32_t>(i))]) s[i] = -s[i];
    };

    DiscreteDataset data(d);
    for (std::size_t t = 0; t < cfg.burn_in; ++t) sweep();
    BinaryState x(d);
    for (std::size_t kept = 0; kept < n_samples; ++kept) {
        for (std::size_t t = 0; t < cfg.thin; ++t) sweep();
        for (std::size_t i = 0; i < d; ++i) x.bits[i] = s[i] > 0 ? 1 : 0;
        data.add(x);
    }
    return data;
}

DiscreteDataset exact_sample(const DiscreteEnergyModel& model, std::span<const double> theta,
                             std::size_t n_samples, std::uint64_t seed) {
    const std::size_t d = model.dim();
    if (d > 20) throw std::invalid_argument("exact_sample: d must be <= 20");
    EnumeratedDistribution dist = enumerate_distribution(model, theta);
    std::vector<double> cdf(dist.probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        acc += dist.probs[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;

    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    DiscreteDataset data(d);
    for (std::size_t n = 0; n < n_samples; ++n) {
        const double u = unit(rng);
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        const auto idx = static_cast<std::uint64_t>(it - cdf.begin());
        data.add(state_from_index(idx, d));
    }
    return data;
}

DiscreteDataset exact_sample(const CouplingMatrix& J, std::size_t n_samples, std::uint64_t seed) {
    IsingModel model(J);
    return exact_sample(model, J.pack(), n_samples, seed);
}

}  // namespace mpf
