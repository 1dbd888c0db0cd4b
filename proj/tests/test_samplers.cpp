#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mpflow/mpf_discrete.hpp"
#include "mpflow/oracle.hpp"
#include "mpflow/rng.hpp"
#include "mpflow/samplers.hpp"

using namespace mpf;

namespace {

// Multinomial chi^2 against enumerated cell probabilities; cells with
// expected count below 10 are merged into one bucket. Passes at 3 sigma of
// the chi^2 distribution (mean dof, variance 2 dof).
struct Chi2Result {
    double statistic = 0.0;
    double dof = 0.0;
    bool pass_3sigma() const { return statistic <= dof + 3.0 * std::sqrt(2.0 * dof); }
};

Chi2Result chi2_against(const EnumeratedDistribution& dist, const DiscreteDataset& data) {
    const double n = data.total_weight();
    std::vector<double> observed(dist.probs.size(), 0.0);
    for (std::size_t s = 0; s < data.distinct_count(); ++s)
        observed[state_to_index(data.state(s))] = data.weight(s);

    double stat = 0.0, rest_obs = 0.0, rest_exp = 0.0;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        const double expected = n * dist.probs[i];
        if (expected < 10.0) {
            rest_obs += observed[i];
            rest_exp += expected;
            continue;
        }
        stat += (observed[i] - expected) * (observed[i] - expected) / expected;
        ++cells;
    }
    if (rest_exp > 0.0) {
        stat += (rest_obs - rest_exp) * (rest_obs - rest_exp) / rest_exp;
        ++cells;
    }
    return {stat, static_cast<double>(cells - 1)};
}

std::vector<double> unit_means(const DiscreteDataset& data) {
    std::vector<double> means(data.dim(), 0.0);
    for (std::size_t s = 0; s < data.distinct_count(); ++s)
        for (std::size_t i = 0; i < data.dim(); ++i)
            if (data.state(s)[i]) means[i] += data.weight(s);
    for (double& m : means) m /= data.total_weight();
    return means;
}

}  // namespace

TEST_CASE("gibbs with zero couplings gives independent fair bits") {
    CouplingMatrix zero = random_lattice_glass(2, 3, 0.0, 1);
    ChainConfig cfg{100, 1, 5};
    DiscreteDataset data = gibbs_sample(zero, 100000, cfg);
    const double se = std::sqrt(0.25 / 100000.0);
    for (double m : unit_means(data)) CHECK(std::abs(m - 0.5) <= 3.0 * se);
}

TEST_CASE("gibbs matches enumerated frequencies on a two-unit model") {
    CouplingMatrix J;
    J.d = 2;
    J.support = {{0, 1}};
    J.pair_values = {-0.6};
    J.biases = {0.4, -0.2};
    IsingModel model(J);
    EnumeratedDistribution dist = enumerate_distribution(model, J.pack());

    ChainConfig cfg{1000, 10, 17};
    const std::size_t n = 100000;  // 10^6 sweeps via thinning
    DiscreteDataset data = gibbs_sample(J, n, cfg);

    std::vector<double> observed(4, 0.0);
    for (std::size_t s = 0; s < data.distinct_count(); ++s)
        observed[state_to_index(data.state(s))] = data.weight(s);
    for (std::size_t i = 0; i < 4; ++i) {
        const double p = dist.probs[i];
        const double bound = 3.0 * std::sqrt(n * p * (1.0 - p));
        CHECK(std::abs(observed[i] - n * p) <= bound);
    }
}

TEST_CASE("gibbs activations are half on column-sum-zero glasses") {
    CouplingMatrix glass = random_lattice_glass(3, 3, 1.0, 23);
    ChainConfig cfg{1000, 10, 29};
    const std::size_t n = 100000;
    DiscreteDataset data = gibbs_sample(glass, n, cfg);
    // thinned samples still carry some chain correlation; allow a small
    // effective-sample-size haircut in the standard error
    const double se = std::sqrt(0.25 / (n / 2.0));
    for (double m : unit_means(data)) CHECK(std::abs(m - 0.5) <= 3.0 * se);
}

TEST_CASE("swendsen-wang with zero couplings and fields gives fair bits") {
    CouplingMatrix zero;
    zero.d = 4;
    zero.support = lattice_edges(2, 2);
    zero.pair_values.assign(zero.support.size(), 0.0);
    zero.biases.assign(4, 0.0);

    ChainConfig cfg{100, 1, 31};
    const std::size_t n = 100000;
    DiscreteDataset data = swendsen_wang_sample(zero, n, cfg);
    const double se = std::sqrt(0.25 / n);
    for (double m : unit_means(data)) CHECK(std::abs(m - 0.5) <= 3.0 * se);

    IsingModel model(zero);
    Chi2Result chi2 = chi2_against(enumerate_distribution(model, zero.pack()), data);
    CHECK(chi2.pass_3sigma());
}

TEST_CASE("swendsen-wang matches enumeration on a mixed-sign 2x2 lattice") {
    CouplingMatrix glass = random_lattice_glass(2, 2, 1.0, 37);
    IsingModel model(glass);
    EnumeratedDistribution dist = enumerate_distribution(model, glass.pack());

    ChainConfig cfg{1000, 10, 41};
    DiscreteDataset data = swendsen_wang_sample(glass, 100000, cfg);
    Chi2Result chi2 = chi2_against(dist, data);
    INFO("chi2 ", chi2.statistic, " dof ", chi2.dof);
    CHECK(chi2.pass_3sigma());
}

TEST_CASE("swendsen-wang and gibbs marginals agree on a ferromagnetic 2x3 lattice") {
    CouplingMatrix ferro;
    ferro.d = 6;
    ferro.support = lattice_edges(2, 3);
    ferro.pair_values.assign(ferro.support.size(), -0.4);
    ferro.biases.assign(6, 0.0);
    for (std::size_t p = 0; p < ferro.support.size(); ++p) {
        ferro.biases[ferro.support[p].first] += 0.4;
        ferro.biases[ferro.support[p].second] += 0.4;
    }

    ChainConfig cfg_sw{1000, 10, 43};
    ChainConfig cfg_gibbs{1000, 10, 47};
    const std::size_t n = 100000;
    std::vector<double> m_sw = unit_means(swendsen_wang_sample(ferro, n, cfg_sw));
    std::vector<double> m_gibbs = unit_means(gibbs_sample(ferro, n, cfg_gibbs));
    const double joint_se = std::sqrt(2.0 * 0.25 / (n / 4.0));  // conservative chain haircut
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(m_sw[i] - m_gibbs[i]) <= 3.0 * joint_se);
}

TEST_CASE("both chain samplers leave the enumerated distribution invariant") {
    // kernel-level check for gibbs: every site kernel fixes p-infinity
    CouplingMatrix glass = random_full_glass(6, 1.0, 53);
    IsingModel model(glass);
    ParameterVector theta = glass.pack();
    EnumeratedDistribution dist = enumerate_distribution(model, theta);
    const std::size_t n = 64;

    for (std::size_t site = 0; site < 6; ++site) {
        std::vector<double> pushed(n, 0.0);
        for (std::uint64_t from = 0; from < n; ++from) {
            BinaryState x = state_from_index(from, 6);
            const double gap = on_off_gap(model, x, site, theta);
            const double p_on = conditional_on_probability(gap);
            const std::uint64_t to_on = from | (1u << site);
            const std::uint64_t to_off = from & ~(std::uint64_t{1} << site);
            pushed[to_on] += p_on * dist.probs[from];
            pushed[to_off] += (1.0 - p_on) * dist.probs[from];
        }
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(pushed[i] - dist.probs[i]) <= 1e-10);
    }

    // empirical chi^2 for swendsen-wang on the same small system
    CouplingMatrix small = random_lattice_glass(2, 3, 0.8, 59);
    IsingModel small_model(small);
    ChainConfig cfg{1000, 10, 61};
    DiscreteDataset data = swendsen_wang_sample(small, 100000, cfg);
    Chi2Result chi2 = chi2_against(enumerate_distribution(small_model, small.pack()), data);
    INFO("chi2 ", chi2.statistic, " dof ", chi2.dof);
    CHECK(chi2.pass_3sigma());
}

TEST_CASE("the gibbs conditional is the boltzmann conditional") {
    CouplingMatrix glass = random_full_glass(5, 1.5, 67);
    IsingModel model(glass);
    ParameterVector theta = glass.pack();
    auto rng = make_rng(68);
    std::uniform_int_distribution<int> bit(0, 1);

    for (int rep = 0; rep < 50; ++rep) {
        BinaryState x(5);
        for (auto& b : x.bits) b = static_cast<std::uint8_t>(bit(rng));
        const std::size_t k = rng() % 5;

        const double p_chain = conditional_on_probability(on_off_gap(model, x, k, theta));

        // independent route through the full Boltzmann weights
        BinaryState on = x, off = x;
        on.bits[k] = 1;
        off.bits[k] = 0;
        const double w_on = std::exp(-model.energy(on, theta));
        const double w_off = std::exp(-model.energy(off, theta));
        CHECK(p_chain == doctest::Approx(w_on / (w_on + w_off)).epsilon(1e-12));
    }
}

TEST_CASE("exact sampler basics") {
    CouplingMatrix one;
    one.d = 1;
    one.biases = {0.0};
    IsingModel model(one);

    DiscreteDataset empty = exact_sample(model, one.pack(), 0, 3);
    CHECK(empty.distinct_count() == 0);
    CHECK(empty.total_weight() == 0.0);

    DiscreteDataset coin = exact_sample(model, one.pack(), 100000, 5);
    const double se = std::sqrt(0.25 / 100000.0);
    CHECK(std::abs(unit_means(coin)[0] - 0.5) <= 3.0 * se);
}

TEST_CASE("exact sampler concentrates to the enumerated distribution") {
    CouplingMatrix glass = random_full_glass(8, 0.5, 71);
    IsingModel model(glass);
    EnumeratedDistribution dist = enumerate_distribution(model, glass.pack());

    const std::size_t n = 1000000;
    DiscreteDataset data = exact_sample(model, glass.pack(), n, 73);
    double kl = 0.0;
    for (std::size_t s = 0; s < data.distinct_count(); ++s) {
        const double p_hat = data.weight(s) / data.total_weight();
        kl += p_hat * std::log(p_hat / dist.probs[state_to_index(data.state(s))]);
    }
    CHECK(kl >= 0.0);
    CHECK(kl <= 5e-4);
}

TEST_CASE("identical seeds reproduce identical sample streams") {
    CouplingMatrix glass = random_lattice_glass(2, 3, 1.0, 79);
    ChainConfig cfg{50, 2, 83};
    DiscreteDataset a = gibbs_sample(glass, 500, cfg);
    DiscreteDataset b = gibbs_sample(glass, 500, cfg);
    CHECK(a == b);

    DiscreteDataset sa = swendsen_wang_sample(glass, 500, cfg);
    DiscreteDataset sb = swendsen_wang_sample(glass, 500, cfg);
    CHECK(sa == sb);

    IsingModel model(glass);
    DiscreteDataset ea = exact_sample(model, glass.pack(), 500, 89);
    DiscreteDataset eb = exact_sample(model, glass.pack(), 500, 89);
    CHECK(ea == eb);
}

TEST_CASE("enumeration gate applies to the exact sampler") {
    CouplingMatrix big = random_lattice_glass(5, 5, 1.0, 97);
    IsingModel model(big);
    CHECK_THROWS_AS(exact_sample(model, big.pack(), 10, 1), std::invalid_argument);
}
