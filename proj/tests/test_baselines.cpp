#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mpflow/baselines.hpp"
#include "mpflow/oracle.hpp"
#include "mpflow/rng.hpp"
#include "mpflow/samplers.hpp"

using namespace mpf;

TEST_CASE("pseudolikelihood closed forms") {
    CouplingMatrix one;
    one.d = 1;
    one.biases = {0.0};
    IsingModel single(one);
    DiscreteDataset d1(1);
    d1.add(BinaryState{1});
    ObjectiveEval e1 = pseudolikelihood_objective(single, one.pack(), d1);
    CHECK(e1.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    CouplingMatrix two;
    two.d = 2;
    two.support = {{0, 1}};
    two.pair_values = {0.0};
    two.biases = {0.0, 0.0};
    IsingModel pair(two);
    DiscreteDataset d2(2);
    d2.add(BinaryState{1, 0});
    ObjectiveEval e2 = pseudolikelihood_objective(pair, two.pack(), d2);
    CHECK(e2.value == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("pseudolikelihood gradient matches finite differences") {
    CouplingMatrix glass = random_full_glass(6, 1.0, 211);
    IsingModel model(glass);
    DiscreteDataset data = exact_sample(model, glass.pack(), 80, 212);

    ParameterVector theta = glass.pack();
    auto rng = make_rng(213);
    std::normal_distribution<double> jitter(0.0, 0.3);
    for (double& v : theta) v += jitter(rng);

    ObjectiveEval eval = pseudolikelihood_objective(model, theta, data);
    ParameterVector fd = finite_diff_grad(
        [&](std::span<const double> th) {
            return pseudolikelihood_objective(model, th, data).value;
        },
        theta, 1e-5);
    const double scale = std::max(inf_norm(eval.gradient), 1e-12);
    for (std::size_t p = 0; p < fd.size(); ++p)
        CHECK(std::abs(eval.gradient[p] - fd[p]) / scale <= 1e-6);
}

TEST_CASE("pseudolikelihood is convex along random segments") {
    CouplingMatrix glass = random_full_glass(5, 1.0, 221);
    IsingModel model(glass);
    DiscreteDataset data = exact_sample(model, glass.pack(), 60, 222);
    auto value_at = [&](std::span<const double> th) {
        return pseudolikelihood_objective(model, th, data).value;
    };

    auto rng = make_rng(223);
    std::normal_distribution<double> gauss(0.0, 0.6);
    const std::size_t n_params = model.param_count();
    ParameterVector a(n_params), b(n_params), mid(n_params);
    for (int trial = 0; trial < 100; ++trial) {
        for (std::size_t p = 0; p < n_params; ++p) {
            a[p] = gauss(rng);
            b[p] = gauss(rng);
            mid[p] = 0.5 * (a[p] + b[p]);
        }
        CHECK(value_at(mid) <= 0.5 * (value_at(a) + value_at(b)) + 1e-10);
    }
}

TEST_CASE("single-unit pseudolikelihood equals the exact negative log-likelihood") {
    CouplingMatrix one;
    one.d = 1;
    one.biases = {0.0};
    IsingModel model(one);
    DiscreteDataset data(1);
    data.add(BinaryState{1}, 3.0);
    data.add(BinaryState{0}, 1.0);

    for (double b : {-1.5, -0.2, 0.0, 0.7, 2.0}) {
        ParameterVector theta = {b};
        const double pl = pseudolikelihood_objective(model, theta, data).value;
        // exact NLL = <E>_data + log Z
        EnumeratedDistribution dist = enumerate_distribution(model, theta);
        double nll = dist.log_z;
        for (std::size_t s = 0; s < data.distinct_count(); ++s)
            nll += data.weight(s) / data.total_weight() * model.energy(data.state(s), theta);
        CHECK(pl == doctest::Approx(nll).epsilon(1e-12));
    }
}

TEST_CASE("cd with a frozen chain makes exactly zero updates") {
    CouplingMatrix glass = random_full_glass(5, 1.0, 231);
    IsingModel model(glass);
    DiscreteDataset data = exact_sample(model, glass.pack(), 50, 232);

    CdConfig cfg;
    cfg.n_updates = 5;
    CdReconstructor frozen = [](const DiscreteEnergyModel&, std::span<const double>,
                                const BinaryState& x, std::size_t, std::uint64_t, std::size_t,
                                std::uint64_t) { return x; };
    ParameterVector theta0 = glass.pack();
    CdResult res = cd_train(model, theta0, data, cfg, frozen);
    for (const ParameterVector& theta : res.trajectory) CHECK(theta == theta0);
}

TEST_CASE("cd applies the annealed rate schedule to the contrast") {
    // single unit, single data state x=1, reconstruction forced to x=0:
    // contrast = dE(1)/db - dE(0)/db = 1, so each update subtracts the rate.
    CouplingMatrix one;
    one.d = 1;
    one.biases = {0.0};
    IsingModel model(one);
    DiscreteDataset data(1);
    data.add(BinaryState{1});

    CdReconstructor to_zero = [](const DiscreteEnergyModel&, std::span<const double>,
                                 const BinaryState& x, std::size_t, std::uint64_t, std::size_t,
                                 std::uint64_t) {
        BinaryState y = x;
        y.bits[0] = 0;
        return y;
    };
    CdConfig cfg;
    cfg.rate_start = 3.0;
    cfg.rate_end = 0.1;
    cfg.n_updates = 30;
    CdResult res = cd_train(model, ParameterVector{0.0}, data, cfg, to_zero);

    LinearSchedule schedule{3.0, 0.1};
    CHECK(res.trajectory[0][0] == doctest::Approx(-3.0).epsilon(1e-12));
    double expected = 0.0;
    for (std::size_t t = 0; t < cfg.n_updates; ++t) expected -= schedule.rate(t, cfg.n_updates);
    CHECK(res.trajectory.back()[0] == doctest::Approx(expected).epsilon(1e-12));
    // final step used the end rate
    const double last_step = res.trajectory[29][0] - res.trajectory[28][0];
    CHECK(last_step == doctest::Approx(-0.1).epsilon(1e-12));
}

TEST_CASE("cd trajectories are reproducible and timestamps increase") {
    CouplingMatrix glass = random_full_glass(4, 1.0, 241);
    IsingModel model(glass);
    DiscreteDataset data = exact_sample(model, glass.pack(), 40, 242);
    CdConfig cfg;
    cfg.n_updates = 10;
    cfg.seed = 9;

    ParameterVector theta0(model.param_count(), 0.0);
    CdResult a = cd_train(model, theta0, data, cfg);
    CdResult b = cd_train(model, theta0, data, cfg);
    CHECK(a.trajectory == b.trajectory);
    for (std::size_t t = 1; t < a.timestamps.size(); ++t)
        CHECK(a.timestamps[t] > a.timestamps[t - 1]);
}

TEST_CASE("mean cd update aligns with the exact likelihood gradient") {
    CouplingMatrix glass = random_full_glass(6, 0.8, 251);
    IsingModel model(glass);
    DiscreteDataset data = exact_sample(model, glass.pack(), 200, 252);
    const std::size_t n_params = model.param_count();

    // exact NLL gradient at theta = 0: data moments minus model moments
    ParameterVector theta0(n_params, 0.0);
    ParameterVector nll_grad(n_params, 0.0);
    for (std::size_t s = 0; s < data.distinct_count(); ++s)
        model.add_param_grad(data.state(s), theta0, data.weight(s) / data.total_weight(), nll_grad);
    EnumeratedDistribution dist = enumerate_distribution(model, theta0);
    for (std::uint64_t idx = 0; idx < 64; ++idx)
        model.add_param_grad(state_from_index(idx, 6), theta0, -dist.probs[idx], nll_grad);

    // mean single CD update with k = 50 and unit rate, over seeded repeats
    CdConfig cfg;
    cfg.k = 50;
    cfg.rate_start = cfg.rate_end = 1.0;
    cfg.n_updates = 1;
    ParameterVector mean_update(n_params, 0.0);
    const int n_reps = 10000;
    for (int rep = 0; rep < n_reps; ++rep) {
        cfg.seed = static_cast<std::uint64_t>(rep);
        CdResult res = cd_train(model, theta0, data, cfg);
        for (std::size_t p = 0; p < n_params; ++p) mean_update[p] += res.trajectory[0][p];
    }
    for (double& u : mean_update) u /= n_reps;

    // cosine between the mean update and the exact descent direction -grad
    double dot = 0.0, nu = 0.0, ng = 0.0;
    for (std::size_t p = 0; p < n_params; ++p) {
        dot += mean_update[p] * -nll_grad[p];
        nu += mean_update[p] * mean_update[p];
        ng += nll_grad[p] * nll_grad[p];
    }
    const double cosine = dot / std::sqrt(nu * ng);
    INFO("cosine ", cosine);
    CHECK(cosine >= 0.95);
}

TEST_CASE("mft estimates vanish for independent units") {
    CouplingMatrix indep;
    indep.d = 6;
    indep.biases = {0.4, -0.3, 0.8, -0.6, 0.1, -0.9};
    IsingModel model(indep);
    const std::size_t n = 100000;
    DiscreteDataset data = exact_sample(model, indep.pack(), n, 263);

    MftTapConfig cfg;
    MftTapResult res = mft_tap_fit(data, cfg);

    // empirical x-covariance noise propagated through the spin inversion
    std::vector<double> var(6);
    for (std::size_t i = 0; i < 6; ++i) {
        double m = 0.0;
        for (std::size_t s = 0; s < data.distinct_count(); ++s)
            if (data.state(s)[i]) m += data.weight(s);
        m /= data.total_weight();
        var[i] = m * (1.0 - m);
    }
    for (std::size_t p = 0; p < res.estimate.support.size(); ++p) {
        const auto [i, j] = res.estimate.support[p];
        const double chi_noise = 4.0 * std::sqrt(var[i] * var[j] / static_cast<double>(n));
        const double bound = 3.0 * 2.0 * chi_noise / (16.0 * var[i] * var[j]);
        CHECK(std::abs(res.estimate.pair_values[p]) <= bound);
    }
}

TEST_CASE("infinite regularization drives all couplings to zero") {
    CouplingMatrix glass = random_full_glass(5, 1.0, 271);
    IsingModel model(glass);
    DiscreteDataset data = exact_sample(model, glass.pack(), 5000, 272);

    MftTapConfig cfg;
    cfg.lambda = 1e15;
    MftTapResult res = mft_tap_fit(data, cfg);
    for (double v : res.estimate.pair_values) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("mft output ignores sample order and dataset duplication") {
    CouplingMatrix glass = random_full_glass(4, 0.6, 281);
    IsingModel model(glass);
    DiscreteDataset data = exact_sample(model, glass.pack(), 2000, 282);

    MftTapConfig cfg;
    MftTapResult base = mft_tap_fit(data, cfg);

    // duplicate every state's weight; order of insertion reversed
    DiscreteDataset doubled(4);
    for (std::size_t s = data.distinct_count(); s-- > 0;)
        doubled.add(data.state(s), 2.0 * data.weight(s));
    MftTapResult dup = mft_tap_fit(doubled, cfg);

    for (std::size_t p = 0; p < base.estimate.pair_values.size(); ++p)
        CHECK(dup.estimate.pair_values[p] ==
              doctest::Approx(base.estimate.pair_values[p]).epsilon(1e-10));
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(dup.estimate.biases[i] == doctest::Approx(base.estimate.biases[i]).epsilon(1e-10));
}

TEST_CASE("degenerate units produce warnings and zero couplings") {
    DiscreteDataset data(3);
    data.add(BinaryState{1, 0, 1}, 5.0);
    data.add(BinaryState{1, 1, 0}, 5.0);  // unit 0 is always on

    MftTapConfig cfg;
    MftTapResult res = mft_tap_fit(data, cfg);
    CHECK(!res.warnings.empty());
    for (std::size_t p = 0; p < res.estimate.support.size(); ++p) {
        const auto [i, j] = res.estimate.support[p];
        if (i == 0 || j == 0) CHECK(res.estimate.pair_values[p] == 0.0);
    }
}

TEST_CASE("tap recovers weak couplings better than the zero estimate") {
    // high-temperature regime: weak couplings, plenty of exact samples
    CouplingMatrix glass = random_full_glass(8, 0.05, 291);
    IsingModel model(glass);
    DiscreteDataset data = exact_sample(model, glass.pack(), 100000, 292);

    MftTapConfig cfg;
    MftTapResult res = mft_tap_fit(data, cfg);

    double err_tap = 0.0, err_zero = 0.0;
    for (std::size_t p = 0; p < glass.support.size(); ++p) {
        const double diff = glass.pair_values[p] - res.estimate.pair_values[p];
        err_tap += diff * diff;
        err_zero += glass.pair_values[p] * glass.pair_values[p];
    }
    INFO("tap ", err_tap, " zero ", err_zero);
    CHECK(err_tap < 0.5 * err_zero);
}
