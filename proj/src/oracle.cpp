#include "mpflow/oracle.hpp"

#include <bit>

#include "mpflow/parallel.hpp"
#include <cmath>
#include <stdexcept>

#include "mpflow/samplers.hpp"

namespace mpf {

namespace {

std::vector<double> enumerate_energies(const DiscreteEnergyModel& model,
                                       std::span<const double> theta) {
    const std::size_t d = model.dim();
    const std::uint64_t n = std::uint64_t{1} << d;
    std::vector<double> energies(n);
    for_each_block(n, 4096, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx)
            energies[idx] = model.energy(state_from_index(idx, d), theta);
    });
    return energies;
}

}  // namespace

EnumeratedDistribution enumerate_distribution(const DiscreteEnergyModel& model,
                                              std::span<const double> theta) {
    const std::size_t d = model.dim();
    if (d > 20) throw std::invalid_argument("enumerate_distribution: d must be <= 20");
    model.check_theta(theta);

    EnumeratedDistribution dist;
    dist.d = d;
    std::vector<double> energies = enumerate_energies(model, theta);
    double m = -energies[0];
    for (double e : energies) m = std::max(m, -e);
    double acc = 0.0;
    for (double e : energies) acc += std::exp(-e - m);
    dist.log_z = m + std::log(acc);
    dist.probs.resize(energies.size());
    for (std::size_t i = 0; i < energies.size(); ++i)
        dist.probs[i] = std::exp(-energies[i] - dist.log_z);
    return dist;
}

FullGamma full_gamma(const DiscreteEnergyModel& model, std::span<const double> theta) {
    const std::size_t d = model.dim();
    if (d > 14) throw std::invalid_argument("full_gamma: d must be <= 14");
    model.check_theta(theta);
    const std::uint64_t n = std::uint64_t{1} << d;
    std::vector<double> energies = enumerate_energies(model, theta);

    FullGamma gamma;
    gamma.d = d;
    gamma.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::uint64_t j = 0; j < n; ++j) {
        double col_sum = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const std::uint64_t i = j ^ (std::uint64_t{1} << k);
            const double rate = std::exp(0.5 * (energies[j] - energies[i]));
            gamma.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rate;
            col_sum += rate;
        }
        gamma.matrix(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = -col_sum;
    }
    return gamma;
}

std::vector<double> propagate(std::span<const double> p0, const FullGamma& gamma, double t) {
    const auto n = gamma.matrix.rows();
    if (static_cast<Eigen::Index>(p0.size()) != n)
        throw std::invalid_argument("propagate: p0 length mismatch");
    if (t < 0.0) throw std::invalid_argument("propagate: t must be >= 0");
    double total = 0.0;
    for (double p : p0) total += p;
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("propagate: p0 must sum to 1");

    Eigen::MatrixXd a = t * gamma.matrix;
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
    a /= std::ldexp(1.0, squarings);

    // Taylor series of exp(a) run to round-off; |a| <= 0.5 so it terminates fast.
    Eigen::MatrixXd expm = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    bool converged = false;
    for (int k = 1; k <= 120; ++k) {
        term = (term * a) / static_cast<double>(k);
        expm += term;
        if (term.cwiseAbs().maxCoeff() <= 1e-20) {
            converged = true;
            break;
        }
    }
    if (!converged) throw std::runtime_error("propagate: series failed to converge");
    for (int s = 0; s < squarings; ++s) expm = expm * expm;

    Eigen::Map<const Eigen::VectorXd> v0(p0.data(), n);
    Eigen::VectorXd pt = expm * v0;
    const double drift = pt.sum() - 1.0;
    if (std::abs(drift) > 1e-9) throw std::runtime_error("propagate: probability drift too large");
    pt /= pt.sum();
    return std::vector<double>(pt.data(), pt.data() + n);
}

double exact_kl(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("exact_kl: length mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (!(q[i] > 0.0)) throw std::invalid_argument("exact_kl: support violation");
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

OptimizeResult exact_ml_fit(const DiscreteEnergyModel& model, const DiscreteDataset& data,
                            std::span<const double> theta0, const OptimizerOptions& opts) {
    const std::size_t d = model.dim();
    if (d > 20) throw std::invalid_argument("exact_ml_fit: d must be <= 20");
    if (data.dim() != d) throw std::invalid_argument("exact_ml_fit: dimension mismatch");
    const std::size_t n_params = model.param_count();
    const std::uint64_t n = std::uint64_t{1} << d;

    Objective nll = [&](std::span<const double> theta) {
        ObjectiveEval out;
        out.gradient.assign(n_params, 0.0);
        const double w_total = data.total_weight();
        double data_energy = 0.0;
        for (std::size_t s = 0; s < data.distinct_count(); ++s) {
            const double w = data.weight(s);
            data_energy += w * model.energy(data.state(s), theta);
            model.add_param_grad(data.state(s), theta, w / w_total, out.gradient);
        }
        EnumeratedDistribution dist = enumerate_distribution(model, theta);
        for (std::uint64_t idx = 0; idx < n; ++idx) {
            if (dist.probs[idx] == 0.0) continue;
            model.add_param_grad(state_from_index(idx, d), theta, -dist.probs[idx], out.gradient);
        }
        out.value = data_energy / w_total + dist.log_z;
        return out;
    };
    return lbfgs_minimize(nll, theta0, opts);
}

ParameterVector finite_diff_grad(const std::function<double(std::span<const double>)>& objective,
                                 std::span<const double> theta, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
    ParameterVector grad(theta.size());
    ParameterVector probe(theta.begin(), theta.end());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + h;
        const double fp = objective(probe);
        probe[i] = orig - h;
        const double fm = objective(probe);
        probe[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

namespace {

Eigen::MatrixXd correlations_from_moments(std::size_t d, const std::vector<double>& mean,
                                          const Eigen::MatrixXd& second) {
    Eigen::MatrixXd corr(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double s = i == j ? mean[i] : second(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s - mean[i] * mean[j];
        }
    }
    return corr;
}

}  // namespace

Eigen::MatrixXd model_pair_correlations(const DiscreteEnergyModel& model,
                                        std::span<const double> theta,
                                        const CorrelationBudget& budget) {
    const std::size_t d = model.dim();
    std::vector<double> mean(d, 0.0);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));

    if (d <= 20 && !budget.force_sampled) {
        EnumeratedDistribution dist = enumerate_distribution(model, theta);
        const std::uint64_t n = std::uint64_t{1} << d;
        for (std::uint64_t idx = 0; idx < n; ++idx) {
            const double p = dist.probs[idx];
            if (p == 0.0) continue;
            for (std::uint64_t b1 = idx; b1; b1 &= b1 - 1) {
                const int i = std::countr_zero(b1);
                mean[static_cast<std::size_t>(i)] += p;
                for (std::uint64_t b2 = b1 & (b1 - 1); b2; b2 &= b2 - 1) {
                    const int j = std::countr_zero(b2);
                    second(i, j) += p;
                    second(j, i) += p;
                }
            }
        }
        return correlations_from_moments(d, mean, second);
    }

    ChainConfig cfg;
    cfg.burn_in = budget.burn_in;
    cfg.thin = 1;
    cfg.seed = budget.seed;
    DiscreteDataset samples = gibbs_sample(model, theta, budget.sweeps, cfg);
    const double w_total = samples.total_weight();
    for (std::size_t s = 0; s < samples.distinct_count(); ++s) {
        const BinaryState& x = samples.state(s);
        const double p = samples.weight(s) / w_total;
        for (std::size_t i = 0; i < d; ++i) {
            if (!x[i]) continue;
            mean[i] += p;
            for (std::size_t j = i + 1; j < d; ++j) {
                if (!x[j]) continue;
                second(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += p;
                second(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) += p;
            }
        }
    }
    return correlations_from_moments(d, mean, second);
}

double ica_mean_log_likelihood(const RealDataset& data, const IcaParameters& J) {
    const std::size_t d = J.dim();
    if (data.d != d) throw std::invalid_argument("ica_mean_log_likelihood: dimension mismatch");
    if (data.rows() == 0) throw std::invalid_argument("ica_mean_log_likelihood: empty dataset");
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J.filters);
    Eigen::MatrixXd u = lu.matrixLU();
    double log_abs_det = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) log_abs_det += std::log(std::abs(u(i, i)));

    double mean_energy = 0.0;
    for (std::size_t r = 0; r < data.rows(); ++r) mean_energy += ica_energy(data.row(r), J);
    mean_energy /= static_cast<double>(data.rows());
    return -mean_energy + log_abs_det - static_cast<double>(d) * std::log(2.0);
}

OptimizeResult ica_ml_fit(const RealDataset& data, const IcaParameters& init,
                          const OptimizerOptions& opts) {
    const std::size_t d = init.dim();
    if (data.d != d) throw std::invalid_argument("ica_ml_fit: dimension mismatch");
    const std::size_t n_rows = data.rows();
    if (n_rows == 0) throw std::invalid_argument("ica_ml_fit: empty dataset");

    Objective nll = [&, d, n_rows](std::span<const double> theta) {
        ObjectiveEval out;
        out.gradient.assign(d * d, 0.0);
        IcaParameters J = unpack_ica(d, theta);

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J.filters);
        Eigen::MatrixXd u = lu.matrixLU();
        double log_abs_det = 0.0;
        for (Eigen::Index i = 0; i < u.rows(); ++i) log_abs_det += std::log(std::abs(u(i, i)));
        if (!std::isfinite(log_abs_det)) {
            out.value = std::numeric_limits<double>::infinity();
            return out;
        }

        double mean_energy = 0.0;
        ParameterVector energy_grad(d * d, 0.0);
        for (std::size_t r = 0; r < n_rows; ++r) {
            mean_energy += ica_energy(data.row(r), J);
            ParameterVector g = ica_param_grad(data.row(r), J);
            for (std::size_t p = 0; p < g.size(); ++p) energy_grad[p] += g[p];
        }
        const double inv_n = 1.0 / static_cast<double>(n_rows);
        mean_energy *= inv_n;

        Eigen::MatrixXd inv_t = lu.inverse().transpose();
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t l = 0; l < d; ++l)
                out.gradient[k * d + l] = energy_grad[k * d + l] * inv_n -
                                          inv_t(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
        out.value = mean_energy - log_abs_det + static_cast<double>(d) * std::log(2.0);
        return out;
    };

    return lbfgs_minimize(nll, init.pack(), opts);
}

}  // namespace mpf
