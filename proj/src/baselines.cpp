#include "mpflow/baselines.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mpflow/optimize.hpp"
#include "mpflow/parallel.hpp"
#include "mpflow/rng.hpp"

namespace mpf {

namespace {

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr std::size_t kBlockSize = 256;

}  // namespace

ObjectiveEval pseudolikelihood_objective(const DiscreteEnergyModel& model,
                                         std::span<const double> theta,
                                         const DiscreteDataset& data) {
    if (data.dim() != model.dim())
        throw std::invalid_argument("pseudolikelihood_objective: dimension mismatch");
    model.check_theta(theta);
    const std::size_t d = model.dim();
    const std::size_t n_params = model.param_count();
    const std::size_t n_states = data.distinct_count();
    const double w_total = data.total_weight();

    ObjectiveEval out;
    out.gradient.assign(n_params, 0.0);
    if (n_states == 0 || w_total <= 0.0) return out;

    struct Partial {
        double value = 0.0;
        ParameterVector gradient;
        EvalDiagnostics diag;
    };
    const std::size_t n_blocks = (n_states + kBlockSize - 1) / kBlockSize;
    std::vector<Partial> partials(n_blocks);

    for_each_block(n_states, kBlockSize, [&](std::size_t b, std::size_t begin, std::size_t end) {
        Partial& part = partials[b];
        part.gradient.assign(n_params, 0.0);
        BinaryState off(d);
        for (std::size_t sdx = begin; sdx < end; ++sdx) {
            const BinaryState& x = data.state(sdx);
            const double w = data.weight(sdx);
            off = x;
            for (std::size_t i = 0; i < d; ++i) {
                // gap = E(x_i = 1) - E(x_i = 0), evaluated from the bit-off state
                // so the same flip primitive supplies value and gradient.
                off.bits[i] = 0;
                const double gap = model.flip_delta(off, i, theta);
                // -log p(x_i | x_-i) = softplus(gap) - (1 - x_i) gap
                part.value += w * (softplus(gap) - (x[i] ? 0.0 : gap));
                ++part.diag.term_count;
                const double coeff = w * (logistic(gap) - (x[i] ? 0.0 : 1.0));
                // d(gap)/dtheta = -(dE(off) - dE(flip_i off))
                model.add_flip_grad_diff(off, i, theta, -coeff, part.gradient);
                off.bits[i] = x[i];
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

CdReconstructor gibbs_reconstructor() {
    return [](const DiscreteEnergyModel& model, std::span<const double> theta,
              const BinaryState& start, std::size_t k, std::uint64_t update,
              std::size_t sample_index, std::uint64_t seed) {
        auto rng = make_rng(mix_seed(seed, update), sample_index);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        BinaryState x = start;
        for (std::size_t sweep = 0; sweep < k; ++sweep) {
            for (std::size_t site = 0; site < x.size(); ++site) {
                const double gap = on_off_gap(model, x, site, theta);
                x.bits[site] = unit(rng) < conditional_on_probability(gap) ? 1 : 0;
            }
        }
        return x;
    };
}

CdResult cd_train(const DiscreteEnergyModel& model, std::span<const double> theta0,
                  const DiscreteDataset& data, const CdConfig& cfg,
                  const CdReconstructor& reconstruct) {
    if (data.dim() != model.dim()) throw std::invalid_argument("cd_train: dimension mismatch");
    model.check_theta(theta0);
    if (cfg.k < 1) throw std::invalid_argument("cd_train: k must be >= 1");
    if (!(cfg.rate_start >= cfg.rate_end) || !(cfg.rate_end > 0.0))
        throw std::invalid_argument("cd_train: need rate_start >= rate_end > 0");

    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n_params = model.param_count();
    const std::size_t n_states = data.distinct_count();
    const double w_total = data.total_weight();
    const LinearSchedule schedule{cfg.rate_start, cfg.rate_end};

    CdResult res;
    res.trajectory.reserve(cfg.n_updates);
    res.timestamps.reserve(cfg.n_updates);
    ParameterVector theta(theta0.begin(), theta0.end());

    const std::size_t n_blocks = (n_states + kBlockSize - 1) / kBlockSize;
    std::vector<ParameterVector> partials(n_blocks);

    for (std::uint64_t t = 0; t < cfg.n_updates; ++t) {
        for_each_block(n_states, kBlockSize, [&](std::size_t b, std::size_t begin, std::size_t end) {
            ParameterVector& part = partials[b];
            part.assign(n_params, 0.0);
            for (std::size_t sdx = begin; sdx < end; ++sdx) {
                const double w = data.weight(sdx);
                model.add_param_grad(data.state(sdx), theta, w, part);
                BinaryState recon = reconstruct(model, theta, data.state(sdx), cfg.k, t, sdx, cfg.seed);
                model.add_param_grad(recon, theta, -w, part);
            }
        });
        const double rate = schedule.rate(t, cfg.n_updates);
        for (std::size_t b = 0; b < n_blocks; ++b)
            for (std::size_t p = 0; p < n_params; ++p) theta[p] -= rate * partials[b][p] / w_total;

        res.trajectory.push_back(theta);
        double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!res.timestamps.empty() && elapsed <= res.timestamps.back())
            elapsed = res.timestamps.back() + 1e-9;
        res.timestamps.push_back(elapsed);
    }
    return res;
}

MftTapResult mft_tap_fit(const DiscreteDataset& data, const MftTapConfig& cfg) {
    if (!(cfg.lambda >= 0.0)) throw std::invalid_argument("mft_tap_fit: lambda must be >= 0");
    if (data.total_weight() < 2.0 || data.distinct_count() < 2)
        throw std::invalid_argument("mft_tap_fit: need at least two samples");
    const std::size_t d = data.dim();
    const auto di = [](std::size_t i) { return static_cast<Eigen::Index>(i); };

    MftTapResult res;
    res.estimate.d = d;
    res.estimate.support = all_pairs(d);
    res.estimate.pair_values.assign(res.estimate.support.size(), 0.0);
    res.estimate.biases.assign(d, 0.0);

    // Empirical means and susceptibility on x, then on spins s = 2x - 1.
    std::vector<double> mean(d, 0.0);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(di(d), di(d));
    const double w_total = data.total_weight();
    for (std::size_t sdx = 0; sdx < data.distinct_count(); ++sdx) {
        const BinaryState& x = data.state(sdx);
        const double p = data.weight(sdx) / w_total;
        for (std::size_t i = 0; i < d; ++i) {
            if (!x[i]) continue;
            mean[i] += p;
            second(di(i), di(i)) += p;
            for (std::size_t j = i + 1; j < d; ++j) {
                if (!x[j]) continue;
                second(di(i), di(j)) += p;
                second(di(j), di(i)) += p;
            }
        }
    }

    std::vector<bool> valid(d);
    for (std::size_t i = 0; i < d; ++i) {
        valid[i] = mean[i] > 0.0 && mean[i] < 1.0;
        if (!valid[i])
            res.warnings.push_back("unit " + std::to_string(i) +
                                   " has degenerate empirical mean; couplings set to 0");
    }
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < d; ++i)
        if (valid[i]) active.push_back(i);
    const std::size_t m = active.size();
    if (m == 0) return res;

    Eigen::VectorXd mu(di(m));  // spin means
    Eigen::MatrixXd chi(di(m), di(m));
    for (std::size_t a = 0; a < m; ++a) {
        mu(di(a)) = 2.0 * mean[active[a]] - 1.0;
        for (std::size_t b = 0; b < m; ++b) {
            const double cov_x = second(di(active[a]), di(active[b])) - mean[active[a]] * mean[active[b]];
            chi(di(a), di(b)) = 4.0 * cov_x;
        }
    }

    // A = (chi^T chi + lambda I)^+ chi^T, the regularized pseudoinverse.
    Eigen::MatrixXd gram = chi.transpose() * chi;
    gram.diagonal().array() += cfg.lambda;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const double tol = 1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    Eigen::VectorXd inv_vals(di(m));
    for (std::size_t a = 0; a < m; ++a) {
        const double v = eig.eigenvalues()(di(a));
        inv_vals(di(a)) = std::abs(v) > tol ? 1.0 / v : 0.0;
    }
    Eigen::MatrixXd chi_inv =
        eig.eigenvectors() * inv_vals.asDiagonal() * eig.eigenvectors().transpose() * chi.transpose();

    // Spin couplings K: naive mean field K_ij = -(chi^-1)_ij, optionally
    // corrected by the physical root of 2 a K^2 + K + c = 0, a = mu_i mu_j,
    // c = (chi^-1)_ij.
    Eigen::MatrixXd k_spin = Eigen::MatrixXd::Zero(di(m), di(m));
    std::size_t tap_fallbacks = 0;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            const double c = 0.5 * (chi_inv(di(a), di(b)) + chi_inv(di(b), di(a)));
            double k = -c;
            if (cfg.tap_enabled) {
                const double prod = mu(di(a)) * mu(di(b));
                if (std::abs(prod) > 1e-12) {
                    const double disc = 1.0 - 8.0 * prod * c;
                    if (disc >= 0.0) {
                        k = (-1.0 + std::sqrt(disc)) / (4.0 * prod);
                    } else {
                        ++tap_fallbacks;
                    }
                }
            }
            k_spin(di(a), di(b)) = k;
            k_spin(di(b), di(a)) = k;
        }
    }
    if (tap_fallbacks > 0)
        res.warnings.push_back(std::to_string(tap_fallbacks) +
                               " pair(s) had no real TAP root; naive mean-field value kept");

    // Fields from the mean-field self-consistency of the means,
    // mu_i = tanh(b_i + sum_j K_ij mu_j [- TAP reaction term]).
    Eigen::VectorXd b_spin(di(m));
    for (std::size_t a = 0; a < m; ++a) {
        double h = std::atanh(mu(di(a)));
        for (std::size_t b = 0; b < m; ++b) {
            if (b == a) continue;
            h -= k_spin(di(a), di(b)) * mu(di(b));
            if (cfg.tap_enabled) {
                const double kk = k_spin(di(a), di(b));
                h += mu(di(a)) * kk * kk * (1.0 - mu(di(b)) * mu(di(b)));
            }
        }
        b_spin(di(a)) = h;
    }

    // Map p(s) ~ exp(sum K s s + sum b s) back to the {0,1} energy
    // E = sum_pairs 2 J_ij x_i x_j + sum_i J_ii x_i:
    // spin form has pair coefficient -K = J_ij/2 and field -b = h_i,
    // with h_i = J_ii/2 + (1/2) sum_j J_ij.
    std::vector<std::size_t> slot(d, m);
    for (std::size_t a = 0; a < m; ++a) slot[active[a]] = a;
    std::vector<double> pair_row_sum(d, 0.0);
    for (std::size_t p = 0; p < res.estimate.support.size(); ++p) {
        const auto [i, j] = res.estimate.support[p];
        if (!valid[i] || !valid[j]) continue;
        const double j_pair = -2.0 * k_spin(di(slot[i]), di(slot[j]));
        res.estimate.pair_values[p] = j_pair;
        pair_row_sum[i] += j_pair;
        pair_row_sum[j] += j_pair;
    }
    for (std::size_t i = 0; i < d; ++i) {
        if (!valid[i]) continue;
        res.estimate.biases[i] = -2.0 * b_spin(di(slot[i])) - pair_row_sum[i];
    }
    return res;
}

}  // namespace mpf
