#include "mpflow/mpf_continuous.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mpflow/parallel.hpp"
#include "mpflow/rng.hpp"

namespace mpf {

namespace {

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

double kinetic(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return 0.5 * s;
}

void check_finite(std::span<const double> g) {
    for (double x : g)
        if (!std::isfinite(x)) throw std::runtime_error("leapfrog: non-finite energy gradient");
}

double fd_laplacian(const ContinuousEnergyModel& model, std::span<const double> q,
                    std::span<const double> theta, double h) {
    std::vector<double> probe(q.begin(), q.end());
    const double e0 = model.energy(q, theta);
    double lap = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + h;
        const double ep = model.energy(probe, theta);
        probe[i] = orig - h;
        const double em = model.energy(probe, theta);
        probe[i] = orig;
        lap += (ep - 2.0 * e0 + em) / (h * h);
    }
    return lap;
}

}  // namespace

std::vector<PhaseState> augment_momenta(const RealDataset& data, std::uint64_t seed) {
    std::vector<PhaseState> phase;
    phase.reserve(data.rows());
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        PhaseState x;
        auto row = data.row(r);
        x.q.assign(row.begin(), row.end());
        x.v.resize(data.d);
        for (double& vi : x.v) vi = gauss(rng);
        phase.push_back(std::move(x));
    }
    return phase;
}

PhaseState leapfrog_transit(const PhaseState& x, const ContinuousEnergyModel& model,
                            std::span<const double> theta_h, const LeapfrogConfig& config) {
    if (x.q.size() != x.v.size()) throw std::invalid_argument("leapfrog_transit: q/v length mismatch");
    model.check_q(x.q);
    model.check_theta(theta_h);
    if (!(config.step_size > 0.0) || config.n_steps < 1)
        throw std::invalid_argument("leapfrog_transit: bad config");

    const std::size_t d = x.q.size();
    const double h = config.step_size;
    PhaseState out = x;
    std::vector<double> force(d);

    for (std::size_t step = 0; step < config.n_steps; ++step) {
        model.grad_q(out.q, theta_h, force);
        check_finite(force);
        for (std::size_t i = 0; i < d; ++i) out.v[i] -= 0.5 * h * force[i];
        for (std::size_t i = 0; i < d; ++i) out.q[i] += h * out.v[i];
        model.grad_q(out.q, theta_h, force);
        check_finite(force);
        for (std::size_t i = 0; i < d; ++i) out.v[i] -= 0.5 * h * force[i];
    }
    for (double& vi : out.v) vi = -vi;
    return out;
}

HmpfObjective::HmpfObjective(const ContinuousEnergyModel& model, std::vector<PhaseState> phase_data,
                             HmcConnectivity conn)
    : model_(model), phase_data_(std::move(phase_data)), conn_(std::move(conn)) {
    if (phase_data_.empty()) throw std::invalid_argument("HmpfObjective: empty phase data");
    model_.check_theta(conn_.theta_h);
    const std::size_t n = phase_data_.size();
    transits_.resize(n);
    kinetic_gap_.resize(n);
    for_each_block(n, 64, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            transits_[j] = leapfrog_transit(phase_data_[j], model_, conn_.theta_h, conn_.config);
            kinetic_gap_[j] = kinetic(phase_data_[j].v) - kinetic(transits_[j].v);
        }
    });
}

ObjectiveEval HmpfObjective::eval(std::span<const double> theta) const {
    model_.check_theta(theta);
    const std::size_t n = phase_data_.size();
    const std::size_t n_params = model_.param_count();
    const double inv_n = 1.0 / static_cast<double>(n);

    struct Partial {
        double value = 0.0;
        ParameterVector gradient;
        EvalDiagnostics diag;
    };
    constexpr std::size_t kBlock = 256;
    std::vector<Partial> partials((n + kBlock - 1) / kBlock);

    for_each_block(n, kBlock, [&](std::size_t b, std::size_t begin, std::size_t end) {
        Partial& part = partials[b];
        part.gradient.assign(n_params, 0.0);
        for (std::size_t j = begin; j < end; ++j) {
            const double gap = model_.energy(phase_data_[j].q, theta) -
                               model_.energy(transits_[j].q, theta) + kinetic_gap_[j];
            const double term = guarded_exp(0.5 * gap, part.diag);
            part.value += inv_n * term;
            const double c = 0.5 * inv_n * term;
            model_.add_param_grad(phase_data_[j].q, theta, c, part.gradient);
            model_.add_param_grad(transits_[j].q, theta, -c, part.gradient);
        }
    });

    ObjectiveEval out;
    out.gradient.assign(n_params, 0.0);
    for (const Partial& part : partials) {
        out.value += part.value;
        for (std::size_t p = 0; p < n_params; ++p) out.gradient[p] += part.gradient[p];
        out.diagnostics.merge(part.diag);
    }
    return out;
}

ObjectiveEval hmpf_objective(std::span<const double> theta, const std::vector<PhaseState>& phase_data,
                             const HmcConnectivity& conn, const ContinuousEnergyModel& model) {
    HmpfObjective objective(model, phase_data, conn);
    return objective.eval(theta);
}

MpfHmcResult iterate_mpf_hmc(const ContinuousEnergyModel& model, std::span<const double> theta0,
                             const RealDataset& data, const MpfHmcSchedule& schedule,
                             const LeapfrogConfig& leapfrog, std::uint64_t seed,
                             OptimizerOptions inner_opts) {
    model.check_theta(theta0);
    const auto t0 = std::chrono::steady_clock::now();
    MpfHmcResult res;
    ParameterVector theta(theta0.begin(), theta0.end());
    res.trajectory.push_back(theta);
    inner_opts.max_iters = schedule.inner_steps;

    for (std::size_t round = 0; round < schedule.outer_rounds; ++round) {
        HmcConnectivity conn{theta, leapfrog};
        HmpfObjective objective(model, augment_momenta(data, mix_seed(seed, round)), conn);
        if (schedule.inner_steps == 0) {
            res.trajectory.push_back(theta);
            res.round_objectives.push_back(objective.eval(theta).value);
        } else {
            OptimizeResult inner = lbfgs_minimize(
                [&objective](std::span<const double> th) { return objective.eval(th); }, theta,
                inner_opts);
            theta = inner.theta;
            res.trajectory.push_back(theta);
            res.round_objectives.push_back(inner.objective);
        }
        double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!res.round_elapsed_s.empty() && elapsed <= res.round_elapsed_s.back())
            elapsed = res.round_elapsed_s.back() + 1e-9;
        res.round_elapsed_s.push_back(elapsed);
    }
    return res;
}

ObjectiveEval score_matching_objective(const ContinuousEnergyModel& model,
                                       std::span<const double> theta, const RealDataset& data) {
    model.check_theta(theta);
    if (data.d != model.dim()) throw std::invalid_argument("score_matching_objective: dimension mismatch");
    const std::size_t n = data.rows();
    if (n == 0) throw std::invalid_argument("score_matching_objective: empty dataset");
    const double inv_n = 1.0 / static_cast<double>(n);
    constexpr double kLaplacianStep = 1e-4;

    auto value_at = [&](std::span<const double> th, EvalDiagnostics& diag) {
        std::vector<double> grad(model.dim());
        double value = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            auto q = data.row(r);
            model.grad_q(q, th, grad);
            double g2 = 0.0;
            for (double g : grad) {
                if (!std::isfinite(g)) throw std::runtime_error("score_matching_objective: non-finite gradient");
                g2 += g * g;
            }
            double lap;
            if (model.has_laplacian()) {
                lap = model.laplacian_q(q, th);
            } else {
                lap = fd_laplacian(model, q, th, kLaplacianStep);
                diag.finite_difference_used = true;
            }
            if (!std::isfinite(lap)) throw std::runtime_error("score_matching_objective: non-finite laplacian");
            value += inv_n * (0.5 * g2 - lap);
            ++diag.term_count;
        }
        return value;
    };

    ObjectiveEval out;
    out.gradient.assign(model.param_count(), 0.0);
    out.value = value_at(theta, out.diagnostics);

    if (model.has_param_second_order() && model.has_laplacian()) {
        std::vector<double> grad(model.dim());
        for (std::size_t r = 0; r < n; ++r) {
            auto q = data.row(r);
            model.grad_q(q, theta, grad);
            model.add_grad_q_param_jacobian(q, theta, grad, inv_n, out.gradient);
            model.add_laplacian_param_grad(q, theta, -inv_n, out.gradient);
        }
    } else {
        // No analytic mixed derivatives: central differences over theta. The
        // step stays well above the value's own finite-difference noise floor.
        out.diagnostics.finite_difference_used = true;
        ParameterVector probe(theta.begin(), theta.end());
        EvalDiagnostics scratch;
        for (std::size_t p = 0; p < probe.size(); ++p) {
            const double orig = probe[p];
            const double h = 1e-3 * std::max(1.0, std::abs(orig));
            probe[p] = orig + h;
            const double fp = value_at(probe, scratch);
            probe[p] = orig - h;
            const double fm = value_at(probe, scratch);
            probe[p] = orig;
            out.gradient[p] = (fp - fm) / (2.0 * h);
        }
    }
    return out;
}

void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence for P_n(x) and P'_n(x).
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

double cube_mpf_objective(const ContinuousEnergyModel& model, std::span<const double> theta,
                          const RealDataset& data, double epsilon, std::size_t quad_points) {
    model.check_theta(theta);
    const std::size_t d = model.dim();
    if (d > 2) throw std::invalid_argument("cube_mpf_objective: d must be <= 2");
    if (data.d != d) throw std::invalid_argument("cube_mpf_objective: dimension mismatch");
    if (quad_points < 8) throw std::invalid_argument("cube_mpf_objective: need >= 8 nodes per axis");
    if (!(epsilon > 0.0)) throw std::invalid_argument("cube_mpf_objective: epsilon must be > 0");
    const std::size_t n = data.rows();
    if (n == 0) throw std::invalid_argument("cube_mpf_objective: empty dataset");

    std::vector<double> nodes, weights;
    gauss_legendre(quad_points, nodes, weights);
    const double scale = 0.5 * epsilon;  // affine map from [-1,1] to [-eps/2, eps/2]

    double total = 0.0;
    std::vector<double> y(d);
    for (std::size_t r = 0; r < n; ++r) {
        auto q = data.row(r);
        const double e0 = model.energy(q, theta);
        double integral = 0.0;
        if (d == 1) {
            for (std::size_t a = 0; a < quad_points; ++a) {
                y[0] = q[0] + scale * nodes[a];
                integral += scale * weights[a] * std::exp(0.5 * (e0 - model.energy(y, theta)));
            }
        } else {
            for (std::size_t a = 0; a < quad_points; ++a) {
                for (std::size_t b = 0; b < quad_points; ++b) {
                    y[0] = q[0] + scale * nodes[a];
                    y[1] = q[1] + scale * nodes[b];
                    integral += scale * scale * weights[a] * weights[b] *
                                std::exp(0.5 * (e0 - model.energy(y, theta)));
                }
            }
        }
        total += integral;
    }
    return total / static_cast<double>(n);
}

}  // namespace mpf
