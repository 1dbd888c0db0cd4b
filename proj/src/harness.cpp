#include "mpflow/harness.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "mpflow/parallel.hpp"
#include "mpflow/rng.hpp"

namespace mpf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

nlohmann::json theta_blocks_json(const ParamLayout& layout, std::span<const double> theta) {
    nlohmann::json blocks;
    for (const ParamBlock& b : layout.blocks()) {
        blocks[b.name] = std::vector<double>(theta.begin() + static_cast<std::ptrdiff_t>(b.offset),
                                             theta.begin() + static_cast<std::ptrdiff_t>(b.offset + b.size));
    }
    return nlohmann::json{{"blocks", blocks}};
}

// Tracks eps_J / eps_corr against a truth model while an Ising fit runs.
class IsingMetricTracker {
public:
    IsingMetricTracker(const IsingModel& model, const CouplingMatrix* truth,
                       const TrackingOptions& tracking)
        : model_(model), truth_(truth), tracking_(tracking) {
        if (truth_ != nullptr && tracking_.track_eps_corr) {
            IsingModel truth_model(*truth_);
            truth_corr_ = model_pair_correlations(truth_model, truth_->pack(), tracking_.corr_budget);
        }
    }

    void fill(io::TracePoint& point, std::span<const double> theta) const {
        if (truth_ == nullptr) return;
        point.eps_j = eps_j(*truth_, model_.to_coupling(theta));
        if (tracking_.track_eps_corr) {
            Eigen::MatrixXd corr = model_pair_correlations(model_, theta, tracking_.corr_budget);
            point.eps_corr = eps_corr(truth_corr_, corr);
        }
    }

private:
    const IsingModel& model_;
    const CouplingMatrix* truth_;
    TrackingOptions tracking_;
    Eigen::MatrixXd truth_corr_;
};

void append_diag_warnings(const EvalDiagnostics& diag, std::vector<std::string>& warnings) {
    if (diag.clamped_terms > 0)
        warnings.push_back(std::to_string(diag.clamped_terms) +
                           " exponent term(s) hit the overflow clamp");
}

io::FitReport run_objective_estimator(const EstimatorSpec& spec, const IsingModel& model,
                                      const Objective& objective, const DiscreteDataset& data,
                                      const CouplingMatrix* truth, const TrackingOptions& tracking,
                                      std::uint64_t seed) {
    io::FitReport report;
    report.estimator = spec.name;
    report.seed = seed;

    IsingMetricTracker tracker(model, truth, tracking);
    const auto t0 = Clock::now();
    double next_tick = 0.0;

    OptimizerOptions opts = spec.optimizer;
    opts.observer = [&](const TraceRecord& rec, std::span<const double> theta) {
        const double elapsed = seconds_since(t0);
        if (elapsed < next_tick && rec.iter != 0) return;
        next_tick = elapsed + tracking.interval_s;
        io::TracePoint point;
        point.elapsed_s = elapsed;
        point.objective = rec.objective;
        point.grad_norm = rec.grad_inf_norm;
        tracker.fill(point, theta);
        if (!report.trace.empty() && point.elapsed_s <= report.trace.back().elapsed_s)
            point.elapsed_s = report.trace.back().elapsed_s + 1e-9;
        report.trace.push_back(point);
    };

    ParameterVector theta0(model.param_count(), 0.0);
    OptimizeResult res = lbfgs_minimize(objective, theta0, opts);

    io::TracePoint final_point;
    final_point.elapsed_s = seconds_since(t0);
    final_point.objective = res.objective;
    final_point.grad_norm = res.trace.records.back().grad_inf_norm;
    tracker.fill(final_point, res.theta);
    if (res.trace.records.size() > 1) {
        // With a zero-iteration budget the initialization row already covers
        // the final point.
        if (!report.trace.empty() && final_point.elapsed_s <= report.trace.back().elapsed_s)
            final_point.elapsed_s = report.trace.back().elapsed_s + 1e-9;
        report.trace.push_back(final_point);
    }

    report.theta = theta_blocks_json(model.layout(), res.theta);
    report.final_metrics["objective"] = res.objective;
    report.final_metrics["grad_inf_norm"] = res.trace.records.back().grad_inf_norm;
    report.final_metrics["iterations"] = static_cast<double>(res.trace.records.size() - 1);
    report.final_metrics["elapsed_s"] = final_point.elapsed_s;
    if (final_point.eps_j) report.final_metrics["eps_j"] = *final_point.eps_j;
    if (final_point.eps_corr) report.final_metrics["eps_corr"] = *final_point.eps_corr;
    report.final_metrics["data_distinct_states"] = static_cast<double>(data.distinct_count());
    if (res.status == OptimizeStatus::LineSearchFailed)
        report.warnings.push_back("line search failed; best point so far returned");
    if (res.status == OptimizeStatus::NonFiniteGradient)
        report.warnings.push_back("non-finite gradient encountered");
    append_diag_warnings(res.diagnostics, report.warnings);
    return report;
}

io::FitReport run_cd_estimator(const EstimatorSpec& spec, const IsingModel& model,
                               const DiscreteDataset& data, const CouplingMatrix* truth,
                               const TrackingOptions& tracking, std::uint64_t seed) {
    io::FitReport report;
    report.estimator = spec.name;
    report.seed = seed;

    IsingMetricTracker tracker(model, truth, tracking);
    CdConfig cfg = spec.cd;
    cfg.seed = mix_seed(seed, 101);
    ParameterVector theta0(model.param_count(), 0.0);
    CdResult res = cd_train(model, theta0, data, cfg);

    // Walk the update trajectory and keep rows at the tracking interval.
    double next_tick = 0.0;
    for (std::size_t t = 0; t < res.trajectory.size(); ++t) {
        const bool last = t + 1 == res.trajectory.size();
        if (res.timestamps[t] < next_tick && !last) continue;
        next_tick = res.timestamps[t] + tracking.interval_s;
        io::TracePoint point;
        point.elapsed_s = res.timestamps[t];
        tracker.fill(point, res.trajectory[t]);
        report.trace.push_back(point);
    }

    const ParameterVector& theta = res.trajectory.back();
    report.theta = theta_blocks_json(model.layout(), theta);
    report.final_metrics["updates"] = static_cast<double>(res.trajectory.size());
    report.final_metrics["elapsed_s"] = res.timestamps.back();
    if (!report.trace.empty()) {
        if (report.trace.back().eps_j) report.final_metrics["eps_j"] = *report.trace.back().eps_j;
        if (report.trace.back().eps_corr)
            report.final_metrics["eps_corr"] = *report.trace.back().eps_corr;
    }
    return report;
}

io::FitReport run_mft_tap(const EstimatorSpec& spec, const DiscreteDataset& data,
                          const CouplingMatrix* truth, const TrackingOptions& tracking,
                          std::uint64_t seed) {
    io::FitReport report;
    report.estimator = spec.name;
    report.seed = seed;

    const auto t0 = Clock::now();
    MftTapResult res = mft_tap_fit(data, spec.mft);
    report.warnings = res.warnings;

    io::TracePoint point;
    point.elapsed_s = seconds_since(t0);
    if (truth != nullptr) {
        point.eps_j = eps_j(*truth, res.estimate);
        report.final_metrics["eps_j"] = *point.eps_j;
        if (tracking.track_eps_corr) {
            IsingModel truth_model(*truth);
            IsingModel est_model(res.estimate);
            Eigen::MatrixXd tc = model_pair_correlations(truth_model, truth->pack(), tracking.corr_budget);
            Eigen::MatrixXd ec =
                model_pair_correlations(est_model, res.estimate.pack(), tracking.corr_budget);
            point.eps_corr = eps_corr(tc, ec);
            report.final_metrics["eps_corr"] = *point.eps_corr;
        }
    }
    report.trace.push_back(point);
    report.final_metrics["elapsed_s"] = point.elapsed_s;

    IsingModel est_model(res.estimate);
    report.theta = theta_blocks_json(est_model.layout(), res.estimate.pack());
    return report;
}

}  // namespace

io::FitReport fit_ising_estimator(const EstimatorSpec& spec, const CouplingMatrix& structure,
                                  const DiscreteDataset& data, const CouplingMatrix* truth,
                                  const TrackingOptions& tracking, std::uint64_t seed) {
    IsingModel model(structure);
    io::FitReport report;

    if (spec.name == "mpf") {
        Objective objective = [&](std::span<const double> theta) {
            return mpf_objective(model, theta, data, spec.mode);
        };
        report = run_objective_estimator(spec, model, objective, data, truth, tracking, seed);
        report.config["mode"] = spec.mode == ConnectivityMode::Strict ? "strict" : "all";
    } else if (spec.name == "pl") {
        Objective objective = [&](std::span<const double> theta) {
            return pseudolikelihood_objective(model, theta, data);
        };
        report = run_objective_estimator(spec, model, objective, data, truth, tracking, seed);
    } else if (spec.name == "cd") {
        report = run_cd_estimator(spec, model, data, truth, tracking, seed);
        report.config["cd_k"] = spec.cd.k;
        report.config["rate_start"] = spec.cd.rate_start;
        report.config["rate_end"] = spec.cd.rate_end;
        report.config["n_updates"] = spec.cd.n_updates;
    } else if (spec.name == "mft-tap") {
        report = run_mft_tap(spec, data, truth, tracking, seed);
        report.config["lambda"] = spec.mft.lambda;
        report.config["tap"] = spec.mft.tap_enabled;
    } else {
        throw std::invalid_argument("unknown Ising estimator: " + spec.name);
    }

    report.config["estimator"] = spec.name;
    report.config["d"] = structure.d;
    report.config["samples_total_weight"] = data.total_weight();
    report.config["track_interval_s"] = tracking.interval_s;
    return report;
}

io::FitReport fit_ica_mpf_hmc(const EstimatorSpec& spec, const RealDataset& data,
                              const IcaParameters* truth, std::uint64_t seed) {
    if (spec.name != "mpf-hmc") throw std::invalid_argument("fit_ica_mpf_hmc: estimator must be mpf-hmc");
    IcaModel model(data.d);
    const auto t0 = Clock::now();

    // Filters start as isotropic Gaussian noise with variance 0.01.
    ParameterVector theta0(model.param_count());
    auto rng = make_rng(seed, 7);
    std::normal_distribution<double> init_noise(0.0, 0.1);
    for (double& v : theta0) v = init_noise(rng);

    MpfHmcResult res =
        iterate_mpf_hmc(model, theta0, data, spec.hmc, spec.leapfrog, seed, spec.optimizer);

    io::FitReport report;
    report.estimator = spec.name;
    report.seed = seed;
    report.config["estimator"] = spec.name;
    report.config["d"] = data.d;
    report.config["rows"] = data.rows();
    report.config["outer_rounds"] = spec.hmc.outer_rounds;
    report.config["inner_steps"] = spec.hmc.inner_steps;
    report.config["leapfrog_step"] = spec.leapfrog.step_size;
    report.config["leapfrog_n"] = spec.leapfrog.n_steps;

    for (std::size_t r = 0; r < res.round_objectives.size(); ++r) {
        io::TracePoint point;
        point.elapsed_s = res.round_elapsed_s[r];
        point.objective = res.round_objectives[r];
        report.trace.push_back(point);
    }

    const ParameterVector& theta = res.trajectory.back();
    report.theta = theta_blocks_json(model.layout(), theta);
    report.final_metrics["elapsed_s"] = seconds_since(t0);
    report.final_metrics["mean_log_likelihood"] =
        ica_mean_log_likelihood(data, unpack_ica(data.d, theta));
    if (truth != nullptr)
        report.final_metrics["truth_mean_log_likelihood"] = ica_mean_log_likelihood(data, *truth);
    return report;
}

IcaParameters random_ica_filters(std::size_t d, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(d);
    for (int attempt = 0; attempt < 64; ++attempt) {
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                m(i, j) = (i == j ? 1.0 : 0.0) + 0.4 * gauss(rng) / std::sqrt(static_cast<double>(d));
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        const double cond = svd.singularValues()(0) / svd.singularValues()(n - 1);
        if (cond < 4.0) return IcaParameters{m};
    }
    throw std::runtime_error("random_ica_filters: failed to draw a well-conditioned matrix");
}

RealDataset sample_ica_data(const IcaParameters& truth, std::size_t n_samples, std::uint64_t seed) {
    const std::size_t d = truth.dim();
    Eigen::MatrixXd mixing = truth.filters.inverse();
    auto rng = make_rng(seed, 1);
    std::uniform_real_distribution<double> unit(-0.5, 0.5);

    RealDataset data(d);
    Eigen::VectorXd u(static_cast<Eigen::Index>(d));
    std::vector<double> row(d);
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (std::size_t i = 0; i < d; ++i) {
            const double r = unit(rng);
            // Unit Laplace via inverse CDF.
            u(static_cast<Eigen::Index>(i)) = (r < 0 ? 1.0 : -1.0) * std::log1p(-2.0 * std::abs(r));
        }
        Eigen::VectorXd x = mixing * u;
        for (std::size_t i = 0; i < d; ++i) row[i] = x(static_cast<Eigen::Index>(i));
        data.add_row(row);
    }
    return data;
}

std::vector<TimingPoint> mpf_evaluation_timing(const std::vector<std::size_t>& batch_sizes,
                                               std::uint64_t seed) {
    const std::size_t saved_threads = max_threads();
    set_max_threads(1);

    CouplingMatrix glass = random_lattice_glass(5, 6, 1.0, seed);
    IsingModel model(glass);
    ParameterVector theta = glass.pack();

    auto rng = make_rng(seed, 3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<TimingPoint> points;
    for (std::size_t m : batch_sizes) {
        DiscreteDataset data(glass.d);
        for (std::size_t s = 0; s < m; ++s) {
            BinaryState x(glass.d);
            for (std::size_t i = 0; i < glass.d; ++i) x.bits[i] = unit(rng) < 0.5 ? 1 : 0;
            data.add(x);
        }
        // Calibrate repetitions so each measurement spans >= 100 ms, then take
        // the median of several trials.
        auto timed_evals = [&](std::size_t reps) {
            const auto t0 = Clock::now();
            double sink = 0.0;
            for (std::size_t r = 0; r < reps; ++r)
                sink += mpf_objective(model, theta, data, ConnectivityMode::AllNeighbors).value;
            (void)sink;
            return seconds_since(t0);
        };
        std::size_t reps = 1;
        double elapsed = timed_evals(reps);
        while (elapsed < 0.1 && reps < (1u << 20)) {
            reps *= 2;
            elapsed = timed_evals(reps);
        }
        std::vector<double> trials;
        for (int t = 0; t < 7; ++t) trials.push_back(timed_evals(reps) / static_cast<double>(reps));
        std::sort(trials.begin(), trials.end());
        points.push_back({m, trials[trials.size() / 2]});
    }

    set_max_threads(saved_threads);
    return points;
}

double linear_fit_r2(const std::vector<TimingPoint>& points) {
    const std::size_t n = points.size();
    if (n < 3) throw std::invalid_argument("linear_fit_r2: need at least 3 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : points) {
        const double x = static_cast<double>(p.batch_size);
        sx += x;
        sy += p.seconds;
        sxx += x * x;
        sxy += x * p.seconds;
    }
    const double nn = static_cast<double>(n);
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / nn;
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / nn;
    for (const auto& p : points) {
        const double x = static_cast<double>(p.batch_size);
        const double pred = intercept + slope * x;
        ss_res += (p.seconds - pred) * (p.seconds - pred);
        ss_tot += (p.seconds - mean_y) * (p.seconds - mean_y);
    }
    return 1.0 - ss_res / ss_tot;
}

OracleCheckResult run_oracle_check(const std::string& name, std::size_t d, double sigma2,
                                   std::uint64_t seed) {
    OracleCheckResult out;
    out.name = name;

    CouplingMatrix glass = random_full_glass(d, sigma2, seed);
    IsingModel model(glass);
    ParameterVector theta = glass.pack();

    if (name == "gradient") {
        DiscreteDataset data = exact_sample(model, theta, 50, mix_seed(seed, 2));
        ObjectiveEval eval = mpf_objective(model, theta, data, ConnectivityMode::Strict);
        ParameterVector fd = finite_diff_grad(
            [&](std::span<const double> th) {
                return mpf_objective(model, th, data, ConnectivityMode::Strict).value;
            },
            theta, 1e-5);
        double max_rel = 0.0;
        const double scale = std::max(inf_norm(eval.gradient), 1e-12);
        for (std::size_t p = 0; p < fd.size(); ++p)
            max_rel = std::max(max_rel, std::abs(eval.gradient[p] - fd[p]) / scale);
        out.residual = max_rel;
        out.threshold = 1e-6;
    } else if (name == "taylor") {
        DiscreteDataset data = exact_sample(model, theta, 20, mix_seed(seed, 3));
        const double k_value = mpf_objective(model, theta, data, ConnectivityMode::Strict).value;
        FullGamma gamma = full_gamma(model, theta);
        const std::uint64_t n = std::uint64_t{1} << d;
        std::vector<double> p0(n, 0.0);
        for (std::size_t s = 0; s < data.distinct_count(); ++s)
            p0[state_to_index(data.state(s))] = data.weight(s) / data.total_weight();
        const double dt = 1e-6;
        std::vector<double> pt = propagate(p0, gamma, dt);
        const double slope = exact_kl(p0, pt) / dt;
        out.residual = std::abs(slope - k_value) / std::abs(k_value);
        out.threshold = 1e-5;
        out.detail = "slope " + std::to_string(slope) + " objective " + std::to_string(k_value);
    } else if (name == "convexity") {
        DiscreteDataset data = exact_sample(model, theta, 100, mix_seed(seed, 4));
        auto value_at = [&](std::span<const double> th) {
            return mpf_objective(model, th, data, ConnectivityMode::Strict).value;
        };
        auto rng = make_rng(seed, 5);
        std::normal_distribution<double> gauss(0.0, 0.5);
        double worst = 0.0;
        const std::size_t n_params = model.param_count();
        ParameterVector a(n_params), b(n_params), mid(n_params);
        for (int trial = 0; trial < 100; ++trial) {
            for (std::size_t p = 0; p < n_params; ++p) {
                a[p] = gauss(rng);
                b[p] = gauss(rng);
                mid[p] = 0.5 * (a[p] + b[p]);
            }
            worst = std::max(worst, value_at(mid) - 0.5 * (value_at(a) + value_at(b)));
        }
        out.residual = worst;
        out.threshold = 1e-10;
    } else if (name == "detailed-balance") {
        EnumeratedDistribution dist = enumerate_distribution(model, theta);
        FullGamma gamma = full_gamma(model, theta);
        const auto n = gamma.matrix.rows();
        double worst = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) {
                if (i == j || gamma.matrix(i, j) == 0.0) continue;
                worst = std::max(worst, std::abs(gamma.matrix(i, j) * dist.probs[static_cast<std::size_t>(j)] -
                                                 gamma.matrix(j, i) * dist.probs[static_cast<std::size_t>(i)]));
            }
        out.residual = worst;
        out.threshold = 1e-12;
    } else if (name == "stationarity") {
        out.residual = stationarity_residual(model, theta);
        out.threshold = 1e-8;
    } else {
        throw std::invalid_argument("unknown oracle check: " + name);
    }

    out.pass = out.residual <= out.threshold;
    return out;
}

std::string bench_csv(const std::vector<io::FitReport>& reports) {
    std::ostringstream os;
    os << "method,elapsed_s,eps_j,eps_corr\n";
    os.precision(12);
    for (const io::FitReport& report : reports) {
        for (const io::TracePoint& p : report.trace) {
            if (!p.eps_j && !p.eps_corr) continue;
            os << report.estimator << ',' << p.elapsed_s << ',';
            if (p.eps_j) os << *p.eps_j;
            os << ',';
            if (p.eps_corr) os << *p.eps_corr;
            os << '\n';
        }
    }
    return os.str();
}

}  // namespace mpf
