// Command-line front end: dataset generation, model fitting, benchmark runs,
// and oracle checks. Machine-readable output goes to files; diagnostics go to
// stderr. Exit codes: 0 success, 1 validation error, 2 check failure,
// 3 runtime failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "mpflow/harness.hpp"
#include "mpflow/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitCheckFailed = 2;
constexpr int kExitRuntime = 3;

struct LatticeShape {
    std::size_t rows = 0, cols = 0;
};

LatticeShape parse_lattice(const std::string& text) {
    LatticeShape shape;
    char sep = 0;
    std::istringstream is(text);
    if (!(is >> shape.rows >> sep >> shape.cols) || sep != 'x' || shape.rows < 1 || shape.cols < 1)
        throw CLI::ValidationError("--lattice expects ROWSxCOLS, e.g. 10x10");
    return shape;
}

// Reads the first line to decide between the binary and continuous formats.
bool is_binary_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string header;
    std::getline(in, header);
    if (header.rfind("#mpf-bin", 0) == 0) return true;
    if (header.rfind("#mpf-real", 0) == 0) return false;
    throw std::runtime_error("unrecognized dataset header in " + path);
}

int cmd_gen(const std::string& lattice, std::size_t full_d, std::size_t ica_d, double sigma2,
            std::size_t samples, const std::string& sampler, std::uint64_t seed,
            std::size_t burn_in, std::size_t thin, const std::string& out,
            std::string model_out) {
    const int selected = (!lattice.empty()) + (full_d > 0) + (ica_d > 0);
    if (selected != 1) {
        std::cerr << "gen: exactly one of --lattice, --full, --ica is required\n";
        return kExitValidation;
    }
    if (model_out.empty()) model_out = out + ".model.json";

    nlohmann::json manifest;
    manifest["seed"] = seed;
    manifest["samples"] = samples;
    manifest["model_file"] = model_out;

    if (ica_d > 0) {
        mpf::IcaParameters truth = mpf::random_ica_filters(ica_d, seed);
        mpf::RealDataset data = mpf::sample_ica_data(truth, samples, mpf::mix_seed(seed, 11));
        mpf::io::write_real_dataset(out, data);
        mpf::io::ModelFile model;
        model.family = mpf::io::ModelFamily::Ica;
        model.ica = truth;
        model.metadata = {{"seed", seed}, {"generator", "laplace-sources"}};
        mpf::io::write_model(model_out, model);
        manifest["sampler"] = "laplace-sources";
        manifest["family"] = "ica";
    } else {
        mpf::io::ModelFile model;
        if (!lattice.empty()) {
            LatticeShape shape = parse_lattice(lattice);
            model.family = mpf::io::ModelFamily::IsingLattice;
            model.rows = shape.rows;
            model.cols = shape.cols;
            model.coupling = mpf::random_lattice_glass(shape.rows, shape.cols, sigma2, seed);
            model.metadata = {{"sigma2", sigma2}, {"seed", seed}, {"boundary", "open"}};
        } else {
            model.family = mpf::io::ModelFamily::IsingFull;
            model.coupling = mpf::random_full_glass(full_d, sigma2, seed);
            model.metadata = {{"sigma2", sigma2}, {"seed", seed}};
        }

        mpf::ChainConfig cfg{burn_in, thin, mpf::mix_seed(seed, 12)};
        mpf::DiscreteDataset data(model.coupling.d);
        if (samples > 0) {
            if (sampler == "gibbs") data = mpf::gibbs_sample(model.coupling, samples, cfg);
            else if (sampler == "sw") data = mpf::swendsen_wang_sample(model.coupling, samples, cfg);
            else if (sampler == "exact") data = mpf::exact_sample(model.coupling, samples, mpf::mix_seed(seed, 12));
            else {
                std::cerr << "gen: unknown sampler " << sampler << " (gibbs|sw|exact)\n";
                return kExitValidation;
            }
        }
        mpf::io::write_discrete_dataset(out, data);
        mpf::io::write_model(model_out, model);
        manifest["sampler"] = sampler;
        manifest["family"] = mpf::io::family_name(model.family);
        manifest["sigma2"] = sigma2;
        manifest["chain"] = {{"burn_in", burn_in}, {"thin", thin}};
    }

    mpf::io::atomic_write(out + ".manifest.json", manifest.dump(2) + "\n");
    std::cerr << "gen: wrote " << out << ", " << model_out << "\n";
    return kExitOk;
}

mpf::EstimatorSpec build_spec(const std::string& estimator, const std::string& mode, double lambda,
                              bool no_tap, std::size_t cd_k, std::size_t cd_updates,
                              double leapfrog_step, std::size_t leapfrog_n, std::size_t rounds,
                              std::size_t inner_steps) {
    mpf::EstimatorSpec spec;
    spec.name = estimator;
    if (mode == "strict") spec.mode = mpf::ConnectivityMode::Strict;
    else if (mode == "all") spec.mode = mpf::ConnectivityMode::AllNeighbors;
    else throw CLI::ValidationError("--mode must be strict or all");
    spec.mft.lambda = lambda;
    spec.mft.tap_enabled = !no_tap;
    spec.cd.k = cd_k;
    spec.cd.n_updates = cd_updates;
    spec.leapfrog.step_size = leapfrog_step;
    spec.leapfrog.n_steps = leapfrog_n;
    spec.hmc.outer_rounds = rounds;
    spec.hmc.inner_steps = inner_steps;
    return spec;
}

int cmd_fit(const std::string& data_path, const std::string& truth_path,
            const std::string& model_path, const std::string& support,
            const mpf::EstimatorSpec& spec, std::uint64_t seed, double track_interval,
            const std::string& out) {
    const bool binary = is_binary_dataset(data_path);

    if (spec.name == "mpf-hmc") {
        if (binary) {
            std::cerr << "fit: mpf-hmc requires a continuous dataset\n";
            return kExitValidation;
        }
        mpf::RealDataset data = mpf::io::read_real_dataset(data_path);
        std::optional<mpf::IcaParameters> truth;
        if (!truth_path.empty()) {
            mpf::io::ModelFile model = mpf::io::read_model(truth_path);
            if (model.family != mpf::io::ModelFamily::Ica) {
                std::cerr << "fit: mpf-hmc truth model must be an ICA model\n";
                return kExitValidation;
            }
            truth = model.ica;
        }
        mpf::io::FitReport report =
            mpf::fit_ica_mpf_hmc(spec, data, truth ? &*truth : nullptr, seed);
        mpf::io::write_report(out, report);
        std::cerr << "fit: wrote " << out << "\n";
        return kExitOk;
    }

    if (!binary) {
        std::cerr << "fit: estimator " << spec.name << " requires a binary dataset\n";
        return kExitValidation;
    }
    mpf::DiscreteDataset data = mpf::io::read_discrete_dataset(data_path);

    std::optional<mpf::CouplingMatrix> truth;
    mpf::CouplingMatrix structure;
    if (!truth_path.empty() || !model_path.empty()) {
        // --truth supplies the fit support and enables error metrics;
        // --model supplies the support only.
        mpf::io::ModelFile model =
            mpf::io::read_model(truth_path.empty() ? model_path : truth_path);
        if (model.family == mpf::io::ModelFamily::Ica) {
            std::cerr << "fit: estimator " << spec.name << " cannot use an ICA model file\n";
            return kExitValidation;
        }
        if (!truth_path.empty()) truth = model.coupling;
        structure = model.coupling;
        if (structure.d != data.dim()) {
            std::cerr << "fit: model dimension does not match data dimension\n";
            return kExitValidation;
        }
    } else if (support == "full" || support.empty()) {
        structure.d = data.dim();
        structure.support = mpf::all_pairs(data.dim());
    } else {
        LatticeShape shape = parse_lattice(support);
        if (shape.rows * shape.cols != data.dim()) {
            std::cerr << "fit: --support lattice shape does not match data dimension\n";
            return kExitValidation;
        }
        structure.d = data.dim();
        structure.support = mpf::lattice_edges(shape.rows, shape.cols);
    }
    structure.pair_values.assign(structure.support.size(), 0.0);
    structure.biases.assign(structure.d, 0.0);

    mpf::TrackingOptions tracking;
    tracking.interval_s = track_interval;
    tracking.corr_budget.seed = mpf::mix_seed(seed, 21);

    mpf::io::FitReport report = mpf::fit_ising_estimator(spec, structure, data,
                                                         truth ? &*truth : nullptr, tracking, seed);
    mpf::io::write_report(out, report);
    std::cerr << "fit: wrote " << out << "\n";
    return kExitOk;
}

int cmd_bench(const std::string& data_path, const std::string& truth_path,
              const std::string& methods, const std::string& mode, std::uint64_t seed,
              double track_interval, const std::string& out, const std::string& report_dir,
              bool timing) {
    if (timing) {
        std::vector<std::size_t> batches = {1000, 2000, 4000, 8000, 16000, 32000, 64000};
        auto points = mpf::mpf_evaluation_timing(batches, seed);
        std::ostringstream os;
        os << "batch_size,eval_seconds\n";
        os.precision(12);
        for (const auto& p : points) os << p.batch_size << ',' << p.seconds << '\n';
        mpf::io::atomic_write(out, os.str());
        std::cerr << "bench: timing sweep R^2 = " << mpf::linear_fit_r2(points) << "\n";
        return kExitOk;
    }

    if (data_path.empty() || truth_path.empty()) {
        std::cerr << "bench: --data and --truth are required\n";
        return kExitValidation;
    }
    mpf::DiscreteDataset data = mpf::io::read_discrete_dataset(data_path);
    mpf::io::ModelFile truth_model = mpf::io::read_model(truth_path);
    if (truth_model.family == mpf::io::ModelFamily::Ica) {
        std::cerr << "bench: truth model must be an Ising model\n";
        return kExitValidation;
    }

    std::vector<std::string> tokens;
    std::istringstream ms(methods);
    std::string token;
    while (std::getline(ms, token, ',')) tokens.push_back(token);
    if (tokens.empty()) {
        std::cerr << "bench: --methods must list at least one method\n";
        return kExitValidation;
    }

    mpf::TrackingOptions tracking;
    tracking.interval_s = track_interval;
    tracking.corr_budget.seed = mpf::mix_seed(seed, 21);

    std::vector<mpf::io::FitReport> reports;
    for (const std::string& method : tokens) {
        mpf::EstimatorSpec spec;
        if (mode == "strict") spec.mode = mpf::ConnectivityMode::Strict;
        else if (mode == "all") spec.mode = mpf::ConnectivityMode::AllNeighbors;
        else throw CLI::ValidationError("--mode must be strict or all");
        if (method == "mpf" || method == "pl" || method == "mft-tap") {
            spec.name = method;
        } else if (method.rfind("cd-", 0) == 0) {
            spec.name = "cd";
            spec.cd.k = std::stoul(method.substr(3));
        } else {
            std::cerr << "bench: unknown method " << method << "\n";
            continue;
        }
        try {
            mpf::io::FitReport report = mpf::fit_ising_estimator(
                spec, truth_model.coupling, data, &truth_model.coupling, tracking, seed);
            report.estimator = method;
            if (!report_dir.empty())
                mpf::io::write_report(std::filesystem::path(report_dir) / (method + ".report.json"),
                                      report);
            reports.push_back(std::move(report));
        } catch (const std::exception& e) {
            std::cerr << "bench: method " << method << " failed: " << e.what() << "\n";
        }
    }
    mpf::io::atomic_write(out, mpf::bench_csv(reports));
    std::cerr << "bench: wrote " << out << "\n";
    return kExitOk;
}

int cmd_oracle(const std::string& check, std::size_t d, double sigma2, std::uint64_t seed) {
    mpf::OracleCheckResult res = mpf::run_oracle_check(check, d, sigma2, seed);
    std::cerr << "oracle " << res.name << ": residual " << res.residual << " threshold "
              << res.threshold << (res.detail.empty() ? "" : " (" + res.detail + ")") << " -> "
              << (res.pass ? "pass" : "FAIL") << "\n";
    return res.pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-model parameter estimation via minimum probability flow"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic model and dataset");
    std::string gen_lattice;
    std::size_t gen_full = 0, gen_ica = 0, gen_samples = 1000, gen_burn = 1000, gen_thin = 10;
    double gen_sigma2 = 1.0;
    std::string gen_sampler = "gibbs", gen_out, gen_model_out;
    std::uint64_t gen_seed = 0;
    gen->add_option("--lattice", gen_lattice, "Lattice shape ROWSxCOLS");
    gen->add_option("--full", gen_full, "Fully connected model dimension");
    gen->add_option("--ica", gen_ica, "ICA model dimension (continuous data)");
    gen->add_option("--sigma2", gen_sigma2, "Coupling variance")->capture_default_str();
    gen->add_option("--samples", gen_samples, "Number of samples")->capture_default_str();
    gen->add_option("--sampler", gen_sampler, "gibbs|sw|exact")->capture_default_str();
    gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
    gen->add_option("--burn-in", gen_burn, "Burn-in sweeps")->capture_default_str();
    gen->add_option("--thin", gen_thin, "Sweeps between kept samples")->capture_default_str();
    gen->add_option("--out", gen_out, "Dataset output path")->required();
    gen->add_option("--model-out", gen_model_out, "Model output path (default OUT.model.json)");

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a model with a selected estimator");
    std::string fit_data, fit_truth, fit_model, fit_support, fit_out, fit_estimator = "mpf",
                fit_mode = "strict";
    double fit_lambda = 1e-6, fit_track = 0.5, fit_leap_step = 0.1;
    bool fit_no_tap = false;
    std::size_t fit_cd_k = 1, fit_cd_updates = 1000, fit_leap_n = 10, fit_rounds = 10,
                fit_inner = 100;
    std::uint64_t fit_seed = 0;
    fit->add_option("--data", fit_data, "Dataset path")->required();
    fit->add_option("--truth", fit_truth, "Ground-truth model (enables eps metrics)");
    fit->add_option("--model", fit_model, "Model file supplying the fit support (no metrics)");
    fit->add_option("--support", fit_support, "Fit support when no truth: 'full' or ROWSxCOLS");
    fit->add_option("--estimator", fit_estimator, "mpf|pl|cd|mft-tap|mpf-hmc")->capture_default_str();
    fit->add_option("--mode", fit_mode, "MPF connectivity: strict|all")->capture_default_str();
    fit->add_option("--lambda", fit_lambda, "MFT pseudoinverse regularization")->capture_default_str();
    fit->add_flag("--no-tap", fit_no_tap, "Disable the TAP correction");
    fit->add_option("--cd-k", fit_cd_k, "Gibbs sweeps per CD reconstruction")->capture_default_str();
    fit->add_option("--cd-updates", fit_cd_updates, "CD update count")->capture_default_str();
    fit->add_option("--leapfrog-step", fit_leap_step, "Leapfrog step size")->capture_default_str();
    fit->add_option("--leapfrog-n", fit_leap_n, "Leapfrog step count")->capture_default_str();
    fit->add_option("--rounds", fit_rounds, "Outer rounds (mpf-hmc)")->capture_default_str();
    fit->add_option("--inner-steps", fit_inner, "Inner L-BFGS budget (mpf-hmc)")->capture_default_str();
    fit->add_option("--seed", fit_seed, "RNG seed")->capture_default_str();
    fit->add_option("--track-interval", fit_track, "Metric tracking interval, seconds")->capture_default_str();
    fit->add_option("--out", fit_out, "Report output path")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "Run several estimators on one dataset");
    std::string bench_data, bench_truth, bench_methods = "mpf,pl,cd-1", bench_out, bench_dir,
                bench_mode = "strict";
    double bench_track = 0.5;
    std::uint64_t bench_seed = 0;
    bool bench_timing = false;
    bench->add_option("--data", bench_data, "Dataset path");
    bench->add_option("--truth", bench_truth, "Ground-truth model");
    bench->add_option("--methods", bench_methods, "Comma list: mpf,pl,cd-1,cd-10,mft-tap")->capture_default_str();
    bench->add_option("--mode", bench_mode, "MPF connectivity: strict|all")->capture_default_str();
    bench->add_option("--seed", bench_seed, "RNG seed")->capture_default_str();
    bench->add_option("--track-interval", bench_track, "Metric tracking interval, seconds")->capture_default_str();
    bench->add_option("--out", bench_out, "CSV output path")->required();
    bench->add_option("--report-dir", bench_dir, "Directory for per-method reports");
    bench->add_flag("--timing", bench_timing, "Measure objective evaluation time vs batch size");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "Run a named exact small-system check");
    std::string oracle_check;
    std::size_t oracle_d = 8;
    double oracle_sigma2 = 1.0;
    std::uint64_t oracle_seed = 5;
    oracle->add_option("--check", oracle_check, "gradient|taylor|convexity|detailed-balance|stationarity")->required();
    oracle->add_option("--d", oracle_d, "System dimension")->capture_default_str();
    oracle->add_option("--sigma2", oracle_sigma2, "Coupling variance")->capture_default_str();
    oracle->add_option("--seed", oracle_seed, "RNG seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (gen->parsed())
            return cmd_gen(gen_lattice, gen_full, gen_ica, gen_sigma2, gen_samples, gen_sampler,
                           gen_seed, gen_burn, gen_thin, gen_out, gen_model_out);
        if (fit->parsed()) {
            mpf::EstimatorSpec spec =
                build_spec(fit_estimator, fit_mode, fit_lambda, fit_no_tap, fit_cd_k,
                           fit_cd_updates, fit_leap_step, fit_leap_n, fit_rounds, fit_inner);
            return cmd_fit(fit_data, fit_truth, fit_model, fit_support, spec, fit_seed, fit_track,
                           fit_out);
        }
        if (bench->parsed())
            return cmd_bench(bench_data, bench_truth, bench_methods, bench_mode, bench_seed,
                             bench_track, bench_out, bench_dir, bench_timing);
        if (oracle->parsed()) return cmd_oracle(oracle_check, oracle_d, oracle_sigma2, oracle_seed);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
