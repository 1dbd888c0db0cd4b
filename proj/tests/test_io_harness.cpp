#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "mpflow/harness.hpp"
#include "mpflow/rng.hpp"

using namespace mpf;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("mpflow_test_" + name);
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MPF_CLI_PATH) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("discrete dataset files round-trip the in-memory dataset") {
    CouplingMatrix glass = random_lattice_glass(2, 3, 1.0, 301);
    ChainConfig cfg{100, 2, 302};
    DiscreteDataset data = gibbs_sample(glass, 500, cfg);
    data.scale_weights(0.3741);  // non-integer weights must survive

    const fs::path path = temp_file("ds_roundtrip.txt");
    io::write_discrete_dataset(path, data);
    DiscreteDataset back = io::read_discrete_dataset(path);
    CHECK(back == data);
    CHECK(back.total_weight() == data.total_weight());
    fs::remove(path);
}

TEST_CASE("empty dataset files keep a valid header") {
    DiscreteDataset empty(7);
    const fs::path path = temp_file("ds_empty.txt");
    io::write_discrete_dataset(path, empty);
    CHECK(slurp(path) == "#mpf-bin d=7 m=0\n");
    DiscreteDataset back = io::read_discrete_dataset(path);
    CHECK(back.dim() == 7);
    CHECK(back.distinct_count() == 0);
    fs::remove(path);
}

TEST_CASE("real dataset files round-trip bit-for-bit") {
    RealDataset data(3);
    auto rng = make_rng(303);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int r = 0; r < 50; ++r)
        data.add_row(std::vector<double>{gauss(rng), gauss(rng), gauss(rng)});

    const fs::path path = temp_file("ds_real.txt");
    io::write_real_dataset(path, data);
    RealDataset back = io::read_real_dataset(path);
    CHECK(back.d == data.d);
    CHECK(back.values == data.values);  // exact: 17 significant digits
    fs::remove(path);
}

TEST_CASE("model files round-trip for every family") {
    const fs::path path = temp_file("model.json");

    io::ModelFile lattice;
    lattice.family = io::ModelFamily::IsingLattice;
    lattice.rows = 3;
    lattice.cols = 4;
    lattice.coupling = random_lattice_glass(3, 4, 2.0, 304);
    lattice.metadata = {{"sigma2", 2.0}, {"seed", 304}, {"boundary", "open"}};
    io::write_model(path, lattice);
    io::ModelFile lattice_back = io::read_model(path);
    CHECK(lattice_back.family == io::ModelFamily::IsingLattice);
    CHECK(lattice_back.rows == 3);
    CHECK(lattice_back.coupling.support == lattice.coupling.support);
    CHECK(lattice_back.coupling.pair_values == lattice.coupling.pair_values);
    CHECK(lattice_back.coupling.biases == lattice.coupling.biases);

    io::ModelFile ica;
    ica.family = io::ModelFamily::Ica;
    ica.ica = random_ica_filters(3, 305);
    io::write_model(path, ica);
    io::ModelFile ica_back = io::read_model(path);
    CHECK(ica_back.family == io::ModelFamily::Ica);
    CHECK(ica_back.ica.filters == ica.ica.filters);
    fs::remove(path);
}

TEST_CASE("fit reports round-trip and validate their schema version") {
    io::FitReport report;
    report.estimator = "mpf";
    report.seed = 11;
    report.config = {{"d", 4}};
    report.theta = {{"blocks", {{"biases", {0.1, -0.2}}}}};
    io::TracePoint p1{0.25, 1.5, 0.3, 0.01, std::nullopt};
    io::TracePoint p2{0.75, 1.2, 0.1, 0.005, 0.002};
    report.trace = {p1, p2};
    report.final_metrics = {{"eps_j", 0.005}};
    report.warnings = {"example warning"};

    const fs::path path = temp_file("report.json");
    io::write_report(path, report);
    io::FitReport back = io::read_report(path);
    CHECK(back.estimator == "mpf");
    CHECK(back.seed == 11);
    CHECK(back.trace.size() == 2);
    CHECK(*back.trace[1].eps_corr == 0.002);
    CHECK(!back.trace[0].eps_corr.has_value());
    CHECK(back.final_metrics.at("eps_j") == 0.005);
    CHECK(back.warnings == report.warnings);

    // tamper with the schema version
    nlohmann::json j = nlohmann::json::parse(slurp(path));
    j["schema_version"] = 999;
    io::atomic_write(path, j.dump());
    CHECK_THROWS(io::read_report(path));
    fs::remove(path);
}

TEST_CASE("atomic writes leave no temporary file behind") {
    const fs::path path = temp_file("atomic.txt");
    io::atomic_write(path, "payload");
    CHECK(slurp(path) == "payload");
    CHECK(!fs::exists(path.string() + ".tmp"));
    fs::remove(path);
}

TEST_CASE("ising fit reports carry metrics, monotone timestamps, and block layout") {
    // d = 16 keeps the sampled states a tiny fraction of the state space, so
    // the strict mode excludes few terms and recovery is clean
    CouplingMatrix glass = random_lattice_glass(4, 4, 1.0, 311);
    IsingModel model(glass);
    DiscreteDataset data = exact_sample(model, glass.pack(), 4000, 312);

    TrackingOptions tracking;
    tracking.interval_s = 1e-4;  // force several tracked rows
    tracking.corr_budget.sweeps = 2000;
    tracking.corr_budget.seed = 5;

    for (const std::string& name : {"mpf", "pl"}) {
        EstimatorSpec spec;
        spec.name = name;
        io::FitReport report = fit_ising_estimator(spec, glass, data, &glass, tracking, 313);
        CHECK(report.estimator == name);
        REQUIRE(!report.trace.empty());
        for (std::size_t i = 1; i < report.trace.size(); ++i)
            CHECK(report.trace[i].elapsed_s > report.trace[i - 1].elapsed_s);
        CHECK(report.final_metrics.count("eps_j") == 1);
        CHECK(report.final_metrics.count("eps_corr") == 1);
        CHECK(report.final_metrics.at("eps_j") < 0.5);
        const auto& blocks = report.theta.at("blocks");
        CHECK(blocks.at("pairs").size() == glass.support.size());
        CHECK(blocks.at("biases").size() == glass.d);
    }

    EstimatorSpec cd_spec;
    cd_spec.name = "cd";
    cd_spec.cd.n_updates = 50;
    io::FitReport cd_report = fit_ising_estimator(cd_spec, glass, data, &glass, tracking, 313);
    CHECK(cd_report.final_metrics.count("eps_j") == 1);

    EstimatorSpec mft_spec;
    mft_spec.name = "mft-tap";
    io::FitReport mft_report = fit_ising_estimator(mft_spec, glass, data, &glass, tracking, 313);
    CHECK(mft_report.final_metrics.count("eps_j") == 1);
    CHECK(mft_report.trace.size() == 1);

    EstimatorSpec bad;
    bad.name = "nonsense";
    CHECK_THROWS_AS(fit_ising_estimator(bad, glass, data, &glass, tracking, 313),
                    std::invalid_argument);
}

TEST_CASE("a zero-iteration budget leaves only the initialization row") {
    CouplingMatrix glass = random_lattice_glass(2, 3, 1.0, 331);
    IsingModel model(glass);
    DiscreteDataset data = exact_sample(model, glass.pack(), 500, 332);

    TrackingOptions tracking;
    tracking.track_eps_corr = false;
    EstimatorSpec spec;
    spec.name = "mpf";
    spec.optimizer.max_iters = 0;
    io::FitReport report = fit_ising_estimator(spec, glass, data, &glass, tracking, 333);
    REQUIRE(report.trace.size() == 1);
    CHECK(report.trace[0].eps_j.has_value());
    // theta stays at the zero initialization
    for (double v : report.theta.at("blocks").at("pairs").get<std::vector<double>>())
        CHECK(v == 0.0);
}

TEST_CASE("fits are reproducible apart from wall-clock fields") {
    CouplingMatrix glass = random_lattice_glass(2, 3, 1.0, 321);
    IsingModel model(glass);
    DiscreteDataset data = exact_sample(model, glass.pack(), 2000, 322);

    TrackingOptions tracking;
    tracking.track_eps_corr = false;
    EstimatorSpec spec;
    spec.name = "mpf";
    io::FitReport a = fit_ising_estimator(spec, glass, data, &glass, tracking, 323);
    io::FitReport b = fit_ising_estimator(spec, glass, data, &glass, tracking, 323);
    CHECK(a.theta == b.theta);
    CHECK(a.final_metrics.at("eps_j") == b.final_metrics.at("eps_j"));
    CHECK(a.final_metrics.at("objective") == b.final_metrics.at("objective"));
}

TEST_CASE("bench csv lists one row per tracked point with metrics") {
    io::FitReport r;
    r.estimator = "mpf";
    r.trace.push_back({0.5, 1.0, 0.1, 0.02, 0.003});
    r.trace.push_back({1.0, 0.8, 0.05, 0.01, 0.001});
    std::string csv = bench_csv({r});
    CHECK(csv.rfind("method,elapsed_s,eps_j,eps_corr\n", 0) == 0);
    CHECK(csv.find("mpf,0.5,0.02,0.003") != std::string::npos);
    CHECK(csv.find("mpf,1,0.01,0.001") != std::string::npos);
}

TEST_CASE("cli: generation is reproducible and respects --samples 0") {
    const fs::path out = temp_file("cli_ds.txt");
    const fs::path out2 = temp_file("cli_ds2.txt");

    CHECK(run_cli("gen --lattice 2x3 --sigma2 1 --samples 200 --sampler sw --seed 5 --out " +
                  out.string()) == 0);
    CHECK(run_cli("gen --lattice 2x3 --sigma2 1 --samples 200 --sampler sw --seed 5 --out " +
                  out2.string()) == 0);
    CHECK(slurp(out) == slurp(out2));
    CHECK(slurp(out.string() + ".model.json") == slurp(out2.string() + ".model.json"));
    CHECK(fs::exists(out.string() + ".manifest.json"));

    const fs::path empty = temp_file("cli_empty.txt");
    CHECK(run_cli("gen --full 4 --samples 0 --seed 1 --out " + empty.string()) == 0);
    CHECK(slurp(empty) == "#mpf-bin d=4 m=0\n");

    for (const auto& p : {out, out2, empty}) {
        fs::remove(p);
        fs::remove(p.string() + ".model.json");
        fs::remove(p.string() + ".manifest.json");
    }
}

TEST_CASE("cli: estimator/model mismatches and bad arguments exit with code 1") {
    const fs::path ica_ds = temp_file("cli_ica.txt");
    CHECK(run_cli("gen --ica 2 --samples 50 --seed 2 --out " + ica_ds.string()) == 0);

    const fs::path report = temp_file("cli_report.json");
    // discrete estimator on a continuous dataset
    CHECK(run_cli("fit --data " + ica_ds.string() + " --estimator mft-tap --out " +
                  report.string()) == 1);
    // continuous estimator on a binary dataset
    const fs::path bin_ds = temp_file("cli_bin.txt");
    CHECK(run_cli("gen --full 3 --samples 50 --seed 3 --out " + bin_ds.string()) == 0);
    CHECK(run_cli("fit --data " + bin_ds.string() + " --estimator mpf-hmc --out " +
                  report.string()) == 1);
    // unknown subcommand flag
    CHECK(run_cli("fit --data " + bin_ds.string() + " --no-such-flag --out x.json") == 1);

    for (const auto& p : {ica_ds, bin_ds}) {
        fs::remove(p);
        fs::remove(p.string() + ".model.json");
        fs::remove(p.string() + ".manifest.json");
    }
    fs::remove(report);
}

TEST_CASE("cli: bench survives an unknown method and emits csv for the rest") {
    const fs::path ds = temp_file("cli_bench_ds.txt");
    CHECK(run_cli("gen --lattice 2x3 --sigma2 1 --samples 1500 --sampler gibbs --seed 4 --out " +
                  ds.string()) == 0);
    const fs::path csv = temp_file("cli_bench.csv");
    CHECK(run_cli("bench --data " + ds.string() + " --truth " + ds.string() +
                  ".model.json --methods no-such-method,mft-tap --track-interval 0.01 --out " +
                  csv.string()) == 0);
    const std::string body = slurp(csv);
    CHECK(body.rfind("method,elapsed_s,eps_j,eps_corr\n", 0) == 0);
    CHECK(body.find("mft-tap,") != std::string::npos);
    CHECK(body.find("no-such-method") == std::string::npos);

    fs::remove(ds);
    fs::remove(ds.string() + ".model.json");
    fs::remove(ds.string() + ".manifest.json");
    fs::remove(csv);
}

TEST_CASE("cli: oracle checks pass and failures use exit code 2") {
    CHECK(run_cli("oracle --check detailed-balance --d 6 --sigma2 1 --seed 3") == 0);
    CHECK(run_cli("oracle --check stationarity --d 6 --sigma2 1 --seed 4") == 0);
    CHECK(run_cli("oracle --check no-such-check --d 4") == 1);
}

TEST_CASE("cli: fit produces a readable report with eps metrics") {
    const fs::path ds = temp_file("cli_fit_ds.txt");
    CHECK(run_cli("gen --lattice 2x3 --sigma2 1 --samples 2000 --sampler gibbs --seed 9 --out " +
                  ds.string()) == 0);
    const fs::path report = temp_file("cli_fit_report.json");
    CHECK(run_cli("fit --data " + ds.string() + " --truth " + ds.string() +
                  ".model.json --estimator mpf --seed 1 --out " + report.string()) == 0);
    io::FitReport back = io::read_report(report);
    CHECK(back.estimator == "mpf");
    CHECK(back.final_metrics.count("eps_j") == 1);

    fs::remove(ds);
    fs::remove(ds.string() + ".model.json");
    fs::remove(ds.string() + ".manifest.json");
    fs::remove(report);
}
