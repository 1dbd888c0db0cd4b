#include "mpflow/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace mpf::io {

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_discrete_dataset(const std::filesystem::path& path, const DiscreteDataset& data) {
    std::ostringstream os;
    os << "#mpf-bin d=" << data.dim() << " m=" << format_double(data.total_weight()) << "\n";
    std::string line;
    for (std::size_t s = 0; s < data.distinct_count(); ++s) {
        const BinaryState& x = data.state(s);
        line.assign(data.dim(), '0');
        for (std::size_t i = 0; i < data.dim(); ++i)
            if (x[i]) line[i] = '1';
        os << line;
        if (data.weight(s) != 1.0) os << ' ' << format_double(data.weight(s));
        os << "\n";
    }
    atomic_write(path, os.str());
}

DiscreteDataset read_discrete_dataset(const std::filesystem::path& path) {
    std::istringstream in(slurp(path));
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty dataset file " + path.string());
    std::size_t d = 0;
    double m = 0.0;
    if (std::sscanf(header.c_str(), "#mpf-bin d=%zu m=%lf", &d, &m) != 2)
        throw std::runtime_error("bad dataset header in " + path.string());
    if (d < 1) throw std::runtime_error("bad dimension in " + path.string());

    DiscreteDataset data(d);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.size() < d) throw std::runtime_error("short sample line in " + path.string());
        BinaryState x(d);
        for (std::size_t i = 0; i < d; ++i) {
            if (line[i] == '1') x.bits[i] = 1;
            else if (line[i] == '0') x.bits[i] = 0;
            else throw std::runtime_error("bad sample character in " + path.string());
        }
        double weight = 1.0;
        if (line.size() > d) {
            if (line[d] != ' ') throw std::runtime_error("bad sample separator in " + path.string());
            weight = std::stod(line.substr(d + 1));
        }
        data.add(x, weight);
    }
    return data;
}

void write_real_dataset(const std::filesystem::path& path, const RealDataset& data) {
    std::ostringstream os;
    os << "#mpf-real d=" << data.d << " m=" << data.rows() << "\n";
    for (std::size_t r = 0; r < data.rows(); ++r) {
        auto row = data.row(r);
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << format_double(row[i]);
        }
        os << "\n";
    }
    atomic_write(path, os.str());
}

RealDataset read_real_dataset(const std::filesystem::path& path) {
    std::istringstream in(slurp(path));
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty dataset file " + path.string());
    std::size_t d = 0, m = 0;
    if (std::sscanf(header.c_str(), "#mpf-real d=%zu m=%zu", &d, &m) != 2)
        throw std::runtime_error("bad dataset header in " + path.string());

    RealDataset data(d);
    std::string line;
    std::vector<double> row(d);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::size_t i = 0;
        while (std::getline(ls, cell, ',')) {
            if (i >= d) throw std::runtime_error("too many columns in " + path.string());
            row[i++] = std::stod(cell);
        }
        if (i != d) throw std::runtime_error("too few columns in " + path.string());
        data.add_row(row);
    }
    return data;
}

std::string family_name(ModelFamily family) {
    switch (family) {
        case ModelFamily::IsingLattice: return "ising-lattice";
        case ModelFamily::IsingFull: return "ising-full";
        case ModelFamily::Ica: return "ica";
    }
    throw std::logic_error("unknown model family");
}

ModelFamily family_from_name(const std::string& name) {
    if (name == "ising-lattice") return ModelFamily::IsingLattice;
    if (name == "ising-full") return ModelFamily::IsingFull;
    if (name == "ica") return ModelFamily::Ica;
    throw std::runtime_error("unknown model family: " + name);
}

nlohmann::json coupling_to_json(const CouplingMatrix& J) {
    nlohmann::json pairs = nlohmann::json::array();
    for (std::size_t p = 0; p < J.support.size(); ++p)
        pairs.push_back({J.support[p].first, J.support[p].second, J.pair_values[p]});
    return {{"d", J.d}, {"pairs", pairs}, {"biases", J.biases}};
}

CouplingMatrix coupling_from_json(const nlohmann::json& j) {
    CouplingMatrix J;
    J.d = j.at("d").get<std::size_t>();
    for (const auto& triple : j.at("pairs")) {
        J.support.emplace_back(triple.at(0).get<std::uint32_t>(), triple.at(1).get<std::uint32_t>());
        J.pair_values.push_back(triple.at(2).get<double>());
    }
    J.biases = j.at("biases").get<std::vector<double>>();
    if (J.biases.size() != J.d) throw std::runtime_error("coupling json: bias length mismatch");
    return J;
}

void write_model(const std::filesystem::path& path, const ModelFile& model) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "model";
    j["family"] = family_name(model.family);
    j["metadata"] = model.metadata;
    if (model.family == ModelFamily::Ica) {
        const std::size_t d = model.ica.dim();
        nlohmann::json filters = nlohmann::json::array();
        for (std::size_t k = 0; k < d; ++k) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t l = 0; l < d; ++l)
                row.push_back(model.ica.filters(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)));
            filters.push_back(row);
        }
        j["d"] = d;
        j["filters"] = filters;
    } else {
        j["coupling"] = coupling_to_json(model.coupling);
        if (model.family == ModelFamily::IsingLattice) {
            j["rows"] = model.rows;
            j["cols"] = model.cols;
        }
    }
    atomic_write(path, j.dump(2) + "\n");
}

ModelFile read_model(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(slurp(path));
    if (j.at("schema_version").get<int>() != kSchemaVersion)
        throw std::runtime_error("unsupported model schema version in " + path.string());
    ModelFile model;
    model.family = family_from_name(j.at("family").get<std::string>());
    model.metadata = j.value("metadata", nlohmann::json::object());
    if (model.family == ModelFamily::Ica) {
        const auto d = j.at("d").get<std::size_t>();
        model.ica.filters.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        const auto& filters = j.at("filters");
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t l = 0; l < d; ++l)
                model.ica.filters(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
                    filters.at(k).at(l).get<double>();
    } else {
        model.coupling = coupling_from_json(j.at("coupling"));
        if (model.family == ModelFamily::IsingLattice) {
            model.rows = j.at("rows").get<std::size_t>();
            model.cols = j.at("cols").get<std::size_t>();
        }
    }
    return model;
}

namespace {

nlohmann::json trace_point_to_json(const TracePoint& p) {
    nlohmann::json j;
    j["elapsed_s"] = p.elapsed_s;
    if (p.objective) j["objective"] = *p.objective;
    if (p.grad_norm) j["grad_norm"] = *p.grad_norm;
    if (p.eps_j) j["eps_j"] = *p.eps_j;
    if (p.eps_corr) j["eps_corr"] = *p.eps_corr;
    return j;
}

TracePoint trace_point_from_json(const nlohmann::json& j) {
    TracePoint p;
    p.elapsed_s = j.at("elapsed_s").get<double>();
    if (j.contains("objective")) p.objective = j.at("objective").get<double>();
    if (j.contains("grad_norm")) p.grad_norm = j.at("grad_norm").get<double>();
    if (j.contains("eps_j")) p.eps_j = j.at("eps_j").get<double>();
    if (j.contains("eps_corr")) p.eps_corr = j.at("eps_corr").get<double>();
    return p;
}

}  // namespace

void write_report(const std::filesystem::path& path, const FitReport& report) {
    nlohmann::json j;
    j["schema_version"] = report.schema_version;
    j["kind"] = "fit-report";
    j["version"] = report.version;
    j["estimator"] = report.estimator;
    j["seed"] = report.seed;
    j["config"] = report.config;
    j["theta"] = report.theta;
    nlohmann::json trace = nlohmann::json::array();
    for (const TracePoint& p : report.trace) trace.push_back(trace_point_to_json(p));
    j["trace"] = trace;
    j["final_metrics"] = report.final_metrics;
    j["warnings"] = report.warnings;
    atomic_write(path, j.dump(2) + "\n");
}

FitReport read_report(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(slurp(path));
    if (j.at("kind").get<std::string>() != "fit-report")
        throw std::runtime_error("not a fit report: " + path.string());
    FitReport report;
    report.schema_version = j.at("schema_version").get<int>();
    if (report.schema_version != kSchemaVersion)
        throw std::runtime_error("unsupported report schema version in " + path.string());
    report.version = j.at("version").get<std::string>();
    report.estimator = j.at("estimator").get<std::string>();
    report.seed = j.at("seed").get<std::uint64_t>();
    report.config = j.at("config");
    report.theta = j.at("theta");
    for (const auto& p : j.at("trace")) report.trace.push_back(trace_point_from_json(p));
    report.final_metrics = j.at("final_metrics").get<std::map<std::string, double>>();
    report.warnings = j.at("warnings").get<std::vector<std::string>>();
    return report;
}

}  // namespace mpf::io
