#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "mpflow/dataset.hpp"
#include "mpflow/ica.hpp"
#include "mpflow/ising.hpp"

namespace mpf::io {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "0.1.0";

// Writes content to a temporary sibling file, then renames over the target.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// Binary dataset file: header "#mpf-bin d=<d> m=<M>", one state per line as a
// '0'/'1' string, with an optional " <weight>" suffix (weight 1 omitted).
void write_discrete_dataset(const std::filesystem::path& path, const DiscreteDataset& data);
DiscreteDataset read_discrete_dataset(const std::filesystem::path& path);

// Continuous dataset file: header "#mpf-real d=<d> m=<M>", comma-separated
// decimals per line, 17 significant digits.
void write_real_dataset(const std::filesystem::path& path, const RealDataset& data);
RealDataset read_real_dataset(const std::filesystem::path& path);

enum class ModelFamily { IsingLattice, IsingFull, Ica };

std::string family_name(ModelFamily family);
ModelFamily family_from_name(const std::string& name);

struct ModelFile {
    ModelFamily family = ModelFamily::IsingFull;
    CouplingMatrix coupling;       // Ising families
    IcaParameters ica;             // ICA family
    std::size_t rows = 0, cols = 0;  // lattice shape when applicable
    nlohmann::json metadata;       // generation parameters (sigma2, seed, boundary, ...)
};

void write_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile read_model(const std::filesystem::path& path);

struct TracePoint {
    double elapsed_s = 0.0;
    std::optional<double> objective;
    std::optional<double> grad_norm;
    std::optional<double> eps_j;
    std::optional<double> eps_corr;
};

struct FitReport {
    int schema_version = kSchemaVersion;
    std::string version = kLibraryVersion;
    std::string estimator;
    std::uint64_t seed = 0;
    nlohmann::json config;  // echo of the experiment configuration
    nlohmann::json theta;   // named parameter blocks
    std::vector<TracePoint> trace;
    std::map<std::string, double> final_metrics;
    std::vector<std::string> warnings;
};

void write_report(const std::filesystem::path& path, const FitReport& report);
// Validates the declared schema version; throws on mismatch.
FitReport read_report(const std::filesystem::path& path);

nlohmann::json coupling_to_json(const CouplingMatrix& J);
CouplingMatrix coupling_from_json(const nlohmann::json& j);

}  // namespace mpf::io
