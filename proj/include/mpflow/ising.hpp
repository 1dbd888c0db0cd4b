#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mpflow/model.hpp"

namespace mpf {

using PairIndex = std::pair<std::uint32_t, std::uint32_t>;

// Symmetric pair couplings stored once per unordered pair (i < j) on a
// declared support, plus per-site bias terms on the diagonal. The energy is
//   E(x) = sum_{i, j != i} J_ij x_i x_j + sum_i J_ii x_i
// with J_ij = J_ji, so each stored pair value enters the energy with weight 2.
struct CouplingMatrix {
    std::size_t d = 0;
    std::vector<PairIndex> support;     // i < j, sorted lexicographically
    std::vector<double> pair_values;    // aligned with support
    std::vector<double> biases;         // length d

    // Flat layout: [pair block | bias block]. pack/unpack round-trip exactly.
    ParameterVector pack() const;

    bool same_structure(const CouplingMatrix& o) const {
        return d == o.d && support == o.support;
    }
};

// Structure (dimension + support) taken from `structure`; values from theta.
CouplingMatrix unpack_coupling(const CouplingMatrix& structure, std::span<const double> theta);

double ising_energy(const BinaryState& x, const CouplingMatrix& J);

// E(x with bit k flipped) - E(x), in O(|neighbors of k|):
//   (1 - 2 x_k) * (2 * sum_{j != k} J_kj x_j + J_kk).
double flip_energy_delta(const BinaryState& x, std::size_t k, const CouplingMatrix& J);

// dE/dtheta in the flat layout: 2 x_i x_j per stored pair, x_i per bias.
ParameterVector ising_param_grad(const BinaryState& x, const CouplingMatrix& J);

// Nearest-neighbor edges of a rows x cols square lattice with open boundary,
// sites numbered row-major.
std::vector<PairIndex> lattice_edges(std::size_t rows, std::size_t cols);
std::vector<PairIndex> all_pairs(std::size_t d);

// Spin glass on an open-boundary square lattice: off-diagonal entries drawn
// i.i.d. N(0, sigma2); diagonal set so every column of the full symmetric
// matrix sums to zero (unit activations 0.5 under the model).
CouplingMatrix random_lattice_glass(std::size_t rows, std::size_t cols, double sigma2,
                                    std::uint64_t seed);

// Same construction on the complete pair support.
CouplingMatrix random_full_glass(std::size_t d, double sigma2, std::uint64_t seed);

// Theta-bound Ising evaluation with per-site adjacency, giving O(degree)
// flip gaps and sparse flip-gradient differences.
class IsingModel final : public DiscreteEnergyModel {
public:
    IsingModel(std::size_t d, std::vector<PairIndex> support);
    explicit IsingModel(const CouplingMatrix& structure)
        : IsingModel(structure.d, structure.support) {}

    std::size_t dim() const override { return d_; }
    const ParamLayout& layout() const override { return layout_; }
    const std::vector<PairIndex>& support() const { return support_; }

    double energy(const BinaryState& x, std::span<const double> theta) const override;
    double flip_delta(const BinaryState& x, std::size_t k,
                      std::span<const double> theta) const override;
    void add_param_grad(const BinaryState& x, std::span<const double> theta, double coeff,
                        std::span<double> grad) const override;
    void add_flip_grad_diff(const BinaryState& x, std::size_t k, std::span<const double> theta,
                            double coeff, std::span<double> grad) const override;

    CouplingMatrix to_coupling(std::span<const double> theta) const;

private:
    struct Link {
        std::uint32_t site;   // the other endpoint
        std::uint32_t param;  // index into the pair block
    };

    std::size_t d_;
    std::vector<PairIndex> support_;
    std::vector<std::vector<Link>> adjacency_;
    ParamLayout layout_;
};

}  // namespace mpf
