#include "mpflow/ising.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "mpflow/rng.hpp"

namespace mpf {

ParameterVector CouplingMatrix::pack() const {
    ParameterVector theta;
    theta.reserve(pair_values.size() + biases.size());
    theta.insert(theta.end(), pair_values.begin(), pair_values.end());
    theta.insert(theta.end(), biases.begin(), biases.end());
    return theta;
}

CouplingMatrix unpack_coupling(const CouplingMatrix& structure, std::span<const double> theta) {
    if (theta.size() != structure.support.size() + structure.d)
        throw std::invalid_argument("unpack_coupling: parameter vector length mismatch");
    CouplingMatrix J;
    J.d = structure.d;
    J.support = structure.support;
    J.pair_values.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(structure.support.size()));
    J.biases.assign(theta.begin() + static_cast<std::ptrdiff_t>(structure.support.size()), theta.end());
    return J;
}

double ising_energy(const BinaryState& x, const CouplingMatrix& J) {
    if (x.size() != J.d) throw std::invalid_argument("ising_energy: dimension mismatch");
    double e = 0.0;
    for (std::size_t p = 0; p < J.support.size(); ++p) {
        const auto [i, j] = J.support[p];
        if (x[i] && x[j]) e += 2.0 * J.pair_values[p];
    }
    for (std::size_t i = 0; i < J.d; ++i)
        if (x[i]) e += J.biases[i];
    return e;
}

double flip_energy_delta(const BinaryState& x, std::size_t k, const CouplingMatrix& J) {
    if (x.size() != J.d) throw std::invalid_argument("flip_energy_delta: dimension mismatch");
    if (k >= J.d) throw std::out_of_range("flip_energy_delta: bit index out of range");
    double field = J.biases[k];
    for (std::size_t p = 0; p < J.support.size(); ++p) {
        const auto [i, j] = J.support[p];
        if (i == k && x[j]) field += 2.0 * J.pair_values[p];
        else if (j == k && x[i]) field += 2.0 * J.pair_values[p];
    }
    return (1.0 - 2.0 * x[k]) * field;
}

ParameterVector ising_param_grad(const BinaryState& x, const CouplingMatrix& J) {
    if (x.size() != J.d) throw std::invalid_argument("ising_param_grad: dimension mismatch");
    ParameterVector grad(J.support.size() + J.d, 0.0);
    for (std::size_t p = 0; p < J.support.size(); ++p) {
        const auto [i, j] = J.support[p];
        if (x[i] && x[j]) grad[p] = 2.0;
    }
    for (std::size_t i = 0; i < J.d; ++i)
        if (x[i]) grad[J.support.size() + i] = 1.0;
    return grad;
}

std::vector<PairIndex> lattice_edges(std::size_t rows, std::size_t cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("lattice_edges: rows, cols must be >= 1");
    std::vector<PairIndex> edges;
    auto site = [cols](std::size_t r, std::size_t c) {
        return static_cast<std::uint32_t>(r * cols + c);
    };
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c + 1 < cols) edges.emplace_back(site(r, c), site(r, c + 1));
            if (r + 1 < rows) edges.emplace_back(site(r, c), site(r + 1, c));
        }
    }
    for (auto& [i, j] : edges)
        if (i > j) std::swap(i, j);
    std::sort(edges.begin(), edges.end());
    return edges;
}

std::vector<PairIndex> all_pairs(std::size_t d) {
    std::vector<PairIndex> pairs;
    pairs.reserve(d * (d - 1) / 2);
    for (std::uint32_t i = 0; i + 1 < d; ++i)
        for (std::uint32_t j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
    return pairs;
}

namespace {

CouplingMatrix random_glass(std::size_t d, std::vector<PairIndex> support, double sigma2,
                            std::uint64_t seed) {
    CouplingMatrix J;
    J.d = d;
    J.support = std::move(support);
    J.pair_values.resize(J.support.size());
    J.biases.assign(d, 0.0);

    auto rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
    for (double& v : J.pair_values) v = noise(rng);

    // J_ii = -sum_{j != i} J_ij makes every column of the full symmetric
    // matrix sum to zero, hence E(x) = E(1-x) and marginal activations 1/2.
    for (std::size_t p = 0; p < J.support.size(); ++p) {
        const auto [i, j] = J.support[p];
        J.biases[i] -= J.pair_values[p];
        J.biases[j] -= J.pair_values[p];
    }
    return J;
}

}  // namespace

CouplingMatrix random_lattice_glass(std::size_t rows, std::size_t cols, double sigma2,
                                    std::uint64_t seed) {
    return random_glass(rows * cols, lattice_edges(rows, cols), sigma2, seed);
}

CouplingMatrix random_full_glass(std::size_t d, double sigma2, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("random_full_glass: d must be >= 1");
    return random_glass(d, all_pairs(d), sigma2, seed);
}

IsingModel::IsingModel(std::size_t d, std::vector<PairIndex> support)
    : d_(d), support_(std::move(support)), adjacency_(d) {
    if (d < 1) throw std::invalid_argument("IsingModel: d must be >= 1");
    for (std::size_t p = 0; p < support_.size(); ++p) {
        const auto [i, j] = support_[p];
        if (i >= j || j >= d_) throw std::invalid_argument("IsingModel: bad support pair");
        adjacency_[i].push_back({j, static_cast<std::uint32_t>(p)});
        adjacency_[j].push_back({i, static_cast<std::uint32_t>(p)});
    }
    layout_ = ParamLayout({{"pairs", 0, support_.size()}, {"biases", support_.size(), d_}});
}

double IsingModel::energy(const BinaryState& x, std::span<const double> theta) const {
    check_state(x);
    check_theta(theta);
    const double* pair = theta.data();
    const double* bias = theta.data() + support_.size();
    double e = 0.0;
    for (std::size_t p = 0; p < support_.size(); ++p) {
        const auto [i, j] = support_[p];
        if (x[i] && x[j]) e += 2.0 * pair[p];
    }
    for (std::size_t i = 0; i < d_; ++i)
        if (x[i]) e += bias[i];
    return e;
}

double IsingModel::flip_delta(const BinaryState& x, std::size_t k,
                              std::span<const double> theta) const {
    check_state(x);
    check_theta(theta);
    if (k >= d_) throw std::out_of_range("flip_delta: bit index out of range");
    const double* pair = theta.data();
    const double* bias = theta.data() + support_.size();
    double field = bias[k];
    for (const Link& l : adjacency_[k])
        if (x[l.site]) field += 2.0 * pair[l.param];
    return (1.0 - 2.0 * x[k]) * field;
}

void IsingModel::add_param_grad(const BinaryState& x, std::span<const double> theta, double coeff,
                                std::span<double> grad) const {
    check_state(x);
    check_theta(theta);
    for (std::size_t p = 0; p < support_.size(); ++p) {
        const auto [i, j] = support_[p];
        if (x[i] && x[j]) grad[p] += 2.0 * coeff;
    }
    for (std::size_t i = 0; i < d_; ++i)
        if (x[i]) grad[support_.size() + i] += coeff;
}

void IsingModel::add_flip_grad_diff(const BinaryState& x, std::size_t k,
                                    std::span<const double> theta, double coeff,
                                    std::span<double> grad) const {
    check_state(x);
    check_theta(theta);
    if (k >= d_) throw std::out_of_range("add_flip_grad_diff: bit index out of range");
    // dE(x)/dtheta - dE(flip_k x)/dtheta: only parameters touching bit k differ,
    // each by (x_k - x_k') = -(1 - 2 x_k).
    const double s = -(1.0 - 2.0 * x[k]);
    for (const Link& l : adjacency_[k])
        if (x[l.site]) grad[l.param] += coeff * 2.0 * s;
    grad[support_.size() + k] += coeff * s;
}

CouplingMatrix IsingModel::to_coupling(std::span<const double> theta) const {
    check_theta(theta);
    CouplingMatrix J;
    J.d = d_;
    J.support = support_;
    J.pair_values.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(support_.size()));
    J.biases.assign(theta.begin() + static_cast<std::ptrdiff_t>(support_.size()), theta.end());
    return J;
}

}  // namespace mpf
