#pragma once

#include <Eigen/Dense>

#include "mpflow/model.hpp"

namespace mpf {

// Square filter matrix of an ICA model with Laplace prior; row k is filter k.
struct IcaParameters {
    Eigen::MatrixXd filters;

    std::size_t dim() const { return static_cast<std::size_t>(filters.rows()); }
    ParameterVector pack() const;
};

IcaParameters unpack_ica(std::size_t d, std::span<const double> theta);

// E(x; J) = sum_k |J_k x|. Energy differences at fixed parameters are
// unaffected by the model's log-determinant normalizer, which is therefore
// excluded here; the exact likelihood lives in the oracle module.
double ica_energy(std::span<const double> x, const IcaParameters& J);

// sum_k sign(J_k x) J_k^T, with sign(0) = 0.
std::vector<double> ica_energy_grad_x(std::span<const double> x, const IcaParameters& J);

// dE/dJ_kl = sign(J_k x) x_l, flattened row-major.
ParameterVector ica_param_grad(std::span<const double> x, const IcaParameters& J);

class IcaModel final : public ContinuousEnergyModel {
public:
    explicit IcaModel(std::size_t d);

    std::size_t dim() const override { return d_; }
    const ParamLayout& layout() const override { return layout_; }

    double energy(std::span<const double> q, std::span<const double> theta) const override;
    void grad_q(std::span<const double> q, std::span<const double> theta,
                std::span<double> out) const override;
    void add_param_grad(std::span<const double> q, std::span<const double> theta, double coeff,
                        std::span<double> grad) const override;

private:
    std::size_t d_;
    ParamLayout layout_;
};

}  // namespace mpf
