#pragma once

// Small continuous-state models and wrappers used only by tests: smooth
// quadratic/linear energies with analytic second derivatives, a
// parameter-free constant energy, and a discrete wrapper that shifts all
// energies by a constant through the full-recompute path.

#include <cmath>

#include "mpflow/model.hpp"

namespace mpf::test {

// E(q; theta) = 0.5 sum_i theta_i q_i^2 (one stiffness parameter per axis).
class QuadraticModel : public ContinuousEnergyModel {
public:
    explicit QuadraticModel(std::size_t d) : d_(d), layout_({{"stiffness", 0, d}}) {}

    std::size_t dim() const override { return d_; }
    const ParamLayout& layout() const override { return layout_; }

    double energy(std::span<const double> q, std::span<const double> theta) const override {
        double e = 0.0;
        for (std::size_t i = 0; i < d_; ++i) e += 0.5 * theta[i] * q[i] * q[i];
        return e;
    }
    void grad_q(std::span<const double> q, std::span<const double> theta,
                std::span<double> out) const override {
        for (std::size_t i = 0; i < d_; ++i) out[i] = theta[i] * q[i];
    }
    void add_param_grad(std::span<const double> q, std::span<const double>, double coeff,
                        std::span<double> grad) const override {
        for (std::size_t i = 0; i < d_; ++i) grad[i] += coeff * 0.5 * q[i] * q[i];
    }

    bool has_laplacian() const override { return true; }
    double laplacian_q(std::span<const double>, std::span<const double> theta) const override {
        double lap = 0.0;
        for (std::size_t i = 0; i < d_; ++i) lap += theta[i];
        return lap;
    }
    bool has_param_second_order() const override { return true; }
    void add_grad_q_param_jacobian(std::span<const double> q, std::span<const double>,
                                   std::span<const double> u, double coeff,
                                   std::span<double> out) const override {
        // d(grad_q E)_i / dtheta_m = delta_im q_i
        for (std::size_t i = 0; i < d_; ++i) out[i] += coeff * u[i] * q[i];
    }
    void add_laplacian_param_grad(std::span<const double>, std::span<const double>, double coeff,
                                  std::span<double> out) const override {
        for (std::size_t i = 0; i < d_; ++i) out[i] += coeff;
    }

private:
    std::size_t d_;
    ParamLayout layout_;
};

// E(q; theta) = theta . q.
class LinearModel final : public ContinuousEnergyModel {
public:
    explicit LinearModel(std::size_t d) : d_(d), layout_({{"slope", 0, d}}) {}

    std::size_t dim() const override { return d_; }
    const ParamLayout& layout() const override { return layout_; }

    double energy(std::span<const double> q, std::span<const double> theta) const override {
        double e = 0.0;
        for (std::size_t i = 0; i < d_; ++i) e += theta[i] * q[i];
        return e;
    }
    void grad_q(std::span<const double>, std::span<const double> theta,
                std::span<double> out) const override {
        for (std::size_t i = 0; i < d_; ++i) out[i] = theta[i];
    }
    void add_param_grad(std::span<const double> q, std::span<const double>, double coeff,
                        std::span<double> grad) const override {
        for (std::size_t i = 0; i < d_; ++i) grad[i] += coeff * q[i];
    }

    bool has_laplacian() const override { return true; }
    double laplacian_q(std::span<const double>, std::span<const double>) const override {
        return 0.0;
    }
    bool has_param_second_order() const override { return true; }
    void add_grad_q_param_jacobian(std::span<const double>, std::span<const double>,
                                   std::span<const double> u, double coeff,
                                   std::span<double> out) const override {
        for (std::size_t i = 0; i < d_; ++i) out[i] += coeff * u[i];
    }
    void add_laplacian_param_grad(std::span<const double>, std::span<const double>, double,
                                  std::span<double>) const override {}

private:
    std::size_t d_;
    ParamLayout layout_;
};

// Energy identically `value` regardless of theta (one dummy parameter).
class ConstantModel final : public ContinuousEnergyModel {
public:
    ConstantModel(std::size_t d, double value) : d_(d), value_(value), layout_({{"unused", 0, 1}}) {}

    std::size_t dim() const override { return d_; }
    const ParamLayout& layout() const override { return layout_; }

    double energy(std::span<const double>, std::span<const double>) const override { return value_; }
    void grad_q(std::span<const double>, std::span<const double>,
                std::span<double> out) const override {
        for (double& g : out) g = 0.0;
    }
    void add_param_grad(std::span<const double>, std::span<const double>, double,
                        std::span<double>) const override {}

private:
    std::size_t d_;
    double value_;
    ParamLayout layout_;
};

// Adds a constant to every energy of a wrapped discrete model, with flip
// gaps recomputed from the shifted full energies, so invariance tests
// exercise genuine cancellation instead of a shortcut.
class ShiftedDiscreteModel final : public DiscreteEnergyModel {
public:
    ShiftedDiscreteModel(const DiscreteEnergyModel& base, double shift)
        : base_(base), shift_(shift) {}

    std::size_t dim() const override { return base_.dim(); }
    const ParamLayout& layout() const override { return base_.layout(); }

    double energy(const BinaryState& x, std::span<const double> theta) const override {
        return base_.energy(x, theta) + shift_;
    }
    double flip_delta(const BinaryState& x, std::size_t k,
                      std::span<const double> theta) const override {
        return energy(x.flipped(k), theta) - energy(x, theta);
    }
    void add_param_grad(const BinaryState& x, std::span<const double> theta, double coeff,
                        std::span<double> grad) const override {
        base_.add_param_grad(x, theta, coeff, grad);
    }
    void add_flip_grad_diff(const BinaryState& x, std::size_t k, std::span<const double> theta,
                            double coeff, std::span<double> grad) const override {
        base_.add_flip_grad_diff(x, k, theta, coeff, grad);
    }

private:
    const DiscreteEnergyModel& base_;
    double shift_;
};

}  // namespace mpf::test
