#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "mpflow/binary_state.hpp"
#include "mpflow/params.hpp"

namespace mpf {

// Energy model over d-bit binary states, parameterized by a flat theta whose
// layout the model declares. Everything an estimator needs is expressed
// through energies, single-bit-flip energy gaps, and parameter gradients, so
// objectives stay model-agnostic.
class DiscreteEnergyModel {
public:
    virtual ~DiscreteEnergyModel() = default;

    virtual std::size_t dim() const = 0;
    virtual const ParamLayout& layout() const = 0;
    std::size_t param_count() const { return layout().total(); }

    virtual double energy(const BinaryState& x, std::span<const double> theta) const = 0;

    // E(x with bit k flipped) - E(x).
    virtual double flip_delta(const BinaryState& x, std::size_t k,
                              std::span<const double> theta) const = 0;

    // grad += coeff * dE(x)/dtheta.
    virtual void add_param_grad(const BinaryState& x, std::span<const double> theta,
                                double coeff, std::span<double> grad) const = 0;

    // grad += coeff * (dE(x)/dtheta - dE(flip_k(x))/dtheta).
    virtual void add_flip_grad_diff(const BinaryState& x, std::size_t k,
                                    std::span<const double> theta, double coeff,
                                    std::span<double> grad) const = 0;

    void check_state(const BinaryState& x) const {
        if (x.size() != dim()) throw std::invalid_argument("state dimension mismatch");
    }
    void check_theta(std::span<const double> theta) const {
        if (theta.size() != param_count()) throw std::invalid_argument("parameter vector length mismatch");
    }
};

// Energy gap between x with bit k on and x with bit k off, independent of the
// current value of x_k. This single formula backs both the Gibbs heat-bath
// conditional and the pseudolikelihood conditional.
inline double on_off_gap(const DiscreteEnergyModel& model, const BinaryState& x, std::size_t k,
                         std::span<const double> theta) {
    double delta = model.flip_delta(x, k, theta);
    return x[k] ? -delta : delta;
}

// p(x_k = 1 | rest) for the heat-bath / pseudolikelihood conditional.
inline double conditional_on_probability(double gap) {
    return 1.0 / (1.0 + std::exp(gap));
}

// Energy model over continuous states q in R^d. Parameter gradients follow
// the same accumulate-with-coefficient convention as the discrete interface.
class ContinuousEnergyModel {
public:
    virtual ~ContinuousEnergyModel() = default;

    virtual std::size_t dim() const = 0;
    virtual const ParamLayout& layout() const = 0;
    std::size_t param_count() const { return layout().total(); }

    virtual double energy(std::span<const double> q, std::span<const double> theta) const = 0;
    virtual void grad_q(std::span<const double> q, std::span<const double> theta,
                        std::span<double> out) const = 0;
    virtual void add_param_grad(std::span<const double> q, std::span<const double> theta,
                                double coeff, std::span<double> grad) const = 0;

    // Analytic Laplacian sum_i d^2E/dq_i^2, when the model has one.
    virtual bool has_laplacian() const { return false; }
    virtual double laplacian_q(std::span<const double>, std::span<const double>) const {
        throw std::logic_error("model has no analytic laplacian");
    }

    // Analytic mixed second derivatives, used by the score-matching gradient:
    //   out_m += coeff * u . d(grad_q E)/dtheta_m
    //   out_m += coeff * d(laplacian_q E)/dtheta_m
    virtual bool has_param_second_order() const { return false; }
    virtual void add_grad_q_param_jacobian(std::span<const double> /*q*/, std::span<const double> /*theta*/,
                                           std::span<const double> /*u*/, double /*coeff*/,
                                           std::span<double> /*out*/) const {
        throw std::logic_error("model has no analytic mixed derivatives");
    }
    virtual void add_laplacian_param_grad(std::span<const double> /*q*/, std::span<const double> /*theta*/,
                                          double /*coeff*/, std::span<double> /*out*/) const {
        throw std::logic_error("model has no analytic mixed derivatives");
    }

    void check_q(std::span<const double> q) const {
        if (q.size() != dim()) throw std::invalid_argument("state dimension mismatch");
    }
    void check_theta(std::span<const double> theta) const {
        if (theta.size() != param_count()) throw std::invalid_argument("parameter vector length mismatch");
    }
};

}  // namespace mpf
