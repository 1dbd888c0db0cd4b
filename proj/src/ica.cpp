#include "mpflow/ica.hpp"

#include <cmath>
#include <stdexcept>

namespace mpf {

namespace {
inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
}

ParameterVector IcaParameters::pack() const {
    const std::size_t d = dim();
    ParameterVector theta(d * d);
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t l = 0; l < d; ++l) theta[k * d + l] = filters(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
    return theta;
}

IcaParameters unpack_ica(std::size_t d, std::span<const double> theta) {
    if (theta.size() != d * d) throw std::invalid_argument("unpack_ica: parameter vector length mismatch");
    IcaParameters J;
    J.filters.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t l = 0; l < d; ++l) J.filters(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = theta[k * d + l];
    return J;
}

double ica_energy(std::span<const double> x, const IcaParameters& J) {
    const std::size_t d = J.dim();
    if (x.size() != d) throw std::invalid_argument("ica_energy: dimension mismatch");
    double e = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        double r = 0.0;
        for (std::size_t l = 0; l < d; ++l) r += J.filters(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) * x[l];
        e += std::abs(r);
    }
    return e;
}

std::vector<double> ica_energy_grad_x(std::span<const double> x, const IcaParameters& J) {
    const std::size_t d = J.dim();
    if (x.size() != d) throw std::invalid_argument("ica_energy_grad_x: dimension mismatch");
    std::vector<double> g(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        double r = 0.0;
        for (std::size_t l = 0; l < d; ++l) r += J.filters(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) * x[l];
        const double s = sign0(r);
        if (s != 0.0)
            for (std::size_t l = 0; l < d; ++l) g[l] += s * J.filters(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
    }
    return g;
}

ParameterVector ica_param_grad(std::span<const double> x, const IcaParameters& J) {
    const std::size_t d = J.dim();
    if (x.size() != d) throw std::invalid_argument("ica_param_grad: dimension mismatch");
    ParameterVector g(d * d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        double r = 0.0;
        for (std::size_t l = 0; l < d; ++l) r += J.filters(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) * x[l];
        const double s = sign0(r);
        if (s != 0.0)
            for (std::size_t l = 0; l < d; ++l) g[k * d + l] = s * x[l];
    }
    return g;
}

IcaModel::IcaModel(std::size_t d) : d_(d) {
    if (d < 1) throw std::invalid_argument("IcaModel: d must be >= 1");
    layout_ = ParamLayout({{"filters", 0, d * d}});
}

double IcaModel::energy(std::span<const double> q, std::span<const double> theta) const {
    check_q(q);
    check_theta(theta);
    double e = 0.0;
    for (std::size_t k = 0; k < d_; ++k) {
        double r = 0.0;
        const double* row = theta.data() + k * d_;
        for (std::size_t l = 0; l < d_; ++l) r += row[l] * q[l];
        e += std::abs(r);
    }
    return e;
}

void IcaModel::grad_q(std::span<const double> q, std::span<const double> theta,
                      std::span<double> out) const {
    check_q(q);
    check_theta(theta);
    for (std::size_t l = 0; l < d_; ++l) out[l] = 0.0;
    for (std::size_t k = 0; k < d_; ++k) {
        double r = 0.0;
        const double* row = theta.data() + k * d_;
        for (std::size_t l = 0; l < d_; ++l) r += row[l] * q[l];
        const double s = sign0(r);
        if (s != 0.0)
            for (std::size_t l = 0; l < d_; ++l) out[l] += s * row[l];
    }
}

void IcaModel::add_param_grad(std::span<const double> q, std::span<const double> theta,
                              double coeff, std::span<double> grad) const {
    check_q(q);
    check_theta(theta);
    for (std::size_t k = 0; k < d_; ++k) {
        double r = 0.0;
        const double* row = theta.data() + k * d_;
        for (std::size_t l = 0; l < d_; ++l) r += row[l] * q[l];
        const double s = sign0(r);
        if (s != 0.0)
            for (std::size_t l = 0; l < d_; ++l) grad[k * d_ + l] += coeff * s * q[l];
    }
}

}  // namespace mpf
