#include "mpflow/metrics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace mpf {

double eps_j(const CouplingMatrix& truth, const CouplingMatrix& estimate) {
    if (truth.d != estimate.d) throw std::invalid_argument("eps_j: dimension mismatch");
    std::map<PairIndex, double> diff;
    for (std::size_t p = 0; p < truth.support.size(); ++p) diff[truth.support[p]] = truth.pair_values[p];
    for (std::size_t p = 0; p < estimate.support.size(); ++p)
        diff[estimate.support[p]] -= estimate.pair_values[p];

    double sum_sq = 0.0;
    for (const auto& [pair, delta] : diff) sum_sq += delta * delta;
    for (std::size_t i = 0; i < truth.d; ++i) {
        const double delta = truth.biases[i] - estimate.biases[i];
        sum_sq += delta * delta;
    }
    return sum_sq / static_cast<double>(diff.size() + truth.d);
}

namespace {

double corr_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, bool squared) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw std::invalid_argument("correlation error: shape mismatch");
    const Eigen::Index d = a.rows();
    if (d < 2) throw std::invalid_argument("correlation error: need d >= 2");
    double sum = 0.0;
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
            const double delta = a(i, j) - b(i, j);
            sum += squared ? delta * delta : std::abs(delta);
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

}  // namespace

double eps_corr(const Eigen::MatrixXd& truth_corr, const Eigen::MatrixXd& estimate_corr) {
    return corr_error(truth_corr, estimate_corr, true);
}

double mean_abs_corr_error(const Eigen::MatrixXd& truth_corr, const Eigen::MatrixXd& estimate_corr) {
    return corr_error(truth_corr, estimate_corr, false);
}

}  // namespace mpf
