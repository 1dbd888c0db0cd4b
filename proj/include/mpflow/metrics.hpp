#pragma once

#include <Eigen/Dense>

#include "mpflow/ising.hpp"

namespace mpf {

// Mean square error in recovered coupling strengths: squared parameter
// differences averaged over the union of the true and estimated supports
// (absent entries count as zero) plus the d bias terms, in the shared
// stored-once-per-pair parameterization.
double eps_j(const CouplingMatrix& truth, const CouplingMatrix& estimate);

// Mean square error in connected pair correlations over i < j.
double eps_corr(const Eigen::MatrixXd& truth_corr, const Eigen::MatrixXd& estimate_corr);

// Mean absolute error in connected pair correlations over i < j.
double mean_abs_corr_error(const Eigen::MatrixXd& truth_corr, const Eigen::MatrixXd& estimate_corr);

}  // namespace mpf
