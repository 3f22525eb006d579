#ifndef FTHRESH_FULL_COV_HPP
#define FTHRESH_FULL_COV_HPP

#include "fthresh/covfield.hpp"
#include "fthresh/dense.hpp"
#include "fthresh/estimate.hpp"

namespace fthresh {

/// Sample covariance function with divisor n - 1. Requires n >= 2.
CovField sample_cov(const DenseSample& data);

/**
 * Variance factors Theta_jk(u, v) = n^-1 sum_i [c_ij(u) c_ik(v) - sigma_jk(u, v)]^2
 * with c_ij the centered curves. `sigma_hat` must come from the same data.
 */
VarianceField variance_factors(const DenseSample& data, const CovField& sigma_hat);

/// Column means of the sample, computed as a shifted mean (identical rows give exact zeros after centering).
Eigen::RowVectorXd column_means(const Eigen::MatrixXd& values);

}

#endif
