#ifndef FTHRESH_BINNED_HPP
#define FTHRESH_BINNED_HPP

#include "fthresh/counters.hpp"
#include "fthresh/dense.hpp"
#include "fthresh/grid.hpp"
#include "fthresh/kernel.hpp"
#include "fthresh/partial.hpp"
#include "fthresh/smooth.hpp"
#include "fthresh/surface.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace fthresh {

/**
 * Linearly binned partial data on a uniform grid: weighted counts
 * varpi_{r,i} = sum_l w_r(U_il) and weighted averages D_{r,ij} = sum_l w_r(U_il) Z_ijl,
 * with w_r(U) = max(1 - |U - u_r| / Delta, 0).
 */
class BinnedData {
  public:
    BinnedData(GridPtr grid, Eigen::MatrixXd counts, std::vector<Eigen::MatrixXd> averages,
               std::vector<std::size_t> observations);

    std::size_t n() const { return static_cast<std::size_t>(counts_.rows()); }
    std::size_t p() const { return averages_.size(); }
    const GridPtr& grid() const { return grid_; }
    /// n x R weighted counts.
    const Eigen::MatrixXd& counts() const { return counts_; }
    /// n x R weighted averages of variable j.
    const Eigen::MatrixXd& averages(std::size_t j) const { return averages_[j]; }
    /// L_i, the number of observations per subject.
    const std::vector<std::size_t>& observations() const { return observations_; }

    /// Subjects listed in `subjects`, in that order (binning is per subject, so this equals binning the subset).
    BinnedData subset(std::span<const std::size_t> subjects) const;

  private:
    GridPtr grid_;
    Eigen::MatrixXd counts_;
    std::vector<Eigen::MatrixXd> averages_;
    std::vector<std::size_t> observations_;
};

/// Locations closer than this fraction of a bin to a grid point are snapped onto it.
inline constexpr double kBinSnap = 1e-12;

/// Requires the simplified layout and a uniform grid (ConfigError otherwise). Out-of-range locations are clamped.
BinnedData linear_bin(const PartialSample& data, const GridPtr& grid, OpCounts* counts = nullptr);

/// Binned local-linear cross covariance on the bin grid; j == k drops the r1 == r2 terms.
Surface binlls_cross_cov(const BinnedData& binned, std::size_t j, std::size_t k, double h,
                         KernelKind kernel = KernelKind::Gaussian);

/// Binned variance surrogate evaluated at a given smoothed surface.
Surface binlls_variance_surrogate(const BinnedData& binned, std::size_t j, std::size_t k, const Surface& sigma_check,
                                  double h, KernelKind kernel = KernelKind::Gaussian);

/// n x R binned local-linear reconstructions of variable j.
Eigen::MatrixXd binned_presmooth(const BinnedData& binned, std::size_t j, double h,
                                 KernelKind kernel = KernelKind::Gaussian);

/// All variables, as a DenseSample on the bin grid.
DenseSample binned_presmooth_all(const BinnedData& binned, double h, KernelKind kernel = KernelKind::Gaussian);

/// Binned counterpart of smooth_covariance; outputs live on the bin grid.
SmoothedCovariance binned_smooth_covariance(const BinnedData& binned, const SmoothingOptions& options);

}

#endif
