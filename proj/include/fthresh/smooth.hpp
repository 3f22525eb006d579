#ifndef FTHRESH_SMOOTH_HPP
#define FTHRESH_SMOOTH_HPP

#include "fthresh/counters.hpp"
#include "fthresh/covfield.hpp"
#include "fthresh/dense.hpp"
#include "fthresh/estimate.hpp"
#include "fthresh/grid.hpp"
#include "fthresh/kernel.hpp"
#include "fthresh/partial.hpp"
#include "fthresh/surface.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace fthresh {

enum class Design { Sparse, Dense, VeryDense };

Design parse_design(std::string_view name);

/// c * n^{-1/6} (sparse), c * (n L^2)^{-1/6} (dense), c * n^{-1/4} (very dense).
double default_bandwidth(std::size_t n, double L, Design design, double c);

/// Rate I_jk normalizing the variance surrogate across measurement designs.
double rate_Ijk(std::span<const std::size_t> counts_j, std::span<const std::size_t> counts_k, double h);

enum class WeightStatus { Regular, LocalConstant, Empty };

/// Closed-form local-linear weights: alpha_0 = W1*T00 + W2*T10 + W3*T01.
struct LocalLinearWeights {
    double w1 = 0.0;
    double w2 = 0.0;
    double w3 = 0.0;
    WeightStatus status = WeightStatus::Regular;
};

/// Relative size of the 3x3 determinant, against S00*S20*S02, below which the fit falls back to local-constant.
inline constexpr double kSingularRelative = 1e-12;

LocalLinearWeights local_linear_weights(double s00, double s10, double s01, double s20, double s11, double s02);

/// Local-linear curve value (S2 T0 - S1 T1) / (S2 S0 - S1^2); local-constant when singular, NaN when empty.
double local_linear_value(double s0, double s1, double s2, double t0, double t1);

/// Replace NaN entries by the mean of their finite 4-neighbours, repeating until none remain.
/// Throws InsufficientDataError when every entry is NaN.
void fill_missing(Eigen::MatrixXd& values);

/// Same for a curve: missing points take the mean of their finite neighbours.
void fill_missing(Eigen::Ref<Eigen::VectorXd> values);

/// Options for one smoothed pair.
struct PairOptions {
    KernelKind kernel = KernelKind::Gaussian;
    /// For j == k, keep the same-observation products (l == m). Only useful as a nugget control.
    bool include_diagonal = false;
};

Surface lls_cross_cov(const PartialSample& data, std::size_t j, std::size_t k, double h, const GridPtr& out,
                      const PairOptions& options = {});

Surface lls_marginal_cov(const PartialSample& data, std::size_t j, double h, const GridPtr& out,
                         const PairOptions& options = {});

/// Psi_jk = I_jk * sum_i (W1 V00_i + W2 V10_i + W3 V01_i)^2 with V_ab,i = T_ab,i - sigma_tilde * S_ab,i.
Surface variance_surrogate(const PartialSample& data, std::size_t j, std::size_t k, const Surface& sigma_tilde,
                           double h, const GridPtr& out, const PairOptions& options = {});

struct SmoothingOptions {
    double h_cross = 0.2;
    double h_marginal = 0.2;
    /// Overrides keyed by (min(j,k), max(j,k)); (j, j) overrides the marginal bandwidth of j.
    std::map<std::pair<std::size_t, std::size_t>, double> pair_bandwidths;
    KernelKind kernel = KernelKind::Gaussian;
    bool with_variance = true;
    int threads = 1;

    double bandwidth(std::size_t j, std::size_t k) const;
};

struct PairDiagnostics {
    std::size_t j = 0;
    std::size_t k = 0;
    double bandwidth = 0.0;
    std::size_t local_constant_points = 0;
    std::size_t empty_points = 0;
};

struct SmoothedCovariance {
    CovField sigma;
    std::optional<VarianceField> psi;
    std::vector<PairDiagnostics> pairs;
    OpCounts counts;
};

/// Direct local-linear surface smoothing of every raw product, all pairs j <= k.
SmoothedCovariance smooth_covariance(const PartialSample& data, const GridPtr& out, const SmoothingOptions& options);

inline ThresholdedEstimate smoothed_adaptive_estimate(const CovField& sigma_tilde, const VarianceField& psi_tilde,
                                                      const ThresholdOptions& options) {
    return adaptive_estimate(sigma_tilde, psi_tilde, options);
}

/// Per-curve local-linear reconstruction on `out`, for dense designs.
DenseSample presmooth_curves(const PartialSample& data, double h, const GridPtr& out,
                             KernelKind kernel = KernelKind::Gaussian);

/// Subtract a mean function per variable, estimated by a local-linear smoother pooled over subjects.
PartialSample center_partial(const PartialSample& data, double h, KernelKind kernel = KernelKind::Gaussian);

}

#endif
