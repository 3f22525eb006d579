#ifndef FTHRESH_ESTIMATE_HPP
#define FTHRESH_ESTIMATE_HPP

#include "fthresh/covfield.hpp"
#include "fthresh/threshold.hpp"

#include <Eigen/Dense>

namespace fthresh {

/**
 * Pointwise variance surfaces used to standardize covariance entries: the
 * variance factors of the sample covariance for full data, or the smoothed
 * surrogate for partially observed data. Entries are nonnegative and the
 * field carries the same exact symmetry as a CovField.
 */
class VarianceField {
  public:
    explicit VarianceField(CovField field);

    const CovField& field() const { return field_; }
    std::size_t p() const { return field_.p(); }
    const GridPtr& grid() const { return field_.grid(); }

    /// Per-entry floors: values of entry (j, k) below floors()(j, k) are raised to it before division.
    const Eigen::MatrixXd& floors() const { return floors_; }
    /// True when every entry is identically zero.
    bool degenerate() const { return degenerate_; }

  private:
    CovField field_;
    Eigen::MatrixXd floors_;
    bool degenerate_ = true;
};

/// Relative floor applied to each variance surface: 1e-12 of that surface's maximum.
inline constexpr double kVarianceFloorRelative = 1e-12;

enum class Standardization { Adaptive, Universal };

struct ThresholdOptions {
    double lambda = 0.0;
    ThresholdRule rule = ThresholdRule::soft();
    NormKind norm = NormKind::HilbertSchmidt;
    /// Leave diagonal entries untouched (always in the support).
    bool keep_diagonal = false;
};

/// Entry norms of the standardized surfaces sigma_jk / sqrt(variance_jk).
/// Throws DegenerateVarianceError when the variance field is identically zero.
Eigen::MatrixXd standardized_norms(const CovField& sigma, const VarianceField& variance, NormKind norm);

/// Entry norms of the raw surfaces.
Eigen::MatrixXd raw_norms(const CovField& sigma, NormKind norm);

/**
 * Thresholds every entry by the scalar factor that the rule assigns to its
 * decision norm. Because each rule is a scalar multiple of its argument,
 * sqrt(v) * s(sigma / sqrt(v)) equals c * sigma, which is what is stored;
 * entries with c = 0 become exact zeros and leave the support.
 */
ThresholdedEstimate threshold_by_norms(const CovField& sigma, const Eigen::MatrixXd& decision_norms,
                                       const ThresholdOptions& options);

/// Adaptive estimator: one threshold applied to variance-standardized entries.
ThresholdedEstimate adaptive_estimate(const CovField& sigma, const VarianceField& variance,
                                      const ThresholdOptions& options);

/// Universal estimator: one threshold applied to raw entries.
ThresholdedEstimate universal_estimate(const CovField& sigma, const ThresholdOptions& options);

}

#endif
