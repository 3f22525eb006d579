#ifndef FTHRESH_TUNING_HPP
#define FTHRESH_TUNING_HPP

#include "fthresh/binned.hpp"
#include "fthresh/covfield.hpp"
#include "fthresh/dense.hpp"
#include "fthresh/estimate.hpp"
#include "fthresh/partial.hpp"
#include "fthresh/smooth.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace fthresh {

/// n1 = round(n (1 - 1 / ln n)), n2 = n - n1; ConfigError unless both are at least 2.
std::pair<std::size_t, std::size_t> split_sizes(std::size_t n);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// `count` random splits of 0..n-1, drawn from the counter-based generator seeded by `seed`.
std::vector<Split> make_splits(std::size_t n, std::size_t count, std::uint64_t seed);

/// Covariance estimate of a subject subset, with the variance field used for standardization.
struct CovarianceFit {
    CovField sigma;
    std::optional<VarianceField> variance;
};

/// Produces plain (unthresholded) covariance estimates from a subset of subjects.
class CovarianceFitter {
  public:
    virtual ~CovarianceFitter() = default;
    virtual std::size_t n() const = 0;
    virtual CovarianceFit fit(std::span<const std::size_t> subjects, bool with_variance) const = 0;
    CovarianceFit fit_all(bool with_variance) const;
};

/// Sample covariance and variance factors of fully observed (or pre-smoothed) curves.
class DenseFitter final : public CovarianceFitter {
  public:
    explicit DenseFitter(DenseSample data) : data_(std::move(data)) {}
    std::size_t n() const override { return data_.n(); }
    CovarianceFit fit(std::span<const std::size_t> subjects, bool with_variance) const override;

  private:
    DenseSample data_;
};

/// Direct local-linear surface smoothing with the variance surrogate.
class SmoothFitter final : public CovarianceFitter {
  public:
    SmoothFitter(PartialSample data, GridPtr out, SmoothingOptions options)
        : data_(std::move(data)), out_(std::move(out)), options_(std::move(options)) {}
    std::size_t n() const override { return data_.n(); }
    CovarianceFit fit(std::span<const std::size_t> subjects, bool with_variance) const override;

  private:
    PartialSample data_;
    GridPtr out_;
    SmoothingOptions options_;
};

/// Binned local-linear surface smoothing; the data are binned once.
class BinnedFitter final : public CovarianceFitter {
  public:
    BinnedFitter(BinnedData data, SmoothingOptions options) : data_(std::move(data)), options_(std::move(options)) {}
    std::size_t n() const override { return data_.n(); }
    CovarianceFit fit(std::span<const std::size_t> subjects, bool with_variance) const override;

  private:
    BinnedData data_;
    SmoothingOptions options_;
};

/// How an estimate is thresholded: which standardization, rule and norm.
struct ThresholdSpec {
    Standardization standardization = Standardization::Adaptive;
    ThresholdRule rule = ThresholdRule::soft();
    NormKind norm = NormKind::HilbertSchmidt;
    bool keep_diagonal = false;
};

/// Decision norms of a fit under a standardization.
Eigen::MatrixXd decision_norms(const CovarianceFit& fit, Standardization standardization, NormKind norm);

/// Thresholds a fit at lambda.
ThresholdedEstimate threshold_fit(const CovarianceFit& fit, const ThresholdSpec& spec, double lambda);

struct CVConfig {
    std::size_t splits = 5;
    std::uint64_t seed = 1;
    /// Increasing, nonnegative. Empty selects an automatic grid of `auto_grid_size` points on [0, max norm].
    std::vector<double> lambda_grid;
    std::size_t auto_grid_size = 150;
    ThresholdSpec threshold;
    int threads = 1;
};

struct CVResult {
    double lambda = 0.0;
    std::vector<double> lambdas;
    std::vector<double> mean_err;
    std::vector<double> se;
};

/**
 * Per-split summaries that make the error curve cheap to evaluate: each
 * thresholded entry is c * Sigma1_jk, so ||c Sigma1_jk - Sigma2_jk||^2 follows
 * from ||Sigma1_jk||^2, <Sigma1_jk, Sigma2_jk> and ||Sigma2_jk||^2.
 */
class PreparedCV {
  public:
    PreparedCV(const CovarianceFitter& fitter, std::vector<Split> splits, int threads = 1);
    PreparedCV(const CovarianceFitter& fitter, std::size_t count, std::uint64_t seed, int threads = 1);

    std::size_t split_count() const { return profiles_.size(); }

    /// Largest decision norm over splits (diagonal skipped when kept).
    double max_decision_norm(const ThresholdSpec& spec) const;

    /// `count` equally spaced levels on [0, max_decision_norm]; just {0} when every norm is zero.
    std::vector<double> auto_grid(const ThresholdSpec& spec, std::size_t count) const;

    /// Mean and standard error of the validation error along `lambdas`; argmin ties go to the largest lambda.
    CVResult evaluate(const ThresholdSpec& spec, std::span<const double> lambdas) const;

    /// Brute-force validation error of split `v` at one level, thresholding and differencing whole fields.
    double direct_error(std::size_t v, const ThresholdSpec& spec, double lambda) const;

  private:
    struct Profile {
        CovarianceFit train;
        CovField test;
        Eigen::MatrixXd a, b, d;
    };
    std::vector<Profile> profiles_;
};

CVResult cv_select_lambda(const CovarianceFitter& fitter, const CVConfig& config);

struct SupportRates {
    double tpr = 0.0;
    double fpr = 0.0;
};

/// Counts all ordered (j, k), diagonal included. TPR is 1 without true nonzeros, FPR is 0 without true zeros.
SupportRates support_metrics(const SupportMask& estimate, const SupportMask& truth);
SupportRates support_metrics(const SupportMask& estimate, const CovField& truth);

struct RocPoint {
    double lambda = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

/// Support rates along `lambdas`: an entry is kept when its decision norm exceeds lambda.
std::vector<RocPoint> roc_sweep(const Eigen::MatrixXd& decision_norms, const SupportMask& truth,
                                std::span<const double> lambdas, bool keep_diagonal = false);

/// Levels that trace every distinct support: 0, each distinct decision norm, and one level past the largest.
std::vector<double> roc_levels(const Eigen::MatrixXd& decision_norms);

/// TPR at a given FPR by linear interpolation along the curve, anchored at (0, 0) and (1, 1).
double tpr_at_fpr(std::span<const RocPoint> curve, double fpr);

}

#endif
