#include "fthresh/tuning.hpp"

#include "fthresh/errors.hpp"
#include "fthresh/full_cov.hpp"
#include "fthresh/parallel.hpp"
#include "fthresh/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fthresh {

std::pair<std::size_t, std::size_t> split_sizes(std::size_t n) {
    if (n < 4) {
        throw ConfigError("cross-validation needs at least 4 subjects");
    }
    const auto nd = static_cast<double>(n);
    const auto n1 = static_cast<std::size_t>(std::llround(nd * (1.0 - 1.0 / std::log(nd))));
    if (n1 < 2 || n1 > n || n - n1 < 2) {
        throw ConfigError("degenerate cross-validation split for n = " + std::to_string(n));
    }
    return {n1, n - n1};
}

std::vector<Split> make_splits(std::size_t n, std::size_t count, std::uint64_t seed) {
    if (count == 0) {
        throw ConfigError("need at least one cross-validation split");
    }
    const std::size_t n1 = split_sizes(n).first;
    std::vector<Split> splits(count);
    for (std::size_t v = 0; v < count; ++v) {
        SplitMix64 gen(derive_seed(seed, v));
        const auto perm = random_permutation(gen, n);
        splits[v].train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n1));
        splits[v].test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n1), perm.end());
        std::sort(splits[v].train.begin(), splits[v].train.end());
        std::sort(splits[v].test.begin(), splits[v].test.end());
    }
    return splits;
}

CovarianceFit CovarianceFitter::fit_all(bool with_variance) const {
    std::vector<std::size_t> all(n());
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = i;
    }
    return fit(all, with_variance);
}

CovarianceFit DenseFitter::fit(std::span<const std::size_t> subjects, bool with_variance) const {
    const DenseSample part = data_.subset(subjects);
    CovField sigma = sample_cov(part);
    std::optional<VarianceField> variance;
    if (with_variance) {
        variance.emplace(variance_factors(part, sigma));
    }
    return CovarianceFit{std::move(sigma), std::move(variance)};
}

CovarianceFit SmoothFitter::fit(std::span<const std::size_t> subjects, bool with_variance) const {
    SmoothingOptions options = options_;
    options.with_variance = with_variance;
    SmoothedCovariance s = smooth_covariance(data_.subset(subjects), out_, options);
    return CovarianceFit{std::move(s.sigma), std::move(s.psi)};
}

CovarianceFit BinnedFitter::fit(std::span<const std::size_t> subjects, bool with_variance) const {
    SmoothingOptions options = options_;
    options.with_variance = with_variance;
    SmoothedCovariance s = binned_smooth_covariance(data_.subset(subjects), options);
    return CovarianceFit{std::move(s.sigma), std::move(s.psi)};
}

Eigen::MatrixXd decision_norms(const CovarianceFit& fit, Standardization standardization, NormKind norm) {
    if (standardization == Standardization::Universal) {
        return raw_norms(fit.sigma, norm);
    }
    if (!fit.variance) {
        throw ParameterError("adaptive thresholding needs a variance field");
    }
    return standardized_norms(fit.sigma, *fit.variance, norm);
}

ThresholdedEstimate threshold_fit(const CovarianceFit& fit, const ThresholdSpec& spec, double lambda) {
    const ThresholdOptions options{lambda, spec.rule, spec.norm, spec.keep_diagonal};
    return threshold_by_norms(fit.sigma, decision_norms(fit, spec.standardization, spec.norm), options);
}

namespace {

// Per-entry HS inner products <a_jk, b_jk> with trapezoid weights.
Eigen::MatrixXd entry_inner(const CovField& a, const CovField& b) {
    const auto P = static_cast<Eigen::Index>(a.p());
    const Eigen::VectorXd& w = a.grid()->weights();
    const Eigen::MatrixXd ww = w * w.transpose();
    Eigen::MatrixXd out(P, P);
    for (Eigen::Index k = 0; k < P; ++k) {
        for (Eigen::Index j = 0; j < P; ++j) {
            out(j, k) = (ww.array() * a.block(static_cast<std::size_t>(j), static_cast<std::size_t>(k)).array() *
                         b.block(static_cast<std::size_t>(j), static_cast<std::size_t>(k)).array())
                            .sum();
        }
    }
    return out;
}

}

PreparedCV::PreparedCV(const CovarianceFitter& fitter, std::size_t count, std::uint64_t seed, int threads)
    : PreparedCV(fitter, make_splits(fitter.n(), count, seed), threads) {}

PreparedCV::PreparedCV(const CovarianceFitter& fitter, std::vector<Split> splits, int threads) {
    if (splits.empty()) {
        throw ConfigError("need at least one cross-validation split");
    }
    std::vector<std::optional<Profile>> slots(splits.size());
    parallel_for(threads, splits.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t v = begin; v < end; ++v) {
            CovarianceFit train = fitter.fit(splits[v].train, true);
            CovField test = fitter.fit(splits[v].test, false).sigma;
            Eigen::MatrixXd a = entry_inner(train.sigma, train.sigma);
            Eigen::MatrixXd b = entry_inner(train.sigma, test);
            Eigen::MatrixXd d = entry_inner(test, test);
            slots[v].emplace(Profile{std::move(train), std::move(test), std::move(a), std::move(b), std::move(d)});
        }
    });
    for (auto& s : slots) {
        profiles_.push_back(std::move(*s));
    }
}

double PreparedCV::max_decision_norm(const ThresholdSpec& spec) const {
    double top = 0.0;
    for (const Profile& prof : profiles_) {
        Eigen::MatrixXd norms = decision_norms(prof.train, spec.standardization, spec.norm);
        if (spec.keep_diagonal) {
            norms.diagonal().setZero();
        }
        top = std::max(top, norms.maxCoeff());
    }
    return top;
}

std::vector<double> PreparedCV::auto_grid(const ThresholdSpec& spec, std::size_t count) const {
    if (count < 2) {
        throw ConfigError("automatic lambda grid needs at least two points");
    }
    const double top = max_decision_norm(spec);
    if (!(top > 0.0)) {
        return {0.0};
    }
    std::vector<double> grid(count);
    for (std::size_t q = 0; q < count; ++q) {
        grid[q] = top * static_cast<double>(q) / static_cast<double>(count - 1);
    }
    return grid;
}

CVResult PreparedCV::evaluate(const ThresholdSpec& spec, std::span<const double> lambdas) const {
    if (lambdas.empty()) {
        throw ConfigError("lambda grid is empty");
    }
    for (std::size_t q = 0; q < lambdas.size(); ++q) {
        if (!(lambdas[q] >= 0.0) || (q > 0 && !(lambdas[q] > lambdas[q - 1]))) {
            throw ConfigError("lambda grid must be nonnegative and strictly increasing");
        }
    }
    const std::size_t V = profiles_.size();
    const std::size_t G = lambdas.size();
    Eigen::MatrixXd err(static_cast<Eigen::Index>(V), static_cast<Eigen::Index>(G));
    for (std::size_t v = 0; v < V; ++v) {
        const Profile& prof = profiles_[v];
        const Eigen::MatrixXd norms = decision_norms(prof.train, spec.standardization, spec.norm);
        const Eigen::Index P = norms.rows();
        for (std::size_t g = 0; g < G; ++g) {
            double total = 0.0;
            for (Eigen::Index k = 0; k < P; ++k) {
                for (Eigen::Index j = 0; j < P; ++j) {
                    const double c = (spec.keep_diagonal && j == k)
                                         ? 1.0
                                         : shrinkage_factor(norms(j, k), lambdas[g], spec.rule);
                    total += c * c * prof.a(j, k) - 2.0 * c * prof.b(j, k) + prof.d(j, k);
                }
            }
            err(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(g)) = total;
        }
    }

    CVResult result;
    result.lambdas.assign(lambdas.begin(), lambdas.end());
    result.mean_err.resize(G);
    result.se.resize(G);
    std::size_t best = 0;
    for (std::size_t g = 0; g < G; ++g) {
        // Fixed summation order, so equal split errors give exactly equal means and ties stay ties.
        const auto gi = static_cast<Eigen::Index>(g);
        double sum = 0.0;
        for (Eigen::Index v = 0; v < err.rows(); ++v) {
            sum += err(v, gi);
        }
        const double mean = sum / static_cast<double>(V);
        double se = 0.0;
        if (V > 1) {
            double ss = 0.0;
            for (Eigen::Index v = 0; v < err.rows(); ++v) {
                ss += (err(v, gi) - mean) * (err(v, gi) - mean);
            }
            se = std::sqrt(ss / static_cast<double>(V - 1) / static_cast<double>(V));
        }
        result.mean_err[g] = mean;
        result.se[g] = se;
        if (mean <= result.mean_err[best]) {
            best = g;
        }
    }
    result.lambda = lambdas[best];
    return result;
}

double PreparedCV::direct_error(std::size_t v, const ThresholdSpec& spec, double lambda) const {
    const Profile& prof = profiles_.at(v);
    const ThresholdedEstimate est = threshold_fit(prof.train, spec, lambda);
    const double f = functional_frobenius(est.field, prof.test);
    return f * f;
}

CVResult cv_select_lambda(const CovarianceFitter& fitter, const CVConfig& config) {
    const PreparedCV prepared(fitter, config.splits, config.seed, config.threads);
    if (config.lambda_grid.empty()) {
        const auto grid = prepared.auto_grid(config.threshold, config.auto_grid_size);
        return prepared.evaluate(config.threshold, grid);
    }
    return prepared.evaluate(config.threshold, config.lambda_grid);
}

SupportRates support_metrics(const SupportMask& estimate, const SupportMask& truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
        throw ShapeError("support masks differ in size");
    }
    const auto positives = static_cast<double>(truth.count());
    const auto negatives = static_cast<double>(truth.size()) - positives;
    const auto hits = static_cast<double>((estimate && truth).count());
    const auto false_hits = static_cast<double>((estimate && !truth).count());
    SupportRates rates;
    rates.tpr = positives > 0.0 ? hits / positives : 1.0;
    rates.fpr = negatives > 0.0 ? false_hits / negatives : 0.0;
    return rates;
}

SupportRates support_metrics(const SupportMask& estimate, const CovField& truth) {
    return support_metrics(estimate, nonzero_support(truth));
}

std::vector<RocPoint> roc_sweep(const Eigen::MatrixXd& decision_norms, const SupportMask& truth,
                                std::span<const double> lambdas, bool keep_diagonal) {
    std::vector<RocPoint> curve;
    curve.reserve(lambdas.size());
    for (double lambda : lambdas) {
        SupportMask est = decision_norms.array() > lambda;
        if (keep_diagonal) {
            est.matrix().diagonal().setConstant(true);
        }
        const SupportRates r = support_metrics(est, truth);
        curve.push_back(RocPoint{lambda, r.tpr, r.fpr});
    }
    return curve;
}

std::vector<double> roc_levels(const Eigen::MatrixXd& decision_norms) {
    std::vector<double> levels(decision_norms.data(), decision_norms.data() + decision_norms.size());
    levels.push_back(0.0);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    levels.push_back(levels.back() * 2.0 + 1.0);
    return levels;
}

double tpr_at_fpr(std::span<const RocPoint> curve, double fpr) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(curve.size() + 2);
    pts.emplace_back(0.0, 0.0);
    for (const RocPoint& p : curve) {
        pts.emplace_back(p.fpr, p.tpr);
    }
    pts.emplace_back(1.0, 1.0);
    std::sort(pts.begin(), pts.end());
    // Highest TPR reached at or before `fpr`, then linear interpolation to the next larger FPR.
    std::size_t lo = 0;
    for (std::size_t q = 0; q < pts.size(); ++q) {
        if (pts[q].first <= fpr) {
            lo = q;
        }
    }
    if (pts[lo].first == fpr || lo + 1 >= pts.size()) {
        return pts[lo].second;
    }
    const auto& a = pts[lo];
    const auto& b = pts[lo + 1];
    const double t = (fpr - a.first) / (b.first - a.first);
    return a.second + t * (b.second - a.second);
}

}
