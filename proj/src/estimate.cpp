#include "fthresh/estimate.hpp"

#include "fthresh/errors.hpp"

#include <cmath>

namespace fthresh {

VarianceField::VarianceField(CovField field) : field_(std::move(field)) {
    const Eigen::MatrixXd& v = field_.stacked();
    if (v.size() > 0 && (!v.allFinite() || v.minCoeff() < 0.0)) {
        throw ParameterError("variance field must be finite and nonnegative");
    }
    const auto P = static_cast<Eigen::Index>(field_.p());
    floors_.resize(P, P);
    for (Eigen::Index j = 0; j < P; ++j) {
        for (Eigen::Index k = 0; k < P; ++k) {
            const double top = field_.block(static_cast<std::size_t>(j), static_cast<std::size_t>(k)).maxCoeff();
            floors_(j, k) = kVarianceFloorRelative * top;
            degenerate_ = degenerate_ && !(top > 0.0);
        }
    }
}

Eigen::MatrixXd raw_norms(const CovField& sigma, NormKind norm) {
    return norm == NormKind::Supremum ? entry_sup_norms(sigma) : entry_hs_norms(sigma);
}

Eigen::MatrixXd standardized_norms(const CovField& sigma, const VarianceField& variance, NormKind norm) {
    if (sigma.p() != variance.p() || !same_grid(sigma.grid(), variance.grid())) {
        throw ShapeError("covariance and variance fields differ in p or grid");
    }
    if (variance.degenerate()) {
        throw DegenerateVarianceError("variance field is identically zero; cannot standardize");
    }
    const auto R = static_cast<Eigen::Index>(sigma.resolution());
    const auto P = static_cast<Eigen::Index>(sigma.p());
    Eigen::MatrixXd standardized(sigma.stacked().rows(), sigma.stacked().cols());
    for (Eigen::Index k = 0; k < P; ++k) {
        for (Eigen::Index j = 0; j < P; ++j) {
            const double floor = variance.floors()(j, k);
            auto out = standardized.block(j * R, k * R, R, R);
            if (floor > 0.0) {
                const auto sd = variance.field().stacked().block(j * R, k * R, R, R).cwiseMax(floor).cwiseSqrt();
                out = sigma.stacked().block(j * R, k * R, R, R).cwiseQuotient(sd);
            } else {
                // A surface with zero variance everywhere standardizes to zero.
                out.setZero();
            }
        }
    }
    // Elementwise ops keep the stacked matrix exactly symmetric.
    return raw_norms(CovField(sigma.p(), sigma.grid(), standardized), norm);
}

ThresholdedEstimate threshold_by_norms(const CovField& sigma, const Eigen::MatrixXd& decision_norms,
                                       const ThresholdOptions& options) {
    if (!(options.lambda >= 0.0)) {
        throw ParameterError("threshold level must be nonnegative");
    }
    const auto P = static_cast<Eigen::Index>(sigma.p());
    if (decision_norms.rows() != P || decision_norms.cols() != P) {
        throw ShapeError("decision norms must be p x p");
    }
    CovField out = sigma;
    SupportMask support(P, P);
    for (Eigen::Index k = 0; k < P; ++k) {
        for (Eigen::Index j = 0; j <= k; ++j) {
            double c = 0.0;
            if (options.keep_diagonal && j == k) {
                c = 1.0;
            } else {
                c = shrinkage_factor(decision_norms(j, k), options.lambda, options.rule);
            }
            if (c != 1.0) {
                out.scale_entry(static_cast<std::size_t>(j), static_cast<std::size_t>(k), c);
            }
            support(j, k) = c > 0.0;
            support(k, j) = c > 0.0;
        }
    }
    return {std::move(out), std::move(support)};
}

ThresholdedEstimate adaptive_estimate(const CovField& sigma, const VarianceField& variance,
                                      const ThresholdOptions& options) {
    return threshold_by_norms(sigma, standardized_norms(sigma, variance, options.norm), options);
}

ThresholdedEstimate universal_estimate(const CovField& sigma, const ThresholdOptions& options) {
    return threshold_by_norms(sigma, raw_norms(sigma, options.norm), options);
}

}
