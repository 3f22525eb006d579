#include "fthresh/full_cov.hpp"

#include "fthresh/errors.hpp"

#include <algorithm>

namespace fthresh {

namespace {

// Lower triangle of a^T a mirrored to the upper triangle, so the result is exactly symmetric.
Eigen::MatrixXd symmetric_gram(const Eigen::MatrixXd& a) {
    const Eigen::Index m = a.cols();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    return gram;
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& values) {
    return values.rowwise() - column_means(values);
}

}

Eigen::RowVectorXd column_means(const Eigen::MatrixXd& values) {
    if (values.rows() == 0) {
        return Eigen::RowVectorXd::Zero(values.cols());
    }
    const Eigen::RowVectorXd shift = values.row(0);
    const Eigen::RowVectorXd offsets = (values.rowwise() - shift).colwise().sum() / static_cast<double>(values.rows());
    return shift + offsets;
}

CovField sample_cov(const DenseSample& data) {
    if (data.n() < 2) {
        throw InsufficientDataError("sample covariance needs at least 2 subjects");
    }
    Eigen::MatrixXd gram = symmetric_gram(centered(data.values()));
    gram /= static_cast<double>(data.n() - 1);
    return CovField(data.p(), data.grid(), std::move(gram));
}

VarianceField variance_factors(const DenseSample& data, const CovField& sigma_hat) {
    if (sigma_hat.p() != data.p() || !same_grid(sigma_hat.grid(), data.grid())) {
        throw ShapeError("variance factors: covariance does not match the sample");
    }
    if (data.n() < 2) {
        throw InsufficientDataError("variance factors need at least 2 subjects");
    }
    // sum_i (a_i - s)^2 = sum_i a_i^2 - (n - 2) s^2 because sum_i a_i = (n - 1) s.
    const Eigen::MatrixXd c = centered(data.values());
    Eigen::MatrixXd theta = symmetric_gram(c.cwiseProduct(c));
    const auto n = static_cast<double>(data.n());
    theta -= (n - 2.0) * sigma_hat.stacked().cwiseProduct(sigma_hat.stacked());
    theta /= n;
    theta = theta.cwiseMax(0.0);
    return VarianceField(CovField(data.p(), data.grid(), std::move(theta)));
}

}
