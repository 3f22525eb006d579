#include "fthresh/dense.hpp"

#include "fthresh/errors.hpp"

namespace fthresh {

DenseSample::DenseSample(std::size_t n, std::size_t p, GridPtr grid, Eigen::MatrixXd values)
    : n_(n), p_(p), grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) {
        throw ShapeError("dense sample requires a grid");
    }
    if (values_.rows() != static_cast<Eigen::Index>(n_) ||
        values_.cols() != static_cast<Eigen::Index>(p_ * grid_->size())) {
        throw ShapeError("dense sample values must be n x (p R)");
    }
    if (!values_.allFinite()) {
        throw ParameterError("dense sample contains non-finite values");
    }
}

DenseSample DenseSample::subset(std::span<const std::size_t> subjects) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(subjects.size()), values_.cols());
    for (std::size_t s = 0; s < subjects.size(); ++s) {
        if (subjects[s] >= n_) {
            throw ShapeError("subject index out of range");
        }
        out.row(static_cast<Eigen::Index>(s)) = values_.row(static_cast<Eigen::Index>(subjects[s]));
    }
    return DenseSample(subjects.size(), p_, grid_, std::move(out));
}

DenseSample DenseSample::rescaled(std::span<const double> factors) const {
    if (factors.size() != p_) {
        throw ShapeError("need one scale factor per variable");
    }
    Eigen::MatrixXd out = values_;
    const auto R = static_cast<Eigen::Index>(resolution());
    for (std::size_t j = 0; j < p_; ++j) {
        out.middleCols(static_cast<Eigen::Index>(j) * R, R) *= factors[j];
    }
    return DenseSample(n_, p_, grid_, std::move(out));
}

}
