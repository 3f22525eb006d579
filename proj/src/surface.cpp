#include "fthresh/surface.hpp"

#include "fthresh/errors.hpp"

#include <cmath>

namespace fthresh {

Surface::Surface(GridPtr rows, GridPtr cols, Eigen::MatrixXd values)
    : rows_(std::move(rows)), cols_(std::move(cols)), values_(std::move(values)) {
    if (!rows_ || !cols_) {
        throw ShapeError("surface requires row and column grids");
    }
    if (values_.rows() != static_cast<Eigen::Index>(rows_->size()) ||
        values_.cols() != static_cast<Eigen::Index>(cols_->size())) {
        throw ShapeError("surface values do not match grid sizes");
    }
    if (!values_.allFinite()) {
        throw ParameterError("surface values must be finite");
    }
}

Surface Surface::zeros(GridPtr rows, GridPtr cols) {
    return constant(std::move(rows), std::move(cols), 0.0);
}

Surface Surface::constant(GridPtr rows, GridPtr cols, double value) {
    const auto r = static_cast<Eigen::Index>(rows->size());
    const auto c = static_cast<Eigen::Index>(cols->size());
    return Surface(std::move(rows), std::move(cols), Eigen::MatrixXd::Constant(r, c, value));
}

Surface Surface::scaled(double factor) const {
    return Surface(rows_, cols_, values_ * factor);
}

double hs_norm_squared(const Eigen::Ref<const Eigen::MatrixXd>& values,
                       const Eigen::VectorXd& row_weights,
                       const Eigen::VectorXd& col_weights) {
    if (values.rows() != row_weights.size() || values.cols() != col_weights.size()) {
        throw ShapeError("HS norm: values do not match quadrature weights");
    }
    double total = 0.0;
    if (values.rows() == values.cols() && row_weights == col_weights) {
        // Pair (r, c) with (c, r) so a surface and its transpose give identical sums.
        const Eigen::VectorXd& w = row_weights;
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            double column = 0.0;
            for (Eigen::Index r = 0; r < c; ++r) {
                column += (w[r] * w[c]) * (values(r, c) * values(r, c) + values(c, r) * values(c, r));
            }
            column += (w[c] * w[c]) * (values(c, c) * values(c, c));
            total += column;
        }
        return total;
    }
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        double column = 0.0;
        for (Eigen::Index r = 0; r < values.rows(); ++r) {
            column += row_weights[r] * values(r, c) * values(r, c);
        }
        total += col_weights[c] * column;
    }
    return total;
}

double hs_norm(const Eigen::Ref<const Eigen::MatrixXd>& values,
               const Eigen::VectorXd& row_weights,
               const Eigen::VectorXd& col_weights) {
    return std::sqrt(hs_norm_squared(values, row_weights, col_weights));
}

double hs_norm(const Surface& q) {
    return hs_norm(q.values(), q.row_grid()->weights(), q.col_grid()->weights());
}

double hs_inner(const Surface& a, const Surface& b) {
    if (!same_grid(a.row_grid(), b.row_grid()) || !same_grid(a.col_grid(), b.col_grid())) {
        throw ShapeError("HS inner product: surfaces live on different grids");
    }
    const Eigen::VectorXd& wr = a.row_grid()->weights();
    const Eigen::VectorXd& wc = a.col_grid()->weights();
    return wr.dot(a.values().cwiseProduct(b.values()) * wc);
}

double sup_norm(const Surface& q) {
    return q.values().size() == 0 ? 0.0 : q.values().cwiseAbs().maxCoeff();
}

}
