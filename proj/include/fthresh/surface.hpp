#ifndef FTHRESH_SURFACE_HPP
#define FTHRESH_SURFACE_HPP

#include "fthresh/grid.hpp"

#include <Eigen/Dense>

namespace fthresh {

/**
 * A bivariate function Q(u, v) evaluated on a (row grid) x (column grid)
 * product. Entries are finite and the matrix shape matches the grids.
 */
class Surface {
  public:
    Surface(GridPtr rows, GridPtr cols, Eigen::MatrixXd values);

    static Surface zeros(GridPtr rows, GridPtr cols);
    static Surface constant(GridPtr rows, GridPtr cols, double value);

    const Eigen::MatrixXd& values() const { return values_; }
    double operator()(Eigen::Index r1, Eigen::Index r2) const { return values_(r1, r2); }
    const GridPtr& row_grid() const { return rows_; }
    const GridPtr& col_grid() const { return cols_; }
    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }

    Surface scaled(double factor) const;

  private:
    GridPtr rows_;
    GridPtr cols_;
    Eigen::MatrixXd values_;
};

/// Hilbert–Schmidt (L2 on the product domain) norm under trapezoidal weights.
double hs_norm(const Surface& q);

/// Quadrature form of the HS norm for raw values; throws ShapeError on mismatch.
double hs_norm(const Eigen::Ref<const Eigen::MatrixXd>& values,
               const Eigen::VectorXd& row_weights,
               const Eigen::VectorXd& col_weights);

/// Squared form of the above. Square inputs with equal weights are summed in an
/// order that makes the result identical for a matrix and its transpose.
double hs_norm_squared(const Eigen::Ref<const Eigen::MatrixXd>& values,
                       const Eigen::VectorXd& row_weights,
                       const Eigen::VectorXd& col_weights);

/// HS inner product <a, b>; both surfaces must live on the same grids.
double hs_inner(const Surface& a, const Surface& b);

/// Largest absolute grid value.
double sup_norm(const Surface& q);

}

#endif
