#ifndef FTHRESH_DENSE_HPP
#define FTHRESH_DENSE_HPP

#include "fthresh/grid.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace fthresh {

/**
 * Fully observed curves X_ij(u_r) on a common grid.
 *
 * Stored as an n x (pR) matrix: row i holds subject i, and variable j occupies
 * columns [jR, (j+1)R).
 */
class DenseSample {
  public:
    DenseSample(std::size_t n, std::size_t p, GridPtr grid, Eigen::MatrixXd values);

    std::size_t n() const { return n_; }
    std::size_t p() const { return p_; }
    std::size_t resolution() const { return grid_->size(); }
    const GridPtr& grid() const { return grid_; }
    const Eigen::MatrixXd& values() const { return values_; }

    double operator()(std::size_t i, std::size_t j, std::size_t r) const {
        return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j * resolution() + r));
    }

    auto curve(std::size_t i, std::size_t j) const {
        const auto R = static_cast<Eigen::Index>(resolution());
        return values_.row(static_cast<Eigen::Index>(i)).segment(static_cast<Eigen::Index>(j) * R, R);
    }

    /// Subjects listed in `subjects`, in that order.
    DenseSample subset(std::span<const std::size_t> subjects) const;

    /// Copy with variable j multiplied by factors[j].
    DenseSample rescaled(std::span<const double> factors) const;

  private:
    std::size_t n_;
    std::size_t p_;
    GridPtr grid_;
    Eigen::MatrixXd values_;
};

}

#endif
