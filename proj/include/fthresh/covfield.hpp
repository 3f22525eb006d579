#ifndef FTHRESH_COVFIELD_HPP
#define FTHRESH_COVFIELD_HPP

#include "fthresh/grid.hpp"
#include "fthresh/surface.hpp"

#include <Eigen/Dense>

#include <cstddef>

namespace fthresh {

/**
 * A p x p array of covariance surfaces on a shared square grid.
 *
 * Stored as one symmetric (pR) x (pR) matrix: entry (j, k) is the R x R block
 * at (jR, kR). The symmetry Sigma_jk(u, v) = Sigma_kj(v, u) is exactly the
 * symmetry of that matrix, and every mutator preserves it bit for bit.
 */
class CovField {
  public:
    CovField(std::size_t p, GridPtr grid);

    /// Adopts a stacked matrix; throws ShapeError unless it is (pR) x (pR) and exactly symmetric.
    CovField(std::size_t p, GridPtr grid, Eigen::MatrixXd stacked);

    std::size_t p() const { return p_; }
    std::size_t resolution() const { return grid_->size(); }
    const GridPtr& grid() const { return grid_; }
    const Eigen::MatrixXd& stacked() const { return stacked_; }

    auto block(std::size_t j, std::size_t k) const {
        const auto R = static_cast<Eigen::Index>(resolution());
        return stacked_.block(static_cast<Eigen::Index>(j) * R, static_cast<Eigen::Index>(k) * R, R, R);
    }

    Surface entry(std::size_t j, std::size_t k) const;

    /**
     * Sets entry (j, k) and mirrors its transpose into (k, j). For j == k the
     * upper triangle (r1 <= r2) of `values` is authoritative and is mirrored.
     */
    void set_entry(std::size_t j, std::size_t k, const Eigen::Ref<const Eigen::MatrixXd>& values);

    /// Multiplies entry (j, k) (and its mirror) by `factor`.
    void scale_entry(std::size_t j, std::size_t k, double factor);

  private:
    std::size_t p_;
    GridPtr grid_;
    Eigen::MatrixXd stacked_;
};

/// p x p flags of entries declared nonzero; thresholded-out entries are exact zeros.
using SupportMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Estimate plus its support.
struct ThresholdedEstimate {
    CovField field;
    SupportMask support;
};

/// Functional Frobenius distance sqrt(sum_jk ||a_jk - b_jk||_S^2).
double functional_frobenius(const CovField& a, const CovField& b);

/// Functional matrix l1 distance max_k sum_j ||a_jk - b_jk||_S.
double functional_matrix_l1(const CovField& a, const CovField& b);

/// p x p matrix of entry HS norms.
Eigen::MatrixXd entry_hs_norms(const CovField& field);

/// p x p matrix of entry sup norms.
Eigen::MatrixXd entry_sup_norms(const CovField& field);

/// p x p matrix M_jk = integral of Sigma_jk over the unit square (trapezoid).
Eigen::MatrixXd integrated_matrix(const CovField& field);

/// Support of a true covariance: entries with nonzero HS norm.
SupportMask nonzero_support(const CovField& field);

}

#endif
