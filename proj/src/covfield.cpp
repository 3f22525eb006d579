#include "fthresh/covfield.hpp"

#include "fthresh/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fthresh {

namespace {

void require_compatible(const CovField& a, const CovField& b) {
    if (a.p() != b.p() || !same_grid(a.grid(), b.grid())) {
        throw ShapeError("covariance fields differ in p or grid");
    }
}

// Squared HS norms of every block of a stacked matrix.
Eigen::MatrixXd block_hs_squares(const Eigen::MatrixXd& stacked, std::size_t p, const Eigen::VectorXd& w) {
    const Eigen::Index R = w.size();
    const auto P = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd out(P, P);
    for (Eigen::Index k = 0; k < P; ++k) {
        for (Eigen::Index j = 0; j < P; ++j) {
            out(j, k) = hs_norm_squared(stacked.block(j * R, k * R, R, R), w, w);
        }
    }
    return out;
}

}

CovField::CovField(std::size_t p, GridPtr grid)
    : p_(p), grid_(std::move(grid)) {
    if (!grid_) {
        throw ShapeError("covariance field requires a grid");
    }
    const auto n = static_cast<Eigen::Index>(p_ * grid_->size());
    stacked_ = Eigen::MatrixXd::Zero(n, n);
}

CovField::CovField(std::size_t p, GridPtr grid, Eigen::MatrixXd stacked)
    : p_(p), grid_(std::move(grid)), stacked_(std::move(stacked)) {
    if (!grid_) {
        throw ShapeError("covariance field requires a grid");
    }
    const auto n = static_cast<Eigen::Index>(p_ * grid_->size());
    if (stacked_.rows() != n || stacked_.cols() != n) {
        throw ShapeError("stacked covariance has the wrong dimension");
    }
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = c + 1; r < n; ++r) {
            if (stacked_(r, c) != stacked_(c, r)) {
                throw ShapeError("stacked covariance is not symmetric");
            }
        }
    }
}

Surface CovField::entry(std::size_t j, std::size_t k) const {
    return Surface(grid_, grid_, block(j, k));
}

void CovField::set_entry(std::size_t j, std::size_t k, const Eigen::Ref<const Eigen::MatrixXd>& values) {
    const auto R = static_cast<Eigen::Index>(resolution());
    if (j >= p_ || k >= p_) {
        throw ShapeError("entry index out of range");
    }
    if (values.rows() != R || values.cols() != R) {
        throw ShapeError("entry values must be R x R");
    }
    const auto J = static_cast<Eigen::Index>(j) * R;
    const auto K = static_cast<Eigen::Index>(k) * R;
    if (j == k) {
        for (Eigen::Index c = 0; c < R; ++c) {
            for (Eigen::Index r = 0; r <= c; ++r) {
                stacked_(J + r, J + c) = values(r, c);
                stacked_(J + c, J + r) = values(r, c);
            }
        }
        return;
    }
    stacked_.block(J, K, R, R) = values;
    stacked_.block(K, J, R, R) = values.transpose();
}

void CovField::scale_entry(std::size_t j, std::size_t k, double factor) {
    const auto R = static_cast<Eigen::Index>(resolution());
    const auto J = static_cast<Eigen::Index>(j) * R;
    const auto K = static_cast<Eigen::Index>(k) * R;
    if (factor == 0.0) {
        stacked_.block(J, K, R, R).setZero();
        stacked_.block(K, J, R, R).setZero();
        return;
    }
    stacked_.block(J, K, R, R) *= factor;
    if (j != k) {
        stacked_.block(K, J, R, R) *= factor;
    }
}

double functional_frobenius(const CovField& a, const CovField& b) {
    require_compatible(a, b);
    const Eigen::MatrixXd diff = a.stacked() - b.stacked();
    return std::sqrt(block_hs_squares(diff, a.p(), a.grid()->weights()).sum());
}

double functional_matrix_l1(const CovField& a, const CovField& b) {
    require_compatible(a, b);
    const Eigen::MatrixXd diff = a.stacked() - b.stacked();
    const Eigen::MatrixXd norms = block_hs_squares(diff, a.p(), a.grid()->weights()).cwiseSqrt();
    return norms.size() == 0 ? 0.0 : norms.colwise().sum().maxCoeff();
}

Eigen::MatrixXd entry_hs_norms(const CovField& field) {
    return block_hs_squares(field.stacked(), field.p(), field.grid()->weights()).cwiseSqrt();
}

Eigen::MatrixXd entry_sup_norms(const CovField& field) {
    const auto P = static_cast<Eigen::Index>(field.p());
    Eigen::MatrixXd out(P, P);
    for (Eigen::Index j = 0; j < P; ++j) {
        for (Eigen::Index k = 0; k < P; ++k) {
            out(j, k) = field.block(static_cast<std::size_t>(j), static_cast<std::size_t>(k)).cwiseAbs().maxCoeff();
        }
    }
    return out;
}

Eigen::MatrixXd integrated_matrix(const CovField& field) {
    const auto P = static_cast<Eigen::Index>(field.p());
    const Eigen::VectorXd& w = field.grid()->weights();
    Eigen::MatrixXd out(P, P);
    for (Eigen::Index j = 0; j < P; ++j) {
        for (Eigen::Index k = 0; k < P; ++k) {
            out(j, k) = w.dot(field.block(static_cast<std::size_t>(j), static_cast<std::size_t>(k)) * w);
        }
    }
    return out;
}

SupportMask nonzero_support(const CovField& field) {
    return entry_hs_norms(field).array() != 0.0;
}

}
