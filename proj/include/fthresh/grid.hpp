#ifndef FTHRESH_GRID_HPP
#define FTHRESH_GRID_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <vector>

namespace fthresh {

/**
 * A discretization of the domain [0, 1] with trapezoidal quadrature weights.
 *
 * Points are strictly increasing and lie in [0, 1]; there are at least two of
 * them. The weights integrate piecewise-linear functions exactly over
 * [points.front(), points.back()], so they sum to that interval's length.
 */
class Grid {
  public:
    explicit Grid(std::vector<double> points);

    /// `count` equally spaced points from 0 to 1 inclusive.
    static Grid uniform(std::size_t count);

    std::size_t size() const { return points_.size(); }
    double point(std::size_t r) const { return points_[static_cast<Eigen::Index>(r)]; }
    const Eigen::VectorXd& points() const { return points_; }
    const Eigen::VectorXd& weights() const { return weights_; }

    /// True when consecutive gaps agree to `rel_tol` of the mean gap.
    bool is_uniform(double rel_tol = 1e-9) const;

    /// Mean gap between consecutive points (the binwidth for uniform grids).
    double spacing() const;

    bool operator==(const Grid& other) const { return points_ == other.points_; }

  private:
    Eigen::VectorXd points_;
    Eigen::VectorXd weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_uniform_grid(std::size_t count) {
    return std::make_shared<const Grid>(Grid::uniform(count));
}

/// Same grid object, or grids with identical points.
inline bool same_grid(const GridPtr& a, const GridPtr& b) {
    return a == b || (a && b && *a == *b);
}

}

#endif
