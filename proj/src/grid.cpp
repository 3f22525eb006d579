#include "fthresh/grid.hpp"

#include "fthresh/errors.hpp"

#include <cmath>
#include <string>

namespace fthresh {

Grid::Grid(std::vector<double> points) {
    const auto R = static_cast<Eigen::Index>(points.size());
    if (R < 2) {
        throw ConfigError("grid needs at least 2 points, got " + std::to_string(R));
    }
    points_ = Eigen::Map<const Eigen::VectorXd>(points.data(), R);
    for (Eigen::Index r = 0; r < R; ++r) {
        if (!std::isfinite(points_[r]) || points_[r] < 0.0 || points_[r] > 1.0) {
            throw ConfigError("grid points must lie in [0, 1]");
        }
        if (r > 0 && !(points_[r] > points_[r - 1])) {
            throw ConfigError("grid points must be strictly increasing");
        }
    }

    weights_ = Eigen::VectorXd::Zero(R);
    for (Eigen::Index r = 0; r + 1 < R; ++r) {
        const double half = 0.5 * (points_[r + 1] - points_[r]);
        weights_[r] += half;
        weights_[r + 1] += half;
    }
}

Grid Grid::uniform(std::size_t count) {
    if (count < 2) {
        throw ConfigError("uniform grid needs at least 2 points");
    }
    std::vector<double> pts(count);
    const double last = static_cast<double>(count - 1);
    for (std::size_t r = 0; r < count; ++r) {
        pts[r] = static_cast<double>(r) / last;
    }
    return Grid(std::move(pts));
}

bool Grid::is_uniform(double rel_tol) const {
    const double gap = spacing();
    for (Eigen::Index r = 0; r + 1 < points_.size(); ++r) {
        if (std::abs((points_[r + 1] - points_[r]) - gap) > rel_tol * gap) {
            return false;
        }
    }
    return true;
}

double Grid::spacing() const {
    return (points_[points_.size() - 1] - points_[0]) / static_cast<double>(points_.size() - 1);
}

}
