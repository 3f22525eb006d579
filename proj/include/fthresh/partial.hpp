#ifndef FTHRESH_PARTIAL_HPP
#define FTHRESH_PARTIAL_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace fthresh {

/// Locations and noisy values of one curve.
struct CurveObservations {
    std::vector<double> locations;
    std::vector<double> values;
};

/**
 * Partially observed noisy curves Z_ijl = X_ij(U_ijl) + e_ijl.
 *
 * Two layouts share one interface: the general layout has its own locations
 * for every (subject, variable); the simplified layout observes all variables
 * of a subject at the same locations U_il. General input whose variables
 * happen to share locations is detected and stored as simplified.
 */
class PartialSample {
  public:
    /// Simplified layout: `locations[i]` has L_i entries, `values[i]` is L_i x p.
    static PartialSample simplified(std::vector<std::vector<double>> locations,
                                    const std::vector<Eigen::MatrixXd>& values);

    /// General layout: `curves[i][j]` holds the observations of X_ij.
    static PartialSample general(std::vector<std::vector<CurveObservations>> curves);

    std::size_t n() const { return subjects_.size(); }
    std::size_t p() const { return p_; }
    bool is_simplified() const { return simplified_; }

    std::span<const double> locations(std::size_t i, std::size_t j) const {
        const auto& s = subjects_[i];
        return simplified_ ? std::span<const double>(s.locations[0]) : std::span<const double>(s.locations[j]);
    }
    std::span<const double> values(std::size_t i, std::size_t j) const { return subjects_[i].values[j]; }
    std::size_t count(std::size_t i, std::size_t j) const { return values(i, j).size(); }

    /// L_ij over subjects for variable j.
    std::vector<std::size_t> counts(std::size_t j) const;

    /// Total number of (location, value) pairs per variable-location set: sum_i L_i (simplified) or sum_ij L_ij.
    std::size_t total_locations() const;

    PartialSample subset(std::span<const std::size_t> subjects) const;
    PartialSample rescaled(std::span<const double> factors) const;

    /// Copy with values replaced by `fn(i, j, l, location, value)`.
    template<class Fn>
    PartialSample transformed(Fn&& fn) const {
        PartialSample out = *this;
        for (std::size_t i = 0; i < n(); ++i) {
            for (std::size_t j = 0; j < p_; ++j) {
                auto loc = locations(i, j);
                auto& vals = out.subjects_[i].values[j];
                for (std::size_t l = 0; l < vals.size(); ++l) {
                    vals[l] = fn(i, j, l, loc[l], vals[l]);
                }
            }
        }
        return out;
    }

  private:
    struct Subject {
        std::vector<std::vector<double>> locations;  // one shared entry when simplified, else p
        std::vector<std::vector<double>> values;     // p entries
    };

    PartialSample(std::size_t p, bool simplified, std::vector<Subject> subjects);
    void validate() const;

    std::size_t p_ = 0;
    bool simplified_ = false;
    std::vector<Subject> subjects_;
};

}

#endif
