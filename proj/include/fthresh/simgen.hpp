#ifndef FTHRESH_SIMGEN_HPP
#define FTHRESH_SIMGEN_HPP

#include "fthresh/covfield.hpp"
#include "fthresh/dense.hpp"
#include "fthresh/grid.hpp"
#include "fthresh/partial.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace fthresh {

/**
 * Block structure of the score covariance Omega_jk = omega_jk D.
 *
 * Model1: banded (1 - |j-k|/10)_+ on the first p/2 variables, 4 I(j=k) on the rest.
 * Model2: sparse random B + delta' I on the first p/2 variables, 4 I(j=k) on the rest.
 * Banded: (1 - |j-k|/10)_+ on all p variables (non-sparse, any p).
 */
enum class SimModel { Model1, Model2, Banded };

SimModel parse_model(std::string_view name);
std::string_view model_name(SimModel model);

struct PartialDesign {
    /// Observations per subject; `per_subject` overrides it when nonempty.
    std::size_t L = 11;
    std::vector<std::size_t> per_subject;
    double noise_sd = 0.5;
    /// Draw locations uniformly from the output grid points (distinct within a subject) instead of [0, 1].
    bool on_grid = false;
    /// Share locations across variables within a subject; false draws them per (subject, variable).
    bool shared_locations = true;
};

struct SimSpec {
    SimModel model = SimModel::Model1;
    std::size_t n = 100;
    std::size_t p = 50;
    std::size_t basis_dim = 50;
    GridPtr grid = make_uniform_grid(21);
    std::uint64_t seed = 1;
    std::optional<PartialDesign> partial;
};

struct OmegaSpec {
    /// p x p block multipliers omega_jk.
    Eigen::MatrixXd omega;
    /// Diagonal of D: b^{-2}, b = 1..basis_dim.
    Eigen::VectorXd d;
};

OmegaSpec build_omega(const SimSpec& spec);

/// |u| x basis_dim matrix of s_1 = 1, s_2m = sqrt2 sin(2 pi m u), s_2m+1 = sqrt2 cos(2 pi m u).
Eigen::MatrixXd fourier_basis(std::size_t basis_dim, std::span<const double> u);

/// Sigma_jk(u, v) = omega_jk sum_b d_b s_b(u) s_b(v) on `grid`.
CovField true_covariance(const OmegaSpec& omega, const GridPtr& grid);

struct FullSimulation {
    DenseSample data;
    CovField truth;
};

struct PartialSimulation {
    PartialSample data;
    CovField truth;
};

FullSimulation simulate_full(const SimSpec& spec);

/// Requires spec.partial. Scores match simulate_full for the same seed.
PartialSimulation simulate_partial(const SimSpec& spec);

}

#endif
