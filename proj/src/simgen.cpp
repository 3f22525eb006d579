#include "fthresh/simgen.hpp"

#include "fthresh/errors.hpp"
#include "fthresh/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace fthresh {

namespace {

// Sub-stream ids of the master seed.
constexpr std::uint64_t kOmegaStream = 1;
constexpr std::uint64_t kScoreStreamBase = 1'000'000;
constexpr std::uint64_t kDesignStreamBase = 2'000'000'000;

double banded(std::size_t j, std::size_t k) {
    const double gap = std::abs(static_cast<double>(j) - static_cast<double>(k));
    return std::max(1.0 - gap / 10.0, 0.0);
}

// Lower factor C with C C^T = omega, falling back to a symmetric square root when omega is only semidefinite.
Eigen::MatrixXd omega_factor(const Eigen::MatrixXd& omega) {
    Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() == Eigen::Success) {
        return llt.matrixL();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(omega);
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

// Subject curves X_i (p x R), one score stream per subject.
Eigen::MatrixXd subject_scores(const Eigen::MatrixXd& factor, const Eigen::VectorXd& sqrt_d, std::uint64_t seed,
                               std::size_t i) {
    const Eigen::Index p = factor.rows();
    const Eigen::Index B = sqrt_d.size();
    SplitMix64 gen(derive_seed(seed, kScoreStreamBase + i));
    Eigen::MatrixXd z(p, B);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index b = 0; b < B; ++b) {
            z(j, b) = standard_normal(gen);
        }
    }
    return (factor * z) * sqrt_d.asDiagonal();
}

// x(j, r) = sum_b theta(j, b) s(r, b), summed in basis order so full and partial draws agree bit for bit.
Eigen::MatrixXd evaluate_curves(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& basis) {
    Eigen::MatrixXd x(theta.rows(), basis.rows());
    for (Eigen::Index r = 0; r < basis.rows(); ++r) {
        for (Eigen::Index j = 0; j < theta.rows(); ++j) {
            double sum = 0.0;
            for (Eigen::Index b = 0; b < theta.cols(); ++b) {
                sum += theta(j, b) * basis(r, b);
            }
            x(j, r) = sum;
        }
    }
    return x;
}

std::vector<double> grid_vector(const Grid& grid) {
    return std::vector<double>(grid.points().data(), grid.points().data() + grid.size());
}

}

SimModel parse_model(std::string_view name) {
    if (name == "model1" || name == "1") {
        return SimModel::Model1;
    }
    if (name == "model2" || name == "2") {
        return SimModel::Model2;
    }
    if (name == "banded") {
        return SimModel::Banded;
    }
    throw ParameterError("unknown model '" + std::string(name) + "'");
}

std::string_view model_name(SimModel model) {
    switch (model) {
    case SimModel::Model1:
        return "model1";
    case SimModel::Model2:
        return "model2";
    case SimModel::Banded:
        return "banded";
    }
    return "model1";
}

OmegaSpec build_omega(const SimSpec& spec) {
    const std::size_t p = spec.p;
    if (p == 0 || spec.basis_dim == 0) {
        throw ParameterError("need p >= 1 and a nonempty basis");
    }
    if (spec.model != SimModel::Banded && p % 2 != 0) {
        throw ParameterError("models 1 and 2 need an even p");
    }
    const auto P = static_cast<Eigen::Index>(p);
    OmegaSpec out{Eigen::MatrixXd::Zero(P, P), Eigen::VectorXd(static_cast<Eigen::Index>(spec.basis_dim))};
    for (std::size_t b = 0; b < spec.basis_dim; ++b) {
        const auto bd = static_cast<double>(b + 1);
        out.d(static_cast<Eigen::Index>(b)) = 1.0 / (bd * bd);
    }

    if (spec.model == SimModel::Banded) {
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t k = 0; k < p; ++k) {
                out.omega(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = banded(j, k);
            }
        }
        return out;
    }

    const std::size_t half = p / 2;
    const auto H = static_cast<Eigen::Index>(half);
    for (Eigen::Index j = H; j < P; ++j) {
        out.omega(j, j) = 4.0;
    }
    if (spec.model == SimModel::Model1) {
        for (std::size_t j = 0; j < half; ++j) {
            for (std::size_t k = 0; k < half; ++k) {
                out.omega(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = banded(j, k);
            }
        }
        return out;
    }

    SplitMix64 gen(derive_seed(spec.seed, kOmegaStream));
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(H, H);
    for (Eigen::Index k = 0; k < H; ++k) {
        for (Eigen::Index j = 0; j < k; ++j) {
            const double keep = uniform01(gen);
            const double value = 0.3 + 0.5 * uniform01(gen);
            if (keep < 0.2) {
                B(j, k) = value;
                B(k, j) = value;
            }
        }
    }
    const double lambda_min = H > 0 ? Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(B).eigenvalues()(0) : 0.0;
    const double shift = std::max(-lambda_min, 0.0) + 0.01;
    out.omega.topLeftCorner(H, H) = B + shift * Eigen::MatrixXd::Identity(H, H);
    return out;
}

Eigen::MatrixXd fourier_basis(std::size_t basis_dim, std::span<const double> u) {
    const auto B = static_cast<Eigen::Index>(basis_dim);
    Eigen::MatrixXd s(static_cast<Eigen::Index>(u.size()), B);
    for (std::size_t r = 0; r < u.size(); ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        for (Eigen::Index b = 0; b < B; ++b) {
            if (b == 0) {
                s(ri, b) = 1.0;
                continue;
            }
            const auto m = static_cast<double>((b + 1) / 2);
            const double angle = 2.0 * std::numbers::pi * m * u[r];
            s(ri, b) = std::numbers::sqrt2 * ((b + 1) % 2 == 0 ? std::sin(angle) : std::cos(angle));
        }
    }
    return s;
}

CovField true_covariance(const OmegaSpec& omega, const GridPtr& grid) {
    const auto u = grid_vector(*grid);
    const Eigen::MatrixXd s = fourier_basis(static_cast<std::size_t>(omega.d.size()), u);
    Eigen::MatrixXd kernel = s * omega.d.asDiagonal() * s.transpose();
    kernel = (0.5 * (kernel + kernel.transpose())).eval();
    const auto p = static_cast<std::size_t>(omega.omega.rows());
    CovField truth(p, grid);
    for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            const double w = omega.omega(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
            if (w != 0.0) {
                truth.set_entry(j, k, w * kernel);
            }
        }
    }
    return truth;
}

FullSimulation simulate_full(const SimSpec& spec) {
    if (spec.n < 2) {
        throw ParameterError("simulation needs n >= 2");
    }
    const OmegaSpec omega = build_omega(spec);
    const Eigen::MatrixXd factor = omega_factor(omega.omega);
    const Eigen::VectorXd sqrt_d = omega.d.cwiseSqrt();
    const auto u = grid_vector(*spec.grid);
    const Eigen::MatrixXd basis = fourier_basis(spec.basis_dim, u);
    const auto R = static_cast<Eigen::Index>(spec.grid->size());
    const auto P = static_cast<Eigen::Index>(spec.p);

    Eigen::MatrixXd values(static_cast<Eigen::Index>(spec.n), P * R);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const Eigen::MatrixXd x = evaluate_curves(subject_scores(factor, sqrt_d, spec.seed, i), basis);  // p x R
        for (Eigen::Index j = 0; j < P; ++j) {
            values.row(static_cast<Eigen::Index>(i)).segment(j * R, R) = x.row(j);
        }
    }
    return FullSimulation{DenseSample(spec.n, spec.p, spec.grid, std::move(values)), true_covariance(omega, spec.grid)};
}

PartialSimulation simulate_partial(const SimSpec& spec) {
    if (!spec.partial) {
        throw ParameterError("partial design missing from simulation spec");
    }
    const PartialDesign& design = *spec.partial;
    if (!design.per_subject.empty() && design.per_subject.size() != spec.n) {
        throw ParameterError("per-subject counts must list every subject");
    }
    if (!(design.noise_sd >= 0.0)) {
        throw ParameterError("noise sd must be nonnegative");
    }
    const OmegaSpec omega = build_omega(spec);
    const Eigen::MatrixXd factor = omega_factor(omega.omega);
    const Eigen::VectorXd sqrt_d = omega.d.cwiseSqrt();
    const std::size_t R = spec.grid->size();

    auto draw_locations = [&](SplitMix64& gen, std::size_t L) {
        std::vector<double> loc(L);
        if (design.on_grid) {
            if (L > R) {
                throw ParameterError("on-grid designs need L <= R");
            }
            auto order = random_permutation(gen, R);
            for (std::size_t l = 0; l < L; ++l) {
                loc[l] = spec.grid->point(order[l]);
            }
        } else {
            for (double& v : loc) {
                v = uniform01(gen);
            }
        }
        return loc;
    };

    std::vector<std::vector<CurveObservations>> curves(spec.n, std::vector<CurveObservations>(spec.p));
    for (std::size_t i = 0; i < spec.n; ++i) {
        const std::size_t L = design.per_subject.empty() ? design.L : design.per_subject[i];
        if (L == 0) {
            throw ParameterError("every subject needs at least one observation");
        }
        const Eigen::MatrixXd theta = subject_scores(factor, sqrt_d, spec.seed, i);  // p x basis
        SplitMix64 gen(derive_seed(spec.seed, kDesignStreamBase + i));
        std::vector<double> shared;
        if (design.shared_locations) {
            shared = draw_locations(gen, L);
        }
        for (std::size_t j = 0; j < spec.p; ++j) {
            CurveObservations& c = curves[i][j];
            c.locations = design.shared_locations ? shared : draw_locations(gen, L);
            const Eigen::MatrixXd x =
                evaluate_curves(theta.middleRows(static_cast<Eigen::Index>(j), 1), fourier_basis(spec.basis_dim, c.locations));
            c.values.resize(L);
            for (std::size_t l = 0; l < L; ++l) {
                const double noise = design.noise_sd > 0.0 ? design.noise_sd * standard_normal(gen) : 0.0;
                c.values[l] = x(0, static_cast<Eigen::Index>(l)) + noise;
            }
        }
    }
    return PartialSimulation{PartialSample::general(std::move(curves)), true_covariance(omega, spec.grid)};
}

}
