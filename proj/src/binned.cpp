#include "fthresh/binned.hpp"

#include "fthresh/errors.hpp"
#include "fthresh/parallel.hpp"

#include <array>
#include <cmath>
#include <map>
#include <memory>

namespace fthresh {

BinnedData::BinnedData(GridPtr grid, Eigen::MatrixXd counts, std::vector<Eigen::MatrixXd> averages,
                       std::vector<std::size_t> observations)
    : grid_(std::move(grid)), counts_(std::move(counts)), averages_(std::move(averages)),
      observations_(std::move(observations)) {
    const auto R = static_cast<Eigen::Index>(grid_->size());
    if (counts_.cols() != R || observations_.size() != n()) {
        throw ShapeError("binned counts must be n x R with one observation count per subject");
    }
    for (const auto& d : averages_) {
        if (d.rows() != counts_.rows() || d.cols() != R) {
            throw ShapeError("binned averages must be n x R");
        }
    }
}

BinnedData BinnedData::subset(std::span<const std::size_t> subjects) const {
    if (subjects.empty()) {
        throw InsufficientDataError("empty subject subset");
    }
    const auto m = static_cast<Eigen::Index>(subjects.size());
    Eigen::MatrixXd counts(m, counts_.cols());
    std::vector<Eigen::MatrixXd> averages(p(), Eigen::MatrixXd(m, counts_.cols()));
    std::vector<std::size_t> observations(subjects.size());
    for (Eigen::Index q = 0; q < m; ++q) {
        const std::size_t i = subjects[static_cast<std::size_t>(q)];
        if (i >= n()) {
            throw ShapeError("subject index out of range");
        }
        const auto ii = static_cast<Eigen::Index>(i);
        counts.row(q) = counts_.row(ii);
        for (std::size_t j = 0; j < p(); ++j) {
            averages[j].row(q) = averages_[j].row(ii);
        }
        observations[static_cast<std::size_t>(q)] = observations_[i];
    }
    return BinnedData(grid_, std::move(counts), std::move(averages), std::move(observations));
}

BinnedData linear_bin(const PartialSample& data, const GridPtr& grid, OpCounts* counts) {
    if (!data.is_simplified()) {
        throw ConfigError("linear binning needs locations shared across variables within each subject");
    }
    if (!grid->is_uniform()) {
        throw ConfigError("linear binning needs a uniform grid");
    }
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    const std::size_t R = grid->size();
    const auto Ri = static_cast<Eigen::Index>(R);
    const double lo = grid->point(0);
    const double hi = grid->point(R - 1);
    const double delta = grid->spacing();

    Eigen::MatrixXd varpi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), Ri);
    std::vector<Eigen::MatrixXd> D(p, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), Ri));
    std::vector<std::size_t> L(n);
    std::uint64_t ops = 0;

    for (std::size_t i = 0; i < n; ++i) {
        const auto loc = data.locations(i, 0);
        L[i] = loc.size();
        const auto ii = static_cast<Eigen::Index>(i);
        for (std::size_t l = 0; l < loc.size(); ++l) {
            const double u = loc[l];
            std::size_t r = 0;
            double frac = 0.0;
            if (u <= lo) {
                r = 0;
            } else if (u >= hi) {
                r = R - 1;
            } else {
                r = std::min<std::size_t>(static_cast<std::size_t>((u - lo) / delta), R - 2);
                while (r > 0 && u < grid->point(r)) {
                    --r;
                }
                while (r + 2 < R && u >= grid->point(r + 1)) {
                    ++r;
                }
                frac = (u - grid->point(r)) / (grid->point(r + 1) - grid->point(r));
                if (frac < kBinSnap) {
                    frac = 0.0;
                } else if (frac > 1.0 - kBinSnap) {
                    ++r;
                    frac = 0.0;
                }
            }
            const auto ri = static_cast<Eigen::Index>(r);
            const double w0 = 1.0 - frac;
            varpi(ii, ri) += w0;
            for (std::size_t j = 0; j < p; ++j) {
                D[j](ii, ri) += w0 * data.values(i, j)[l];
            }
            if (frac > 0.0) {
                varpi(ii, ri + 1) += frac;
                for (std::size_t j = 0; j < p; ++j) {
                    D[j](ii, ri + 1) += frac * data.values(i, j)[l];
                }
            }
            ops += 4 * (p + 1);
        }
    }
    if (counts) {
        counts->arithmetic_ops += ops;
    }
    return BinnedData(grid, std::move(varpi), std::move(D), std::move(L));
}

namespace {

constexpr std::uint64_t gemm_ops(Eigen::Index m, Eigen::Index k, Eigen::Index n) {
    return 2 * static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(n);
}

// g[a](r, s) = K_h(u_r - u_s) (u_r - u_s)^a, filled from the 2R - 1 distinct offsets.
std::array<Eigen::MatrixXd, 3> offset_kernel(const Grid& grid, const Kernel& kernel, OpCounts& counts) {
    const auto R = static_cast<Eigen::Index>(grid.size());
    const double delta = grid.spacing();
    Eigen::VectorXd k(2 * R - 1);
    Eigen::VectorXd d(2 * R - 1);
    for (Eigen::Index q = 0; q < 2 * R - 1; ++q) {
        d(q) = static_cast<double>(q - (R - 1)) * delta;
        k(q) = kernel(d(q));
    }
    counts.kernel_evals += static_cast<std::uint64_t>(2 * R - 1);
    std::array<Eigen::MatrixXd, 3> g;
    for (auto& m : g) {
        m.resize(R, R);
    }
    for (Eigen::Index s = 0; s < R; ++s) {
        for (Eigen::Index r = 0; r < R; ++r) {
            const Eigen::Index q = r - s + (R - 1);
            g[0](r, s) = k(q);
            g[1](r, s) = k(q) * d(q);
            g[2](r, s) = k(q) * d(q) * d(q);
        }
    }
    return g;
}

// Aggregate order, matching the direct smoother.
enum Agg { S00, S10, S01, S20, S11, S02, T00, T10, T01, kAggCount };

// The (a, b) index pair behind each S aggregate: first index smooths u, second smooths v.
constexpr std::array<std::array<int, 2>, 6> kSPairs = {{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}};
constexpr std::array<std::array<int, 2>, 3> kTPairs = {{{0, 0}, {1, 0}, {0, 1}}};

void mirror_upper(Eigen::MatrixXd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < c; ++r) {
            m(c, r) = m(r, c);
        }
    }
}

struct PairOutput {
    Eigen::MatrixXd sigma;
    Eigen::MatrixXd psi;
    std::size_t local_constant = 0;
    std::size_t empty = 0;
};

/**
 * Shared state for one bandwidth: kernel offsets, smoothed counts w_a = varpi g_a,
 * smoothed averages d_aj = D_j g_a, and the S aggregates common to all cross pairs.
 */
class BinnedEngine {
  public:
    BinnedEngine(const BinnedData& binned, const Kernel& kernel, OpCounts& counts)
        : binned_(binned), g_(offset_kernel(*binned.grid(), kernel, counts)) {
        const Eigen::MatrixXd& varpi = binned.counts();
        const Eigen::Index n = varpi.rows();
        const Eigen::Index R = varpi.cols();
        for (int a = 0; a < 3; ++a) {
            w_[a] = varpi * g_[a];
            counts.arithmetic_ops += gemm_ops(n, R, R);
        }
        for (std::size_t q = 0; q < kSPairs.size(); ++q) {
            const auto [a, b] = kSPairs[q];
            cross_s_[q] = w_[a].transpose() * w_[b];
            counts.arithmetic_ops += gemm_ops(R, n, R);
        }
        const Eigen::VectorXd omega = varpi.array().square().colwise().sum().transpose();
        for (std::size_t q = 0; q < kSPairs.size(); ++q) {
            const auto [a, b] = kSPairs[q];
            same_s_[q] = cross_s_[q] - g_[a].transpose() * omega.asDiagonal() * g_[b];
            counts.arithmetic_ops += gemm_ops(R, R, R) + static_cast<std::uint64_t>(R * R);
        }
        d_.resize(binned.p());
        for (std::size_t j = 0; j < binned.p(); ++j) {
            for (int a = 0; a < 2; ++a) {
                d_[j][a] = binned.averages(j) * g_[a];
                counts.arithmetic_ops += gemm_ops(n, R, R);
            }
        }
    }

    PairOutput pair(std::size_t j, std::size_t k, double h, bool with_variance, const Eigen::MatrixXd* sigma_given,
                    OpCounts& counts) const {
        const bool same = j == k;
        const Eigen::Index n = binned_.counts().rows();
        const Eigen::Index R = binned_.counts().cols();

        std::array<Eigen::MatrixXd, kAggCount> agg;
        for (std::size_t q = 0; q < kSPairs.size(); ++q) {
            agg[q] = same ? same_s_[q] : cross_s_[q];
        }
        Eigen::VectorXd dsq;
        if (same) {
            dsq = binned_.averages(j).array().square().colwise().sum().transpose();
        }
        for (std::size_t q = 0; q < kTPairs.size(); ++q) {
            const auto [a, b] = kTPairs[q];
            agg[T00 + q] = d_[j][a].transpose() * d_[k][b];
            counts.arithmetic_ops += gemm_ops(R, n, R);
            if (same) {
                agg[T00 + q] -= g_[a].transpose() * dsq.asDiagonal() * g_[b];
                counts.arithmetic_ops += gemm_ops(R, R, R) + static_cast<std::uint64_t>(R * R);
            }
        }

        PairOutput out;
        Eigen::MatrixXd w1(R, R), w2(R, R), w3(R, R);
        out.sigma.resize(R, R);
        for (Eigen::Index c = 0; c < R; ++c) {
            for (Eigen::Index r = 0; r < R; ++r) {
                const LocalLinearWeights lw = local_linear_weights(agg[S00](r, c), agg[S10](r, c), agg[S01](r, c),
                                                                   agg[S20](r, c), agg[S11](r, c), agg[S02](r, c));
                if (lw.status == WeightStatus::Empty) {
                    ++out.empty;
                } else if (lw.status == WeightStatus::LocalConstant) {
                    ++out.local_constant;
                }
                w1(r, c) = lw.w1;
                w2(r, c) = lw.w2;
                w3(r, c) = lw.w3;
                out.sigma(r, c) = lw.w1 * agg[T00](r, c) + lw.w2 * agg[T10](r, c) + lw.w3 * agg[T01](r, c);
            }
        }
        counts.arithmetic_ops += static_cast<std::uint64_t>(R * R) * 30;
        if (same) {
            mirror_upper(out.sigma);
        }
        fill_missing(out.sigma);
        if (!with_variance) {
            return out;
        }

        const Eigen::MatrixXd& sig = sigma_given ? *sigma_given : out.sigma;
        Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(R, R);
        const Eigen::MatrixXd& varpi = binned_.counts();
        const Eigen::MatrixXd& Dj = binned_.averages(j);
        std::array<Eigen::MatrixXd, 3> pd;  // per-subject r1 == r2 terms of the averages
        std::array<Eigen::MatrixXd, 3> pc;  // and of the counts
        for (Eigen::Index i = 0; i < n; ++i) {
            if (same) {
                same_bin_terms(varpi.row(i), Dj.row(i), pd, pc, counts);
            }
            for (Eigen::Index c = 0; c < R; ++c) {
                const double d0k = d_[k][0](i, c);
                const double d1k = d_[k][1](i, c);
                const double w0c = w_[0](i, c);
                const double w1c = w_[1](i, c);
                for (Eigen::Index r = 0; r < R; ++r) {
                    const double s = sig(r, c);
                    const double d0j = d_[j][0](i, r);
                    const double d1j = d_[j][1](i, r);
                    const double w0r = w_[0](i, r);
                    const double w1r = w_[1](i, r);
                    double v00 = d0j * d0k - s * w0r * w0c;
                    double v10 = d1j * d0k - s * w1r * w0c;
                    double v01 = d0j * d1k - s * w0r * w1c;
                    if (same) {
                        v00 -= pd[0](r, c) - s * pc[0](r, c);
                        v10 -= pd[1](r, c) - s * pc[1](r, c);
                        v01 -= pd[2](r, c) - s * pc[2](r, c);
                    }
                    const double q = w1(r, c) * v00 + w2(r, c) * v10 + w3(r, c) * v01;
                    psi(r, c) += q * q;
                }
            }
        }
        counts.arithmetic_ops += static_cast<std::uint64_t>(n * R * R) * (same ? 26 : 20);
        std::vector<std::size_t> Lj = binned_.observations();
        psi *= rate_Ijk(Lj, Lj, h);
        if (same) {
            mirror_upper(psi);
        }
        fill_missing(psi);
        out.psi = std::move(psi);
        return out;
    }

    Eigen::MatrixXd presmooth(std::size_t j, OpCounts& counts) const {
        const Eigen::Index n = w_[0].rows();
        const Eigen::Index R = w_[0].cols();
        Eigen::MatrixXd x(n, R);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd curve(R);
            for (Eigen::Index s = 0; s < R; ++s) {
                curve(s) = local_linear_value(w_[0](i, s), w_[1](i, s), w_[2](i, s), d_[j][0](i, s), d_[j][1](i, s));
            }
            fill_missing(curve);
            x.row(i) = curve.transpose();
        }
        counts.arithmetic_ops += static_cast<std::uint64_t>(n * R) * 8;
        return x;
    }

  private:
    // Sum over bins r of g_a(r, s1) g_b(r, s2) x_r for one subject, restricted to occupied bins.
    void same_bin_terms(const Eigen::Ref<const Eigen::RowVectorXd>& varpi_i,
                        const Eigen::Ref<const Eigen::RowVectorXd>& D_i, std::array<Eigen::MatrixXd, 3>& pd,
                        std::array<Eigen::MatrixXd, 3>& pc, OpCounts& counts) const {
        const Eigen::Index R = varpi_i.size();
        std::vector<Eigen::Index> occupied;
        for (Eigen::Index r = 0; r < R; ++r) {
            if (varpi_i(r) != 0.0) {
                occupied.push_back(r);
            }
        }
        const auto m = static_cast<Eigen::Index>(occupied.size());
        std::array<Eigen::MatrixXd, 2> gs;
        for (int a = 0; a < 2; ++a) {
            gs[a].resize(m, R);
            for (Eigen::Index q = 0; q < m; ++q) {
                gs[a].row(q) = g_[a].row(occupied[static_cast<std::size_t>(q)]);
            }
        }
        Eigen::VectorXd dsq(m), csq(m);
        for (Eigen::Index q = 0; q < m; ++q) {
            const Eigen::Index r = occupied[static_cast<std::size_t>(q)];
            dsq(q) = D_i(r) * D_i(r);
            csq(q) = varpi_i(r) * varpi_i(r);
        }
        for (std::size_t t = 0; t < kTPairs.size(); ++t) {
            const auto [a, b] = kTPairs[t];
            pd[t] = gs[a].transpose() * dsq.asDiagonal() * gs[b];
            pc[t] = gs[a].transpose() * csq.asDiagonal() * gs[b];
        }
        counts.arithmetic_ops += 6 * gemm_ops(R, m, R);
    }

    const BinnedData& binned_;
    std::array<Eigen::MatrixXd, 3> g_;
    std::array<Eigen::MatrixXd, 3> w_;
    std::array<Eigen::MatrixXd, 6> cross_s_;
    std::array<Eigen::MatrixXd, 6> same_s_;
    std::vector<std::array<Eigen::MatrixXd, 2>> d_;
};

void check_pair(const BinnedData& binned, std::size_t j, std::size_t k) {
    if (j >= binned.p() || k >= binned.p()) {
        throw ShapeError("variable index out of range");
    }
}

}

Surface binlls_cross_cov(const BinnedData& binned, std::size_t j, std::size_t k, double h, KernelKind kernel) {
    check_pair(binned, j, k);
    OpCounts counts;
    const BinnedEngine engine(binned, Kernel(kernel, h), counts);
    PairOutput out = engine.pair(j, k, h, false, nullptr, counts);
    return Surface(binned.grid(), binned.grid(), std::move(out.sigma));
}

Surface binlls_variance_surrogate(const BinnedData& binned, std::size_t j, std::size_t k, const Surface& sigma_check,
                                  double h, KernelKind kernel) {
    check_pair(binned, j, k);
    if (!same_grid(sigma_check.row_grid(), binned.grid()) || !same_grid(sigma_check.col_grid(), binned.grid())) {
        throw ShapeError("smoothed surface must live on the bin grid");
    }
    OpCounts counts;
    const BinnedEngine engine(binned, Kernel(kernel, h), counts);
    const Eigen::MatrixXd given = sigma_check.values();
    PairOutput out = engine.pair(j, k, h, true, &given, counts);
    return Surface(binned.grid(), binned.grid(), std::move(out.psi));
}

Eigen::MatrixXd binned_presmooth(const BinnedData& binned, std::size_t j, double h, KernelKind kernel) {
    check_pair(binned, j, j);
    OpCounts counts;
    const BinnedEngine engine(binned, Kernel(kernel, h), counts);
    return engine.presmooth(j, counts);
}

DenseSample binned_presmooth_all(const BinnedData& binned, double h, KernelKind kernel) {
    OpCounts counts;
    const BinnedEngine engine(binned, Kernel(kernel, h), counts);
    const std::size_t n = binned.n();
    const std::size_t p = binned.p();
    const auto R = static_cast<Eigen::Index>(binned.grid()->size());
    Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p) * R);
    for (std::size_t j = 0; j < p; ++j) {
        values.middleCols(static_cast<Eigen::Index>(j) * R, R) = engine.presmooth(j, counts);
    }
    return DenseSample(n, p, binned.grid(), std::move(values));
}

SmoothedCovariance binned_smooth_covariance(const BinnedData& binned, const SmoothingOptions& options) {
    const std::size_t p = binned.p();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            pairs.emplace_back(j, k);
        }
    }
    OpCounts counts;
    std::map<double, std::unique_ptr<BinnedEngine>> engines;
    for (const auto& [j, k] : pairs) {
        const double h = options.bandwidth(j, k);
        if (!engines.contains(h)) {
            engines.emplace(h, std::make_unique<BinnedEngine>(binned, Kernel(options.kernel, h), counts));
        }
    }

    CovField sigma(p, binned.grid());
    CovField psi(p, binned.grid());
    std::vector<PairDiagnostics> diagnostics(pairs.size());
    const int workers = options.threads <= 0 ? default_threads() : options.threads;
    std::vector<OpCounts> worker_counts(static_cast<std::size_t>(std::max(workers, 1)));
    parallel_for(workers, pairs.size(), [&](std::size_t worker, std::size_t begin, std::size_t end) {
        for (std::size_t q = begin; q < end; ++q) {
            const auto [j, k] = pairs[q];
            const double h = options.bandwidth(j, k);
            PairOutput r = engines.at(h)->pair(j, k, h, options.with_variance, nullptr, worker_counts[worker]);
            sigma.set_entry(j, k, r.sigma);
            if (options.with_variance) {
                psi.set_entry(j, k, r.psi);
            }
            diagnostics[q] = PairDiagnostics{j, k, h, r.local_constant, r.empty};
        }
    });
    for (const OpCounts& c : worker_counts) {
        counts += c;
    }
    SmoothedCovariance result{std::move(sigma), std::nullopt, std::move(diagnostics), counts};
    if (options.with_variance) {
        result.psi.emplace(std::move(psi));
    }
    return result;
}

}
