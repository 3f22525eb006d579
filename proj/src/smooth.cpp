#include "fthresh/smooth.hpp"

#include "fthresh/errors.hpp"
#include "fthresh/parallel.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace fthresh {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// Kernel weights K_h(U_l - u_r) and offsets U_l - u_r for one set of locations; row r, column l.
struct CurveTable {
    RowMatrix weight;
    RowMatrix offset;
};

CurveTable make_table(std::span<const double> locations, const Kernel& kernel, const Grid& out, OpCounts& counts) {
    const auto R = static_cast<Eigen::Index>(out.size());
    const auto L = static_cast<Eigen::Index>(locations.size());
    CurveTable t{RowMatrix(R, L), RowMatrix(R, L)};
    for (Eigen::Index r = 0; r < R; ++r) {
        const double u = out.point(static_cast<std::size_t>(r));
        for (Eigen::Index l = 0; l < L; ++l) {
            const double d = locations[static_cast<std::size_t>(l)] - u;
            t.offset(r, l) = d;
            t.weight(r, l) = kernel(d);
        }
    }
    counts.kernel_evals += static_cast<std::uint64_t>(R * L);
    return t;
}

// Kernel tables for every curve needed at one bandwidth. The simplified layout shares one table per subject.
class TableSet {
  public:
    TableSet(const PartialSample& data, const Kernel& kernel, const Grid& out, std::span<const std::size_t> variables,
             OpCounts& counts)
        : simplified_(data.is_simplified()), p_(data.p()) {
        const std::size_t n = data.n();
        if (simplified_) {
            tables_.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                tables_.push_back(make_table(data.locations(i, 0), kernel, out, counts));
            }
            return;
        }
        tables_.resize(n * p_);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j : variables) {
                tables_[i * p_ + j] = make_table(data.locations(i, j), kernel, out, counts);
            }
        }
    }

    const CurveTable& get(std::size_t i, std::size_t j) const { return simplified_ ? tables_[i] : tables_[i * p_ + j]; }

  private:
    bool simplified_;
    std::size_t p_;
    std::vector<CurveTable> tables_;
};

// Aggregate order inside a block of nine R x R surfaces.
enum Agg { S00, S10, S01, S20, S11, S02, T00, T10, T01, kAggCount };

struct PairAggregates {
    std::size_t R = 0;
    bool upper_only = false;
    std::array<Eigen::MatrixXd, kAggCount> total;
    std::vector<double> per_subject;  // n blocks of kAggCount column-major R x R surfaces, when kept

    const double* subject(std::size_t i) const { return per_subject.data() + i * kAggCount * R * R; }
};

constexpr std::uint64_t kOpsPerRawPoint = 20;

// Sums the local-linear aggregates over every raw product Z_ijl Z_ikm, one output point at a time.
PairAggregates accumulate_pair(const PartialSample& data, std::size_t j, std::size_t k, const TableSet& tables,
                               std::size_t R, bool include_diagonal, bool keep_subjects, OpCounts& counts) {
    const std::size_t n = data.n();
    const std::size_t RR = R * R;
    const bool same_curve = j == k;
    const bool skip_same = same_curve && !include_diagonal;

    PairAggregates agg;
    agg.R = R;
    agg.upper_only = same_curve;
    for (auto& m : agg.total) {
        m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(R));
    }
    std::vector<double> scratch;
    if (keep_subjects) {
        agg.per_subject.assign(n * kAggCount * RR, 0.0);
    } else {
        scratch.assign(kAggCount * RR, 0.0);
    }

    std::uint64_t visits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const CurveTable& tj = tables.get(i, j);
        const CurveTable& tk = tables.get(i, k);
        const auto zj = data.values(i, j);
        const auto zk = data.values(i, k);
        const std::size_t Lj = zj.size();
        const std::size_t Lk = zk.size();
        double* acc = keep_subjects ? agg.per_subject.data() + i * kAggCount * RR : scratch.data();

        for (std::size_t r1 = 0; r1 < R; ++r1) {
            const double* A = tj.weight.row(static_cast<Eigen::Index>(r1)).data();
            const double* DU = tj.offset.row(static_cast<Eigen::Index>(r1)).data();
            for (std::size_t r2 = same_curve ? r1 : 0; r2 < R; ++r2) {
                const double* B = tk.weight.row(static_cast<Eigen::Index>(r2)).data();
                const double* DV = tk.offset.row(static_cast<Eigen::Index>(r2)).data();
                double s00 = 0, s10 = 0, s01 = 0, s20 = 0, s11 = 0, s02 = 0, t00 = 0, t10 = 0, t01 = 0;
                for (std::size_t l = 0; l < Lj; ++l) {
                    const double a = A[l];
                    if (a == 0.0) {
                        continue;
                    }
                    const double du = DU[l];
                    const double zl = zj[l];
                    auto raw_points = [&](std::size_t begin, std::size_t end) {
                        for (std::size_t m = begin; m < end; ++m) {
                            const double g = a * B[m];
                            const double dv = DV[m];
                            const double y = zl * zk[m];
                            s00 += g;
                            s10 += g * du;
                            s01 += g * dv;
                            s20 += g * du * du;
                            s11 += g * du * dv;
                            s02 += g * dv * dv;
                            t00 += g * y;
                            t10 += g * du * y;
                            t01 += g * dv * y;
                        }
                    };
                    if (skip_same) {
                        raw_points(0, l);
                        raw_points(l + 1, Lk);
                        visits += Lk - 1;
                    } else {
                        raw_points(0, Lk);
                        visits += Lk;
                    }
                }
                const std::size_t at = r1 + r2 * R;
                acc[S00 * RR + at] = s00;
                acc[S10 * RR + at] = s10;
                acc[S01 * RR + at] = s01;
                acc[S20 * RR + at] = s20;
                acc[S11 * RR + at] = s11;
                acc[S02 * RR + at] = s02;
                acc[T00 * RR + at] = t00;
                acc[T10 * RR + at] = t10;
                acc[T01 * RR + at] = t01;
            }
        }
        for (int q = 0; q < kAggCount; ++q) {
            agg.total[static_cast<std::size_t>(q)] +=
                Eigen::Map<const Eigen::MatrixXd>(acc + q * RR, static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(R));
        }
    }
    counts.arithmetic_ops += visits * kOpsPerRawPoint + n * kAggCount * RR;
    return agg;
}

// Mirrors the upper triangle into the lower one.
void mirror_upper(Eigen::MatrixXd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < c; ++r) {
            m(c, r) = m(r, c);
        }
    }
}

struct PairWeights {
    Eigen::MatrixXd w1, w2, w3;
    std::size_t local_constant = 0;
    std::size_t empty = 0;
};

PairWeights solve_weights(const std::array<Eigen::MatrixXd, kAggCount>& s, bool upper_only) {
    const Eigen::Index R = s[S00].rows();
    PairWeights w{Eigen::MatrixXd::Constant(R, R, kMissing), Eigen::MatrixXd::Constant(R, R, kMissing),
                  Eigen::MatrixXd::Constant(R, R, kMissing)};
    for (Eigen::Index c = 0; c < R; ++c) {
        for (Eigen::Index r = 0; r < (upper_only ? c + 1 : R); ++r) {
            const LocalLinearWeights lw =
                local_linear_weights(s[S00](r, c), s[S10](r, c), s[S01](r, c), s[S20](r, c), s[S11](r, c), s[S02](r, c));
            if (lw.status == WeightStatus::Empty) {
                ++w.empty;
                continue;
            }
            if (lw.status == WeightStatus::LocalConstant) {
                ++w.local_constant;
            }
            w.w1(r, c) = lw.w1;
            w.w2(r, c) = lw.w2;
            w.w3(r, c) = lw.w3;
        }
    }
    return w;
}

// Smoothed surface from the aggregate totals; missing where the window is empty.
Eigen::MatrixXd combine_sigma(const PairWeights& w, const std::array<Eigen::MatrixXd, kAggCount>& s) {
    return (w.w1.cwiseProduct(s[T00]) + w.w2.cwiseProduct(s[T10]) + w.w3.cwiseProduct(s[T01])).eval();
}

Eigen::MatrixXd psi_from_subjects(const PairAggregates& agg, const PairWeights& w, const Eigen::MatrixXd& sigma,
                                  std::size_t n, double rate, OpCounts& counts) {
    const std::size_t R = agg.R;
    const std::size_t RR = R * R;
    const auto Ri = static_cast<Eigen::Index>(R);
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(Ri, Ri);
    for (std::size_t i = 0; i < n; ++i) {
        const double* a = agg.subject(i);
        for (std::size_t c = 0; c < R; ++c) {
            for (std::size_t r = 0; r < (agg.upper_only ? c + 1 : R); ++r) {
                const std::size_t at = r + c * R;
                const auto ri = static_cast<Eigen::Index>(r);
                const auto ci = static_cast<Eigen::Index>(c);
                const double sg = sigma(ri, ci);
                const double v00 = a[T00 * RR + at] - sg * a[S00 * RR + at];
                const double v10 = a[T10 * RR + at] - sg * a[S10 * RR + at];
                const double v01 = a[T01 * RR + at] - sg * a[S01 * RR + at];
                const double q = w.w1(ri, ci) * v00 + w.w2(ri, ci) * v10 + w.w3(ri, ci) * v01;
                psi(ri, ci) += q * q;
            }
        }
    }
    counts.arithmetic_ops += n * RR * 13;
    psi *= rate;
    if (agg.upper_only) {
        mirror_upper(psi);
    }
    return psi;
}

void check_pair(const PartialSample& data, std::size_t j, std::size_t k) {
    if (j >= data.p() || k >= data.p()) {
        throw ShapeError("variable index out of range");
    }
}

void check_marginal_pairs(const PartialSample& data, std::size_t j) {
    for (std::size_t i = 0; i < data.n(); ++i) {
        if (data.count(i, j) >= 2) {
            return;
        }
    }
    throw InsufficientDataError("variable " + std::to_string(j) + " has no curve with two or more observations");
}

struct PairResult {
    Eigen::MatrixXd sigma;
    Eigen::MatrixXd psi;
    std::size_t local_constant = 0;
    std::size_t empty = 0;
};

// Smooths one pair; `sigma_given` replaces the smoothed surface inside the variance surrogate when present.
PairResult smooth_pair(const PartialSample& data, std::size_t j, std::size_t k, const TableSet& tables, const Grid& out,
                       double h, bool include_diagonal, bool with_variance, const Eigen::MatrixXd* sigma_given,
                       OpCounts& counts) {
    if (j == k && !include_diagonal) {
        check_marginal_pairs(data, j);
    }
    const PairAggregates agg = accumulate_pair(data, j, k, tables, out.size(), include_diagonal, with_variance, counts);
    const PairWeights w = solve_weights(agg.total, agg.upper_only);

    PairResult result;
    result.local_constant = w.local_constant;
    result.empty = w.empty;
    result.sigma = combine_sigma(w, agg.total);
    if (agg.upper_only) {
        mirror_upper(result.sigma);
    }
    fill_missing(result.sigma);
    if (with_variance) {
        const auto Lj = data.counts(j);
        const auto Lk = data.counts(k);
        const double rate = rate_Ijk(Lj, Lk, h);
        result.psi = psi_from_subjects(agg, w, sigma_given ? *sigma_given : result.sigma, data.n(), rate, counts);
        fill_missing(result.psi);
    }
    return result;
}

std::vector<std::size_t> pair_variables(std::size_t j, std::size_t k) {
    return j == k ? std::vector<std::size_t>{j} : std::vector<std::size_t>{j, k};
}

}

Design parse_design(std::string_view name) {
    if (name == "sparse") {
        return Design::Sparse;
    }
    if (name == "dense") {
        return Design::Dense;
    }
    if (name == "very-dense" || name == "very_dense") {
        return Design::VeryDense;
    }
    throw ParameterError("unknown design '" + std::string(name) + "'");
}

double default_bandwidth(std::size_t n, double L, Design design, double c) {
    if (n == 0 || !(L >= 1.0)) {
        throw ParameterError("bandwidth needs n >= 1 and L >= 1");
    }
    if (!(c > 0.0 && c <= 1.0)) {
        throw ParameterError("bandwidth constant must lie in (0, 1]");
    }
    const auto nd = static_cast<double>(n);
    switch (design) {
    case Design::Sparse:
        return c * std::pow(nd, -1.0 / 6.0);
    case Design::Dense:
        return c * std::pow(nd * L * L, -1.0 / 6.0);
    case Design::VeryDense:
        return c * std::pow(nd, -0.25);
    }
    return c;
}

double rate_Ijk(std::span<const std::size_t> counts_j, std::span<const std::size_t> counts_k, double h) {
    if (counts_j.size() != counts_k.size()) {
        throw ShapeError("count vectors differ in length");
    }
    if (!(h > 0.0)) {
        throw ParameterError("bandwidth must be positive");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < counts_j.size(); ++i) {
        const auto a = static_cast<double>(counts_j[i]);
        const auto b = static_cast<double>(counts_k[i]);
        num += a * b;
        den += a * b / (h * h) + a * a * b / h + a * b * b / h + a * a * b * b;
    }
    return num * num / den;
}

LocalLinearWeights local_linear_weights(double s00, double s10, double s01, double s20, double s11, double s02) {
    LocalLinearWeights w;
    if (!(s00 > 0.0)) {
        w.status = WeightStatus::Empty;
        w.w1 = w.w2 = w.w3 = kMissing;
        return w;
    }
    const double c1 = s20 * s02 - s11 * s11;
    const double c2 = -(s10 * s02 - s01 * s11);
    const double c3 = s10 * s11 - s01 * s20;
    const double den = c1 * s00 + c2 * s10 + c3 * s01;
    if (!(std::abs(den) >= kSingularRelative * s00 * s20 * s02) || den == 0.0) {
        w.status = WeightStatus::LocalConstant;
        w.w1 = 1.0 / s00;
        w.w2 = 0.0;
        w.w3 = 0.0;
        return w;
    }
    w.w1 = c1 / den;
    w.w2 = c2 / den;
    w.w3 = c3 / den;
    return w;
}

void fill_missing(Eigen::MatrixXd& values) {
    if (values.allFinite()) {
        return;
    }
    if (!values.array().isFinite().any()) {
        throw InsufficientDataError("no output point has data inside the smoothing window");
    }
    const Eigen::Index R = values.rows();
    const Eigen::Index C = values.cols();
    while (!values.allFinite()) {
        Eigen::MatrixXd next = values;
        for (Eigen::Index c = 0; c < C; ++c) {
            for (Eigen::Index r = 0; r < R; ++r) {
                if (std::isfinite(values(r, c))) {
                    continue;
                }
                double sum = 0.0;
                int count = 0;
                const Eigen::Index nr[4] = {r - 1, r + 1, r, r};
                const Eigen::Index nc[4] = {c, c, c - 1, c + 1};
                for (int q = 0; q < 4; ++q) {
                    if (nr[q] >= 0 && nr[q] < R && nc[q] >= 0 && nc[q] < C && std::isfinite(values(nr[q], nc[q]))) {
                        sum += values(nr[q], nc[q]);
                        ++count;
                    }
                }
                if (count > 0) {
                    next(r, c) = sum / count;
                }
            }
        }
        values = std::move(next);
    }
}

void fill_missing(Eigen::Ref<Eigen::VectorXd> values) {
    if (values.allFinite()) {
        return;
    }
    if (!values.array().isFinite().any()) {
        throw InsufficientDataError("no output point has data inside the smoothing window");
    }
    const Eigen::Index R = values.size();
    while (!values.allFinite()) {
        Eigen::VectorXd next = values;
        for (Eigen::Index r = 0; r < R; ++r) {
            if (std::isfinite(values(r))) {
                continue;
            }
            double sum = 0.0;
            int count = 0;
            if (r > 0 && std::isfinite(values(r - 1))) {
                sum += values(r - 1);
                ++count;
            }
            if (r + 1 < R && std::isfinite(values(r + 1))) {
                sum += values(r + 1);
                ++count;
            }
            if (count > 0) {
                next(r) = sum / count;
            }
        }
        values = next;
    }
}

Surface lls_cross_cov(const PartialSample& data, std::size_t j, std::size_t k, double h, const GridPtr& out,
                      const PairOptions& options) {
    check_pair(data, j, k);
    OpCounts counts;
    const Kernel kernel(options.kernel, h);
    const auto vars = pair_variables(j, k);
    const TableSet tables(data, kernel, *out, vars, counts);
    PairResult r = smooth_pair(data, j, k, tables, *out, h, options.include_diagonal, false, nullptr, counts);
    return Surface(out, out, std::move(r.sigma));
}

Surface lls_marginal_cov(const PartialSample& data, std::size_t j, double h, const GridPtr& out,
                         const PairOptions& options) {
    return lls_cross_cov(data, j, j, h, out, options);
}

Surface variance_surrogate(const PartialSample& data, std::size_t j, std::size_t k, const Surface& sigma_tilde,
                           double h, const GridPtr& out, const PairOptions& options) {
    check_pair(data, j, k);
    if (!same_grid(sigma_tilde.row_grid(), out) || !same_grid(sigma_tilde.col_grid(), out)) {
        throw ShapeError("smoothed surface must live on the output grid");
    }
    OpCounts counts;
    const Kernel kernel(options.kernel, h);
    const auto vars = pair_variables(j, k);
    const TableSet tables(data, kernel, *out, vars, counts);
    const Eigen::MatrixXd given = sigma_tilde.values();
    PairResult r = smooth_pair(data, j, k, tables, *out, h, options.include_diagonal, true, &given, counts);
    return Surface(out, out, std::move(r.psi));
}

double SmoothingOptions::bandwidth(std::size_t j, std::size_t k) const {
    const auto key = std::make_pair(std::min(j, k), std::max(j, k));
    if (auto it = pair_bandwidths.find(key); it != pair_bandwidths.end()) {
        return it->second;
    }
    return j == k ? h_marginal : h_cross;
}

SmoothedCovariance smooth_covariance(const PartialSample& data, const GridPtr& out, const SmoothingOptions& options) {
    const std::size_t p = data.p();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            pairs.emplace_back(j, k);
        }
    }

    OpCounts counts;
    std::vector<std::size_t> all_vars(p);
    for (std::size_t j = 0; j < p; ++j) {
        all_vars[j] = j;
    }
    std::map<double, std::unique_ptr<TableSet>> tables;
    for (const auto& [j, k] : pairs) {
        const double h = options.bandwidth(j, k);
        if (!tables.contains(h)) {
            tables.emplace(h, std::make_unique<TableSet>(data, Kernel(options.kernel, h), *out, all_vars, counts));
        }
    }

    CovField sigma(p, out);
    CovField psi(p, out);
    std::vector<PairDiagnostics> diagnostics(pairs.size());
    const int workers = options.threads <= 0 ? default_threads() : options.threads;
    std::vector<OpCounts> worker_counts(static_cast<std::size_t>(std::max(workers, 1)));

    parallel_for(workers, pairs.size(), [&](std::size_t worker, std::size_t begin, std::size_t end) {
        for (std::size_t q = begin; q < end; ++q) {
            const auto [j, k] = pairs[q];
            const double h = options.bandwidth(j, k);
            PairResult r = smooth_pair(data, j, k, *tables.at(h), *out, h, false, options.with_variance, nullptr,
                                       worker_counts[worker]);
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

DenseSample presmooth_curves(const PartialSample& data, double h, const GridPtr& out, KernelKind kernel_kind) {
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    const std::size_t R = out->size();
    const Kernel kernel(kernel_kind, h);
    OpCounts counts;
    std::vector<std::size_t> all_vars(p);
    for (std::size_t j = 0; j < p; ++j) {
        all_vars[j] = j;
    }
    const TableSet tables(data, kernel, *out, all_vars, counts);

    Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p * R));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const CurveTable& t = tables.get(i, j);
            const auto z = data.values(i, j);
            Eigen::VectorXd curve(static_cast<Eigen::Index>(R));
            for (std::size_t r = 0; r < R; ++r) {
                const auto ri = static_cast<Eigen::Index>(r);
                double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
                for (std::size_t l = 0; l < z.size(); ++l) {
                    const auto li = static_cast<Eigen::Index>(l);
                    const double k = t.weight(ri, li);
                    const double d = t.offset(ri, li);
                    s0 += k;
                    s1 += k * d;
                    s2 += k * d * d;
                    t0 += k * z[l];
                    t1 += k * d * z[l];
                }
                curve(ri) = local_linear_value(s0, s1, s2, t0, t1);
            }
            fill_missing(curve);
            values.row(static_cast<Eigen::Index>(i)).segment(static_cast<Eigen::Index>(j * R),
                                                             static_cast<Eigen::Index>(R)) = curve.transpose();
        }
    }
    return DenseSample(n, p, out, std::move(values));
}

double local_linear_value(double s0, double s1, double s2, double t0, double t1) {
    if (!(s0 > 0.0)) {
        return kMissing;
    }
    const double den = s2 * s0 - s1 * s1;
    if (!(std::abs(den) >= kSingularRelative * s0 * s2) || den == 0.0) {
        return t0 / s0;
    }
    return (s2 * t0 - s1 * t1) / den;
}

PartialSample center_partial(const PartialSample& data, double h, KernelKind kernel_kind) {
    constexpr std::size_t kMeanGrid = 201;
    const Kernel kernel(kernel_kind, h);
    const Grid grid = Grid::uniform(kMeanGrid);
    std::vector<Eigen::VectorXd> means(data.p());
    for (std::size_t j = 0; j < data.p(); ++j) {
        Eigen::VectorXd mu(static_cast<Eigen::Index>(kMeanGrid));
        for (std::size_t r = 0; r < kMeanGrid; ++r) {
            const double u = grid.point(r);
            double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
            for (std::size_t i = 0; i < data.n(); ++i) {
                const auto loc = data.locations(i, j);
                const auto z = data.values(i, j);
                for (std::size_t l = 0; l < z.size(); ++l) {
                    const double d = loc[l] - u;
                    const double k = kernel(d);
                    s0 += k;
                    s1 += k * d;
                    s2 += k * d * d;
                    t0 += k * z[l];
                    t1 += k * d * z[l];
                }
            }
            mu(static_cast<Eigen::Index>(r)) = local_linear_value(s0, s1, s2, t0, t1);
        }
        fill_missing(mu);
        means[j] = std::move(mu);
    }
    const double step = 1.0 / static_cast<double>(kMeanGrid - 1);
    return data.transformed([&](std::size_t, std::size_t j, std::size_t, double u, double z) {
        const double pos = u / step;
        const auto r = std::min<std::size_t>(static_cast<std::size_t>(pos), kMeanGrid - 2);
        const double frac = pos - static_cast<double>(r);
        const auto ri = static_cast<Eigen::Index>(r);
        return z - ((1.0 - frac) * means[j](ri) + frac * means[j](ri + 1));
    });
}

}
