#include "fthresh/errors.hpp"
#include "fthresh/simgen.hpp"
#include "fthresh/smooth.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace fthresh;

namespace {

double gauss(double x, double h) {
    const double t = x / h;
    if (std::abs(t) > 5.0) {
        return 0.0;
    }
    return std::exp(-0.5 * t * t) / (h * std::sqrt(2.0 * std::numbers::pi));
}

// Generic weighted least squares of y on (1, du, dv); returns the intercept.
double wls_intercept(const std::vector<double>& du, const std::vector<double>& dv, const std::vector<double>& g,
                     const std::vector<double>& y) {
    Eigen::Matrix3d xtx = Eigen::Matrix3d::Zero();
    Eigen::Vector3d xty = Eigen::Vector3d::Zero();
    for (std::size_t q = 0; q < y.size(); ++q) {
        const Eigen::Vector3d x(1.0, du[q], dv[q]);
        xtx += g[q] * x * x.transpose();
        xty += g[q] * y[q] * x;
    }
    return xtx.fullPivLu().solve(xty)(0);
}

// Direct LLS at one output point, assembled from every raw product.
double oracle_lls(const PartialSample& d, std::size_t j, std::size_t k, double h, double u, double v,
                  bool include_diagonal) {
    std::vector<double> du, dv, g, y;
    for (std::size_t i = 0; i < d.n(); ++i) {
        const auto lj = d.locations(i, j), lk = d.locations(i, k);
        const auto zj = d.values(i, j), zk = d.values(i, k);
        for (std::size_t l = 0; l < lj.size(); ++l) {
            for (std::size_t m = 0; m < lk.size(); ++m) {
                if (j == k && l == m && !include_diagonal) {
                    continue;
                }
                const double w = gauss(lj[l] - u, h) * gauss(lk[m] - v, h);
                if (w == 0.0) {
                    continue;
                }
                du.push_back(lj[l] - u);
                dv.push_back(lk[m] - v);
                g.push_back(w);
                y.push_back(zj[l] * zk[m]);
            }
        }
    }
    return wls_intercept(du, dv, g, y);
}

// Variance surrogate transcribed from its defining sums, with W taken as the first row of the inverse moment matrix.
double oracle_psi(const PartialSample& d, std::size_t j, std::size_t k, double h, double u, double v, double sigma) {
    const std::size_t n = d.n();
    std::vector<Eigen::Matrix<double, 6, 1>> s(n);
    std::vector<Eigen::Vector3d> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i].setZero();
        t[i].setZero();
        const auto lj = d.locations(i, j), lk = d.locations(i, k);
        const auto zj = d.values(i, j), zk = d.values(i, k);
        for (std::size_t l = 0; l < lj.size(); ++l) {
            for (std::size_t m = 0; m < lk.size(); ++m) {
                if (j == k && l == m) {
                    continue;
                }
                const double a = lj[l] - u, b = lk[m] - v;
                const double w = gauss(a, h) * gauss(b, h);
                s[i] += w * (Eigen::Matrix<double, 6, 1>() << 1.0, a, b, a * a, a * b, b * b).finished();
                t[i] += w * zj[l] * zk[m] * Eigen::Vector3d(1.0, a, b);
            }
        }
    }
    Eigen::Matrix<double, 6, 1> st = Eigen::Matrix<double, 6, 1>::Zero();
    for (const auto& x : s) {
        st += x;
    }
    Eigen::Matrix3d m;
    m << st(0), st(1), st(2), st(1), st(3), st(4), st(2), st(4), st(5);
    const Eigen::Vector3d w = m.inverse().row(0).transpose();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = static_cast<double>(d.count(i, j)), b = static_cast<double>(d.count(i, k));
        num += a * b;
        den += a * b / (h * h) + a * a * b / h + a * b * b / h + a * a * b * b;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d vv(t[i](0) - sigma * s[i](0), t[i](1) - sigma * s[i](1), t[i](2) - sigma * s[i](2));
        const double q = w.dot(vv);
        sum += q * q;
    }
    return num * num / den * sum;
}

PartialSample random_partial(SplitMix64& gen, std::size_t n, std::size_t p, std::size_t L) {
    std::vector<std::vector<double>> locs(n);
    std::vector<Eigen::MatrixXd> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        locs[i].resize(L);
        vals[i].resize(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(p));
        const Eigen::MatrixXd coef = test::random_matrix(gen, 3, static_cast<Eigen::Index>(p));
        for (std::size_t l = 0; l < L; ++l) {
            const double u = uniform01(gen);
            locs[i][l] = u;
            for (std::size_t j = 0; j < p; ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                vals[i](static_cast<Eigen::Index>(l), jj) = coef(0, jj) + coef(1, jj) * std::sin(2.0 * std::numbers::pi * u) +
                                                            coef(2, jj) * std::cos(2.0 * std::numbers::pi * u) +
                                                            0.3 * standard_normal(gen);
            }
        }
    }
    return PartialSample::simplified(std::move(locs), vals);
}

}

TEST_CASE("bandwidth defaults") {
    CHECK(default_bandwidth(100, 1.0, Design::Sparse, 1.0) == doctest::Approx(0.4642).epsilon(1e-4));
    CHECK(default_bandwidth(100, 51.0, Design::Dense, 1.0) == doctest::Approx(0.1245).epsilon(1e-3));
    CHECK(default_bandwidth(100, 1.0, Design::VeryDense, 1.0) == doctest::Approx(0.3162).epsilon(1e-4));
    CHECK(default_bandwidth(100, 1.0, Design::Sparse, 0.5) == doctest::Approx(0.5 * std::pow(100.0, -1.0 / 6.0)));
    CHECK_THROWS_AS(default_bandwidth(100, 1.0, Design::Sparse, 0.0), ParameterError);
    CHECK_THROWS_AS(default_bandwidth(100, 1.0, Design::Sparse, 1.5), ParameterError);
    CHECK(parse_design("very-dense") == Design::VeryDense);
    CHECK_THROWS_AS(parse_design("medium"), ParameterError);
}

TEST_CASE("rate I_jk") {
    const std::vector<std::size_t> two = {2, 2};
    CHECK(rate_Ijk(two, two, 0.5) == doctest::Approx(0.5).epsilon(1e-15));

    // Very wide bandwidth with equal counts tends to n.
    const std::vector<std::size_t> eq(7, 5);
    CHECK(rate_Ijk(eq, eq, 1e9) == doctest::Approx(7.0).epsilon(1e-6));

    // Narrow bandwidth with bounded counts tends to sum L_j L_k h^2.
    const std::vector<std::size_t> a = {2, 3, 5, 4}, b = {3, 3, 2, 6};
    double simple = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        simple += static_cast<double>(a[i] * b[i]);
    }
    double prev_gap = 1.0;
    for (double h : {1e-2, 1e-3, 1e-4}) {
        const double gap = std::abs(rate_Ijk(a, b, h) / (simple * h * h) - 1.0);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 1e-3);
}

TEST_CASE("closed-form weights match a generic least-squares solve") {
    SplitMix64 gen(31);
    for (int c = 0; c < 200; ++c) {
        const std::size_t m = 5 + uniform_index(gen, 40);
        const double h = 0.05 + 0.3 * uniform01(gen);
        std::vector<double> du(m), dv(m), g(m), y(m);
        double s00 = 0, s10 = 0, s01 = 0, s20 = 0, s11 = 0, s02 = 0, t00 = 0, t10 = 0, t01 = 0;
        for (std::size_t q = 0; q < m; ++q) {
            du[q] = 2.0 * h * standard_normal(gen);
            dv[q] = 2.0 * h * standard_normal(gen);
            g[q] = gauss(du[q], h) * gauss(dv[q], h) + 1e-6;
            y[q] = standard_normal(gen);
            s00 += g[q];
            s10 += g[q] * du[q];
            s01 += g[q] * dv[q];
            s20 += g[q] * du[q] * du[q];
            s11 += g[q] * du[q] * dv[q];
            s02 += g[q] * dv[q] * dv[q];
            t00 += g[q] * y[q];
            t10 += g[q] * du[q] * y[q];
            t01 += g[q] * dv[q] * y[q];
        }
        const LocalLinearWeights w = local_linear_weights(s00, s10, s01, s20, s11, s02);
        REQUIRE(w.status == WeightStatus::Regular);
        const double closed = w.w1 * t00 + w.w2 * t10 + w.w3 * t01;
        const double direct = wls_intercept(du, dv, g, y);
        CHECK(std::abs(closed - direct) <= 1e-8 * std::max(std::abs(direct), 1e-3));
    }
}

TEST_CASE("weights fall back on singular and empty windows") {
    // Every point at the same offset: only a constant is identifiable.
    const LocalLinearWeights single = local_linear_weights(2.0, 0.2, 0.4, 0.02, 0.04, 0.08);
    CHECK(single.status == WeightStatus::LocalConstant);
    CHECK(single.w1 == 0.5);
    CHECK(local_linear_weights(0.0, 0, 0, 0, 0, 0).status == WeightStatus::Empty);
    CHECK(std::isnan(local_linear_value(0.0, 0, 0, 0, 0)));
    CHECK(local_linear_value(2.0, 0.2, 0.02, 3.0, 0.3) == 1.5);
}

TEST_CASE("LLS surfaces match the direct least-squares oracle") {
    SplitMix64 gen(41);
    auto out = make_uniform_grid(9);
    for (int t = 0; t < 3; ++t) {
        const PartialSample d = random_partial(gen, 12, 3, 6);
        const double h = 0.15 + 0.1 * t;
        const Surface cross = lls_cross_cov(d, 0, 2, h, out);
        const Surface marg = lls_marginal_cov(d, 1, h, out);
        PairOptions diag;
        diag.include_diagonal = true;
        const Surface with_diag = lls_cross_cov(d, 1, 1, h, out, diag);
        const double scale = cross.values().cwiseAbs().maxCoeff() + marg.values().cwiseAbs().maxCoeff();
        for (std::size_t a = 0; a < 9; ++a) {
            for (std::size_t b = 0; b < 9; ++b) {
                const double u = out->point(a), v = out->point(b);
                const auto ai = static_cast<Eigen::Index>(a), bi = static_cast<Eigen::Index>(b);
                CHECK(std::abs(cross(ai, bi) - oracle_lls(d, 0, 2, h, u, v, false)) <= 1e-8 * scale);
                CHECK(std::abs(marg(ai, bi) - oracle_lls(d, 1, 1, h, u, v, false)) <= 1e-8 * scale);
                CHECK(std::abs(with_diag(ai, bi) - oracle_lls(d, 1, 1, h, u, v, true)) <= 1e-8 * scale);
            }
        }
        CHECK(marg.values() == marg.values().transpose());
    }
}

TEST_CASE("subject-constant products give a weighted moment") {
    SplitMix64 gen(43);
    std::vector<std::vector<double>> locs(15);
    std::vector<Eigen::MatrixXd> vals(15);
    const double bj = 1.5, bk = -0.7;
    for (std::size_t i = 0; i < 15; ++i) {
        const double a = standard_normal(gen);
        locs[i].resize(8);
        vals[i].resize(8, 2);
        for (std::size_t l = 0; l < 8; ++l) {
            locs[i][l] = uniform01(gen);
            vals[i](static_cast<Eigen::Index>(l), 0) = a * bj;
            vals[i](static_cast<Eigen::Index>(l), 1) = a * bk;
        }
    }
    const PartialSample d = PartialSample::simplified(std::move(locs), vals);
    auto out = make_uniform_grid(7);
    const Surface s = lls_cross_cov(d, 0, 1, 0.25, out);
    for (std::size_t a = 0; a < 7; ++a) {
        for (std::size_t b = 0; b < 7; ++b) {
            const double o = oracle_lls(d, 0, 1, 0.25, out->point(a), out->point(b), false);
            CHECK(std::abs(s(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) - o) <= 1e-8 * std::abs(o));
        }
    }
}

TEST_CASE("local-linear reproduction of planes") {
    SplitMix64 gen(47);
    auto out = make_uniform_grid(11);
    // Z_j = 1 and Z_k = 0.5 - 2 V give products on the plane 0.5 - 2 v.
    std::vector<std::vector<double>> locs(10);
    std::vector<Eigen::MatrixXd> vals(10);
    for (std::size_t i = 0; i < 10; ++i) {
        locs[i].resize(9);
        vals[i].resize(9, 2);
        for (std::size_t l = 0; l < 9; ++l) {
            const double u = uniform01(gen);
            locs[i][l] = u;
            vals[i](static_cast<Eigen::Index>(l), 0) = 1.0;
            vals[i](static_cast<Eigen::Index>(l), 1) = 0.5 - 2.0 * u;
        }
    }
    const PartialSample d = PartialSample::simplified(std::move(locs), vals);
    const Surface s01 = lls_cross_cov(d, 0, 1, 0.2, out);
    const Surface s10 = lls_cross_cov(d, 1, 0, 0.2, out);
    for (std::size_t a = 0; a < 11; ++a) {
        for (std::size_t b = 0; b < 11; ++b) {
            const auto ai = static_cast<Eigen::Index>(a), bi = static_cast<Eigen::Index>(b);
            CHECK(std::abs(s01(ai, bi) - (0.5 - 2.0 * out->point(b))) < 1e-8);
            CHECK(std::abs(s10(ai, bi) - (0.5 - 2.0 * out->point(a))) < 1e-8);
        }
    }

    // The closed form reproduces a plane exactly at any window.
    for (int c = 0; c < 50; ++c) {
        const double a0 = standard_normal(gen), b0 = standard_normal(gen), c0 = standard_normal(gen);
        double s00 = 0, s10 = 0, s01 = 0, s20 = 0, s11 = 0, s02 = 0, t00 = 0, t10 = 0, t01 = 0;
        for (int q = 0; q < 12; ++q) {
            const double du = standard_normal(gen), dv = standard_normal(gen), g = uniform01(gen) + 0.1;
            const double y = a0 + b0 * du + c0 * dv;
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
        const LocalLinearWeights w = local_linear_weights(s00, s10, s01, s20, s11, s02);
        CHECK(std::abs(w.w1 * t00 + w.w2 * t10 + w.w3 * t01 - a0) < 1e-10 * (1.0 + std::abs(a0)));
    }
}

TEST_CASE("variance surrogate matches its transcription on tiny instances") {
    SplitMix64 gen(53);
    auto out = make_uniform_grid(5);
    for (std::size_t L : {2, 3}) {
        const PartialSample d = random_partial(gen, 2, 2, L);
        const double h = 0.4;
        for (const auto& [j, k] : {std::pair<std::size_t, std::size_t>{0, 1}, {1, 1}}) {
            const Surface sigma = lls_cross_cov(d, j, k, h, out);
            const Surface psi = variance_surrogate(d, j, k, sigma, h, out);
            for (std::size_t a = 0; a < 5; ++a) {
                for (std::size_t b = 0; b < 5; ++b) {
                    const auto ai = static_cast<Eigen::Index>(a), bi = static_cast<Eigen::Index>(b);
                    const double o = oracle_psi(d, j, k, h, out->point(a), out->point(b), sigma(ai, bi));
                    CHECK(test::rel_diff(psi(ai, bi), o) < 1e-7);
                }
            }
        }
    }
}

TEST_CASE("variance surrogate vanishes on matching constant products and is nonnegative") {
    SplitMix64 gen(59);
    auto out = make_uniform_grid(6);
    std::vector<std::vector<double>> locs(6);
    std::vector<Eigen::MatrixXd> vals(6);
    for (std::size_t i = 0; i < 6; ++i) {
        locs[i].resize(5);
        vals[i].resize(5, 2);
        for (std::size_t l = 0; l < 5; ++l) {
            locs[i][l] = uniform01(gen);
            vals[i](static_cast<Eigen::Index>(l), 0) = 1.0;
            vals[i](static_cast<Eigen::Index>(l), 1) = 2.0;
        }
    }
    const PartialSample d = PartialSample::simplified(std::move(locs), vals);
    const Surface psi = variance_surrogate(d, 0, 1, Surface::constant(out, out, 2.0), 0.3, out);
    CHECK(psi.values().cwiseAbs().maxCoeff() < 1e-20);

    const PartialSample r = random_partial(gen, 30, 3, 7);
    SmoothingOptions opt;
    opt.h_cross = opt.h_marginal = 0.2;
    const SmoothedCovariance sc = smooth_covariance(r, out, opt);
    REQUIRE(sc.psi.has_value());
    CHECK(sc.psi->field().stacked().minCoeff() >= 0.0);
    CHECK(sc.sigma.stacked() == sc.sigma.stacked().transpose());
}

TEST_CASE("marginal smoothing ignores the nugget") {
    SplitMix64 gen(61);
    const std::size_t n = 60, L = 30;
    auto out = make_uniform_grid(11);
    std::vector<std::vector<double>> locs(n);
    std::vector<Eigen::MatrixXd> clean(n), eps(n);
    for (std::size_t i = 0; i < n; ++i) {
        locs[i].resize(L);
        clean[i].resize(static_cast<Eigen::Index>(L), 1);
        eps[i].resize(static_cast<Eigen::Index>(L), 1);
        const double a = standard_normal(gen), b = standard_normal(gen);
        for (std::size_t l = 0; l < L; ++l) {
            const double u = uniform01(gen);
            locs[i][l] = u;
            clean[i](static_cast<Eigen::Index>(l), 0) = a + b * std::sin(2.0 * std::numbers::pi * u);
            eps[i](static_cast<Eigen::Index>(l), 0) = standard_normal(gen);
        }
    }
    PairOptions diag;
    diag.include_diagonal = true;
    const double h = 0.06;

    // Noiseless: both variants estimate the same surface.
    const PartialSample d0 = PartialSample::simplified(locs, clean);
    const Surface m0 = lls_marginal_cov(d0, 0, h, out);
    const Surface c0 = lls_cross_cov(d0, 0, 0, h, out, diag);
    CHECK((m0.values() - c0.values()).cwiseAbs().maxCoeff() <= 0.05 * m0.values().cwiseAbs().maxCoeff());

    // Mean diagonal value against sigma^2 for sigma in {0, 5, 10}.
    std::vector<double> s2, marg, ctrl;
    for (double sigma : {0.0, 5.0, 10.0}) {
        std::vector<Eigen::MatrixXd> noisy(n);
        for (std::size_t i = 0; i < n; ++i) {
            noisy[i] = clean[i] + sigma * eps[i];
        }
        const PartialSample d = PartialSample::simplified(locs, noisy);
        s2.push_back(sigma * sigma);
        marg.push_back(lls_marginal_cov(d, 0, h, out).values().diagonal().mean());
        ctrl.push_back(lls_cross_cov(d, 0, 0, h, out, diag).values().diagonal().mean());
    }
    auto slope = [&](const std::vector<double>& y) {
        const double mx = (s2[0] + s2[1] + s2[2]) / 3.0, my = (y[0] + y[1] + y[2]) / 3.0;
        double num = 0.0, den = 0.0;
        for (int q = 0; q < 3; ++q) {
            num += (s2[q] - mx) * (y[q] - my);
            den += (s2[q] - mx) * (s2[q] - mx);
        }
        return num / den;
    };
    CHECK(std::abs(slope(marg)) < 0.1);
    CHECK(slope(ctrl) > 3.0 * std::abs(slope(marg)));
}

TEST_CASE("variance surrogate stays stable as n doubles") {
    auto out = make_uniform_grid(11);
    std::vector<double> medians;
    for (std::size_t n : {100, 200}) {
        SimSpec spec;
        spec.model = SimModel::Model1;
        spec.n = n;
        spec.p = 2;
        spec.grid = out;
        spec.seed = 77;
        spec.partial = PartialDesign{};
        const PartialSimulation sim = simulate_partial(spec);
        SmoothingOptions opt;
        opt.h_cross = opt.h_marginal = default_bandwidth(n, 11.0, Design::Sparse, 0.3);
        const SmoothedCovariance sc = smooth_covariance(sim.data, out, opt);
        Eigen::MatrixXd block = sc.psi->field().block(0, 1);
        std::vector<double> v(block.data(), block.data() + block.size());
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
        medians.push_back(v[v.size() / 2]);
    }
    const double ratio = medians[1] / medians[0];
    CHECK(ratio > 0.5);
    CHECK(ratio < 2.0);
}

TEST_CASE("pre-smoothing reproduces linear and constant curves") {
    SplitMix64 gen(67);
    auto out = make_uniform_grid(21);
    for (std::size_t L : {2, 5, 30}) {
        std::vector<std::vector<double>> locs(3);
        std::vector<Eigen::MatrixXd> vals(3);
        for (std::size_t i = 0; i < 3; ++i) {
            locs[i].resize(L);
            vals[i].resize(static_cast<Eigen::Index>(L), 2);
            for (std::size_t l = 0; l < L; ++l) {
                const double u = l == 0 ? 0.1 : (l == 1 ? 0.8 : uniform01(gen));
                locs[i][l] = u;
                vals[i](static_cast<Eigen::Index>(l), 0) = 2.0 * u;
                vals[i](static_cast<Eigen::Index>(l), 1) = -1.25;
            }
        }
        const PartialSample d = PartialSample::simplified(std::move(locs), vals);
        const DenseSample x = presmooth_curves(d, 0.3, out);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t r = 0; r < 21; ++r) {
                CHECK(std::abs(x(i, 0, r) - 2.0 * out->point(r)) < 1e-8);
                CHECK(std::abs(x(i, 1, r) + 1.25) < 1e-12);
            }
        }
    }
}

TEST_CASE("per-pair bandwidth overrides and diagnostics") {
    SplitMix64 gen(71);
    auto out = make_uniform_grid(7);
    const PartialSample d = random_partial(gen, 20, 3, 6);
    SmoothingOptions opt;
    opt.h_cross = 0.2;
    opt.h_marginal = 0.25;
    opt.pair_bandwidths[{0, 2}] = 0.35;
    CHECK(opt.bandwidth(2, 0) == 0.35);
    CHECK(opt.bandwidth(1, 1) == 0.25);
    CHECK(opt.bandwidth(0, 1) == 0.2);
    const SmoothedCovariance sc = smooth_covariance(d, out, opt);
    for (const auto& pd : sc.pairs) {
        CHECK(pd.bandwidth == opt.bandwidth(pd.j, pd.k));
    }
    const Eigen::MatrixXd direct = lls_cross_cov(d, 0, 2, 0.35, out).values();
    CHECK(sc.sigma.block(0, 2) == direct);
    CHECK(sc.counts.kernel_evals > 0);

    std::vector<std::vector<double>> locs = {{0.5}, {0.3}};
    std::vector<Eigen::MatrixXd> vals = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
    CHECK_THROWS(lls_marginal_cov(PartialSample::simplified(locs, vals), 0, 0.2, out));
}
