#include "fthresh/binned.hpp"
#include "fthresh/errors.hpp"
#include "fthresh/full_cov.hpp"
#include "fthresh/simgen.hpp"
#include "fthresh/tuning.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace fthresh;

namespace {

// Independent variables: every off-diagonal covariance is zero.
DenseSample independent_sample(SplitMix64& gen, std::size_t n, std::size_t p, const GridPtr& g) {
    const auto R = static_cast<Eigen::Index>(g->size());
    Eigen::MatrixXd v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p) * R);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const double a = standard_normal(gen), b = standard_normal(gen);
            for (Eigen::Index r = 0; r < R; ++r) {
                const double u = g->point(static_cast<std::size_t>(r));
                v(i, static_cast<Eigen::Index>(j) * R + r) = a + b * u;
            }
        }
    }
    return DenseSample(n, p, g, v);
}

FullSimulation model1(std::size_t n, std::size_t p, std::uint64_t seed) {
    SimSpec spec;
    spec.model = SimModel::Model1;
    spec.n = n;
    spec.p = p;
    spec.grid = make_uniform_grid(11);
    spec.seed = seed;
    return simulate_full(spec);
}

SupportMask mask(std::initializer_list<std::initializer_list<int>> rows) {
    const auto p = static_cast<Eigen::Index>(rows.size());
    SupportMask m(p, p);
    Eigen::Index j = 0;
    for (const auto& row : rows) {
        Eigen::Index k = 0;
        for (int x : row) {
            m(j, k++) = x != 0;
        }
        ++j;
    }
    return m;
}

}

TEST_CASE("split sizes") {
    CHECK(split_sizes(100) == std::pair<std::size_t, std::size_t>{78, 22});
    CHECK(split_sizes(5) == std::pair<std::size_t, std::size_t>{2, 3});
    CHECK_THROWS_AS(split_sizes(4), ConfigError);
    CHECK_THROWS_AS(split_sizes(3), ConfigError);
    for (std::size_t n = 5; n < 300; ++n) {
        const auto [a, b] = split_sizes(n);
        CHECK(a + b == n);
        CHECK(a == static_cast<std::size_t>(std::llround(n * (1.0 - 1.0 / std::log(static_cast<double>(n))))));
    }
}

TEST_CASE("random splits partition the subjects") {
    const auto splits = make_splits(50, 5, 9);
    REQUIRE(splits.size() == 5);
    for (const auto& s : splits) {
        CHECK(s.train.size() == split_sizes(50).first);
        std::set<std::size_t> all(s.train.begin(), s.train.end());
        all.insert(s.test.begin(), s.test.end());
        CHECK(all.size() == 50);
        CHECK(*all.rbegin() == 49);
    }
    CHECK(make_splits(50, 5, 9)[3].test == splits[3].test);
    CHECK(make_splits(50, 5, 10)[3].test != splits[3].test);
    CHECK(splits[0].test != splits[1].test);
}

TEST_CASE("fast validation error equals brute-force differencing") {
    const auto sim = model1(40, 6, 3);
    const DenseFitter fitter(sim.data);
    const PreparedCV cv(fitter, 4, 21);
    for (auto standardization : {Standardization::Adaptive, Standardization::Universal}) {
        for (const auto& rule : {ThresholdRule::hard(), ThresholdRule::soft(), ThresholdRule::scad(),
                                 ThresholdRule::adaptive_lasso()}) {
            for (bool keep : {false, true}) {
                ThresholdSpec spec{standardization, rule, NormKind::HilbertSchmidt, keep};
                const auto grid = cv.auto_grid(spec, 12);
                CHECK(grid.size() == 12);
                CHECK(grid.front() == 0.0);
                CHECK(grid.back() == cv.max_decision_norm(spec));
                const CVResult r = cv.evaluate(spec, grid);
                for (std::size_t g = 0; g < grid.size(); ++g) {
                    double mean = 0.0;
                    for (std::size_t v = 0; v < cv.split_count(); ++v) {
                        mean += cv.direct_error(v, spec, grid[g]);
                    }
                    mean /= static_cast<double>(cv.split_count());
                    CHECK(test::rel_diff(r.mean_err[g], mean) < 1e-9);
                }
                const auto best = std::min_element(r.mean_err.begin(), r.mean_err.end());
                CHECK(r.mean_err[static_cast<std::size_t>(std::find(r.lambdas.begin(), r.lambdas.end(), r.lambda) -
                                                          r.lambdas.begin())] == *best);
            }
        }
    }
}

TEST_CASE("lambda grid edge cases") {
    const auto sim = model1(30, 4, 4);
    const DenseFitter fitter(sim.data);
    CVConfig cfg;
    cfg.lambda_grid = {0.7};
    CHECK(cv_select_lambda(fitter, cfg).lambda == 0.7);
    cfg.lambda_grid = {0.5, 0.4};
    CHECK_THROWS_AS(cv_select_lambda(fitter, cfg), ConfigError);
    cfg.lambda_grid = {-1.0, 0.4};
    CHECK_THROWS_AS(cv_select_lambda(fitter, cfg), ConfigError);
    cfg.lambda_grid.clear();
    cfg.auto_grid_size = 20;
    const CVResult r = cv_select_lambda(fitter, cfg);
    CHECK(r.lambdas.size() == 20);
    CHECK(r.mean_err.size() == 20);
    CHECK(r.se.size() == 20);
}

TEST_CASE("zero off-diagonal truth selects the largest level") {
    SplitMix64 gen(6);
    auto g = make_uniform_grid(9);
    const DenseSample d = independent_sample(gen, 60, 5, g);
    const DenseFitter fitter(d);
    const PreparedCV cv(fitter, 5, 2);
    ThresholdSpec spec;
    spec.keep_diagonal = true;
    const double top = cv.max_decision_norm(spec);
    const std::vector<double> grid = {0.0, 0.5 * top, 1.5 * top, 2.0 * top};
    const CVResult r = cv.evaluate(spec, grid);
    CHECK(r.lambda == 2.0 * top);
    CHECK(r.mean_err[2] == r.mean_err[3]);
    // Exhaustive scoring agrees.
    std::vector<double> brute(grid.size(), 0.0);
    for (std::size_t q = 0; q < grid.size(); ++q) {
        for (std::size_t v = 0; v < cv.split_count(); ++v) {
            brute[q] += cv.direct_error(v, spec, grid[q]);
        }
    }
    CHECK(brute[3] <= *std::min_element(brute.begin(), brute.end()) * (1.0 + 1e-12));
}

TEST_CASE("all-zero fits give the grid {0}") {
    auto g = make_uniform_grid(5);
    Eigen::MatrixXd same(10, 10);
    for (Eigen::Index i = 0; i < 10; ++i) {
        same.row(i) = Eigen::RowVectorXd::LinSpaced(10, 0.0, 1.0);
    }
    const DenseFitter fitter(DenseSample(10, 2, g, same));
    const PreparedCV cv(fitter, 2, 1);
    ThresholdSpec spec;
    spec.standardization = Standardization::Universal;
    CHECK(cv.auto_grid(spec, 150) == std::vector<double>{0.0});
}

TEST_CASE("error curve is invariant to subject order given matching splits") {
    const auto sim = model1(30, 4, 8);
    const auto splits = make_splits(30, 3, 5);
    SplitMix64 gen(1);
    const auto perm = random_permutation(gen, 30);  // new position q holds old subject perm[q]
    std::vector<std::size_t> where(30);
    for (std::size_t q = 0; q < 30; ++q) {
        where[perm[q]] = q;
    }
    std::vector<Split> moved;
    for (const auto& s : splits) {
        Split m;
        for (auto i : s.train) {
            m.train.push_back(where[i]);
        }
        for (auto i : s.test) {
            m.test.push_back(where[i]);
        }
        moved.push_back(std::move(m));
    }
    const DenseFitter a(sim.data);
    const DenseFitter b(sim.data.subset(perm));
    ThresholdSpec spec;
    const std::vector<double> grid = {0.0, 0.5, 1.0, 2.0, 4.0};
    const CVResult ra = PreparedCV(a, splits).evaluate(spec, grid);
    const CVResult rb = PreparedCV(b, moved).evaluate(spec, grid);
    for (std::size_t q = 0; q < grid.size(); ++q) {
        CHECK(test::rel_diff(ra.mean_err[q], rb.mean_err[q]) < 1e-10);
    }
}

TEST_CASE("partial-data fitters run through cross-validation") {
    SimSpec spec;
    spec.model = SimModel::Model1;
    spec.n = 40;
    spec.p = 4;
    spec.grid = make_uniform_grid(11);
    spec.seed = 12;
    spec.partial = PartialDesign{};
    const auto sim = simulate_partial(spec);
    SmoothingOptions opt;
    opt.h_cross = opt.h_marginal = 0.15;
    const BinnedFitter binned(linear_bin(sim.data, spec.grid), opt);
    const SmoothFitter direct(sim.data, spec.grid, opt);
    CVConfig cfg;
    cfg.splits = 2;
    cfg.auto_grid_size = 10;
    const CVResult rb = cv_select_lambda(binned, cfg);
    const CVResult rd = cv_select_lambda(direct, cfg);
    CHECK(rb.lambdas.size() == 10);
    CHECK(rd.lambdas.size() == 10);
    CHECK(std::all_of(rb.mean_err.begin(), rb.mean_err.end(), [](double e) { return std::isfinite(e) && e >= 0; }));
}

TEST_CASE("support metrics") {
    const SupportMask truth = mask({{1, 1, 0}, {1, 1, 0}, {0, 0, 1}});
    CHECK(support_metrics(truth, truth).tpr == 1.0);
    CHECK(support_metrics(truth, truth).fpr == 0.0);
    const SupportMask none = mask({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
    CHECK(support_metrics(none, truth).tpr == 0.0);
    CHECK(support_metrics(none, truth).fpr == 0.0);
    // 3 of 5 true nonzeros found, 2 of 4 true zeros flagged.
    const SupportMask est = mask({{1, 0, 1}, {0, 1, 0}, {1, 0, 1}});
    CHECK(support_metrics(est, truth).tpr == doctest::Approx(3.0 / 5.0));
    CHECK(support_metrics(est, truth).fpr == doctest::Approx(2.0 / 4.0));

    const SupportMask full = mask({{1, 1}, {1, 1}});
    CHECK(support_metrics(mask({{0, 0}, {0, 1}}), full).fpr == 0.0);
    const SupportMask empty = mask({{0, 0}, {0, 0}});
    CHECK(support_metrics(mask({{1, 0}, {0, 0}}), empty).tpr == 1.0);
    CHECK_THROWS_AS(support_metrics(full, truth), ShapeError);
}

TEST_CASE("ROC sweeps") {
    const auto sim = model1(40, 12, 14);
    const CovField s = sample_cov(sim.data);
    const VarianceField v = variance_factors(sim.data, s);
    const Eigen::MatrixXd norms = standardized_norms(s, v, NormKind::HilbertSchmidt);
    const SupportMask truth = nonzero_support(sim.truth);
    const auto levels = roc_levels(norms);
    CHECK(levels.front() == 0.0);
    CHECK(levels.back() > norms.maxCoeff());
    CHECK(std::is_sorted(levels.begin(), levels.end()));
    const auto curve = roc_sweep(norms, truth, levels);
    CHECK(curve.front().tpr == 1.0);
    CHECK(curve.front().fpr == 1.0);
    CHECK(curve.back().tpr == 0.0);
    CHECK(curve.back().fpr == 0.0);
    for (std::size_t q = 1; q < curve.size(); ++q) {
        CHECK(curve[q].tpr <= curve[q - 1].tpr);
        CHECK(curve[q].fpr <= curve[q - 1].fpr);
        CHECK(curve[q].tpr >= 0.0);
        CHECK(curve[q].fpr <= 1.0);
    }
    const auto kept = roc_sweep(norms, truth, levels, true);
    CHECK(kept.back().tpr > 0.0);

    const std::vector<RocPoint> hand = {{0.0, 1.0, 1.0}, {1.0, 0.8, 0.4}, {2.0, 0.4, 0.0}};
    CHECK(tpr_at_fpr(hand, 0.2) == doctest::Approx(0.6));
    CHECK(tpr_at_fpr(hand, 0.7) == doctest::Approx(0.9));
    CHECK(tpr_at_fpr(hand, 0.0) == doctest::Approx(0.4));
    CHECK(tpr_at_fpr(hand, 1.0) == doctest::Approx(1.0));
}
