#include "fthresh/errors.hpp"
#include "fthresh/threshold.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace fthresh;

namespace {

const ThresholdRule kRules[] = {ThresholdRule::hard(), ThresholdRule::soft(), ThresholdRule::scad(3.7),
                                ThresholdRule::adaptive_lasso(3.0)};

double max_abs_diff(const Surface& a, const Surface& b) { return (a.values() - b.values()).cwiseAbs().maxCoeff(); }

}

TEST_CASE("rule examples on constant surfaces") {
    auto g = make_uniform_grid(21);
    const Surface two = Surface::constant(g, g, 2.0);
    const Surface three = Surface::constant(g, g, 3.0);

    const Surface soft = apply_threshold(two, 0.5, ThresholdRule::soft());
    CHECK(max_abs_diff(soft, Surface::constant(g, g, 1.5)) < 1e-12);

    const double scad_expect = 3.0 * (2.7 - 3.7 / 3.0) / 1.7;
    CHECK(scad_expect == doctest::Approx(2.5882).epsilon(1e-4));
    const Surface scad = apply_threshold(three, 1.0, ThresholdRule::scad(3.7));
    CHECK(max_abs_diff(scad, Surface::constant(g, g, scad_expect)) < 1e-12);

    const Surface al = apply_threshold(two, 1.0, ThresholdRule::adaptive_lasso(3.0));
    CHECK(max_abs_diff(al, Surface::constant(g, g, 1.875)) < 1e-12);

    const Surface hard = apply_threshold(two, 1.0, ThresholdRule::hard());
    CHECK(hard.values() == two.values());

    for (const auto& rule : kRules) {
        const Surface z = apply_threshold(two, 2.5, rule);
        CHECK(z.values().cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("shrinkage factor examples") {
    CHECK(shrinkage_factor(0.0, 1.0, ThresholdRule::soft()) == 0.0);
    CHECK(shrinkage_factor(5.0, 1.0, ThresholdRule::scad(3.7)) == 1.0);
    CHECK(shrinkage_factor(2.0, 1.0, ThresholdRule::adaptive_lasso(0.0)) == doctest::Approx(0.5).epsilon(1e-15));
    // Equality with lambda zeroes every rule, hard included.
    for (const auto& rule : kRules) {
        CHECK(shrinkage_factor(1.0, 1.0, rule) == 0.0);
        CHECK(shrinkage_factor(1.0, 0.0, rule) == 1.0);
    }
}

TEST_CASE("rule parameters and parsing") {
    CHECK_THROWS_AS(ThresholdRule::scad(2.0), ParameterError);
    CHECK_THROWS_AS(ThresholdRule::adaptive_lasso(-0.5), ParameterError);
    CHECK_THROWS_AS(ThresholdRule::parse("lasso"), ParameterError);
    CHECK_THROWS_AS(ThresholdRule::parse("scad:a=1.5"), ParameterError);
    CHECK(ThresholdRule::parse("hard") == ThresholdRule::hard());
    CHECK(ThresholdRule::parse("soft") == ThresholdRule::soft());
    CHECK(ThresholdRule::parse("scad") == ThresholdRule::scad());
    CHECK(ThresholdRule::parse("scad:a=3.7") == ThresholdRule::scad(3.7));
    CHECK(ThresholdRule::parse("al:eta=3") == ThresholdRule::adaptive_lasso(3.0));
    CHECK(ThresholdRule::parse("adaptive-lasso") == ThresholdRule::adaptive_lasso());
    for (const auto& rule : kRules) {
        CHECK(ThresholdRule::parse(rule.to_string()) == rule);
    }
    auto g = make_uniform_grid(5);
    CHECK_THROWS_AS(apply_threshold(Surface::zeros(g, g), -1.0, ThresholdRule::soft()), ParameterError);
}

TEST_CASE("zeroing and bounded shrinkage on random surfaces") {
    SplitMix64 gen(101);
    for (int t = 0; t < 300; ++t) {
        auto g = make_uniform_grid(5 + uniform_index(gen, 12));
        const Surface z = test::random_surface(gen, g, 0.1 + 3.0 * uniform01(gen));
        const double norm = hs_norm(z);
        const double lambda = 2.0 * norm * uniform01(gen);
        for (const auto& rule : kRules) {
            const Surface s = apply_threshold(z, lambda, rule);
            if (norm <= lambda) {
                CHECK(hs_norm(s) == 0.0);
            }
            const Surface diff(g, g, s.values() - z.values());
            CHECK(hs_norm(diff) <= lambda + 1e-10);
        }
    }
}

TEST_CASE("adaptive lasso with eta zero is soft") {
    SplitMix64 gen(7);
    for (int t = 0; t < 200; ++t) {
        auto g = make_uniform_grid(9);
        const Surface z = test::random_surface(gen, g);
        const double lambda = 1.5 * hs_norm(z) * uniform01(gen);
        const Surface a = apply_threshold(z, lambda, ThresholdRule::adaptive_lasso(0.0));
        const Surface s = apply_threshold(z, lambda, ThresholdRule::soft());
        CHECK(max_abs_diff(a, s) <= 1e-12);
    }
}

TEST_CASE("bounded amplification over sampled neighbours") {
    SplitMix64 gen(19);
    const std::pair<ThresholdRule, double> cases[] = {
        {ThresholdRule::soft(), 1.0}, {ThresholdRule::scad(3.7), 2.0}, {ThresholdRule::adaptive_lasso(3.0), 4.0}};
    for (int t = 0; t < 50; ++t) {
        auto g = make_uniform_grid(7);
        const Surface z = test::random_surface(gen, g);
        const double lambda = 1.5 * hs_norm(z) * uniform01(gen);
        for (const auto& [rule, c] : cases) {
            const double out = hs_norm(apply_threshold(z, lambda, rule));
            for (int s = 0; s < 20; ++s) {
                Surface d = test::random_surface(gen, g);
                d = d.scaled(lambda * uniform01(gen) / hs_norm(d));
                const Surface y(g, g, z.values() + d.values());
                CHECK(out <= c * hs_norm(y) + 1e-10);
            }
        }
    }
}

TEST_CASE("shrinkage factor is monotone and in [0, 1]") {
    for (const auto& rule : kRules) {
        double prev = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double hs = 0.005 * i;
            const double c = shrinkage_factor(hs, 1.5, rule);
            CHECK(c >= 0.0);
            CHECK(c <= 1.0);
            CHECK(c >= prev - 1e-15);
            prev = c;
        }
    }
}

TEST_CASE("sup norm selector") {
    auto g = make_uniform_grid(11);
    Eigen::MatrixXd spike = Eigen::MatrixXd::Zero(11, 11);
    spike(5, 5) = 4.0;
    const Surface z(g, g, spike);
    // Small HS norm, large sup norm.
    CHECK(hs_norm(z) < 1.0);
    CHECK(apply_threshold(z, 1.0, ThresholdRule::hard()).values().cwiseAbs().maxCoeff() == 0.0);
    CHECK(apply_threshold(z, 1.0, ThresholdRule::hard(), NormKind::Supremum).values() == spike);
    CHECK(surface_norm(z, NormKind::Supremum) == 4.0);
}
