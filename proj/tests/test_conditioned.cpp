#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "simlab/conditioned.hpp"
#include "simlab/levy_env.hpp"
#include "simlab/stats.hpp"

using namespace simlab;

namespace {
const LevyModel kDB05 = LevyModel::drifted_brownian(0.5);
}

TEST_CASE("conditioned path stays positive after the start and ends at the stop level") {
    for (int s = 0; s < 20; ++s) {
        const ConditionedPath p =
            sample_conditioned(kDB05, Direction::Up, 6.0, 0.01,
                               static_cast<std::uint64_t>(100 + s));
        REQUIRE(p.base.values.size() > 2);
        // Positivity holds strictly after time zero.
        const auto& v = p.base.values;
        CHECK(*std::min_element(v.begin() + 1, v.end()) > 0.0);
        CHECK(v.back() >= 6.0 - 1e-9);
        CHECK(v.back() <= 6.0 + 3.0 * std::sqrt(0.01) + 1.0);
    }
}

TEST_CASE("dual direction is the negated-draw construction, same law scale") {
    const ConditionedPath u =
        sample_conditioned(kDB05, Direction::Up, 5.0, 0.01, 41);
    const ConditionedPath d =
        sample_conditioned(kDB05, Direction::DualUp, 5.0, 0.01, 41);
    CHECK(u.base.values.size() > 2);
    CHECK(d.base.values.size() > 2);
    CHECK(d.base.values.back() >= 5.0 - 1e-9);
}

TEST_CASE("exp functional of a flat-start path is positive and finite") {
    const ConditionedPath p =
        sample_conditioned(kDB05, Direction::Up, 8.0, 0.01, 17);
    const double I = exp_functional(p);
    CHECK(I > 0.0);
    CHECK(std::isfinite(I));
}

TEST_CASE("mean of the upward functional matches 2/(1+kappa)") {
    const int n = 3000;
    const std::vector<double> xs =
        sample_exp_functional(kDB05, Direction::Up, n, 20.0, 0.008, 424242);
    const double m = stats::mean(xs);
    const double se = stats::std_error(xs);
    const double target = 2.0 / 1.5;
    CHECK(std::fabs(m - target) < std::max(3.0 * se, 0.05 * target));
}

TEST_CASE("up and dual-up functionals share a law for the symmetric drift case") {
    // Under the gaussian-cell model the dual of W_kappa-up is W_kappa-up of
    // the reflected drift, which for the functional comparison below uses the
    // same kappa; the two samplers must then agree in law.
    const int n = 2500;
    const std::vector<double> a =
        sample_exp_functional(kDB05, Direction::Up, n, 20.0, 0.01, 9001);
    const std::vector<double> b =
        sample_exp_functional(kDB05, Direction::DualUp, n, 20.0, 0.01, 9002);
    const auto ks = stats::ks_test(a, b);
    CHECK(ks.p > 0.01);
}

TEST_CASE("R samples are sums of two independent one-sided functionals") {
    const int n = 2500;
    const std::vector<double> r = sample_R(kDB05, n, 20.0, 0.01, 777);
    const std::vector<double> i1 =
        sample_exp_functional(kDB05, Direction::Up, n, 20.0, 0.01, 778);
    const std::vector<double> i2 =
        sample_exp_functional(kDB05, Direction::DualUp, n, 20.0, 0.01, 779);
    std::vector<double> sum(i1.size());
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = i1[i] + i2[i];
    const auto ks = stats::ks_test(r, sum);
    CHECK(ks.p > 0.01);
    CHECK(stats::mean(r) > stats::mean(i1));
}

TEST_CASE("laplace transform at zero is one, decreasing in lambda") {
    const std::vector<double> xs = {0.5, 1.0, 2.0, 3.0};
    CHECK(laplace_transform(xs, 0.0).value == doctest::Approx(1.0));
    CHECK(laplace_transform(xs, 1.0).value < 1.0);
    CHECK(laplace_transform(xs, 2.0).value < laplace_transform(xs, 1.0).value);
    CHECK(laplace_transform(xs, 1.0).std_err > 0.0);
}

TEST_CASE("left tail regression pins the amplitude at the requested quantile") {
    // Synthetic sample with survival-at-zero behavior P(X <= x) ~ exp(-2/x):
    // generate via inverse cdf on uniforms.
    Rng rng(88);
    std::vector<double> xs(20000);
    for (double& x : xs) x = 2.0 / (-std::log(rng.uniform01()));
    const LeftTailFit fit = left_tail_regression(xs, 1.0);
    CHECK(fit.n_tail_points >= 5);
    // -log P(X <= x) = 2/x means q = 1 in the A x^{-q} rate.
    CHECK(fit.exponent_hat == doctest::Approx(1.0).epsilon(0.25));
    CHECK(fit.amplitude_pinned == doctest::Approx(2.0).epsilon(0.35));
}

TEST_CASE("truncation level shifts change the functional by a vanishing amount") {
    const int n = 1500;
    const std::vector<double> lo =
        sample_exp_functional(kDB05, Direction::Up, n, 20.0, 0.01, 1234);
    const std::vector<double> hi =
        sample_exp_functional(kDB05, Direction::Up, n, 26.0, 0.01, 1235);
    // Both truncations are deep enough that the laws agree.
    const auto ks = stats::ks_test(lo, hi);
    CHECK(ks.p > 0.01);
}

TEST_CASE("stable model conditioned functional has the heavier left tail index") {
    const LevyModel st = LevyModel::stable_with_drift(1.5, 1.0, 1.0);
    const int n = 8000;
    const std::vector<double> xs =
        sample_exp_functional(st, Direction::Up, n, 20.0, 0.01, 31337);
    const LeftTailFit fit = left_tail_regression(xs, 1.0);
    // Small values of the functional are governed by the alpha-stable scale:
    // exponent -1/(alpha-1) = -2.
    CHECK(fit.alpha_hat == doctest::Approx(1.5).epsilon(0.25));
    CHECK(stats::mean(xs) > 0.0);
}
