#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "simlab/gou.hpp"
#include "simlab/levy_env.hpp"
#include "simlab/stats.hpp"

using namespace simlab;

namespace {

LevyPath flat_path(double horizon, double step) {
    LevyPath p;
    p.model = LevyModel::drifted_brownian(1.0);
    p.step = step;
    p.values.assign(static_cast<std::size_t>(std::llround(horizon / step)) + 1, 0.0);
    p.jump_flags.assign(p.values.size(), false);
    return p;
}

}  // namespace

TEST_CASE("flat environment reduces Z to a squared Bessel of dimension two") {
    const double step = 0.01;
    const int n = 4000;
    // At a flat potential Z(x) = R(x) ~ x * chi^2_2 = 2x * Exp(1).
    for (double x : {0.5, 1.0, 2.0}) {
        std::vector<double> zs(static_cast<std::size_t>(n));
        const auto idx = static_cast<std::size_t>(std::llround(x / step));
        for (int i = 0; i < n; ++i) {
            const GouTrace g = simulate_Z(flat_path(2.0, step),
                                          9000 + static_cast<std::uint64_t>(i));
            zs[static_cast<std::size_t>(i)] = g.values[idx];
        }
        const double mean_target = 2.0 * x;
        auto cdf = [&](double z) {
            return z <= 0 ? 0.0 : 1.0 - std::exp(-z / mean_target);
        };
        CHECK(stats::ks_test(zs, cdf).p > 0.01);
        CHECK(std::fabs(stats::mean(zs) - mean_target) <
              4.0 * stats::std_error(zs));
    }
}

TEST_CASE("Z stays nonnegative and starts at zero, clock strictly increases") {
    const LevyModel m = LevyModel::drifted_brownian(2.0);
    const LevyPath p = sample_path(m, 5.0, 0.01, 321);
    const GouTrace g = simulate_Z(p, 654);
    REQUIRE(g.values.size() == p.values.size());
    CHECK(g.values[0] == 0.0);
    CHECK(*std::min_element(g.values.begin(), g.values.end()) >= 0.0);
    for (std::size_t i = 1; i < g.besq_clock.size(); ++i)
        CHECK(g.besq_clock[i] > g.besq_clock[i - 1]);
}

TEST_CASE("same seed reproduces Z, different seed varies it") {
    const LevyPath p = sample_path(LevyModel::drifted_brownian(2.0), 3.0, 0.01, 5);
    const GouTrace a = simulate_Z(p, 88);
    const GouTrace b = simulate_Z(p, 88);
    const GouTrace c = simulate_Z(p, 89);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
}

TEST_CASE("K estimator matches the inverse-gamma closed form") {
    // E[(int e^V)^{kappa-1}] = 2^{kappa-1} / Gamma(kappa).
    const double k1 = estimate_K(LevyModel::drifted_brownian(2.0), 8000, 0.01, 77);
    CHECK(k1 == doctest::Approx(2.0).epsilon(0.10));
    const double k2 = estimate_K(LevyModel::drifted_brownian(3.0), 8000, 0.01, 78);
    CHECK(k2 == doctest::Approx(2.0).epsilon(0.10));  // 2^2 / Gamma(3) = 2
    CHECK_THROWS(estimate_K(LevyModel::drifted_brownian(1.0), 100, 0.01, 79));
}

TEST_CASE("m closed forms and the defining identity") {
    CHECK(compute_m(LevyModel::drifted_brownian(2.0)) == doctest::Approx(4.0));
    CHECK(compute_m(LevyModel::drifted_brownian(3.0)) == doctest::Approx(2.0));
    CHECK(compute_m(LevyModel::stable_with_drift(2.0, 0.5, 1.0)) ==
          doctest::Approx(4.0));
    for (double kappa : {1.5, 2.5}) {
        const LevyModel m = LevyModel::drifted_brownian(kappa);
        CHECK(compute_m(m) * eval_psi(m, 1.0) == doctest::Approx(-2.0));
    }
    CHECK_THROWS(compute_m(LevyModel::drifted_brownian(1.0)));
    CHECK_THROWS(compute_m(LevyModel::drifted_brownian(0.5)));
}

TEST_CASE("J closed form at kappa = 2") {
    const LevyModel m = LevyModel::drifted_brownian(2.0);
    // 2 (Gamma(2) * 4 * 2 / 4)^{1/2} = 2 sqrt 2.
    CHECK(liminf_constant_J(m, 2.0) ==
          doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
    // Same number through the reduced expression 4 (kappa^2 (kappa-1)/8)^{1/kappa}.
    const double alt = 4.0 * std::pow(4.0 * 1.0 / 8.0, 0.5);
    CHECK(liminf_constant_J(m, 2.0) == doctest::Approx(alt).epsilon(1e-12));
    // Estimated K propagates within the MC band.
    const double k_hat = estimate_K(m, 6000, 0.01, 99);
    CHECK(liminf_constant_J(m, k_hat) ==
          doctest::Approx(liminf_constant_J(m, 2.0)).epsilon(0.10));
}

TEST_CASE("excursion tail constant plateaus at the closed-form value") {
    const LevyModel m = LevyModel::drifted_brownian(2.0);
    // The constant has slow transients in h; a window of length 100 puts the
    // measurable heights past ~100 where the rate has nearly settled.
    const ExcursionTailTable tbl =
        excursion_tail_constant(m, 100.0, {}, 1200, 0.0025, 1212);
    REQUIRE(tbl.h.size() >= 3);
    CHECK(tbl.plateau_ok);
    // 2^k Gamma(k) k^2 K = 4 * 1 * 4 * 2 = 32 at kappa = 2.
    CHECK(tbl.plateau == doctest::Approx(32.0).epsilon(0.25));
    // The c-hat grid is flat, not trending: spread stays moderate.
    CHECK(tbl.flatness < 0.8);
}

TEST_CASE("excursion constant is invariant under doubling the window") {
    const LevyModel m = LevyModel::drifted_brownian(2.0);
    const ExcursionTailTable a =
        excursion_tail_constant(m, 4.0, {}, 3000, 0.01, 333);
    const ExcursionTailTable b =
        excursion_tail_constant(m, 8.0, {}, 3000, 0.01, 334);
    CHECK(a.plateau / b.plateau == doctest::Approx(1.0).epsilon(0.3));
}

TEST_CASE("scaled liminf statistic sits in the corridor around J") {
    const LevyModel m = LevyModel::drifted_brownian(2.0);
    const double J = liminf_constant_J(m, 2.0);
    const auto sums = liminf_scaled_statistic(m, {150.0, 400.0}, 400, 0.02, 777);
    REQUIRE(sums.size() == 2);
    for (const auto& s : sums) {
        CHECK(s.q_special == doctest::Approx(1.0 / std::log(s.r)));
        // Quantiles are nondecreasing in the level.
        for (std::size_t i = 1; i < s.values.size(); ++i)
            CHECK(s.values[i] >= s.values[i - 1] - 1e-12);
    }
    const LiminfSummary& big = sums.back();
    CHECK(big.value_special > 0.6 * J);
    CHECK(big.value_special < 1.6 * J);
}

TEST_CASE("integral test classifies the three reference functions") {
    const double kappa = 0.5;
    const IntegralTestResult conv = integral_test(
        [kappa](double t) { return std::pow(std::log(t), -2.0 / kappa); }, kappa);
    CHECK(conv.converges);
    CHECK(conv.forms_agree);
    const IntegralTestResult div = integral_test(
        [kappa](double t) { return std::pow(std::log(t), -1.0 / kappa); }, kappa);
    CHECK_FALSE(div.converges);
    CHECK(div.forms_agree);
    const IntegralTestResult one =
        integral_test([](double) { return 1.0; }, kappa);
    CHECK_FALSE(one.converges);
    CHECK(one.forms_agree);
    CHECK(one.tail_ratio > conv.tail_ratio);
}
