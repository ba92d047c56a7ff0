#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "simlab/levy_env.hpp"
#include "simlab/rng.hpp"
#include "simlab/stats.hpp"
#include "simlab/valley.hpp"

using namespace simlab;

TEST_CASE("sawtooth extrema by hand") {
    const std::vector<double> v = {0.0, 5.0, 1.0, 6.0, 0.5, 5.5, 2.0, 7.0};
    const HExtremaScan scan = scan_h_extrema(v, 3.0);
    CHECK(scan.minima == std::vector<std::size_t>{2, 4, 6});
    CHECK(scan.maxima == std::vector<std::size_t>{1, 3, 5});
}

TEST_CASE("monotone path has no h-extrema") {
    std::vector<double> v(100);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i);
    const HExtremaScan scan = scan_h_extrema(v, 1.0);
    CHECK(scan.minima.empty());
    CHECK(scan.maxima.empty());
}

TEST_CASE("extrema alternate and are translation invariant") {
    Rng rng(404);
    std::vector<double> v(2000, 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] + 0.4 * rng.normal();
    const HExtremaScan a = scan_h_extrema(v, 2.0);
    std::vector<double> w = v;
    for (double& x : w) x += 17.25;
    const HExtremaScan b = scan_h_extrema(w, 2.0);
    CHECK(a.minima == b.minima);
    CHECK(a.maxima == b.maxima);

    // Merge by position and require strict alternation of types.
    std::vector<std::pair<std::size_t, int>> seq;
    for (std::size_t i : a.minima) seq.emplace_back(i, 0);
    for (std::size_t i : a.maxima) seq.emplace_back(i, 1);
    std::sort(seq.begin(), seq.end());
    for (std::size_t i = 1; i < seq.size(); ++i)
        CHECK(seq[i].second != seq[i - 1].second);
}

TEST_CASE("every reported extremum carries its witnesses") {
    Rng rng(505);
    std::vector<double> v(1500, 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] + 0.5 * rng.normal();
    const double h = 2.5;
    const HExtremaScan scan = scan_h_extrema(v, h);
    auto has_min_witness = [&](std::size_t x) {
        bool left = false, right = false;
        for (std::size_t y = x + 1; y-- > 0;) {
            if (v[y] < v[x]) break;
            if (v[y] >= v[x] + h) {
                left = true;
                break;
            }
        }
        for (std::size_t y = x + 1; y < v.size(); ++y) {
            if (v[y] < v[x]) break;
            if (v[y] >= v[x] + h) {
                right = true;
                break;
            }
        }
        return left && right;
    };
    for (std::size_t x : scan.minima) CHECK(has_min_witness(x));
    CHECK(!scan.minima.empty());
}

TEST_CASE("default delta keeps the depth precondition") {
    CHECK(default_valley_delta(0.5) == doctest::Approx(0.1 / 3.0));
    CHECK(default_valley_delta(0.25) == doctest::Approx(0.1));
    CHECK(default_valley_delta(2.0) == doctest::Approx(0.1));
    // (1 + 3 delta) kappa < 1 must hold for kappa < 1.
    for (double k : {0.3, 0.5, 0.9}) {
        const double d = default_valley_delta(k);
        CHECK((1.0 + 3.0 * d) * k < 1.0);
    }
}

TEST_CASE("valley preconditions are enforced") {
    std::vector<double> v(64, 0.0);
    // delta too large for kappa < 1: (1 + 3*0.4) * 0.5 = 1.1 >= 1.
    CHECK_THROWS(standard_valleys_grid(v, 0.01, 10.0, 0.4, 0.5));
    // Depth too shallow: e^{(1-delta) kappa h} < h, e.g. e^{0.81} = 2.25 < 3.
    CHECK_THROWS(standard_valleys_grid(v, 0.01, 3.0, 0.1, 0.3));
}

TEST_CASE("grid valleys satisfy the marker ordering chain") {
    const LevyModel m = LevyModel::drifted_brownian(0.5);
    const EnvWindow env = make_env_window(m, -5.0, 4000.0, 0.01, 60601);
    const std::vector<double> v(env.v.begin() + static_cast<std::ptrdiff_t>(env.i0),
                                env.v.end());
    const double h = 6.0, delta = 0.3;
    const ValleySet vs = standard_valleys_grid(v, 0.01, h, delta, 0.5);
    REQUIRE(vs.valleys.size() >= 3);
    std::size_t prev_L = 0;
    for (const auto& rec : vs.valleys) {
        CHECK(rec.i_L_prev <= rec.i_L_sharp);
        CHECK(rec.i_L_sharp <= rec.i_m);
        CHECK(rec.i_tau_minus <= rec.i_m);
        CHECK(rec.i_tau_minus >= rec.i_L_prev);
        CHECK(rec.i_m <= rec.i_tau_plus);
        CHECK(rec.i_tau_plus <= rec.i_tau_h);
        CHECK(rec.i_tau_h <= rec.i_L);
        CHECK(rec.i_L_prev == prev_L);
        prev_L = rec.i_L;
        CHECK(rec.v_at_m == v[rec.i_m]);
        CHECK(rec.S > 0.0);
        CHECK(rec.R > 0.0);
        CHECK(rec.A_L > 0.0);
        CHECK(rec.A_L >= rec.S - 1e-12);  // same integrand, wider range
        CHECK(rec.depth_h >= h - 1e-12);
    }
}

TEST_CASE("tau markers are the first crossings of the recentred height") {
    const LevyModel m = LevyModel::drifted_brownian(0.5);
    const EnvWindow env = make_env_window(m, -5.0, 2500.0, 0.01, 1717);
    const std::vector<double> v(env.v.begin() + static_cast<std::ptrdiff_t>(env.i0),
                                env.v.end());
    const ValleySet vs = standard_valleys_grid(v, 0.01, 6.0, 0.3, 0.5);
    REQUIRE(!vs.valleys.empty());
    for (const auto& rec : vs.valleys) {
        const double a = 2.0;
        const std::size_t tp = valley_tau_plus(v, rec, a);
        const std::size_t tm = valley_tau_minus(v, rec, a);
        CHECK(v[tp] - rec.v_at_m >= a);
        for (std::size_t j = rec.i_m; j < tp; ++j)
            CHECK(v[j] - rec.v_at_m < a);
        CHECK(v[tm] - rec.v_at_m >= a);
        for (std::size_t j = tm + 1; j <= rec.i_m; ++j)
            CHECK(v[j] - rec.v_at_m < a);
    }
}

TEST_CASE("valley bottoms are h-minima of the scan") {
    const LevyModel m = LevyModel::drifted_brownian(0.5);
    const EnvWindow env = make_env_window(m, -5.0, 6000.0, 0.01, 2024);
    const std::vector<double> v(env.v.begin() + static_cast<std::ptrdiff_t>(env.i0),
                                env.v.end());
    const double h = 6.0;
    const ValleySet vs = standard_valleys_grid(v, 0.01, h, 0.3, 0.5);
    const HExtremaScan scan = scan_h_extrema(v, h);
    REQUIRE(vs.valleys.size() >= 4);
    int hits = 0;
    for (const auto& rec : vs.valleys)
        if (std::find(scan.minima.begin(), scan.minima.end(), rec.i_m) !=
            scan.minima.end())
            ++hits;
    CHECK(hits * 100 >= static_cast<int>(vs.valleys.size()) * 90);
}

TEST_CASE("streamed valleys look like the grid construction") {
    const LevyModel m = LevyModel::drifted_brownian(0.5);
    const StreamedValleys sv = stream_valleys(m, 6.0, 0.3, 0.01, 40, 777001);
    REQUIRE(sv.valleys.size() == 40);
    REQUIRE(sv.spacings.size() == 40);
    for (const auto& rec : sv.valleys) {
        CHECK(rec.S > 0.0);
        CHECK(rec.R > 0.0);
        CHECK(rec.A_L > 0.0);
        CHECK(rec.depth_h >= 6.0 - 1e-12);
        CHECK(rec.i_tau_minus <= rec.i_m);
        CHECK(rec.i_m <= rec.i_tau_plus);
    }
    for (double s : sv.spacings) CHECK(s > 0.0);
    // Deterministic restart: same seed, same stream.
    const StreamedValleys sv2 = stream_valleys(m, 6.0, 0.3, 0.01, 40, 777001);
    CHECK(sv2.spacings == sv.spacings);
}

TEST_CASE("renewal helpers on a hand case") {
    RenewalSequence seq;
    seq.e = {1.0, 2.0};
    seq.S = {3.0, 1.0};
    seq.R = {1.0, 4.0};
    seq.t_scale = 2.0;
    seq.kappa_phi = 1.0;
    // cumulative eS/t = {0, 1.5, 2.5}; eSR/t = {0, 1.5, 5.5}.
    const auto [y1, y2] = y_processes(seq, 1.2);
    CHECK(y1 == doctest::Approx(1.5));
    CHECK(y2 == doctest::Approx(1.5));
    CHECK(overshoot_index(seq, 1.0) == 1);
    CHECK(overshoot_index(seq, 2.0) == 2);
    CHECK(overshoot_index(seq, 6.0) == 3);  // sentinel n + 1
    CHECK(sup_before_crossing(seq, 2.0) == doctest::Approx(1.5));
    CHECK(sup_at_crossing(seq, 2.0) == doctest::Approx(1.5));
    CHECK(sup_before_crossing(seq, 1.0) == doctest::Approx(0.0));
    CHECK(sup_at_crossing(seq, 1.0) == doctest::Approx(1.5));
}

TEST_CASE("spacings grow exponentially in depth") {
    const LevyModel m = LevyModel::drifted_brownian(0.5);
    const SpacingReport rep =
        valley_spacing_check(m, {5.0, 6.5, 8.0}, 0.3, 0.02, 120, 909);
    REQUIRE(rep.h_values.size() == 3);
    CHECK(rep.mean_spacing[1] > rep.mean_spacing[0]);
    CHECK(rep.mean_spacing[2] > rep.mean_spacing[1]);
    // log-mean-spacing slope near kappa = 0.5 (loose at this sample size).
    CHECK(rep.slope == doctest::Approx(0.5).epsilon(0.8));
}
