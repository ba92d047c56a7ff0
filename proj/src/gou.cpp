#include "simlab/gou.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "simlab/rng.hpp"
#include "simlab/stats.hpp"

namespace simlab {

namespace {

double require_kappa_above_one(const LevyModel& m) {
    const double kappa = find_kappa_root(m);
    if (!(kappa > 1.0)) throw std::domain_error("requires kappa > 1");
    return kappa;
}

// sup of Z over an environment path, without materializing the trace.
double sup_Z(const LevyPath& env, Rng& rng) {
    const auto& v = env.values;
    double r_cur = 0.0;
    double best = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double dc = 0.5 * (std::exp(-v[i - 1]) + std::exp(-v[i])) * env.step;
        const double g1 = rng.normal(), g2 = rng.normal();
        const double root = std::sqrt(r_cur) + std::sqrt(dc) * g1;
        r_cur = root * root + dc * g2 * g2;
        best = std::max(best, std::exp(v[i]) * r_cur);
    }
    return best;
}

}  // namespace

GouTrace simulate_Z(const LevyPath& env, std::uint64_t seed) {
    if (env.values.size() < 2) throw std::invalid_argument("environment path too short");
    GouTrace tr;
    tr.env = env;
    const auto& v = env.values;
    tr.values.resize(v.size());
    tr.besq_clock.resize(v.size());
    tr.values[0] = 0.0;  // R(0) = 0, the hitting-time local-time picture's start
    tr.besq_clock[0] = 0.0;
    Rng rng(seed);
    double r_cur = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double dc = 0.5 * (std::exp(-v[i - 1]) + std::exp(-v[i])) * env.step;
        const double g1 = rng.normal(), g2 = rng.normal();
        const double root = std::sqrt(r_cur) + std::sqrt(dc) * g1;
        r_cur = root * root + dc * g2 * g2;
        tr.besq_clock[i] = tr.besq_clock[i - 1] + dc;
        tr.values[i] = std::exp(v[i]) * r_cur;
    }
    return tr;
}

double estimate_K(const LevyModel& m, int n_paths, double step, std::uint64_t seed) {
    const double kappa = require_kappa_above_one(m);
    if (n_paths <= 0) throw std::invalid_argument("need n_paths > 0");
    std::vector<double> samples = exp_functional_samples(m, n_paths, step, seed);
    for (double& s : samples) s = std::pow(s, kappa - 1.0);
    return stats::mean(samples);
}

double compute_m(const LevyModel& m) {
    const double psi1 = eval_psi(m, 1.0);
    if (!(psi1 < 0.0)) throw std::domain_error("requires psi(1) < 0");
    return -2.0 / psi1;
}

double liminf_constant_J(const LevyModel& m, double K) {
    const double kappa = require_kappa_above_one(m);
    if (!(K > 0.0)) throw std::invalid_argument("K must be > 0");
    const double mm = compute_m(m);
    return 2.0 * std::pow(std::tgamma(kappa) * kappa * kappa * K / mm, 1.0 / kappa);
}

ExcursionTailTable excursion_tail_constant(const LevyModel& m, double r,
                                           std::vector<double> h_grid, int n_paths, double step,
                                           std::uint64_t seed) {
    const double kappa = require_kappa_above_one(m);
    if (!(r > 0.0)) throw std::invalid_argument("r must be > 0");
    if (n_paths < 200) throw std::invalid_argument("need n_paths >= 200");

    std::vector<double> sups(static_cast<std::size_t>(n_paths));
    for (int i = 0; i < n_paths; ++i) {
        LevyPath env = sample_path(m, r, step, derive_seed(seed, 2 * static_cast<std::size_t>(i)));
        Rng rng(derive_seed(seed, 2 * static_cast<std::size_t>(i) + 1));
        sups[static_cast<std::size_t>(i)] = sup_Z(env, rng);
    }
    std::sort(sups.begin(), sups.end());

    if (h_grid.empty()) {
        // Exceedance probabilities ~[0.03, 0.15]: low enough for the rate
        // linearization, high enough for counting statistics.
        for (double q : {0.85, 0.875, 0.90, 0.92, 0.94, 0.955, 0.97}) {
            h_grid.push_back(stats::quantile(sups, q));
        }
    }

    ExcursionTailTable out;
    for (double h : h_grid) {
        const auto exceed = sups.end() - std::upper_bound(sups.begin(), sups.end(), h);
        const double p = static_cast<double>(exceed) / static_cast<double>(n_paths);
        if (p <= 0.0 || p > 0.3) continue;  // outside the linearized-rate regime
        out.h.push_back(h);
        out.p_hat.push_back(p);
        out.c_hat.push_back(std::pow(h, kappa) * (-std::log1p(-p)) / r);
    }
    if (out.c_hat.size() >= 3) {
        out.plateau = stats::quantile(out.c_hat, 0.5);
        const double lo = *std::min_element(out.c_hat.begin(), out.c_hat.end());
        const double hi = *std::max_element(out.c_hat.begin(), out.c_hat.end());
        out.flatness = (hi - lo) / out.plateau;
        out.plateau_ok = out.flatness <= 0.5;
    }
    return out;
}

std::vector<LiminfSummary> liminf_scaled_statistic(const LevyModel& m,
                                                   const std::vector<double>& r_grid,
                                                   int n_paths, double step, std::uint64_t seed) {
    const double kappa = require_kappa_above_one(m);
    const double mm = compute_m(m);
    if (n_paths < 100) throw std::invalid_argument("need n_paths >= 100");
    static const double kQLevels[] = {0.005, 0.01, 0.02, 0.05, 0.1, 0.25, 0.5};

    std::vector<LiminfSummary> out;
    for (std::size_t k = 0; k < r_grid.size(); ++k) {
        const double r = r_grid[k];
        if (!(r > std::exp(std::exp(1.0)))) {
            throw std::invalid_argument("r too small for log log scaling");
        }
        const double reach = r / mm;
        const double scale = std::pow(std::log(std::log(r)) / r, 1.0 / kappa);
        std::vector<double> stat(static_cast<std::size_t>(n_paths));
        for (int i = 0; i < n_paths; ++i) {
            const auto idx = 2 * (k * static_cast<std::size_t>(n_paths) + static_cast<std::size_t>(i));
            LevyPath env = sample_path(m, reach, step, derive_seed(seed, idx));
            Rng rng(derive_seed(seed, idx + 1));
            stat[static_cast<std::size_t>(i)] = sup_Z(env, rng) * scale;
        }
        LiminfSummary summary;
        summary.r = r;
        summary.q_special = 1.0 / std::log(r);
        summary.value_special = stats::quantile(stat, summary.q_special);
        for (double q : kQLevels) {
            summary.q_levels.push_back(q);
            summary.values.push_back(stats::quantile(stat, q));
        }
        out.push_back(std::move(summary));
    }
    return out;
}

IntegralTestResult integral_test(const std::function<double(double)>& f, double kappa) {
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");

    // After u = log t the integral is int_0^inf f(e^u)^kappa du; for a
    // positive non-increasing integrand it converges iff the masses of dyadic
    // blocks [2^k, 2^{k+1}) in u decay geometrically (ratio bounded below 1).
    // All three equivalent forms are classified by the same block-ratio rule.
    auto classify = [](double ratio) { return ratio < 0.95; };
    auto ratio_of_blocks = [&](const std::function<double(double, double)>& block_mass) {
        double prev = 0.0, ratio = 0.0;
        for (int k = 4; k <= 8; ++k) {  // u in [16, 512]: exp(u) stays finite
            const double mass = block_mass(std::exp2(k), std::exp2(k + 1));
            if (prev > 0.0) ratio = mass / prev;
            prev = mass;
        }
        return ratio;
    };

    auto integral_block = [&](double u_lo, double u_hi) {
        constexpr int kPairs = 256;
        const double hstep = (u_hi - u_lo) / (2.0 * kPairs);
        auto g = [&](double u) { return std::pow(f(std::exp(u)), kappa); };
        double acc = g(u_lo) + g(u_hi);
        for (int i = 1; i < 2 * kPairs; ++i) {
            acc += g(u_lo + hstep * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
        }
        return acc * hstep / 3.0;
    };
    auto dyadic_block = [&](double u_lo, double u_hi) {
        // sum f(2^n)^kappa over n in (u_lo/log2, u_hi/log2]
        const auto n_lo = static_cast<int>(std::floor(u_lo / std::log(2.0)));
        const auto n_hi = static_cast<int>(std::floor(u_hi / std::log(2.0)));
        double acc = 0.0;
        for (int n = n_lo + 1; n <= n_hi; ++n) acc += std::pow(f(std::exp2(n)), kappa);
        return acc;
    };
    auto harmonic_block = [&](double u_lo, double u_hi) {
        // sum f(n)^kappa / n over n in (e^{u_lo}, e^{u_hi}], midpoint-sampled
        // on a geometric subgrid (the terms vary slowly in log n).
        constexpr int kNodes = 128;
        const double du = (u_hi - u_lo) / kNodes;
        double acc = 0.0;
        for (int j = 0; j < kNodes; ++j) {
            const double u = u_lo + (static_cast<double>(j) + 0.5) * du;
            acc += std::pow(f(std::exp(u)), kappa) * du;
        }
        return acc;
    };

    IntegralTestResult out;
    const double r_int = ratio_of_blocks(integral_block);
    const double r_dyadic = ratio_of_blocks(dyadic_block);
    const double r_harmonic = ratio_of_blocks(harmonic_block);
    out.tail_ratio = r_int;
    out.converges = classify(r_int);
    out.forms_agree =
        classify(r_dyadic) == out.converges && classify(r_harmonic) == out.converges;
    return out;
}

}  // namespace simlab
