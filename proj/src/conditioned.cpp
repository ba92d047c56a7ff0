#include "simlab/conditioned.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "simlab/stats.hpp"

namespace simlab {

namespace {

// Per-stage retry budget. A stage whose acceptance probability is below
// ~1e-6 is a parameterization error (start point too deep, step too coarse);
// aborting beats looping forever.
constexpr long kMaxStageAttempts = 4'000'000;

// Next ladder stage from a committed height: double below 1 (keeps the retry
// count logarithmic in 1/eps near the origin), unit increments above.
double next_target(double committed, double stop_level) {
    double t = committed < 1.0 ? 2.0 * committed : committed + 1.0;
    return std::min(t, stop_level);
}

}  // namespace

ConditionedPath sample_conditioned(const LevyModel& m, Direction dir, double stop_level,
                                   double step, std::uint64_t seed, double eps) {
    m.validate();
    if (!(stop_level > 0.0)) throw std::invalid_argument("stop_level must be > 0");
    if (!(step > 0.0)) throw std::invalid_argument("step must be > 0");

    CellLaw law = CellLaw::make(m, step);
    // The dual environment is the negated path; its one-cell increments are
    // the negated increments. For gaussian cells the conditioned laws of both
    // directions coincide, but we still draw with the direction's own sign so
    // the sample is the dual path itself.
    const double sign = (dir == Direction::DualUp) ? -1.0 : 1.0;
    const bool gaussian_cell =
        (m.kind == ModelKind::DriftedBrownian) || (m.kind == ModelKind::StableWithDrift && m.alpha == 2.0);
    const double bridge_sd2 = law.sd * law.sd;  // per-cell gaussian variance

    if (eps <= 0.0) eps = 10.0 * step * law.noise_scale();
    if (eps >= stop_level) throw std::invalid_argument("start eps must be below stop_level");

    Rng rng(seed);
    std::vector<double> values{eps};
    std::vector<std::uint8_t> flags;
    std::size_t committed = 0;  // index of the last stage anchor
    double target = next_target(eps, stop_level);
    long stage_attempts = 0;

    while (values[committed] < stop_level) {
        double prev = values.back();
        double inc = sign * law.draw(rng);
        double cur = prev + inc;

        bool killed = cur <= 0.0;
        if (!killed && gaussian_cell) {
            // The grid skeleton can stay positive while the continuous cell
            // path dips below zero; a Brownian bridge between the endpoints
            // dips with probability exp(-2ab/sd^2) (drift cancels in the
            // bridge). Sub-sampling this kill makes the positivity event exact
            // in law for the continuous path.
            double e = 2.0 * prev * cur / bridge_sd2;
            if (e < 45.0 && rng.uniform01() < std::exp(-e)) killed = true;
        }

        if (killed) {
            if (++stage_attempts > kMaxStageAttempts) {
                throw std::runtime_error(
                    "sample_conditioned: stage acceptance rate below 1e-6 near level " +
                    std::to_string(values[committed]));
            }
            values.resize(committed + 1);
            flags.resize(committed);
            continue;
        }

        values.push_back(cur);
        flags.push_back(m.kind == ModelKind::StableWithDrift &&
                        inc - sign * law.drift < -8.0 * law.noise_scale());

        if (cur >= target) {
            // Stage complete: {reached target before <= 0}. Committing here and
            // retrying only the suffix after later kills is exact by the strong
            // Markov property: the composition of the stage conditionings equals
            // the single conditioning {reach stop_level before <= 0}.
            committed = values.size() - 1;
            stage_attempts = 0;
            target = next_target(cur, stop_level);
        }
    }

    ConditionedPath out;
    out.base.model = m;
    out.base.step = step;
    out.base.values = std::move(values);
    out.base.jump_flags = std::move(flags);
    out.direction = dir;
    out.start_eps = eps;
    out.stop_level = stop_level;
    return out;
}

double exp_functional(const ConditionedPath& p) {
    const auto& v = p.base.values;
    if (v.size() < 2) return 0.0;
    std::vector<double> cells(v.size() - 1);
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        cells[i] = 0.5 * (std::exp(-v[i]) + std::exp(-v[i + 1])) * p.base.step;
    }
    return stats::kahan_sum(cells);
}

std::vector<double> sample_exp_functional(const LevyModel& m, Direction dir, int n,
                                          double truncation_level, double step,
                                          std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("need n > 0 samples");
    if (truncation_level < 20.0) {
        // Below exp(-20) the neglected tail beyond the crossing is orders of
        // magnitude under every tolerance used downstream; shallower cutoffs
        // would visibly bias the integral.
        throw std::invalid_argument("truncation_level must be >= 20");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ConditionedPath p =
            sample_conditioned(m, dir, truncation_level, step, derive_seed(seed, static_cast<std::uint64_t>(i)));
        out[static_cast<std::size_t>(i)] = exp_functional(p);
    }
    return out;
}

std::vector<double> sample_R(const LevyModel& m, int n, double truncation_level, double step,
                             std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("need n > 0 samples");
    if (truncation_level < 20.0) throw std::invalid_argument("truncation_level must be >= 20");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto iu = static_cast<std::uint64_t>(i);
        ConditionedPath up = sample_conditioned(m, Direction::Up, truncation_level, step,
                                                derive_seed(seed, 2 * iu));
        ConditionedPath dual = sample_conditioned(m, Direction::DualUp, truncation_level, step,
                                                  derive_seed(seed, 2 * iu + 1));
        out[static_cast<std::size_t>(i)] = exp_functional(up) + exp_functional(dual);
    }
    return out;
}

LaplaceEstimate laplace_transform(const std::vector<double>& samples, double lambda) {
    if (samples.empty()) throw std::invalid_argument("laplace_transform: empty sample");
    std::vector<double> e(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) e[i] = std::exp(-lambda * samples[i]);
    LaplaceEstimate out;
    out.value = stats::mean(e);
    out.std_err = stats::std_error(e);
    return out;
}

LeftTailFit left_tail_regression(const std::vector<double>& samples, double q_pinned) {
    const auto n = samples.size();
    if (n / 10 < 100) {
        throw std::invalid_argument("left_tail_regression: need >= 100 points in the lowest decile");
    }
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());

    // Probability levels inside the lowest decile. -log P(X <= x_p) = -log p by
    // construction of the empirical quantile, so each grid point contributes
    // (log x_p, log(-log p)).
    static const double kLevels[] = {0.001, 0.002, 0.004, 0.007, 0.012, 0.02, 0.033, 0.055, 0.09};
    std::vector<double> lx, lly, amp;
    for (double p : kLevels) {
        if (p * static_cast<double>(n) < 12.0) continue;  // too few points below x_p
        double xp = stats::quantile(sorted, p);
        if (!(xp > 0.0)) continue;
        lx.push_back(std::log(xp));
        lly.push_back(std::log(-std::log(p)));
        amp.push_back(-std::log(p) * std::pow(xp, q_pinned));
    }
    if (lx.size() < 3) throw std::invalid_argument("left_tail_regression: too few usable grid points");

    stats::LinearFit fit = stats::ols_fit(lx, lly);
    LeftTailFit out;
    out.exponent_hat = -fit.slope;
    out.alpha_hat = 1.0 + 1.0 / out.exponent_hat;
    out.amplitude_pinned = stats::quantile(amp, 0.5);
    out.n_tail_points = static_cast<int>(lx.size());
    return out;
}

}  // namespace simlab
