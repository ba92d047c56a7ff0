#include "simlab/levy_env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "simlab/stats.hpp"

namespace simlab {

LevyModel LevyModel::drifted_brownian(double kappa) {
    LevyModel m;
    m.kind = ModelKind::DriftedBrownian;
    m.kappa_drift = kappa;
    m.validate();
    return m;
}

LevyModel LevyModel::stable_with_drift(double alpha, double C, double d) {
    LevyModel m;
    m.kind = ModelKind::StableWithDrift;
    m.alpha = alpha;
    m.scale_C = C;
    m.drift_d = d;
    m.validate();
    return m;
}

void LevyModel::validate() const {
    if (kind == ModelKind::DriftedBrownian) {
        if (!(kappa_drift > 0.0) || !std::isfinite(kappa_drift))
            throw std::invalid_argument("DriftedBrownian: kappa_drift must be finite and > 0");
    } else {
        if (!(alpha > 1.0) || !(alpha <= 2.0))
            throw std::invalid_argument("StableWithDrift: alpha must lie in (1, 2]");
        if (!(scale_C > 0.0)) throw std::invalid_argument("StableWithDrift: scale_C must be > 0");
        if (!(drift_d > 0.0)) throw std::invalid_argument("StableWithDrift: drift_d must be > 0");
    }
}

double eval_psi(const LevyModel& m, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("eval_psi: lambda must be >= 0");
    if (m.kind == ModelKind::DriftedBrownian)
        return 0.5 * lambda * lambda - 0.5 * m.kappa_drift * lambda;
    return m.scale_C * std::pow(lambda, m.alpha) - m.drift_d * lambda;
}

double eval_psi_derivative(const LevyModel& m, double lambda) {
    if (m.kind == ModelKind::DriftedBrownian) return lambda - 0.5 * m.kappa_drift;
    return m.scale_C * m.alpha * std::pow(lambda, m.alpha - 1.0) - m.drift_d;
}

double find_kappa_root(const LevyModel& m) {
    m.validate();
    // psi is convex with psi(0) = 0; a positive root exists iff psi'(0+) < 0.
    bool drifts_down = (m.kind == ModelKind::DriftedBrownian) ? m.kappa_drift > 0.0 : true;
    if (!drifts_down)
        throw std::domain_error("find_kappa_root: no positive root (process does not drift down)");

    double hi = 1.0;
    int guard = 0;
    while (eval_psi(m, hi) <= 0.0) {
        hi *= 2.0;
        if (++guard > 200) throw std::domain_error("find_kappa_root: no positive root in bracket");
    }
    double lo = hi * 0.5;
    while (eval_psi(m, lo) > 0.0) {
        lo *= 0.5;
        if (++guard > 400) throw std::domain_error("find_kappa_root: bracket collapse");
    }
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (eval_psi(m, mid) > 0.0 ? hi : lo) = mid;
    }
    double root = 0.5 * (lo + hi);
    for (int i = 0; i < 8; ++i) {
        double f = eval_psi(m, root);
        double df = eval_psi_derivative(m, root);
        if (df <= 0.0) break;
        double next = root - f / df;
        if (!(next > 0.0) || next == root) break;
        root = next;
    }
    if (std::abs(eval_psi(m, root)) >= 1e-12)
        throw std::domain_error("find_kappa_root: root polish failed tolerance");
    return root;
}

CellLaw CellLaw::make(const LevyModel& m, double step) {
    m.validate();
    if (!(step > 0.0)) throw std::invalid_argument("CellLaw: step must be > 0");
    CellLaw c{};
    c.kind = m.kind;
    c.step = step;
    if (m.kind == ModelKind::DriftedBrownian) {
        c.drift = -0.5 * m.kappa_drift * step;
        c.sd = std::sqrt(step);
    } else if (m.alpha == 2.0) {
        // S_2(sigma) is N(0, 2 sigma^2); fold into the gaussian branch.
        c.kind = ModelKind::DriftedBrownian;
        c.drift = -m.drift_d * step;
        c.sd = std::sqrt(2.0 * m.scale_C * step);
    } else {
        c.drift = -m.drift_d * step;
        c.alpha = m.alpha;
        double t = std::tan(0.5 * std::numbers::pi * m.alpha);  // negative for alpha in (1,2)
        c.sigma = std::pow(m.scale_C * step * std::abs(std::cos(0.5 * std::numbers::pi * m.alpha)),
                           1.0 / m.alpha);
        c.cms_b = std::atan(-t) / m.alpha;  // skew fixed at -1
        c.cms_s = std::pow(1.0 + t * t, 0.5 / m.alpha);
    }
    return c;
}

double CellLaw::draw(Rng& rng) const {
    if (kind == ModelKind::DriftedBrownian) return drift + sd * rng.normal();
    // Chambers-Mallows-Stuck for the standardized totally skewed stable.
    double u = std::numbers::pi * (rng.uniform01() - 0.5);
    double w = rng.exponential();
    double au_b = alpha * (u + cms_b);
    double x = cms_s * std::sin(au_b) / std::pow(std::cos(u), 1.0 / alpha) *
               std::pow(std::cos(u - au_b) / w, (1.0 - alpha) / alpha);
    return drift + sigma * x;
}

LevyPath sample_path(const LevyModel& m, double horizon, double step, std::uint64_t seed) {
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_path: horizon must be > 0");
    CellLaw law = CellLaw::make(m, step);
    auto n = static_cast<std::size_t>(std::llround(horizon / step));
    if (n == 0) throw std::invalid_argument("sample_path: horizon shorter than one step");
    LevyPath p;
    p.model = m;
    p.step = step;
    p.values.resize(n + 1);
    p.jump_flags.assign(n, 0);
    p.values[0] = 0.0;
    Rng rng(seed);
    bool stable = (m.kind == ModelKind::StableWithDrift && m.alpha < 2.0);
    double jump_cut = -8.0 * law.noise_scale();
    for (std::size_t i = 0; i < n; ++i) {
        double inc = law.draw(rng);
        p.values[i + 1] = p.values[i] + inc;
        if (stable && inc - law.drift < jump_cut) p.jump_flags[i] = 1;
    }
    return p;
}

EnvWindow make_env_window(const LevyModel& m, double x_left, double x_right, double step,
                          std::uint64_t seed) {
    if (!(x_left <= 0.0) || !(x_right >= 0.0) || !(x_right > x_left))
        throw std::invalid_argument("make_env_window: window must contain 0");
    CellLaw law = CellLaw::make(m, step);
    auto n_left = static_cast<std::size_t>(std::llround(-x_left / step));
    auto n_right = static_cast<std::size_t>(std::llround(x_right / step));
    EnvWindow w;
    w.step = step;
    w.x_left = -static_cast<double>(n_left) * step;
    w.i0 = n_left;
    w.v.resize(n_left + n_right + 1);
    w.v[w.i0] = 0.0;
    Rng rng(seed);
    for (std::size_t i = 0; i < n_right; ++i) w.v[w.i0 + i + 1] = w.v[w.i0 + i] + law.draw(rng);
    // Mirrored side: V(-u) - V(-u - step) has the forward one-cell law.
    for (std::size_t i = 0; i < n_left; ++i) w.v[w.i0 - i - 1] = w.v[w.i0 - i] - law.draw(rng);
    return w;
}

double exp_functional_sample(const LevyModel& m, double step, Rng& rng, double tail_cut) {
    CellLaw law = CellLaw::make(m, step);
    double kappa = find_kappa_root(m);
    double barrier = -(tail_cut + std::log(1e6) / kappa);
    // Trapezoid accumulation of exp(V) until the path is deep enough that the
    // remaining contribution is negligible at the stated confidence.
    double v = 0.0;
    double acc = 0.0;
    double prev = 1.0;  // exp(0)
    const std::size_t cap = 200'000'000;
    for (std::size_t i = 0; i < cap; ++i) {
        v += law.draw(rng);
        double e = std::exp(v);
        acc += 0.5 * step * (prev + e);
        prev = e;
        if (v <= barrier) return acc;
    }
    throw std::runtime_error("exp_functional_sample: path failed to descend (cap exceeded)");
}

std::vector<double> exp_functional_samples(const LevyModel& m, int n_paths, double step,
                                           std::uint64_t seed, double tail_cut) {
    if (n_paths <= 0) throw std::invalid_argument("exp_functional_samples: n_paths must be > 0");
    std::vector<double> out(static_cast<std::size_t>(n_paths));
    for (int i = 0; i < n_paths; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        out[static_cast<std::size_t>(i)] = exp_functional_sample(m, step, rng, tail_cut);
    }
    return out;
}

TailEstimate tail_estimate_from_samples(const std::vector<double>& samples,
                                        std::vector<double> x_grid) {
    if (samples.size() < 100)
        throw std::invalid_argument("tail_estimate_from_samples: need >= 100 samples");
    if (x_grid.empty()) {
        // Upper-quantile grid: deep enough for the power regime, shallow enough
        // to keep >= 30 exceedances at the deepest point for typical n.
        const double levels[] = {0.02, 0.012, 0.0075, 0.0045, 0.003, 0.0018, 0.0011, 6.6e-4, 5e-4};
        for (double p : levels) {
            if (p * static_cast<double>(samples.size()) < 10.0) continue;
            x_grid.push_back(stats::quantile(samples, 1.0 - p));
        }
    }
    std::sort(x_grid.begin(), x_grid.end());
    TailEstimate t;
    auto n = static_cast<double>(samples.size());
    for (double x : x_grid) {
        std::size_t count = 0;
        for (double s : samples)
            if (s >= x) ++count;
        double p = static_cast<double>(count) / n;
        t.x.push_back(x);
        t.p_hat.push_back(p);
        t.p_err.push_back(std::sqrt(std::max(p * (1.0 - p), 1.0 / n) / n));
        if (x == x_grid.back() && count < 30) t.tail_undersampled = true;
    }
    std::vector<double> lx, lp;
    for (std::size_t i = 0; i < t.x.size(); ++i) {
        if (t.p_hat[i] <= 0.0) continue;
        lx.push_back(std::log(t.x[i]));
        lp.push_back(std::log(t.p_hat[i]));
    }
    if (lx.size() >= 3) {
        auto fit = stats::ols_fit(lx, lp);
        t.slope = fit.slope;
        t.slope_se = fit.slope_se;
        t.intercept = fit.intercept;
    } else {
        t.tail_undersampled = true;
    }
    return t;
}

TailEstimate exp_functional_tail(const LevyModel& m, int n_paths, std::vector<double> x_grid,
                                 double step, std::uint64_t seed, double tail_cut) {
    auto samples = exp_functional_samples(m, n_paths, step, seed, tail_cut);
    return tail_estimate_from_samples(samples, std::move(x_grid));
}

}  // namespace simlab
