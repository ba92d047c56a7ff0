#pragma once

#include <cstdint>
#include <vector>

#include "simlab/rng.hpp"

namespace simlab {

enum class ModelKind { DriftedBrownian, StableWithDrift };

// Spectrally negative environment process, parameterized by its exponential-moment
// rate function psi(lambda) = log E exp(lambda * V(1)), lambda >= 0:
//   DriftedBrownian:  psi(l) = l^2/2 - kappa_drift*l/2   (unit gaussian coefficient)
//   StableWithDrift:  psi(l) = scale_C*l^alpha - drift_d*l,  alpha in (1,2]
struct LevyModel {
    ModelKind kind = ModelKind::DriftedBrownian;
    double kappa_drift = 0.0;  // DriftedBrownian only
    double alpha = 0.0;        // StableWithDrift only
    double scale_C = 0.0;
    double drift_d = 0.0;

    static LevyModel drifted_brownian(double kappa);
    static LevyModel stable_with_drift(double alpha, double C, double d);
    void validate() const;  // throws std::invalid_argument on bad parameters
};

double eval_psi(const LevyModel& m, double lambda);
double eval_psi_derivative(const LevyModel& m, double lambda);

// Positive root of psi (convex, psi(0) = 0). Bracketing bisection plus Newton
// polish; guarantees |psi(root)| < 1e-12. Throws std::domain_error when the
// process does not drift to -infinity (no positive root).
double find_kappa_root(const LevyModel& m);

// Per-cell increment law over one grid step. Increments are exact in law:
// gaussian cells for DriftedBrownian, totally skewed (skew -1) stable cells
// for StableWithDrift (Chambers-Mallows-Stuck), so path marginals on the grid
// match exp(t*psi) over every horizon.
struct CellLaw {
    ModelKind kind;
    double step;
    double drift;        // deterministic per-cell shift
    double sd;           // gaussian sd (DriftedBrownian; alpha = 2 handled here too)
    double alpha;        // stable index
    double sigma;        // stable scale per cell
    double cms_b, cms_s; // precomputed CMS constants

    static CellLaw make(const LevyModel& m, double step);
    double draw(Rng& rng) const;
    double noise_scale() const { return kind == ModelKind::DriftedBrownian ? sd : sigma; }
};

struct LevyPath {
    LevyModel model;
    double step = 0.0;
    std::vector<double> values;       // values[0] = 0, size n+1
    std::vector<std::uint8_t> jump_flags;  // size n; cell holds a large negative jump
};

LevyPath sample_path(const LevyModel& m, double horizon, double step, std::uint64_t seed);

// Two-sided environment on a uniform grid over [x_left, x_right], pinned to
// V(0) = 0. The negative side is an independent copy run in the mirrored
// direction (increments negated), which preserves the one-cell increment law
// across the whole line.
struct EnvWindow {
    double x_left = 0.0;
    double step = 0.0;
    std::size_t i0 = 0;          // grid index of x = 0
    std::vector<double> v;

    double x_at(std::size_t i) const { return x_left + static_cast<double>(i) * step; }
    std::size_t size() const { return v.size(); }
    double x_right() const { return x_at(v.size() - 1); }
};

EnvWindow make_env_window(const LevyModel& m, double x_left, double x_right, double step,
                          std::uint64_t seed);

// One draw of the exponential functional int_0^inf exp(V(u)) du, truncated at
// the stopping level where the remaining tail is negligible: integration stops
// once V <= -(tail_cut + log(1e6)/kappa_root), so the neglected mass is below
// exp(-tail_cut) times an independent copy with probability 1 - 1e-6.
double exp_functional_sample(const LevyModel& m, double step, Rng& rng, double tail_cut = 40.0);

std::vector<double> exp_functional_samples(const LevyModel& m, int n_paths, double step,
                                           std::uint64_t seed, double tail_cut = 40.0);

struct TailEstimate {
    std::vector<double> x;       // grid
    std::vector<double> p_hat;   // P(sample >= x)
    std::vector<double> p_err;   // binomial standard error
    double slope = 0.0;          // log p vs log x regression slope
    double slope_se = 0.0;
    double intercept = 0.0;
    bool tail_undersampled = false;  // fewer than 30 exceedances at largest x
};

// Tail of the exponential functional from n_paths Monte Carlo draws. If x_grid
// is empty, an upper-quantile grid is chosen from the sample itself.
TailEstimate exp_functional_tail(const LevyModel& m, int n_paths, std::vector<double> x_grid,
                                 double step, std::uint64_t seed, double tail_cut = 40.0);

TailEstimate tail_estimate_from_samples(const std::vector<double>& samples,
                                        std::vector<double> x_grid);

}  // namespace simlab
