#pragma once

#include <cstdint>
#include <vector>

#include "simlab/levy_env.hpp"

namespace simlab {

// Up:      environment conditioned to stay positive (transient upward).
// DualUp:  the dual (negated) environment conditioned to stay positive.
enum class Direction { Up, DualUp };

struct ConditionedPath {
    LevyPath base;  // values[0] = start_eps; all retained values > 0
    Direction direction = Direction::Up;
    double start_eps = 0.0;
    double stop_level = 0.0;
};

// Conditioning is realized by staged rejection: the path must reach each
// intermediate level before touching <= 0, which composes (strong Markov) to
// exactly the single conditioning {reach stop_level before <= 0}. Stages keep
// the retry cost additive in stop_level instead of exponential. Gaussian cells
// additionally use a Brownian-bridge sub-step kill, making the positivity
// conditioning exact for the continuous path rather than the grid skeleton.
// eps <= 0 selects the default start 10 * step * (one-cell noise scale).
ConditionedPath sample_conditioned(const LevyModel& m, Direction dir, double stop_level,
                                   double step, std::uint64_t seed, double eps = 0.0);

// Trapezoid of exp(-values) over the retained segment.
double exp_functional(const ConditionedPath& p);

// n draws of int exp(-path) truncated at the first crossing of
// truncation_level. Requires truncation_level >= 20 so the neglected tail is
// below exp(-truncation_level) times an independent copy.
std::vector<double> sample_exp_functional(const LevyModel& m, Direction dir, int n,
                                          double truncation_level, double step,
                                          std::uint64_t seed);

// R = (functional of the Up copy) + (functional of an independent DualUp copy).
std::vector<double> sample_R(const LevyModel& m, int n, double truncation_level, double step,
                             std::uint64_t seed);

struct LaplaceEstimate {
    double value = 0.0;
    double std_err = 0.0;
};

LaplaceEstimate laplace_transform(const std::vector<double>& samples, double lambda);

struct LeftTailFit {
    double exponent_hat = 0.0;   // q in -log P(X <= x) ~ A x^{-q}, free fit
    double alpha_hat = 0.0;      // 1 + 1/q
    double amplitude_pinned = 0.0;  // A with q pinned by the caller
    int n_tail_points = 0;
};

// Fits the lowest decile of the sample; requires >= 100 points there.
// q_pinned is the exponent used for the amplitude estimate.
LeftTailFit left_tail_regression(const std::vector<double>& samples, double q_pinned);

}  // namespace simlab
