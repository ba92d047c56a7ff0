#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "simlab/levy_env.hpp"

namespace simlab {

// Alternating h-extrema of a grid path: each reported h-minimum x has
// witnesses u < x < v with path >= path(x) on [u, v] and both endpoint values
// >= path(x) + h (symmetrically for maxima). Boundary extrema lacking an
// outer witness are not reported. Ties break toward the smaller index.
struct HExtremaScan {
    double h = 0.0;
    std::vector<std::size_t> minima;
    std::vector<std::size_t> maxima;
};

HExtremaScan scan_h_extrema(const std::vector<double>& v, double h);

// One valley of depth h, built by the stopping-time recursion:
//   L_sharp: first point after the previous anchor where the path has dropped
//            by exp((1-delta)*kappa*h) below the anchor value;
//   tau_h:   first point >= L_sharp rising h above the running minimum;
//   m:       (earliest) argmin on [L_sharp, tau_h];
//   L:       first point after tau_h back within h/2 of the bottom value;
//   tau_minus/tau_plus: last point before / first point after m at height
//            h/2 above the bottom (tau_minus may precede L_sharp when the
//            post-L_sharp descent is shallower than h/2 — the anchor value is
//            always deep enough to stop the backward scan).
// All indices are grid indices relative to the scanned array.
struct ValleyRecord {
    int index = 0;  // 1-based
    std::size_t i_L_prev = 0, i_L_sharp = 0, i_tau_minus = 0, i_m = 0;
    std::size_t i_tau_plus = 0, i_tau_h = 0, i_L = 0;
    double v_at_m = 0.0;
    double S = 0.0;    // int e^{v - v(m)} over [tau_plus, L]
    double R = 0.0;    // int e^{-(v - v(m))} over [tau_minus, tau_plus]
    double A_L = 0.0;  // int e^{v - v(m)} over [m, L]
    double depth_h = 0.0;
};

struct ValleySet {
    double h = 0.0, delta = 0.0, kappa = 0.0, step = 0.0;
    std::vector<ValleyRecord> valleys;
    bool exhausted = false;  // recursion ran off the grid before the next valley completed
};

// Default delta keeps (1+3*delta)*kappa < 1 with margin in the slow regime.
double default_valley_delta(double kappa);

ValleySet standard_valleys_grid(const std::vector<double>& v, double step, double h, double delta,
                                double kappa);
// delta <= 0 selects the default; kappa comes from the path's model.
ValleySet standard_valleys(const LevyPath& env, double h, double delta = 0.0);

// First / last crossing helpers for intermediate heights a in [0, h] above the
// bottom of a valley (grid reading of the continuous crossing).
std::size_t valley_tau_plus(const std::vector<double>& v, const ValleyRecord& rec, double a);
std::size_t valley_tau_minus(const std::vector<double>& v, const ValleyRecord& rec, double a);

// Streams n consecutive valleys from one environment stream. Consecutive
// valleys are iid (the recursion restarts at the stopping time L), so this is
// an iid sampler of the single-valley law; only one valley span is buffered
// at a time. Record indices are relative to each valley's own anchor.
struct StreamedValleys {
    double h = 0.0, delta = 0.0, kappa = 0.0, step = 0.0;
    std::vector<ValleyRecord> valleys;
    std::vector<double> spacings;  // (L_j - L_{j-1}) in x units
};

StreamedValleys stream_valleys(const LevyModel& m, double h, double delta, double step, int n,
                               std::uint64_t seed);

// Renewal bookkeeping over per-valley triples (e_j, S_j, R_j).
struct RenewalSequence {
    std::vector<double> e, S, R;  // equal lengths
    double t_scale = 1.0;         // the normalizing t
    double kappa_phi = 1.0;       // count scale: index cutoff is floor(s * kappa_phi)
};

// Partial sums (1/t) sum_{j <= floor(s*kappa_phi)} (e_j S_j, e_j S_j R_j).
std::pair<double, double> y_processes(const RenewalSequence& seq, double s);

// Smallest 1-based j with sum_{i<=j} e_i S_i R_i > a * t_scale; n+1 when the
// total never exceeds the threshold.
int overshoot_index(const RenewalSequence& seq, double a);

// Largest e_j S_j / t over j strictly before the overshoot index (0 on empty);
// the closed variant includes the overshoot index itself (capped at n).
double sup_before_crossing(const RenewalSequence& seq, double b);
double sup_at_crossing(const RenewalSequence& seq, double b);

// Tail table of the per-valley contributions at scale t = e^{h+phi}:
// c1(x) = x^kappa e^{kappa phi} P(eS/t > x) should plateau (same for the eSR
// variant), and the ratio of the two plateaus estimates E[R^kappa].
struct ValleyTailTable {
    std::vector<double> x, c1_curve;
    std::vector<double> y, c2_curve;
    double c1 = 0.0, c2 = 0.0;      // plateau medians
    double ratio = 0.0;             // c2 / c1
    double r_kappa_mean = 0.0;      // direct estimate of E[R^kappa]
    double slope = 0.0, slope_se = 0.0;  // log P(eS/t > x) vs log x
    double flatness = 0.0;          // plateau relative spread
    bool plateau_flat = false;      // flatness <= 0.5
    double exp_moment_r = 0.0;      // E[e^{0.1 R}] stability probe
    int n_valleys = 0;
};

ValleyTailTable tail_statistics(const LevyModel& m, double h, double phi, double delta,
                                double step, int n_valleys, std::uint64_t seed);

// Exponential-shape check of valley spacings, one row per depth h, plus the
// growth rate of log mean spacing in h (the kappa estimate).
struct SpacingReport {
    std::vector<double> h_values;
    std::vector<double> mean_spacing;
    std::vector<double> ks_p;  // KS p-value vs the mean-fitted exponential, per h
    double slope = 0.0, slope_se = 0.0;  // log mean spacing regressed on h
};

SpacingReport valley_spacing_check(const LevyModel& m, const std::vector<double>& h_values,
                                   double delta, double step, int n_spacings,
                                   std::uint64_t seed);

}  // namespace simlab
