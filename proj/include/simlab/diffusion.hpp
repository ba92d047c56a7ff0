#pragma once

#include <cstdint>
#include <vector>

#include "simlab/levy_env.hpp"
#include "simlab/valley.hpp"

namespace simlab {

// Quenched diffusion in a potential landscape, simulated as a Brownian motion
// in the scale coordinate with an exact per-substep physical clock: the scale
// step is sized so that every substep advances physical time by exactly
// `time_step`, which keeps the spatial stride ~sqrt(time_step) uniformly over
// deep valleys. Occupation is accumulated as linearly-split node masses on the
// environment grid; dividing by the grid spacing gives the local-time field.

struct Checkpoint {
    double level = 0.0;  // record state at the first hit of this level
    double x_lo = 0.0;   // occupation window to total at that moment
    double x_hi = 0.0;
};

struct CheckpointHit {
    double time = 0.0;
    double window_occupation = 0.0;
    bool reached = false;
};

struct DiffusionConfig {
    double t_max = 1.0;
    double time_step = 1e-3;  // physical-clock increment per substep
    double kernel_eps = 0.0;  // local-time smoothing half-width; 0 -> 4 * grid step
    double start_x = 0.0;
    double stop_at_level = 0.0;  // used only when stop_enabled
    bool stop_enabled = false;
    double renorm_band = 12.0;  // re-anchor the scale frame when |V - V_ref| exceeds this
    int n_records = 0;          // evenly spaced smoothed local-time snapshots
    int record_positions = 0;   // evenly spaced position samples over [0, t_max]
    std::vector<double> track_levels;  // first-hitting-time map
    std::vector<Checkpoint> checkpoints;
    bool track_b_occupation = false;  // scale-side occupation; requires a single anchor epoch
};

struct DiffusionSnapshot {
    double time = 0.0;
    double total_mass = 0.0;  // integral of the smoothed field; equals elapsed time
    double lstar = 0.0;       // max of the smoothed local-time field
    double lstar_right = 0.0;  // same, restricted to x >= 0
    std::vector<double> field;
};

struct DiffusionTrace {
    double step = 0.0;    // environment grid spacing
    double x_left = 0.0;  // environment grid origin
    double t_end = 0.0;
    double x_end = 0.0;
    bool stopped_at_level = false;
    std::vector<double> occupation;  // node masses; sum equals t_end
    std::vector<double> positions;   // sampled every t_max / record_positions
    std::vector<DiffusionSnapshot> snapshots;
    std::vector<double> tracked_levels;
    std::vector<double> hit_times;  // aligned with tracked_levels; NaN when unreached
    std::vector<CheckpointHit> checkpoint_hits;
    std::vector<double> b_occupation;  // scale-side node masses (single-epoch runs only)
    double b_left = 0.0;               // scale-grid origin; spacing equals `step`
};

// Cumulative trapezoid of exp(v) with value 0 at the first node.
std::vector<double> scale_function(const std::vector<double>& v, double step);

// Runs the walk until t_max, the stop level, or window exhaustion (which
// throws: the caller sized the environment window too small).
DiffusionTrace simulate_diffusion(const EnvWindow& env, const DiffusionConfig& cfg,
                                  std::uint64_t seed);

// Smoothed local-time field occ/(grid step) averaged over a +-eps window.
std::vector<double> local_time_field(const DiffusionTrace& trace, double eps);

// First hitting time of a tracked level (NaN if never reached; throws if the
// level was not in track_levels).
double hitting_time(const DiffusionTrace& trace, double level);

// Local time at a grid node estimated from the occupation mass of a small
// window, divided by the window's potential weight sum(exp(-(v - v_center)));
// the potential factor cancels the window-shape bias to first order.
double window_local_time(const DiffusionTrace& trace, const EnvWindow& env, std::size_t center,
                         double halfwidth);

struct LegObservables {
    double e_hat = 0.0;             // local time at the bottom / valley area
    double local_time_bottom = 0.0;
    double time_increment = 0.0;    // duration of the leg
    bool traversed = false;         // leg reached its stop level
};

// Observables of one anchor-to-anchor leg run with stop_at_level at the
// valley's exit point; valley indices refer to the same grid as `env`.
LegObservables leg_observables(const DiffusionTrace& trace, const EnvWindow& env,
                               const ValleyRecord& rec, double window_halfwidth);

}  // namespace simlab
