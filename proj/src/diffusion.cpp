#include "simlab/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

#include "simlab/rng.hpp"
#include "simlab/stats.hpp"

namespace simlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kExpArgCap = 600.0;   // keeps exp() finite on far-field cells
constexpr double kScaleSat = 1e290;    // saturated scale values act as hard walls
constexpr std::size_t kPadCells = 1024;
constexpr std::size_t kBlockCells = 4096;

constexpr double kSqrt2Pi = 2.5066282746310005;
constexpr double kPhi0 = 0.3989422804014327;  // standard normal density at zero

// Stop-barrier step control: a step's sigma never exceeds this fraction of the
// remaining scale distance to the barrier, so crossing is a >= 4 sigma event
// and the approach to absorption completes in logarithmically many steps.
constexpr double kStopSigmaFrac = 0.25;
// Interior landings with barrier exponent W below this are candidates for a
// mid-step kill (probability e^{-W}); beyond it the kill chance is < 1e-13.
constexpr double kKillCap = 30.0;
// Barrier-reflection terms are evaluated only when W is below this; beyond it
// they change the charge by < 1e-15 relatively.
constexpr double kReflectCap = 36.0;
// Bridge tails are truncated where their remaining mass is e^{-kTailCap/2}.
constexpr double kTailCap = 60.0;

double clamped_exp(double arg) { return std::exp(std::clamp(arg, -kExpArgCap, kExpArgCap)); }

// Upper-tail primitives of the standard normal, each premultiplied by
// e^{z^2/2} so they stay finite and full-precision for arbitrarily large z.
// qexp(z) = Q(z) e^{z^2/2}; the series is the usual continued-fraction
// asymptotic, accurate to ~1e-16 once z >= 25.
double qexp(double z) {
    if (z < 25.0) return 0.5 * std::erfc(z / M_SQRT2) * std::exp(0.5 * z * z);
    const double iz2 = 1.0 / (z * z);
    return (1.0 - iz2 * (1.0 - 3.0 * iz2 * (1.0 - 5.0 * iz2))) / (z * kSqrt2Pi);
}

// Q(z + w) e^{z^2/2} for w >= 0, evaluated without forming e^{z^2/2} itself.
double qexp_shift(double z, double w) {
    const double zw = z * w + 0.5 * w * w;
    if (zw > 700.0) return 0.0;
    return qexp(z + w) * std::exp(-zw);
}

// e^{z^2/2} * int_{z+w}^inf Q(u) du for w >= 0; the integral of qexp_shift.
double qexp_int(double z, double w) {
    const double zw = z * w + 0.5 * w * w;
    if (zw > 700.0) return 0.0;
    const double y = z + w;
    double core;
    if (y < 12.0) {
        core = kPhi0 - y * qexp(y);
    } else {
        const double iy2 = 1.0 / (y * y);
        core = kPhi0 * iy2 * (1.0 - 3.0 * iy2 * (1.0 - 5.0 * iy2));
    }
    return std::exp(-zw) * core;
}

// Scale coordinate relative to a local potential anchor. The walk lives in
// b = int exp(v - v_ref); the frame covers a lazily grown node range
// [base, base + a.size()) of the environment grid and is rebuilt whenever the
// potential drifts renorm_band away from v_ref (the generator is invariant
// under constant potential shifts, so re-anchoring is a Markov restart, not an
// approximation). The parallel prefix q = int exp(-(v - v_ref)) dx converts a
// per-unit-scale occupation density into real time: exp(-2(v-v_ref)) db equals
// exp(-(v-v_ref)) dx cell by cell.
struct ScaleFrame {
    const std::vector<double>* v = nullptr;
    double step = 0.0;
    double v_ref = 0.0;
    std::size_t base = 0;
    std::vector<double> a;  // a[k] = scale value at node base + k
    std::vector<double> q;  // q[k] = charge prefix at node base + k

    double cell_weight(std::size_t g) const {
        const double e0 = clamped_exp((*v)[g] - v_ref);
        const double e1 = clamped_exp((*v)[g + 1] - v_ref);
        return 0.5 * (e0 + e1) * step;
    }

    double cell_charge(std::size_t g) const {
        const double e0 = clamped_exp(-((*v)[g] - v_ref));
        const double e1 = clamped_exp(-((*v)[g + 1] - v_ref));
        return 0.5 * (e0 + e1) * step;
    }

    double at(std::size_t g) const { return a[g - base]; }
    double qat(std::size_t g) const { return q[g - base]; }
    std::size_t last_node() const { return base + a.size() - 1; }

    bool grow_right() {
        const std::size_t n = v->size();
        std::size_t hi = last_node();
        if (hi + 1 >= n) return false;
        const std::size_t add = std::min(kBlockCells, n - 1 - hi);
        for (std::size_t k = 0; k < add; ++k, ++hi) {
            a.push_back(std::min(a.back() + cell_weight(hi), kScaleSat));
            q.push_back(std::min(q.back() + cell_charge(hi), kScaleSat));
        }
        return true;
    }

    bool grow_left() {
        if (base == 0) return false;
        const std::size_t add = std::min(kBlockCells, base);
        std::vector<double> pre_a(add), pre_q(add);
        double cur_a = a.front();
        double cur_q = q.front();
        for (std::size_t k = add; k-- > 0;) {
            const std::size_t g = base - (add - k);
            cur_a = std::max(cur_a - cell_weight(g), -kScaleSat);
            cur_q = std::max(cur_q - cell_charge(g), -kScaleSat);
            pre_a[k] = cur_a;
            pre_q[k] = cur_q;
        }
        a.insert(a.begin(), pre_a.begin(), pre_a.end());
        q.insert(q.begin(), pre_q.begin(), pre_q.end());
        base -= add;
        return true;
    }

    // Rebuilds around grid cell g with the anchor potential v_anchor.
    void rebuild(std::size_t g, double v_anchor) {
        v_ref = v_anchor;
        base = g > kPadCells ? g - kPadCells : 0;
        a.assign(1, 0.0);
        q.assign(1, 0.0);
        std::size_t hi = base;
        const std::size_t want = std::min(g + kPadCells + 1, v->size() - 1);
        while (hi < want) {
            a.push_back(std::min(a.back() + cell_weight(hi), kScaleSat));
            q.push_back(std::min(q.back() + cell_charge(hi), kScaleSat));
            ++hi;
        }
    }
};

double lerp_at(const std::vector<double>& v, std::size_t g, double frac) {
    return v[g] + (v[g + 1] - v[g]) * frac;
}

}  // namespace

std::vector<double> scale_function(const std::vector<double>& v, double step) {
    if (v.size() < 2) throw std::invalid_argument("need at least two grid nodes");
    std::vector<double> a(v.size());
    a[0] = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        a[i + 1] = a[i] + 0.5 * (std::exp(v[i]) + std::exp(v[i + 1])) * step;
    }
    return a;
}

DiffusionTrace simulate_diffusion(const EnvWindow& env, const DiffusionConfig& cfg,
                                  std::uint64_t seed) {
    const std::vector<double>& v = env.v;
    const double dx = env.step;
    const std::size_t n = v.size();
    if (n < 8) throw std::invalid_argument("environment window too small");
    if (!(cfg.time_step > 0.0)) throw std::invalid_argument("time_step must be > 0");
    if (!(cfg.t_max > 0.0)) throw std::invalid_argument("t_max must be > 0");
    if (!(cfg.renorm_band > 0.0)) throw std::invalid_argument("renorm_band must be > 0");

    const double eps = cfg.kernel_eps > 0.0 ? cfg.kernel_eps : 4.0 * dx;
    const double guard_lo = env.x_left + eps + 2.0 * dx;
    const double guard_hi = env.x_right() - eps - 2.0 * dx;
    if (!(guard_lo < guard_hi) || cfg.start_x <= guard_lo || cfg.start_x >= guard_hi) {
        throw std::invalid_argument("start position outside the usable window");
    }

    DiffusionTrace tr;
    tr.step = dx;
    tr.x_left = env.x_left;
    tr.occupation.assign(n, 0.0);
    tr.tracked_levels = cfg.track_levels;
    tr.hit_times.assign(cfg.track_levels.size(), kNaN);
    tr.checkpoint_hits.assign(cfg.checkpoints.size(), CheckpointHit{});

    // Hitting levels split by side of the start, each consumed in order.
    std::vector<std::pair<double, std::size_t>> ups, downs;
    for (std::size_t i = 0; i < cfg.track_levels.size(); ++i) {
        if (cfg.track_levels[i] >= cfg.start_x) {
            ups.emplace_back(cfg.track_levels[i], i);
        } else {
            downs.emplace_back(cfg.track_levels[i], i);
        }
    }
    std::sort(ups.begin(), ups.end());
    std::sort(downs.begin(), downs.end(), std::greater<>());
    std::size_t up_ptr = 0, down_ptr = 0;

    const double dt = cfg.time_step;
    const double pos_dt = cfg.record_positions > 0
                              ? cfg.t_max / static_cast<double>(cfg.record_positions)
                              : 0.0;
    const double snap_dt =
        cfg.n_records > 0 ? cfg.t_max / static_cast<double>(cfg.n_records) : 0.0;
    int pos_due = 1, snap_due = 1;
    std::size_t checkpoints_left = cfg.checkpoints.size();

    Rng rng(seed);
    ScaleFrame frame;
    frame.v = &v;
    frame.step = dx;

    double x_cur = cfg.start_x;
    auto cell_of = [&](double x) {
        auto g = static_cast<std::size_t>(
            std::clamp((x - env.x_left) / dx, 0.0, static_cast<double>(n - 2)));
        return std::min(g, n - 2);
    };
    std::size_t g_cur = cell_of(x_cur);
    double frac = std::clamp((x_cur - env.x_at(g_cur)) / dx, 0.0, 1.0);
    frame.rebuild(g_cur, lerp_at(v, g_cur, frac));
    double b_cur = frame.at(g_cur) + frac * (frame.at(g_cur + 1) - frame.at(g_cur));

    if (cfg.track_b_occupation) {
        tr.b_occupation.assign(n, 0.0);
        tr.b_left = b_cur - (x_cur - env.x_left);
    }

    // Levels and checkpoints already at the start position resolve at t = 0.
    while (up_ptr < ups.size() && ups[up_ptr].first <= cfg.start_x) {
        tr.hit_times[ups[up_ptr].second] = 0.0;
        ++up_ptr;
    }
    for (std::size_t c = 0; c < cfg.checkpoints.size(); ++c) {
        if (cfg.checkpoints[c].level == cfg.start_x) {
            tr.checkpoint_hits[c].reached = true;
            tr.checkpoint_hits[c].time = 0.0;
            tr.checkpoint_hits[c].window_occupation = 0.0;
            --checkpoints_left;
        }
    }

    auto take_snapshot = [&](double t_now) {
        DiffusionSnapshot snap;
        snap.time = t_now;
        std::vector<double> density(n);
        for (std::size_t i = 0; i < n; ++i) density[i] = tr.occupation[i] / dx;
        snap.field = stats::kernel_smooth(density, dx, eps);
        double mass = 0.0, peak = 0.0, peak_right = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mass += snap.field[i];
            peak = std::max(peak, snap.field[i]);
            if (i >= env.i0) peak_right = std::max(peak_right, snap.field[i]);
        }
        snap.total_mass = mass * dx;
        snap.lstar = peak;
        snap.lstar_right = peak_right;
        tr.snapshots.push_back(std::move(snap));
    };

    // First node at/past the stop level. A step whose scale path carries the
    // walker across this node is cut there: cells beyond the stop are never
    // walked or charged, so a window sized tightly past the stop cannot be
    // exhausted by the very jump that crosses it.
    std::size_t stop_node = 0;
    bool stop_up = false, stop_down = false;
    if (cfg.stop_enabled) {
        const double pos = (cfg.stop_at_level - env.x_left) / dx;
        if (cfg.stop_at_level >= cfg.start_x) {
            stop_up = true;
            stop_node = static_cast<std::size_t>(
                std::clamp(std::ceil(pos - 1e-9), 0.0, static_cast<double>(n - 1)));
        } else {
            stop_down = true;
            stop_node = static_cast<std::size_t>(
                std::clamp(std::floor(pos + 1e-9), 0.0, static_cast<double>(n - 1)));
        }
    }

    // Absorption at the stop is exact in law: walks whose endpoint crosses the
    // stop node are cut there, interior landings are killed mid-step with the
    // Brownian-bridge crossing probability e^{-W}, W = 2(L-a)(L-b)/du, and the
    // step-sigma cap above makes the remaining approach geometric. Each
    // surviving step charges real time with the killed-bridge local-time
    // kernel: per unit scale at y,
    //   rho(y) = sqrt(2 pi du) e^{z^2/2} [Q(alpha/s) - Q(alpha2/s)] / (1-e^{-W})
    // with s = sqrt(du), z = |b-a|/s, alpha = |y-a|+|y-b| and alpha2 the
    // barrier-reflected distance. rho integrates to exactly du, vanishes at the
    // barrier, and its conditional mean given the step endpoints equals the
    // true bridge occupation, so occupation and the clock are unbiased at any
    // time step and agree with each other identically. Reflection terms are
    // applied for stops above the start (the only direction the library's
    // callers use at coarse du); stops below still stop exactly but charge
    // with the unreflected kernel.
    double t = 0.0;
    bool stopped = false;
    double v_here = lerp_at(v, g_cur, frac);
    while (!stopped && t < cfg.t_max) {
        double du = dt * clamped_exp(2.0 * (v_here - frame.v_ref));
        if (cfg.stop_enabled) {
            // Lower bound on the scale distance to the stop, growing the frame
            // toward it until the bound is decisive for the sigma cap and the
            // kill test (8 sigma covers any realistic endpoint).
            const double need = 8.0 * std::sqrt(du);
            double dist;
            if (stop_up) {
                while (frame.last_node() < stop_node &&
                       frame.at(frame.last_node()) - b_cur < need && frame.grow_right()) {
                }
                dist = frame.at(std::min(stop_node, frame.last_node())) - b_cur;
            } else {
                while (frame.base > stop_node && b_cur - frame.at(frame.base) < need &&
                       frame.grow_left()) {
                }
                dist = b_cur - frame.at(std::max(stop_node, frame.base));
            }
            const double cap = kStopSigmaFrac * dist;
            du = std::min(du, std::max(cap * cap, 1e-300));
        }
        const double s = std::sqrt(du);
        double b_new = b_cur + s * rng.normal();

        const std::size_t g_prev = g_cur;
        const double frac_prev = frac;
        bool stop_hit = false;

        // Locate the scale cell containing b_new, growing the frame as needed;
        // running off the environment grid means the window was sized too small.
        for (;;) {
            if (g_cur + 1 > frame.last_node()) {
                if (!frame.grow_right()) throw std::runtime_error("environment window exhausted");
            }
            if (b_new > frame.at(g_cur + 1)) {
                if (g_cur + 2 >= n) throw std::runtime_error("environment window exhausted");
                ++g_cur;
                if (g_cur + 1 > frame.last_node() && !frame.grow_right()) {
                    throw std::runtime_error("environment window exhausted");
                }
                if (stop_up && g_cur >= stop_node) {
                    b_new = frame.at(g_cur);
                    stop_hit = true;
                    break;
                }
            } else if (b_new < frame.at(g_cur)) {
                if (g_cur == 0) throw std::runtime_error("environment window exhausted");
                if (g_cur - 1 < frame.base && !frame.grow_left()) {
                    throw std::runtime_error("environment window exhausted");
                }
                --g_cur;
                if (stop_down && g_cur + 1 <= stop_node) {
                    b_new = frame.at(g_cur + 1);
                    stop_hit = true;
                    break;
                }
            } else {
                break;
            }
        }

        // Barrier data for this step, valid only while the stop node lies in
        // the frame (it always does once the barrier is within a few sigma).
        const bool bar_cover = cfg.stop_enabled && stop_node >= frame.base &&
                               stop_node <= frame.last_node();
        const double bs = bar_cover ? frame.at(stop_node) : 0.0;
        bool killed = false;
        if (!stop_hit && bar_cover) {
            const double W = 2.0 * (bs - b_cur) * (bs - b_new) / du;
            if (W < kKillCap && rng.uniform01() < std::exp(-W)) {
                stop_hit = true;
                killed = true;  // crossed mid-step; endpoint relocates after charging
            }
        }

        const double width = frame.at(g_cur + 1) - frame.at(g_cur);
        frac = width > 0.0 ? std::clamp((b_new - frame.at(g_cur)) / width, 0.0, 1.0) : 0.5;
        double x_new = env.x_left + (static_cast<double>(g_cur) + frac) * dx;
        if (x_new < guard_lo || x_new > guard_hi) {
            throw std::runtime_error("environment window exhausted");
        }

        // ---- killed-bridge charge ----
        const double a0 = b_cur, b0 = b_new;
        const double z = std::abs(b0 - a0) / s;
        bool use_b = false;
        double norm = 1.0, rho_b_hi = 0.0;
        if (stop_up && bar_cover) {
            const double W = 2.0 * (bs - a0) * (bs - b0) / du;
            use_b = W < kReflectCap;
            if (use_b) {
                norm = 1.0 / (1.0 - std::exp(-std::max(W, 1e-14)));
                rho_b_hi = s * kSqrt2Pi * qexp_shift(z, 2.0 * (bs - std::max(a0, b0)) / s);
            }
        }
        const double rho_in = s * kSqrt2Pi * qexp(z);
        const double pref = du * 0.5 * kSqrt2Pi;
        const double wcap = z >= kKillCap ? 0.0 : -z + std::sqrt(z * z + kTailCap);
        double dtau = 0.0;
        auto deposit = [&](std::size_t cell, double fa, double fb, double mass) {
            if (!(mass > 0.0)) return;
            dtau += mass;
            const double mid = 0.5 * (fa + fb);
            tr.occupation[cell] += mass * (1.0 - mid);
            tr.occupation[cell + 1] += mass * mid;
        };

        std::size_t glo, ghi;
        double flo, fhi;
        const bool up_step = g_cur > g_prev || (g_cur == g_prev && frac >= frac_prev);
        if (up_step) {
            glo = g_prev, flo = frac_prev, ghi = g_cur, fhi = frac;
        } else {
            glo = g_cur, flo = frac, ghi = g_prev, fhi = frac_prev;
        }
        const double b_lo = frame.at(glo) + flo * (frame.at(glo + 1) - frame.at(glo));
        const double b_hi = frame.at(ghi) + fhi * (frame.at(ghi + 1) - frame.at(ghi));

        // Between the endpoints the unreflected density is the constant rho_in.
        // The reflection density is constant too when the span lies at or above
        // the step start (upward steps), and varies linearly below the start
        // (downward steps), where it integrates to qexp_int differences.
        if (up_step || !use_b) {
            const double dens = std::max(0.0, rho_in - rho_b_hi) * norm;
            if (glo == ghi) {
                const double vm = lerp_at(v, glo, 0.5 * (flo + fhi));
                deposit(glo, flo, fhi,
                        dens * (fhi - flo) * (frame.at(glo + 1) - frame.at(glo)) *
                            clamped_exp(-2.0 * (vm - frame.v_ref)));
            } else {
                deposit(glo, flo, 1.0, dens * (1.0 - flo) * (frame.qat(glo + 1) - frame.qat(glo)));
                for (std::size_t cc = glo + 1; cc < ghi; ++cc) {
                    deposit(cc, 0.0, 1.0, dens * (frame.qat(cc + 1) - frame.qat(cc)));
                }
                deposit(ghi, 0.0, fhi, dens * fhi * (frame.qat(ghi + 1) - frame.qat(ghi)));
            }
        } else {
            auto w_refl = [&](double y) { return ((a0 - y) + (2.0 * bs - b0 - y)) / s - z; };
            auto span_piece = [&](std::size_t cc, double fa, double fb) {
                if (fb <= fa) return;
                const double c0 = frame.at(cc), c1 = frame.at(cc + 1);
                const double y0 = c0 + fa * (c1 - c0), y1 = c0 + fb * (c1 - c0);
                const double vm = lerp_at(v, cc, 0.5 * (fa + fb));
                const double A = rho_in * (y1 - y0);
                const double B = pref * (qexp_int(z, w_refl(y1)) - qexp_int(z, w_refl(y0)));
                deposit(cc, fa, fb,
                        std::max(0.0, A - B) * norm * clamped_exp(-2.0 * (vm - frame.v_ref)));
            };
            if (glo == ghi) {
                span_piece(glo, flo, fhi);
            } else {
                span_piece(glo, flo, 1.0);
                for (std::size_t cc = glo + 1; cc < ghi; ++cc) span_piece(cc, 0.0, 1.0);
                span_piece(ghi, 0.0, fhi);
            }
        }

        // Upward tail: unreflected density decays as qexp_int increments; the
        // reflection density is constant there. Never charged at or past an
        // upward stop node.
        {
            const std::size_t up_limit = stop_up ? stop_node : n - 1;
            std::size_t cc = ghi;
            double fa = fhi, w0 = 0.0;
            while (cc < up_limit && w0 < wcap) {
                if (cc + 1 > frame.last_node() && !frame.grow_right()) break;
                const double w1 = 2.0 * (frame.at(cc + 1) - b_hi) / s;
                const double w1c = std::min(std::max(w1, w0), wcap);
                const double y0 = b_hi + 0.5 * w0 * s, y1 = b_hi + 0.5 * w1c * s;
                const double vm = 0.5 * (lerp_at(v, cc, fa) + v[cc + 1]);
                const double A = pref * (qexp_int(z, w0) - qexp_int(z, w1c));
                const double B = use_b ? rho_b_hi * (y1 - y0) : 0.0;
                deposit(cc, fa, 1.0,
                        std::max(0.0, A - B) * norm * clamped_exp(-2.0 * (vm - frame.v_ref)));
                if (w1 >= wcap || cc + 2 >= n) break;
                w0 = std::max(w1, w0);
                ++cc;
                fa = 0.0;
            }
        }

        // Downward tail: both densities decay; the reflected one starts from
        // its in-span offset. Never charged at or past a downward stop node.
        {
            const double w_b0 =
                use_b ? ((a0 - b_lo) + (2.0 * bs - b0 - b_lo)) / s - z : 0.0;
            const std::size_t down_limit = stop_down ? stop_node : 0;
            std::size_t cc = glo;
            double fb = flo, w0 = 0.0;
            while (w0 < wcap) {
                const double w1 = 2.0 * (b_lo - frame.at(cc)) / s;
                const double w1c = std::min(std::max(w1, w0), wcap);
                const double vm = 0.5 * (v[cc] + lerp_at(v, cc, fb));
                const double A = pref * (qexp_int(z, w0) - qexp_int(z, w1c));
                const double B =
                    use_b ? pref * (qexp_int(z, w_b0 + w0) - qexp_int(z, w_b0 + w1c)) : 0.0;
                deposit(cc, 0.0, fb,
                        std::max(0.0, A - B) * norm * clamped_exp(-2.0 * (vm - frame.v_ref)));
                if (w1 >= wcap || cc <= down_limit) break;
                if (cc - 1 < frame.base && !frame.grow_left()) break;
                --cc;
                fb = 1.0;
                w0 = std::max(w1, w0);
            }
        }

        t += dtau;

        if (killed) {
            // Relocate the endpoint to the barrier node so the trace ends at
            // the stop level exactly as a cut walk would.
            g_cur = std::min(stop_node, n - 2);
            frac = stop_node == n - 1 ? 1.0 : 0.0;
            if (g_cur + 1 > frame.last_node()) frame.grow_right();
            if (g_cur < frame.base) frame.grow_left();
            b_new = bs;
            x_new = env.x_left + (static_cast<double>(g_cur) + frac) * dx;
        }

        if (cfg.track_b_occupation) {
            const double bpos = (b_new - tr.b_left) / dx;
            const auto ib = static_cast<std::ptrdiff_t>(std::floor(bpos));
            if (ib < 0 || ib + 1 >= static_cast<std::ptrdiff_t>(n)) {
                throw std::runtime_error("environment window exhausted");
            }
            const double fb = bpos - static_cast<double>(ib);
            tr.b_occupation[static_cast<std::size_t>(ib)] += (1.0 - fb) * du;
            tr.b_occupation[static_cast<std::size_t>(ib) + 1] += fb * du;
        }

        while (cfg.record_positions > 0 && pos_due <= cfg.record_positions &&
               t >= pos_due * pos_dt - 1e-9 * dt) {
            tr.positions.push_back(x_new);
            ++pos_due;
        }
        while (cfg.n_records > 0 && snap_due <= cfg.n_records &&
               t >= snap_due * snap_dt - 1e-9 * dt) {
            take_snapshot(t);
            ++snap_due;
        }
        while (up_ptr < ups.size() && x_new >= ups[up_ptr].first) {
            tr.hit_times[ups[up_ptr].second] = t;
            ++up_ptr;
        }
        while (down_ptr < downs.size() && x_new <= downs[down_ptr].first) {
            tr.hit_times[downs[down_ptr].second] = t;
            ++down_ptr;
        }
        if (checkpoints_left > 0) {
            for (std::size_t c = 0; c < cfg.checkpoints.size(); ++c) {
                if (tr.checkpoint_hits[c].reached) continue;
                const Checkpoint& cp = cfg.checkpoints[c];
                const bool crossed =
                    cp.level >= cfg.start_x ? x_new >= cp.level : x_new <= cp.level;
                if (!crossed) continue;
                CheckpointHit& hit = tr.checkpoint_hits[c];
                hit.reached = true;
                hit.time = t;
                const std::size_t lo = cell_of(std::max(cp.x_lo, env.x_left));
                const std::size_t hi = cell_of(std::min(cp.x_hi, env.x_right())) + 1;
                double mass = 0.0;
                for (std::size_t i = lo; i <= hi && i < n; ++i) mass += tr.occupation[i];
                hit.window_occupation = mass;
                --checkpoints_left;
            }
        }
        if (stop_hit) {
            stopped = true;
        } else if (cfg.stop_enabled) {
            const bool crossed = cfg.stop_at_level >= cfg.start_x ? x_new >= cfg.stop_at_level
                                                                  : x_new <= cfg.stop_at_level;
            if (crossed) stopped = true;
        }

        x_cur = x_new;
        b_cur = b_new;
        const double v_land = lerp_at(v, g_cur, frac);
        v_here = v_land;
        if (std::abs(v_land - frame.v_ref) > cfg.renorm_band && !stopped) {
            if (cfg.track_b_occupation) {
                throw std::logic_error("scale-side occupation requires a single anchor epoch");
            }
            frame.rebuild(g_cur, v_land);
            b_cur = frame.at(g_cur) + frac * (frame.at(g_cur + 1) - frame.at(g_cur));
        }
    }

    tr.t_end = t;
    tr.x_end = x_cur;
    tr.stopped_at_level = stopped;
    return tr;
}

std::vector<double> local_time_field(const DiffusionTrace& trace, double eps) {
    std::vector<double> density(trace.occupation.size());
    for (std::size_t i = 0; i < density.size(); ++i) density[i] = trace.occupation[i] / trace.step;
    return stats::kernel_smooth(density, trace.step, eps);
}

double hitting_time(const DiffusionTrace& trace, double level) {
    for (std::size_t i = 0; i < trace.tracked_levels.size(); ++i) {
        const double tol = 1e-12 * std::max(1.0, std::abs(level));
        if (std::abs(trace.tracked_levels[i] - level) <= tol) return trace.hit_times[i];
    }
    throw std::invalid_argument("level was not tracked in this run");
}

double window_local_time(const DiffusionTrace& trace, const EnvWindow& env, std::size_t center,
                         double halfwidth) {
    const double dx = env.step;
    const auto m = static_cast<std::size_t>(std::llround(halfwidth / dx));
    if (m == 0) throw std::invalid_argument("window halfwidth below one grid cell");
    if (center < m || center + m >= env.v.size()) {
        throw std::invalid_argument("window extends beyond the environment grid");
    }
    const double v_c = env.v[center];
    double occ = 0.0, weight = 0.0;
    for (std::size_t i = center - m; i <= center + m; ++i) {
        occ += trace.occupation[i];
        weight += std::exp(-(env.v[i] - v_c)) * dx;
    }
    return occ / weight;
}

LegObservables leg_observables(const DiffusionTrace& trace, const EnvWindow& env,
                               const ValleyRecord& rec, double window_halfwidth) {
    LegObservables out;
    out.local_time_bottom = window_local_time(trace, env, rec.i_m, window_halfwidth);
    out.e_hat = out.local_time_bottom / rec.A_L;
    out.time_increment = trace.t_end;
    out.traversed = trace.stopped_at_level;
    return out;
}

}  // namespace simlab
