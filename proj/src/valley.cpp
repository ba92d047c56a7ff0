#include "simlab/valley.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "simlab/stats.hpp"

namespace simlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Compensated running sum for long trapezoid accumulations.
struct Kahan {
    double sum = 0.0, c = 0.0;
    void add(double x) {
        double y = x - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

double trapezoid_exp(const double* v, std::size_t lo, std::size_t hi, double shift, double sign,
                     double step) {
    // int_{lo}^{hi} exp(sign * (v - shift)), trapezoid on the grid.
    if (hi <= lo) return 0.0;
    Kahan acc;
    double prev = std::exp(sign * (v[lo] - shift));
    for (std::size_t i = lo + 1; i <= hi; ++i) {
        double cur = std::exp(sign * (v[i] - shift));
        acc.add(0.5 * (prev + cur) * step);
        prev = cur;
    }
    return acc.sum;
}

struct SpanLandmarks {
    std::size_t i_L_sharp = 0, i_m = 0, i_tau_h = 0, i_L = 0;
};

// Completes a valley record on a span whose index 0 is the anchor (previous L).
ValleyRecord finish_record(const double* v, double step, double h, const SpanLandmarks& lm) {
    ValleyRecord rec;
    rec.i_L_prev = 0;
    rec.i_L_sharp = lm.i_L_sharp;
    rec.i_m = lm.i_m;
    rec.i_tau_h = lm.i_tau_h;
    rec.i_L = lm.i_L;
    rec.v_at_m = v[lm.i_m];
    rec.depth_h = h;

    const double thr = rec.v_at_m + 0.5 * h;
    std::size_t tminus = lm.i_m;
    for (std::size_t i = lm.i_m; i-- > 0;) {
        if (v[i] >= thr) {
            tminus = i;
            break;
        }
    }
    std::size_t tplus = lm.i_m;
    for (std::size_t i = lm.i_m + 1; i <= lm.i_tau_h; ++i) {
        if (v[i] >= thr) {
            tplus = i;
            break;
        }
    }
    rec.i_tau_minus = tminus;
    rec.i_tau_plus = tplus;
    rec.S = trapezoid_exp(v, tplus, lm.i_L, rec.v_at_m, +1.0, step);
    rec.R = trapezoid_exp(v, tminus, tplus, rec.v_at_m, -1.0, step);
    rec.A_L = trapezoid_exp(v, lm.i_m, lm.i_L, rec.v_at_m, +1.0, step);
    return rec;
}

void validate_valley_params(double h, double delta, double kappa) {
    if (!(h > 0.0)) throw std::invalid_argument("valley depth h must be > 0");
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
    if (kappa < 1.0 && (1.0 + 3.0 * delta) * kappa >= 1.0) {
        throw std::invalid_argument("delta too large: need (1+3*delta)*kappa < 1");
    }
    if (std::exp((1.0 - delta) * kappa * h) < h) {
        // The anchor-to-bottom drop must dominate the depth for the backward
        // h/2 scan to be confined near the valley.
        throw std::invalid_argument("valley depth too small for the drop scale");
    }
}

}  // namespace

HExtremaScan scan_h_extrema(const std::vector<double>& v, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("h must be > 0");
    HExtremaScan out;
    out.h = h;
    if (v.size() < 2) return out;

    enum class Mode { Unknown, SeekMax, SeekMin };
    Mode mode = Mode::Unknown;
    std::size_t cand_min = 0, cand_max = 0;
    double max_before_min = -kInf;  // prefix max strictly before cand_min
    double min_before_max = kInf;   // prefix min strictly before cand_max
    double prefix_max = v[0], prefix_min = v[0];

    for (std::size_t i = 1; i < v.size(); ++i) {
        const double x = v[i];
        if (mode != Mode::SeekMax && x < v[cand_min]) {
            cand_min = i;
            max_before_min = prefix_max;
        }
        if (mode != Mode::SeekMin && x > v[cand_max]) {
            cand_max = i;
            min_before_max = prefix_min;
        }
        prefix_max = std::max(prefix_max, x);
        prefix_min = std::min(prefix_min, x);

        // A mode switch can enable the opposite trigger at the same grid point
        // (one cell can both confirm a minimum and fall h below the peak), so
        // re-evaluate until no trigger fires.
        for (bool progressed = true; progressed;) {
            progressed = false;
            const bool rise = mode != Mode::SeekMax && x - v[cand_min] >= h;
            const bool drop = mode != Mode::SeekMin && v[cand_max] - x >= h;
            if (rise && (!drop || cand_min < cand_max)) {
                // The confirmed minimum needs a left witness; after the first
                // extremum the preceding maximum provides it automatically.
                if (mode == Mode::SeekMin || max_before_min >= v[cand_min] + h) {
                    out.minima.push_back(cand_min);
                }
                mode = Mode::SeekMax;
                if (cand_max <= cand_min) {
                    cand_max = i;  // i is the strict max of (cand_min, i]
                    min_before_max = v[cand_min];
                }
                progressed = true;
            } else if (drop) {
                if (mode == Mode::SeekMax || min_before_max <= v[cand_max] - h) {
                    out.maxima.push_back(cand_max);
                }
                mode = Mode::SeekMin;
                if (cand_min <= cand_max) {
                    cand_min = i;  // i is the strict min of (cand_max, i]
                    max_before_min = v[cand_max];
                }
                progressed = true;
            }
        }
    }
    return out;
}

double default_valley_delta(double kappa) {
    if (kappa < 1.0) return 0.1 * std::min(1.0, (1.0 / kappa - 1.0) / 3.0);
    return 0.1;
}

ValleySet standard_valleys_grid(const std::vector<double>& v, double step, double h, double delta,
                                double kappa) {
    validate_valley_params(h, delta, kappa);
    if (!(step > 0.0)) throw std::invalid_argument("step must be > 0");

    ValleySet out;
    out.h = h;
    out.delta = delta;
    out.kappa = kappa;
    out.step = step;

    const double drop = std::exp((1.0 - delta) * kappa * h);
    const std::size_t n = v.size();
    std::size_t anchor = 0;
    for (int j = 1;; ++j) {
        SpanLandmarks lm;
        std::size_t i = anchor + 1;
        const double anchor_val = v[anchor];
        for (;; ++i) {
            if (i >= n) {
                out.exhausted = true;
                return out;
            }
            if (v[i] <= anchor_val - drop) break;
        }
        lm.i_L_sharp = i;
        std::size_t i_m = i;
        for (;; ++i) {
            if (i >= n) {
                out.exhausted = true;
                return out;
            }
            if (v[i] < v[i_m]) i_m = i;
            if (v[i] - v[i_m] >= h) break;
        }
        lm.i_m = i_m;
        lm.i_tau_h = i;
        const double exit_thr = v[i_m] + 0.5 * h;
        for (++i;; ++i) {
            if (i >= n) {
                out.exhausted = true;
                return out;
            }
            if (v[i] <= exit_thr) break;
        }
        lm.i_L = i;

        // Finish on the anchored sub-span, then shift indices to absolute.
        SpanLandmarks rel{lm.i_L_sharp - anchor, lm.i_m - anchor, lm.i_tau_h - anchor,
                          lm.i_L - anchor};
        ValleyRecord rec = finish_record(v.data() + anchor, step, h, rel);
        rec.index = j;
        rec.i_L_prev = anchor;
        rec.i_L_sharp += anchor;
        rec.i_tau_minus += anchor;
        rec.i_m += anchor;
        rec.i_tau_plus += anchor;
        rec.i_tau_h += anchor;
        rec.i_L += anchor;
        out.valleys.push_back(rec);
        anchor = lm.i_L;
    }
}

ValleySet standard_valleys(const LevyPath& env, double h, double delta) {
    const double kappa = find_kappa_root(env.model);
    if (delta <= 0.0) delta = default_valley_delta(kappa);
    return standard_valleys_grid(env.values, env.step, h, delta, kappa);
}

std::size_t valley_tau_plus(const std::vector<double>& v, const ValleyRecord& rec, double a) {
    if (a < 0.0 || a > rec.depth_h) throw std::invalid_argument("height out of [0, h]");
    if (a == 0.0) return rec.i_m;
    const double thr = rec.v_at_m + a;
    for (std::size_t i = rec.i_m + 1; i <= rec.i_tau_h; ++i) {
        if (v[i] >= thr) return i;
    }
    return rec.i_tau_h;
}

std::size_t valley_tau_minus(const std::vector<double>& v, const ValleyRecord& rec, double a) {
    if (a < 0.0 || a > rec.depth_h) throw std::invalid_argument("height out of [0, h]");
    const double thr = rec.v_at_m + a;
    for (std::size_t i = rec.i_m; i-- > rec.i_L_prev;) {
        if (v[i] >= thr) return i;
    }
    return rec.i_L_prev;
}

StreamedValleys stream_valleys(const LevyModel& m, double h, double delta, double step, int n,
                               std::uint64_t seed) {
    m.validate();
    const double kappa = find_kappa_root(m);
    if (delta <= 0.0) delta = default_valley_delta(kappa);
    validate_valley_params(h, delta, kappa);
    if (!(step > 0.0)) throw std::invalid_argument("step must be > 0");
    if (n <= 0) throw std::invalid_argument("need n > 0 valleys");

    StreamedValleys out;
    out.h = h;
    out.delta = delta;
    out.kappa = kappa;
    out.step = step;
    out.valleys.reserve(static_cast<std::size_t>(n));
    out.spacings.reserve(static_cast<std::size_t>(n));

    const double drop = std::exp((1.0 - delta) * kappa * h);
    constexpr std::size_t kMaxSpanCells = 150'000'000;  // ~1.2 GB guard

    CellLaw law = CellLaw::make(m, step);
    Rng rng(seed);
    std::vector<double> buf;
    for (int j = 1; j <= n; ++j) {
        // Each valley is scanned in its own anchor-relative coordinates
        // (value 0 at the anchor); the stopping-time recursion restarts
        // afresh there, so consecutive valleys are iid.
        buf.clear();
        buf.push_back(0.0);
        enum class Phase { Drop, Dig, Settle };
        Phase phase = Phase::Drop;
        SpanLandmarks lm;
        std::size_t i_m = 0;
        double exit_thr = 0.0;
        for (;;) {
            buf.push_back(buf.back() + law.draw(rng));
            const std::size_t i = buf.size() - 1;
            const double x = buf[i];
            if (phase == Phase::Drop) {
                if (x <= -drop) {
                    lm.i_L_sharp = i;
                    i_m = i;
                    phase = Phase::Dig;
                }
            } else if (phase == Phase::Dig) {
                if (x < buf[i_m]) i_m = i;
                if (x - buf[i_m] >= h) {
                    lm.i_m = i_m;
                    lm.i_tau_h = i;
                    exit_thr = buf[i_m] + 0.5 * h;
                    phase = Phase::Settle;
                }
            } else {
                if (x <= exit_thr) {
                    lm.i_L = i;
                    break;
                }
            }
            if (buf.size() > kMaxSpanCells) {
                throw std::runtime_error("stream_valleys: valley span exceeds memory budget");
            }
        }
        ValleyRecord rec = finish_record(buf.data(), step, h, lm);
        rec.index = j;
        out.valleys.push_back(rec);
        out.spacings.push_back(static_cast<double>(lm.i_L) * step);
    }
    return out;
}

std::pair<double, double> y_processes(const RenewalSequence& seq, double s) {
    if (s < 0.0) throw std::invalid_argument("s must be >= 0");
    const auto k = static_cast<std::size_t>(std::floor(s * seq.kappa_phi));
    if (k > seq.e.size()) throw std::out_of_range("y_processes: index beyond sequence length");
    Kahan y1, y2;
    for (std::size_t j = 0; j < k; ++j) {
        const double es = seq.e[j] * seq.S[j];
        y1.add(es);
        y2.add(es * seq.R[j]);
    }
    return {y1.sum / seq.t_scale, y2.sum / seq.t_scale};
}

int overshoot_index(const RenewalSequence& seq, double a) {
    if (a < 0.0) throw std::invalid_argument("a must be >= 0");
    const double threshold = a * seq.t_scale;
    Kahan acc;
    for (std::size_t j = 0; j < seq.e.size(); ++j) {
        acc.add(seq.e[j] * seq.S[j] * seq.R[j]);
        if (acc.sum > threshold) return static_cast<int>(j) + 1;
    }
    return static_cast<int>(seq.e.size()) + 1;  // never exceeded
}

double sup_before_crossing(const RenewalSequence& seq, double b) {
    const int nb = overshoot_index(seq, b);
    double best = 0.0;
    for (int j = 1; j < nb; ++j) {
        best = std::max(best, seq.e[static_cast<std::size_t>(j - 1)] *
                                  seq.S[static_cast<std::size_t>(j - 1)] / seq.t_scale);
    }
    return best;
}

double sup_at_crossing(const RenewalSequence& seq, double b) {
    const int nb = std::min<int>(overshoot_index(seq, b), static_cast<int>(seq.e.size()));
    double best = 0.0;
    for (int j = 1; j <= nb; ++j) {
        best = std::max(best, seq.e[static_cast<std::size_t>(j - 1)] *
                                  seq.S[static_cast<std::size_t>(j - 1)] / seq.t_scale);
    }
    return best;
}

ValleyTailTable tail_statistics(const LevyModel& m, double h, double phi, double delta,
                                double step, int n_valleys, std::uint64_t seed) {
    if (n_valleys < 100) throw std::invalid_argument("tail_statistics: need >= 100 valleys");
    if (!(phi > 0.0)) throw std::invalid_argument("phi must be > 0");
    const double kappa = find_kappa_root(m);

    StreamedValleys sv = stream_valleys(m, h, delta, step, n_valleys, derive_seed(seed, 0));
    Rng erng(derive_seed(seed, 1));

    const double t = std::exp(h + phi);
    const double ekphi = std::exp(kappa * phi);
    const auto nv = sv.valleys.size();
    std::vector<double> u(nv), w(nv), rk(nv), er(nv);
    for (std::size_t j = 0; j < nv; ++j) {
        const double e = erng.exponential(2.0);
        u[j] = e * sv.valleys[j].S / t;
        w[j] = u[j] * sv.valleys[j].R;
        rk[j] = std::pow(sv.valleys[j].R, kappa);
        er[j] = std::exp(0.1 * sv.valleys[j].R);
    }

    static const double kLevels[] = {0.90, 0.93, 0.95, 0.965, 0.975, 0.985, 0.99, 0.995};
    ValleyTailTable out;
    out.n_valleys = static_cast<int>(nv);
    auto build_curve = [&](const std::vector<double>& sample, std::vector<double>& grid,
                           std::vector<double>& curve) {
        std::vector<double> sorted = sample;
        std::sort(sorted.begin(), sorted.end());
        for (double q : kLevels) {
            if ((1.0 - q) * static_cast<double>(nv) < 25.0) continue;  // too few exceedances
            const double xq = stats::quantile(sorted, q);
            const auto exceed = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), xq);
            const double p = static_cast<double>(exceed) / static_cast<double>(nv);
            if (p <= 0.0) continue;
            grid.push_back(xq);
            curve.push_back(std::pow(xq, kappa) * ekphi * p);
        }
    };
    build_curve(u, out.x, out.c1_curve);
    build_curve(w, out.y, out.c2_curve);
    if (out.c1_curve.size() < 3 || out.c2_curve.size() < 3) {
        throw std::runtime_error("tail_statistics: too few usable tail grid points");
    }
    out.c1 = stats::quantile(out.c1_curve, 0.5);
    out.c2 = stats::quantile(out.c2_curve, 0.5);
    out.ratio = out.c2 / out.c1;
    out.r_kappa_mean = stats::mean(rk);
    out.exp_moment_r = stats::mean(er);

    const double lo = *std::min_element(out.c1_curve.begin(), out.c1_curve.end());
    const double hi = *std::max_element(out.c1_curve.begin(), out.c1_curve.end());
    out.flatness = (hi - lo) / out.c1;
    out.plateau_flat = out.flatness <= 0.5;

    std::vector<double> lx, lp;
    for (std::size_t i = 0; i < out.x.size(); ++i) {
        const double c = out.c1_curve[i];  // c = x^kappa ekphi p  =>  p = c x^-kappa / ekphi
        lx.push_back(std::log(out.x[i]));
        lp.push_back(std::log(c / ekphi) - kappa * std::log(out.x[i]));
    }
    stats::LinearFit fit = stats::ols_fit(lx, lp);
    out.slope = fit.slope;
    out.slope_se = fit.slope_se;
    return out;
}

SpacingReport valley_spacing_check(const LevyModel& m, const std::vector<double>& h_values,
                                   double delta, double step, int n_spacings,
                                   std::uint64_t seed) {
    if (h_values.empty()) throw std::invalid_argument("need at least one depth h");
    if (n_spacings < 10) throw std::invalid_argument("need >= 10 spacings per depth");
    SpacingReport out;
    std::vector<double> log_means;
    for (std::size_t k = 0; k < h_values.size(); ++k) {
        StreamedValleys sv =
            stream_valleys(m, h_values[k], delta, step, n_spacings, derive_seed(seed, k));
        const double mean = stats::mean(sv.spacings);
        out.h_values.push_back(h_values[k]);
        out.mean_spacing.push_back(mean);
        log_means.push_back(std::log(mean));
        stats::KsResult ks = stats::ks_test(
            sv.spacings, [mean](double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-x / mean); });
        out.ks_p.push_back(ks.p);
    }
    if (out.h_values.size() >= 3) {
        stats::LinearFit fit = stats::ols_fit(out.h_values, log_means);
        out.slope = fit.slope;
        out.slope_se = fit.slope_se;
    }
    return out;
}

}  // namespace simlab
