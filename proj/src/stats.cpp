#include "simlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace simlab::stats {

double kahan_sum(const std::vector<double>& xs) {
    double sum = 0.0, c = 0.0;
    for (double x : xs) {
        double y = x - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum;
}

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty sample");
    return kahan_sum(xs) / static_cast<double>(xs.size());
}

double variance(const std::vector<double>& xs) {
    if (xs.size() < 2) throw std::invalid_argument("variance: need n >= 2");
    double m = mean(xs);
    double sum = 0.0, c = 0.0;
    for (double x : xs) {
        double d = (x - m) * (x - m) - c;
        double t = sum + d;
        c = (t - sum) - d;
        sum = t;
    }
    return sum / static_cast<double>(xs.size() - 1);
}

double std_error(const std::vector<double>& xs) {
    return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0,1]");
    std::sort(xs.begin(), xs.end());
    double pos = q * static_cast<double>(xs.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= xs.size()) return xs.back();
    double frac = pos - static_cast<double>(lo);
    return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

LinearFit ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("ols_fit: need matched samples, n >= 3");
    auto n = static_cast<double>(x.size());
    double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("ols_fit: degenerate x");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
    if (x.size() > 2) f.slope_se = std::sqrt(ss_res / (n - 2.0) / sxx);
    return f;
}

double kolmogorov_q(double lambda) {
    // The alternating series needs ~1/lambda terms to settle; below 0.15 the
    // value is 1 to double precision anyway, so short-circuit instead.
    if (lambda < 0.15) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    double q = 2.0 * sum;
    return std::clamp(q, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw std::invalid_argument("ks_test: empty sample");
    std::sort(sample.begin(), sample.end());
    auto n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = cdf(sample[i]);
        double lo = static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(std::abs(f - lo), std::abs(hi - f)));
    }
    KsResult r;
    r.d = d;
    double en = std::sqrt(n);
    r.p = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
    return r;
}

KsResult ks_test(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_test: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double na = static_cast<double>(a.size());
    double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    KsResult r;
    r.d = d;
    double en = std::sqrt(na * nb / (na + nb));
    r.p = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
    return r;
}

std::vector<double> kernel_smooth(const std::vector<double>& field, double dx, double eps) {
    long m = std::lround(eps / dx);
    if (m < 1 || std::abs(m * dx - eps) > 1e-9 * eps)
        throw std::invalid_argument("kernel_smooth: eps must be a whole number of cells");
    auto n = static_cast<long>(field.size());
    std::vector<double> out(field.size(), 0.0);
    // Rolling interior sum; the two edge cells of each window carry weight 1/2,
    // so a window of 2m+1 cells has total weight 2m and the transform is
    // mass-preserving away from the array boundary.
    for (long j = 0; j < n; ++j) {
        double acc = 0.0;
        for (long k = j - m; k <= j + m; ++k) {
            if (k < 0 || k >= n) continue;
            double w = (k == j - m || k == j + m) ? 0.5 : 1.0;
            acc += w * field[static_cast<std::size_t>(k)];
        }
        out[static_cast<std::size_t>(j)] = acc / (2.0 * eps / dx);
    }
    return out;
}

}  // namespace simlab::stats
