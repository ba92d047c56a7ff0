#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace simlab::stats {

// Compensated (Kahan) summation; order-dependent inputs must already be in a
// deterministic order when reproducibility matters.
double kahan_sum(const std::vector<double>& xs);

double mean(const std::vector<double>& xs);
double variance(const std::vector<double>& xs);   // unbiased, n-1
double std_error(const std::vector<double>& xs);  // sqrt(var/n)

// Linear interpolation quantile on a copy of xs; q in [0,1].
double quantile(std::vector<double> xs, double q);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double r2 = 0.0;
};

// Ordinary least squares y ~ a + b x.
LinearFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

// Kolmogorov distribution tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

struct KsResult {
    double d = 0.0;  // sup distance
    double p = 0.0;  // asymptotic p-value
};

// One-sample KS against a continuous cdf.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

// Two-sample KS.
KsResult ks_test(std::vector<double> a, std::vector<double> b);

// Moving-window kernel of half-width eps on a uniform grid of spacing dx:
// interior weights 1, end weights 1/2, normalized by 2*eps. Window half-width
// must be an integer number of cells (eps = m*dx); sums preserve mass exactly:
// sum(out)*dx == sum(field)*dx away from the array edges.
std::vector<double> kernel_smooth(const std::vector<double>& field, double dx, double eps);

}  // namespace simlab::stats
