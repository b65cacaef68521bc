#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace branchlab {

double mean_of(const std::vector<double>& x);
double variance_of(const std::vector<double>& x);  // unbiased
double correlation(const std::vector<double>& x, const std::vector<double>& y);

// Spearman rank correlation with average ranks on ties. Returns 0 when either
// input is constant (ties everywhere).
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};
SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Survival function of the Kolmogorov distribution.
double kolmogorov_sf(double lambda);

struct KsResult {
    double distance = 0.0;
    double p_value = 1.0;
    std::size_t n1 = 0, n2 = 0;
};

// One-sample KS against a continuous CDF; p-value via the asymptotic
// Kolmogorov law with the small-sample effective-size correction.
KsResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Regularized lower incomplete gamma P(shape, x/scale).
double gamma_cdf(double shape, double scale, double x);
double normal_cdf(double x);

}  // namespace branchlab
