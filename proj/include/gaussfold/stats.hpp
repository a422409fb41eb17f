#pragma once

#include <vector>

namespace gaussfold {

/// Upper tail P(chi^2_1 > t); returns 1 for t <= 0.
double chi2_1_sf(double t);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test of the values against Uniform(0, 1).
/// The p-value uses the Marsaglia-Tsang-Wang exact distribution for n <= 1000
/// and the asymptotic Kolmogorov series above that.
KsResult ks_uniform(std::vector<double> values);

/// P(D_n < d) for the two-sided one-sample KS statistic.
double ks_cdf(int n, double d);

}  // namespace gaussfold
