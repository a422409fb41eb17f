#include "gaussfold/stats.hpp"

#include "gaussfold/types.hpp"

#include <algorithm>
#include <cmath>

namespace gaussfold {

double chi2_1_sf(double t) {
    if (!(t > 0.0)) return 1.0;
    return std::erfc(std::sqrt(0.5 * t));
}

namespace {

// Marsaglia, Tsang & Wang (2003): matrix power with exponent tracking.
void mat_mult(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& c, int m) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int k = 0; k < m; ++k) s += a[i * m + k] * b[k * m + j];
            c[i * m + j] = s;
        }
}

void mat_pow(const std::vector<double>& a, int ea, std::vector<double>& v, int& ev, int m, int n) {
    if (n == 1) {
        v = a;
        ev = ea;
        return;
    }
    mat_pow(a, ea, v, ev, m, n / 2);
    std::vector<double> b(v.size());
    mat_mult(v, v, b, m);
    int eb = 2 * ev;
    if (n % 2 == 0) {
        v = b;
        ev = eb;
    } else {
        mat_mult(a, b, v, m);
        ev = ea + eb;
    }
    if (v[(m / 2) * m + m / 2] > 1e140) {
        for (double& x : v) x *= 1e-140;
        ev += 140;
    }
}

double ks_exact(int n, double d) {
    const int k = static_cast<int>(n * d) + 1;
    const int m = 2 * k - 1;
    const double h = k - n * d;
    std::vector<double> hm(static_cast<std::size_t>(m * m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) hm[i * m + j] = (i - j + 1 < 0) ? 0.0 : 1.0;
    for (int i = 0; i < m; ++i) {
        hm[i * m] -= std::pow(h, i + 1);
        hm[(m - 1) * m + i] -= std::pow(h, m - i);
    }
    hm[(m - 1) * m] += (2 * h - 1 > 0) ? std::pow(2 * h - 1, m) : 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i - j + 1 > 0)
                for (int g = 1; g <= i - j + 1; ++g) hm[i * m + j] /= g;
    std::vector<double> q;
    int eq = 0;
    mat_pow(hm, 0, q, eq, m, n);
    double s = q[(k - 1) * m + k - 1];
    for (int i = 1; i <= n; ++i) {
        s = s * i / n;
        if (s < 1e-140) {
            s *= 1e140;
            eq -= 140;
        }
    }
    return s * std::pow(10.0, eq);
}

double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    double s = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * x * x);
        s += (j % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

}  // namespace

double ks_cdf(int n, double d) {
    require(n >= 1, "ks_cdf needs n >= 1");
    if (d <= 0.5 / n) return 0.0;
    if (d >= 1.0) return 1.0;
    if (n <= 1000) return std::clamp(ks_exact(n, d), 0.0, 1.0);
    const double sn = std::sqrt(static_cast<double>(n));
    return 1.0 - kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

KsResult ks_uniform(std::vector<double> values) {
    require(!values.empty(), "KS test needs at least one value");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double u = std::clamp(values[i], 0.0, 1.0);
        d = std::max({d, (i + 1) / n - u, u - i / n});
    }
    return {d, std::clamp(1.0 - ks_cdf(static_cast<int>(values.size()), d), 0.0, 1.0)};
}

}  // namespace gaussfold
