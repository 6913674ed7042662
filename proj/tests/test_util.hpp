#pragma once
// Shared test helpers: Kolmogorov-Smirnov statistics and small quadrature
// oracles kept independent of the library's integration machinery.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace testutil {

// Asymptotic critical values c(q) with P(sqrt(n) D > c) = q.
inline constexpr double kKs001Level = 1.94947;   // q = 0.001
inline constexpr double kKs01Level = 1.62762;    // q = 0.01
inline constexpr double kKs05Level = 1.35810;    // q = 0.05

/// One-sample KS statistic against a CDF callable.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

/// Two-sample KS statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Simple composite Simpson on [a, b]; test-side oracle helper.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2 != 0) ++n;
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

/// Simpson with panels refined geometrically towards a (integrable endpoint
/// singularities in a derivative).
inline double simpson_graded_head(const std::function<double(double)>& f, double a, double b,
                                  int levels, int n_per_level) {
    double acc = 0.0;
    double hi = b;
    for (int k = 0; k < levels; ++k) {
        const double lo = a + (b - a) * std::pow(0.5, k + 1);
        acc += simpson(f, lo, hi, n_per_level);
        hi = lo;
    }
    return acc;
}

}  // namespace testutil
