#pragma once

// Test-support statistics: two-sample Kolmogorov-Smirnov with the asymptotic
// tail. Oracle code, independent of the library under test.

#include <algorithm>
#include <cmath>
#include <vector>

namespace testsupport {

inline double ks_tail(double lambda) {
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::min(1.0, std::max(0.0, sum));
}

inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t n1 = a.size(), n2 = b.size();
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < n1 && j < n2) {
        const double x = std::min(a[i], b[j]);
        while (i < n1 && a[i] <= x) ++i;
        while (j < n2 && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
    }
    const double ne = std::sqrt(static_cast<double>(n1) * n2 / (n1 + n2));
    return ks_tail((ne + 0.12 + 0.11 / ne) * d);
}

}  // namespace testsupport
