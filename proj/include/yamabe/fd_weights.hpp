#pragma once

#include <cstddef>
#include <vector>

namespace yamabe::detail {

/// Fornberg's algorithm: weights of the m-th derivative at point x0 from
/// samples at the (distinct) nodes x. Exact for polynomials of degree
/// x.size()-1, so a 2k+1 point centered stencil gives order 2k for even
/// derivatives.
inline std::vector<double> fd_weights(double x0, const std::vector<double>& x, int m) {
    const int n = static_cast<int>(x.size()) - 1;
    std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n + 1);
    for (int i = 0; i <= n; ++i) w[i] = c[i][m];
    return w;
}

/// Stencil of `npts` uniformly spaced nodes for the m-th derivative at node
/// `at` (0-based within the stencil), spacing h. Returned weights already
/// include the 1/h^m factor.
inline std::vector<double> fd_stencil_uniform(int npts, int at, int m, double h) {
    std::vector<double> x(npts);
    for (int i = 0; i < npts; ++i) x[i] = (i - at) * h;
    return fd_weights(0.0, x, m);
}

} // namespace yamabe::detail
