#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "yamabe/errors.hpp"
#include "yamabe/fd_weights.hpp"
#include "yamabe/sphere.hpp"

namespace yamabe {

/// Scalar field on [t0, t_end] x S^(n-1), stored spectrally in the angular
/// basis: one coefficient function of t per flat mode, sampled on a uniform
/// t-grid. w(t_j, theta) = sum_m modes[m][j] X_m(theta).
struct CylinderField {
    std::shared_ptr<const SphereBasis> basis;
    double t0 = 0;
    double dt = 0;
    int nt = 0;
    std::vector<std::vector<double>> modes;

    static CylinderField zeros(std::shared_ptr<const SphereBasis> basis, double t0, double dt,
                               int nt) {
        CylinderField f;
        f.basis = std::move(basis);
        f.t0 = t0;
        f.dt = dt;
        f.nt = nt;
        f.modes.assign(f.basis->n_modes(), std::vector<double>(nt, 0.0));
        return f;
    }

    double t(int j) const { return t0 + j * dt; }
    double t_end() const { return t(nt - 1); }
    int n_modes() const { return static_cast<int>(modes.size()); }

    /// Values at all quadrature nodes for time index j.
    std::vector<double> node_values(int j) const {
        std::vector<double> v(basis->n_nodes(), 0.0);
        for (int m = 0; m < n_modes(); ++m) {
            const double c = modes[m][j];
            if (c == 0.0) continue;
            for (int q = 0; q < basis->n_nodes(); ++q) v[q] += c * basis->value(m, q);
        }
        return v;
    }

    double sup_theta(int j) const {
        double s = 0;
        for (double v : node_values(j)) s = std::max(s, std::abs(v));
        return s;
    }

    CylinderField& axpy(double a, const CylinderField& other) {
        for (int m = 0; m < n_modes(); ++m)
            for (int j = 0; j < nt; ++j) modes[m][j] += a * other.modes[m][j];
        return *this;
    }
};

namespace detail {

/// Fourth-order finite-difference derivative of a grid function (order m
/// in {1, 2}); rows near the ends use one-sided seven-point stencils.
inline std::vector<double> fd_derivative(const std::vector<double>& y, double h, int m) {
    const int n = static_cast<int>(y.size());
    if (n < 7) throw error(errc::discretization_failure, "grid too short for the stencil");
    static thread_local std::vector<std::vector<double>> cache_c1, cache_c2;
    auto& cache = (m == 1) ? cache_c1 : cache_c2;
    if (cache.empty()) {
        cache.resize(7);
        for (int at = 0; at < 7; ++at) cache[at] = fd_stencil_uniform(7, at, m, 1.0);
    }
    const double scale = 1.0 / std::pow(h, m);
    std::vector<double> d(n);
    for (int j = 0; j < n; ++j) {
        const int at = std::clamp(j, 3, n - 4);
        const int pos = j - (at - 3); // position within the 7-point window
        const auto& w = cache[pos];
        double acc = 0;
        for (int s = 0; s < 7; ++s) acc += w[s] * y[at - 3 + s];
        d[j] = acc * scale;
    }
    return d;
}

/// e^(mu t) |v| without overflow when mu t is large and |v| tiny.
inline double weighted_abs(double mu_t, double v) {
    if (v == 0.0) return 0.0;
    const double z = mu_t + std::log(std::abs(v));
    return (z > 700.0) ? std::numeric_limits<double>::infinity() : std::exp(z);
}

} // namespace detail

/// Discrete weighted norm sum_{j<=k} sup e^(mu t) |grad^j w| over the grid
/// and quadrature nodes. Time derivatives are fourth-order finite
/// differences; angular derivatives are spectral. The k = 2 entry uses the
/// grid-accessible second-derivative magnitudes (w_tt, grad_theta w_t,
/// Lap_theta w) as the curvature proxy.
inline double weighted_norm(const CylinderField& w, double mu, int k = 0) {
    if (k < 0 || k > 2) throw error(errc::invalid_parameter, "k must be 0, 1, or 2");
    const auto& B = *w.basis;
    const int Q = B.n_nodes();

    std::vector<std::vector<double>> d1, d2;
    if (k >= 1) {
        d1.resize(w.n_modes());
        for (int m = 0; m < w.n_modes(); ++m) d1[m] = detail::fd_derivative(w.modes[m], w.dt, 1);
    }
    if (k >= 2) {
        d2.resize(w.n_modes());
        for (int m = 0; m < w.n_modes(); ++m) d2[m] = detail::fd_derivative(w.modes[m], w.dt, 2);
    }

    double s0 = 0, s1 = 0, s2 = 0;
    for (int j = 0; j < w.nt; ++j) {
        const double mu_t = mu * w.t(j);
        for (int q = 0; q < Q; ++q) {
            double val = 0, wt = 0, gth = 0, gph = 0;
            double wtt = 0, gth_t = 0, gph_t = 0, lap = 0;
            for (int m = 0; m < w.n_modes(); ++m) {
                const double X = B.value(m, q);
                val += w.modes[m][j] * X;
                if (k >= 1) {
                    wt += d1[m][j] * X;
                    gth += w.modes[m][j] * B.grad_theta(m, q);
                    gph += w.modes[m][j] * B.grad_phi(m, q);
                }
                if (k >= 2) {
                    wtt += d2[m][j] * X;
                    gth_t += d1[m][j] * B.grad_theta(m, q);
                    gph_t += d1[m][j] * B.grad_phi(m, q);
                    lap += -B.lambda(m) * w.modes[m][j] * X;
                }
            }
            s0 = std::max(s0, detail::weighted_abs(mu_t, val));
            if (k >= 1)
                s1 = std::max(s1, detail::weighted_abs(
                                      mu_t, std::sqrt(wt * wt + gth * gth + gph * gph)));
            if (k >= 2)
                s2 = std::max(s2, detail::weighted_abs(
                                      mu_t, std::sqrt(wtt * wtt + 2 * (gth_t * gth_t + gph_t * gph_t)
                                                      + lap * lap)));
        }
    }
    return s0 + s1 + s2;
}

} // namespace yamabe
