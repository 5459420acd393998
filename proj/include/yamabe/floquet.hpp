#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "yamabe/dense_ode.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/periodic_fn.hpp"
#include "yamabe/radial.hpp"

namespace yamabe {

namespace detail {

struct mat2 {
    // row-major 2x2: [[a, b], [c, d]] acting on (u, v)
    double a, b, c, d;

    double det() const { return a * d - b * c; }
    double trace() const { return a + d; }

    mat2 inverse() const {
        const double dt = det();
        return {d / dt, -b / dt, -c / dt, a / dt};
    }

    std::array<double, 2> apply(const std::array<double, 2>& x) const {
        return {a * x[0] + b * x[1], c * x[0] + d * x[1]};
    }

    friend mat2 operator*(const mat2& m, const mat2& n) {
        return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
                m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
    }
};

/// Potential of the mode operators: L_i eta = eta'' + (A(t) - lambda_i) eta
/// with A(t) = n(n+2)/4 psi^(4/(n-2)) - (n-2)^2/4.
inline double mode_potential(const PeriodicSolution& psi, double t) {
    const int n = psi.n();
    return 0.25 * n * (n + 2.0) * std::pow(psi.psi(t), 4.0 / (n - 2.0))
         - 0.25 * (n - 2.0) * (n - 2.0);
}

inline double mode_potential_dt(const PeriodicSolution& psi, double t) {
    const int n = psi.n();
    const auto y = psi.eval(t);
    return n * (n + 2.0) / (n - 2.0) * std::pow(y[0], 4.0 / (n - 2.0) - 1.0) * y[1];
}

/// Fundamental matrices of eta'' = (lambda - A(t)) eta over one period,
/// recorded on a uniform lattice: m subintervals of L lattice steps each.
/// snap[j][r] = Phi(t_(jL+r+1), t_(jL)), so snap[j].back() is the
/// subinterval propagator. Splitting the period keeps the hyperbolic growth
/// per piece mild; determinants are then well conditioned factor-wise.
struct mode_lattice {
    double T = 0;
    int m = 0, L = 0;
    std::vector<std::vector<mat2>> snap;

    mat2 phi(int j) const { return snap[j].back(); }

    mat2 product() const {
        mat2 M{1, 0, 0, 1};
        for (int j = 0; j < m; ++j) M = phi(j) * M;
        return M;
    }

    double det_product() const {
        double d = 1;
        for (int j = 0; j < m; ++j) d *= phi(j).det();
        return d;
    }
};

inline mode_lattice build_mode_lattice(const std::function<double(double)>& A, double T,
                                       double lambda, int m, int L,
                                       const ode_options& opt = {}) {
    auto accel = [&](double t, double u, double) { return (lambda - A(t)) * u; };
    mode_lattice lat;
    lat.T = T;
    lat.m = m;
    lat.L = L;
    lat.snap.resize(m);
    const int N = m * L;
    for (int j = 0; j < m; ++j) {
        const double t0 = T * j * L / N;
        std::vector<double> stops(L);
        for (int r = 0; r < L; ++r) stops[r] = T * (j * L + r + 1) / N;
        auto cu = integrate_at(accel, t0, stops, {1.0, 0.0}, opt);
        auto cv = integrate_at(accel, t0, stops, {0.0, 1.0}, opt);
        lat.snap[j].resize(L);
        for (int r = 0; r < L; ++r)
            lat.snap[j][r] = {cu[r][0], cv[r][0], cu[r][1], cv[r][1]};
    }
    return lat;
}

/// Subinterval count: a power of two dividing the sample grid, sized so the
/// per-piece growth exp(rho T / m) stays moderate.
inline int lattice_splits(double lambda, double T, int samples) {
    const double rho_est = std::sqrt(std::max(1.0, lambda)) + 1.0;
    int m = 2;
    while (m < samples && rho_est * T / m > 4.0) m *= 2;
    return m;
}

inline std::array<double, 2> eigvec(const mat2& M, double mu) {
    // (M - mu I) v = 0; pick the better-conditioned row combination.
    const std::array<double, 2> v1 = {M.b, mu - M.a};
    const std::array<double, 2> v2 = {mu - M.d, M.c};
    const double n1 = std::hypot(v1[0], v1[1]);
    const double n2 = std::hypot(v2[0], v2[1]);
    auto v = (n1 >= n2) ? v1 : v2;
    const double n = std::max(n1, n2);
    if (n == 0) return {1.0, 0.0};
    return {v[0] / n, v[1] / n};
}

inline mode_lattice psi_mode_lattice(const PeriodicSolution& psi, double lambda, int samples,
                                     const ode_options& opt = {}) {
    const double T = psi.period();
    auto A = [&psi](double t) { return mode_potential(psi, t); };
    const int m = lattice_splits(lambda, T, samples);
    return build_mode_lattice(A, T, lambda, m, samples / m, opt);
}

} // namespace detail

/// Floquet monodromy matrix of L_i over one period. The determinant is
/// accumulated factor-wise (each factor is unit-determinant by Liouville),
/// which keeps the det diagnostic meaningful for strongly hyperbolic modes.
struct Monodromy {
    detail::mat2 M;
    double det;

    double trace() const { return M.trace(); }
};

inline Monodromy monodromy(const PeriodicSolution& psi, double lambda,
                           const detail::ode_options& opt = {}) {
    if (psi.is_constant())
        throw error(errc::wrong_branch, "monodromy needs a nonconstant profile");
    auto lat = detail::psi_mode_lattice(psi, lambda, 64, opt);
    return {lat.product(), lat.det_product()};
}

/// One spherical-harmonic channel: eigenvalue, indicial root, Floquet basis
/// psi+ = e^(-rho t) p+, psi- = e^(rho t) p- (mode 0: psi- = a t p+ + p-),
/// and the Wronskian W = psi+ (psi-)' - psi- (psi+)'.
struct ModeSystem {
    double lambda = 0;
    double rho = 0;
    bool constant_psi = false;
    bool mode0 = false;
    double period = 0; // 0 for constant psi
    PeriodicFn p_plus{1.0}, p_minus{1.0};
    PeriodicFn dp_plus{0.0}, dp_minus{0.0};
    double wronskian = 0;
    double mode0_a = 0; // only for mode0 with nonconstant psi

    double psi_plus(double t) const { return p_plus.eval(t) * std::exp(-rho * t); }
    double psi_minus(double t) const {
        if (mode0) return mode0_a * t * p_plus.eval(t) + p_minus.eval(t);
        return p_minus.eval(t) * std::exp(rho * t);
    }
    double dpsi_plus(double t) const {
        return (dp_plus.eval(t) - rho * p_plus.eval(t)) * std::exp(-rho * t);
    }
    double dpsi_minus(double t) const {
        if (mode0)
            return mode0_a * (p_plus.eval(t) + t * dp_plus.eval(t)) + dp_minus.eval(t);
        return (dp_minus.eval(t) + rho * p_minus.eval(t)) * std::exp(rho * t);
    }
};

namespace detail {

inline double root_from_trace(double tr, double T) {
    if (std::abs(tr) <= 2.0)
        throw error(errc::unexpected_elliptic_mode, "monodromy has unit-modulus multipliers");
    if (tr < 0)
        throw error(errc::unexpected_elliptic_mode, "negative Floquet multipliers");
    const double half = 0.5 * tr;
    return (std::log(half) + std::log1p(std::sqrt(1.0 - 1.0 / (half * half)))) / T;
}

} // namespace detail

/// Indicial root: constant psi gives the closed form sqrt(lambda - (n-2));
/// nonconstant psi reads it off the monodromy spectral radius.
inline double indicial_root(const PeriodicSolution& psi, double lambda,
                            const detail::ode_options& opt = {}) {
    if (psi.is_constant()) {
        const double gap = lambda - (psi.n() - 2.0);
        if (gap <= 0)
            throw error(errc::oscillatory_mode,
                        "no real indicial root for lambda <= n-2 at the constant profile");
        return std::sqrt(gap);
    }
    if (!(lambda > 0))
        throw error(errc::invalid_parameter, "indicial roots need lambda > 0");
    const auto mon = monodromy(psi, lambda, opt);
    return detail::root_from_trace(mon.trace(), psi.period());
}

/// Builds the Floquet basis of L_i for a positive eigenvalue channel
/// (i >= 1). The periodic parts are normalized to unit sup-norm with the
/// largest-magnitude sample positive.
inline ModeSystem floquet_basis(const PeriodicSolution& psi, double lambda,
                                const detail::ode_options& opt = {}) {
    ModeSystem ms;
    ms.lambda = lambda;
    if (psi.is_constant()) {
        ms.constant_psi = true;
        ms.rho = indicial_root(psi, lambda);
        ms.wronskian = 2.0 * ms.rho;
        return ms;
    }

    const double T = psi.period();
    ms.period = T;
    const int N = kPeriodicSamples;
    auto lat = detail::psi_mode_lattice(psi, lambda, N, opt);
    const int m = lat.m, L = lat.L;
    const auto M = lat.product();
    ms.rho = detail::root_from_trace(M.trace(), T);

    const double half = 0.5 * M.trace();
    const double big = half + std::sqrt(half * half - 1.0);
    const double small = 1.0 / big;

    // Decaying direction by a seamless backward sweep anchored at t = T:
    // the recorded chain is then one exact trajectory of the lattice
    // propagators, and the t = 0 / t = T wrap mismatch stays at rounding
    // level. Growing direction by the (stable) forward sweep.
    std::vector<std::array<double, 2>> wp(m + 1), wm(m + 1);
    const auto vp = detail::eigvec(M, small);
    const auto vm = detail::eigvec(M, big);
    wp[m] = {small * vp[0], small * vp[1]};
    for (int j = m - 1; j >= 0; --j) wp[j] = lat.phi(j).inverse().apply(wp[j + 1]);
    wm[0] = vm;
    for (int j = 1; j <= m; ++j) wm[j] = lat.phi(j - 1).apply(wm[j - 1]);

    std::vector<double> pp(N), pm(N);
    for (int g = 0; g < N; ++g) {
        const int j = g / L, r = g % L;
        const double t = T * g / N;
        const auto sp = (r == 0) ? wp[j] : lat.snap[j][r - 1].apply(wp[j]);
        const auto sm = (r == 0) ? wm[j] : lat.snap[j][r - 1].apply(wm[j]);
        pp[g] = sp[0] * std::exp(ms.rho * t);
        pm[g] = sm[0] * std::exp(-ms.rho * t);
    }
    auto normalize = [](std::vector<double>& v) {
        double mx = 0;
        int arg = 0;
        for (int i = 0; i < static_cast<int>(v.size()); ++i)
            if (std::abs(v[i]) > mx) { mx = std::abs(v[i]); arg = i; }
        const double s = (v[arg] > 0 ? 1.0 : -1.0) / mx;
        for (double& x : v) x *= s;
    };
    normalize(pp);
    normalize(pm);
    ms.p_plus = PeriodicFn(T, std::move(pp));
    ms.p_minus = PeriodicFn(T, std::move(pm));
    ms.dp_plus = ms.p_plus.derivative();
    ms.dp_minus = ms.p_minus.derivative();
    ms.wronskian = ms.psi_plus(0.0) * ms.dpsi_minus(0.0) - ms.psi_minus(0.0) * ms.dpsi_plus(0.0);
    return ms;
}

/// Mode-0 kernel for nonconstant psi: p0+ is the normalized translation mode
/// psi', the second solution is decomposed as a t p0+ + p0- with p0-
/// periodic. The constant profile has the oscillatory closed-form kernel
/// cos/sin(sqrt(n-2) t) instead and is rejected here.
inline ModeSystem mode0_basis(const PeriodicSolution& psi, const detail::ode_options& opt = {}) {
    if (psi.is_constant())
        throw error(errc::oscillatory_mode,
                    "mode 0 at the constant profile has the cos/sin closed-form kernel");
    ModeSystem ms;
    ms.lambda = 0;
    ms.rho = 0;
    ms.mode0 = true;
    const double T = psi.period();
    ms.period = T;
    const int N = kPeriodicSamples;

    std::vector<double> u1 = psi.dpsi_fn().samples();
    double s1 = 0;
    for (double v : u1) s1 = std::max(s1, std::abs(v));

    // Second solution from (1, 0) initial data; u2(t+T) = alpha u2 + beta u1.
    auto lat = detail::psi_mode_lattice(psi, 0.0, N, opt);
    const int m = lat.m, L = lat.L;
    std::vector<std::array<double, 2>> w(m + 1);
    w[0] = {1.0, 0.0};
    for (int j = 1; j <= m; ++j) w[j] = lat.phi(j - 1).apply(w[j - 1]);
    const double alpha = w[m][0];
    const double ddpsi0 = detail::radial_accel(psi.n(), psi.psi_min());
    const double beta = w[m][1] / ddpsi0;
    if (std::abs(alpha - 1.0) > 1e-6)
        throw error(errc::unexpected_elliptic_mode, "mode-0 monodromy lacks the unit Jordan block");
    const double a_raw = beta / T;

    std::vector<double> g2(N);
    for (int g = 0; g < N; ++g) {
        const int j = g / L, r = g % L;
        const double t = T * g / N;
        const auto y = (r == 0) ? w[j] : lat.snap[j][r - 1].apply(w[j]);
        g2[g] = y[0] - a_raw * t * u1[g];
    }
    double s2 = 0;
    for (double v : g2) s2 = std::max(s2, std::abs(v));

    for (double& v : u1) v /= s1;
    for (double& v : g2) v /= s2;
    ms.p_plus = PeriodicFn(T, std::move(u1));
    ms.p_minus = PeriodicFn(T, std::move(g2));
    ms.dp_plus = ms.p_plus.derivative();
    ms.dp_minus = ms.p_minus.derivative();
    ms.mode0_a = a_raw * s1 / s2;
    ms.wronskian = ms.psi_plus(0.0) * ms.dpsi_minus(0.0) - ms.psi_minus(0.0) * ms.dpsi_plus(0.0);
    return ms;
}

} // namespace yamabe
