#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "yamabe/approx.hpp"
#include "yamabe/cylinder.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/linear_solver.hpp"

namespace yamabe {

namespace detail {

/// (1+y)^p - 1 - p y, evaluated without cancellation for small y.
inline double binom_tail(double p, double y) {
    if (y <= -1.0) throw error(errc::positivity_violation, "fractional power of a nonpositive value");
    if (std::abs(y) < 0.25) {
        double acc = 0, c = 1.0;
        for (int k = 1; k <= 80; ++k) {
            c *= (p - (k - 1)) / k; // binom(p, k) after k steps
            if (k >= 2) {
                const double term = c * std::pow(y, k);
                acc += term;
                if (std::abs(term) < 1e-18 * (std::abs(acc) + 1e-300)) break;
            }
        }
        return acc;
    }
    return std::expm1(p * std::log1p(y)) - p * y;
}

/// (1+y)^q - 1 without cancellation.
inline double pow1p_m1(double q, double y) {
    if (y <= -1.0) throw error(errc::positivity_violation, "fractional power of a nonpositive value");
    return std::expm1(q * std::log1p(y));
}

} // namespace detail

/// N(v) applied directly on the grid: fourth-order second differences in t,
/// spectral Laplacian, pointwise fractional power re-projected.
inline CylinderField N_total(const CylinderField& v, int n) {
    const auto& B = *v.basis;
    const double p = (n + 2.0) / (n - 2.0);
    CylinderField out = CylinderField::zeros(v.basis, v.t0, v.dt, v.nt);
    for (int m = 0; m < v.n_modes(); ++m) {
        const auto d2 = detail::fd_derivative(v.modes[m], v.dt, 2);
        const double lam = B.lambda(m);
        for (int j = 0; j < v.nt; ++j)
            out.modes[m][j] = d2[j] - (lam + 0.25 * (n - 2.0) * (n - 2.0)) * v.modes[m][j];
    }
    for (int j = 0; j < v.nt; ++j) {
        auto vals = v.node_values(j);
        for (double& x : vals) {
            if (!(x > 0.0))
                throw error(errc::positivity_violation, "field must stay positive for v^p");
            x = 0.25 * n * (n - 2.0) * std::pow(x, p);
        }
        for (int m = 0; m < v.n_modes(); ++m) out.modes[m][j] += B.project(vals, m);
    }
    return out;
}

/// N(psi + phi) evaluated through the perturbation split
///   N(psi + phi) = L phi + n(n-2)/4 psi^p [(1 + phi/psi)^p - 1 - p phi/psi],
/// which keeps the rounding floor proportional to |phi|^2 instead of |psi|.
inline CylinderField N_perturbation(const PeriodicSolution& psi, const CylinderField& phi) {
    const int n = psi.n();
    const double p = (n + 2.0) / (n - 2.0);
    CylinderField out = apply_L(phi, psi);
    const auto& B = *phi.basis;
    for (int j = 0; j < phi.nt; ++j) {
        const double ps = psi.psi(phi.t(j));
        const double amp = 0.25 * n * (n - 2.0) * std::pow(ps, p);
        auto vals = phi.node_values(j);
        for (double& x : vals) x = amp * detail::binom_tail(p, x / ps);
        for (int m = 0; m < phi.n_modes(); ++m) out.modes[m][j] += B.project(vals, m);
    }
    return out;
}

/// P(w) = n(n-2)/4 [(v+w)^p - v^p] - n(n+2)/4 psi^(4/(n-2)) w, rearranged as
/// n(n+2)/4 w psi^(p-1) [(v/psi)^(p-1) - 1] + n(n-2)/4 v^p R2(w/v)
/// so that small w and small (v - psi) do not cancel in doubles.
/// `vhat` holds nodal values of the approximate solution.
inline CylinderField P_op(const CylinderField& w, const std::vector<std::vector<double>>& vhat,
                          const PeriodicSolution& psi) {
    const int n = psi.n();
    const double p = (n + 2.0) / (n - 2.0);
    const auto& B = *w.basis;
    CylinderField out = CylinderField::zeros(w.basis, w.t0, w.dt, w.nt);
    for (int j = 0; j < w.nt; ++j) {
        const double ps = psi.psi(w.t(j));
        const double psq = std::pow(ps, p - 1.0);
        auto wv = w.node_values(j);
        std::vector<double> vals(B.n_nodes());
        for (int q = 0; q < B.n_nodes(); ++q) {
            const double v = vhat[j][q];
            if (!(v > 0.0) || !(v + wv[q] > 0.0))
                throw error(errc::positivity_violation, "P(w) needs v and v + w positive");
            const double lin = 0.25 * n * (n + 2.0) * wv[q] * psq
                             * detail::pow1p_m1(p - 1.0, v / ps - 1.0);
            const double quad = 0.25 * n * (n - 2.0) * std::pow(v, p)
                              * detail::binom_tail(p, wv[q] / v);
            vals[q] = lin + quad;
        }
        for (int m = 0; m < w.n_modes(); ++m) out.modes[m][j] = B.project(vals, m);
    }
    return out;
}

/// Q(w) = n(n+2)/4 int_0^1 [(v + s w)^(4/(n-2)) - psi^(4/(n-2))] ds by
/// Gauss-Legendre in s; P(w) = w Q(w) pointwise.
inline CylinderField Q_op(const CylinderField& w, const std::vector<std::vector<double>>& vhat,
                          const PeriodicSolution& psi, int gauss_points = 10) {
    const int n = psi.n();
    const double q_exp = 4.0 / (n - 2.0);
    const auto& B = *w.basis;
    std::vector<double> gx, gw;
    detail::gauss_jacobi_sym(gauss_points, 0.0, gx, gw); // on [-1, 1]
    CylinderField out = CylinderField::zeros(w.basis, w.t0, w.dt, w.nt);
    for (int j = 0; j < w.nt; ++j) {
        const double ps = psi.psi(w.t(j));
        const double psq = std::pow(ps, q_exp);
        auto wv = w.node_values(j);
        std::vector<double> vals(B.n_nodes(), 0.0);
        for (int g = 0; g < gauss_points; ++g) {
            const double s = 0.5 * (gx[g] + 1.0);
            const double wgt = 0.5 * gw[g];
            for (int q = 0; q < B.n_nodes(); ++q) {
                const double u = vhat[j][q] + s * wv[q];
                if (!(u > 0.0))
                    throw error(errc::positivity_violation, "Q(w) needs v + s w positive");
                vals[q] += wgt * psq * detail::pow1p_m1(q_exp, u / ps - 1.0);
            }
        }
        for (int q = 0; q < B.n_nodes(); ++q) vals[q] *= 0.25 * n * (n + 2.0);
        for (int m = 0; m < w.n_modes(); ++m) out.modes[m][j] = B.project(vals, m);
    }
    return out;
}

struct ContractionConfig {
    double mu = 2.5;
    double t0 = 8.0;
    double ball_radius = 0; // 0: sized from the first correction, B = 2 ||w_1||
    int max_iters = 40;
    int warmup = 2;
    double convergence_tol = 1e-10;
    double escalation_factor = 1.5;
    int escalation_attempts = 4;
    GridSpec grid{};
    double verify_lo = 2.0, verify_hi = 10.0;
};

struct SolveReport {
    double t0_used = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> update_norms;
    std::vector<double> ratios;
    double contraction_factor = 0;
    double ball_radius = 0;
    double initial_residual = 0; // ||N(v-hat)|| weighted
    double final_residual = 0;   // ||N(v-hat + w)|| weighted
    double verified_mu = 0;      // fitted decay rate of |v - v-hat|
    double c_prime = 0;          // sup e^(mu t) |v - v-hat|
};

/// Picard iteration w <- L^{-1}[-N(v-hat) - P(w)] from w = 0 on the solver
/// grid anchored at cfg.t0. Returns the exact-solution field v = v-hat + w
/// (as the perturbation phi + w against psi) and the report.
struct ContractionResult {
    CylinderField w;        // the correction
    CylinderField phi_hat;  // v-hat - psi on the same grid
    SolveReport report;
};

inline ContractionResult iterate_once(const ApproxSolution& vhat, const ContractionConfig& cfg) {
    const auto& psi = vhat.psi;
    LinearSolver ls(vhat.basis, vhat.catalog, cfg.mu, cfg.t0, cfg.grid);
    const int nt = ls.nt();
    auto phi_hat = vhat.phi_field(ls.t0(), ls.dt(), nt);

    // nodal values of v-hat across the grid
    std::vector<std::vector<double>> vh(nt);
    for (int j = 0; j < nt; ++j) {
        vh[j] = phi_hat.node_values(j);
        const double ps = psi.psi(ls.t0() + j * ls.dt());
        for (double& x : vh[j]) {
            x += ps;
            if (!(x > 0.0))
                throw error(errc::positivity_violation, "approximate solution not positive on grid");
        }
    }

    auto Nvhat = N_perturbation(psi, phi_hat);
    SolveReport rep;
    rep.t0_used = cfg.t0;
    rep.initial_residual = weighted_norm(Nvhat, cfg.mu);

    auto rhs0 = Nvhat;
    for (auto& row : rhs0.modes)
        for (double& x : row) x = -x;

    CylinderField w = ls.zeros();
    CylinderField w_prev = w;
    double B = cfg.ball_radius;
    double prev_update = 0;
    rep.converged = false;
    for (int it = 0; it < cfg.max_iters; ++it) {
        auto rhs = rhs0;
        if (it > 0) rhs.axpy(-1.0, P_op(w, vh, psi));
        auto w_next = ls.invert(rhs);

        auto diff = w_next;
        diff.axpy(-1.0, w);
        const double upd = weighted_norm(diff, cfg.mu);
        rep.update_norms.push_back(upd);
        const double wn = weighted_norm(w_next, cfg.mu);
        if (B == 0 && it == 0) B = std::max(2.0 * wn, 1e-300);
        if (wn > B)
            throw error(errc::ball_escape, "iterate left the ball; enlarge t0");
        if (it > 0 && prev_update > 0) {
            const double ratio = upd / prev_update;
            rep.ratios.push_back(ratio);
            if (it >= cfg.warmup && ratio >= 1.0)
                throw error(errc::no_contraction, "updates are not contracting; enlarge t0");
            if (it >= cfg.warmup)
                rep.contraction_factor = std::max(rep.contraction_factor, ratio);
        }
        w_prev = w;
        w = w_next;
        rep.iterations = it + 1;
        prev_update = upd;
        if (upd <= cfg.convergence_tol * std::max(B, 1e-300)) {
            rep.converged = true;
            break;
        }
    }
    if (!rep.converged)
        throw error(errc::no_contraction, "iteration budget exhausted before the fixed point");
    rep.ball_radius = B;

    auto phi_total = phi_hat;
    phi_total.axpy(1.0, w);
    rep.final_residual = weighted_norm(N_perturbation(psi, phi_total), cfg.mu);

    // verify: fitted decay of sup_theta |v - v-hat| plus the weighted constant
    std::vector<std::pair<double, double>> samples;
    rep.c_prime = 0;
    for (int j = 0; j < nt; ++j) {
        const double t = ls.t0() + j * ls.dt();
        const double s = w.sup_theta(j);
        rep.c_prime = std::max(rep.c_prime, detail::weighted_abs(cfg.mu * t, s));
        if (t >= cfg.t0 + cfg.verify_lo && t <= cfg.t0 + cfg.verify_hi && (j % 32 == 0))
            samples.emplace_back(t, s);
    }
    rep.verified_mu = decay_rate(samples, 1e-250);

    return {std::move(w), std::move(phi_hat), std::move(rep)};
}

/// iterate_once with the t0 escalation schedule: on ball escape or loss of
/// contraction the anchor moves right and the solve is retried.
inline ContractionResult iterate(const ApproxSolution& vhat, ContractionConfig cfg) {
    for (int attempt = 0;; ++attempt) {
        try {
            return iterate_once(vhat, cfg);
        } catch (const error& e) {
            const bool retryable =
                e.code() == errc::ball_escape || e.code() == errc::no_contraction;
            if (!retryable || attempt >= cfg.escalation_attempts) throw;
            cfg.t0 = cfg.escalation_factor * cfg.t0 + 1.0;
        }
    }
}

/// Decay-rate verification of a computed pair (v, v-hat) on a common grid.
inline std::pair<double, double> verify(const CylinderField& v, const CylinderField& vhat,
                                        double mu, double lo, double hi) {
    if (v.nt != vhat.nt) throw error(errc::invalid_parameter, "grids differ");
    auto diff = v;
    diff.axpy(-1.0, vhat);
    std::vector<std::pair<double, double>> samples;
    double cp = 0;
    for (int j = 0; j < v.nt; ++j) {
        const double t = v.t(j);
        const double s = diff.sup_theta(j);
        cp = std::max(cp, detail::weighted_abs(mu * t, s));
        if (t >= v.t0 + lo && t <= v.t0 + hi && (j % 32 == 0)) samples.emplace_back(t, s);
    }
    return {decay_rate(samples, 1e-250), cp};
}

} // namespace yamabe
