#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "yamabe/dense_ode.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/periodic_fn.hpp"

namespace yamabe {

/// Parameters of the radial profile: dimension n >= 3 and the neck value
/// psi_min, the minimum of the orbit over one period. psi_min equal to the
/// constant-solution value selects the constant profile.
struct RadialParams {
    int n = 3;
    double psi_min = 0.5;
};

/// Unique positive constant solution of the reduced radial equation,
/// psi_c = ((n-2)/n)^((n-2)/4).
inline double constant_solution(int n) {
    if (n < 3) throw error(errc::invalid_dimension, "need n >= 3");
    return std::pow((n - 2.0) / n, (n - 2.0) / 4.0);
}

/// First integral of the radial equation:
/// H = (psi')^2/2 - (n-2)^2/8 psi^2 + (n-2)^2/8 psi^(2n/(n-2)).
/// Constant along orbits.
inline double hamiltonian(int n, double psi, double dpsi) {
    const double c = (n - 2.0) * (n - 2.0) / 8.0;
    return 0.5 * dpsi * dpsi - c * psi * psi + c * std::pow(psi, 2.0 * n / (n - 2.0));
}

namespace detail {

// psi'' = G(psi); the right-hand side of the radial equation solved for psi''.
inline double radial_accel(int n, double psi) {
    return 0.25 * (n - 2.0) * (n - 2.0) * psi
         - 0.25 * n * (n - 2.0) * std::pow(psi, (n + 2.0) / (n - 2.0));
}

inline double radial_accel_dpsi(int n, double psi) {
    return 0.25 * (n - 2.0) * (n - 2.0)
         - 0.25 * n * (n + 2.0) * std::pow(psi, 4.0 / (n - 2.0));
}

} // namespace detail

/// A positive periodic solution of the radial equation with dense-output
/// evaluation, launched from the minimum (psi(0) = psi_min, psi'(0) = 0) and
/// extended to all t by periodicity and evenness. The constant solution is
/// carried with an undefined period (quiet NaN).
class PeriodicSolution {
public:
    static PeriodicSolution constant(int n) {
        PeriodicSolution s;
        s.params_ = {n, constant_solution(n)};
        s.constant_ = true;
        s.period_ = std::numeric_limits<double>::quiet_NaN();
        s.hamiltonian_ = hamiltonian(n, s.params_.psi_min, 0.0);
        s.psi_max_ = s.params_.psi_min;
        s.psifn_ = PeriodicFn(s.params_.psi_min);
        s.dpsifn_ = PeriodicFn(0.0);
        return s;
    }

    const RadialParams& params() const { return params_; }
    int n() const { return params_.n; }
    bool is_constant() const { return constant_; }
    /// NaN for the constant solution.
    double period() const { return period_; }
    double energy() const { return hamiltonian_; }
    double psi_min() const { return params_.psi_min; }
    double psi_max() const { return psi_max_; }

    /// (psi, psi') at any t.
    detail::state2 eval(double t) const {
        if (constant_) return {params_.psi_min, 0.0};
        return path_.eval(wrap(t));
    }

    double psi(double t) const { return eval(t)[0]; }
    double dpsi(double t) const { return eval(t)[1]; }

    /// psi'' from the dense derivative track (independent of the equation).
    double d2psi_dense(double t) const {
        if (constant_) return 0.0;
        return path_.eval_d2(wrap(t));
    }

    /// psi and psi' as periodic functions, sampled by stepping the
    /// integrator exactly onto the uniform period grid (the sampling error
    /// is then smooth in t and safe to differentiate spectrally).
    const PeriodicFn& psi_fn() const { return psifn_; }
    const PeriodicFn& dpsi_fn() const { return dpsifn_; }

    friend PeriodicSolution solve_periodic(const RadialParams& p, const detail::ode_options& opt);

private:
    PeriodicSolution() = default;

    double wrap(double t) const {
        double tau = std::fmod(t, period_);
        if (tau < 0) tau += period_;
        return tau;
    }

    RadialParams params_;
    bool constant_ = false;
    double period_ = 0;
    double hamiltonian_ = 0;
    double psi_max_ = 0;
    detail::dense_path path_;
    PeriodicFn psifn_{0.0}, dpsifn_{0.0};
};

/// Integrates the radial equation from the neck and detects the period as
/// twice the first return of psi' to zero (the maximum crossing). Requires
/// 0 < psi_min < psi_c(n).
inline PeriodicSolution solve_periodic(const RadialParams& p,
                                       const detail::ode_options& opt = {}) {
    const double psi_c = constant_solution(p.n);
    if (!(p.psi_min > 0))
        throw error(errc::invalid_parameter, "psi_min must be positive");
    if (p.psi_min >= psi_c)
        throw error(errc::not_a_periodic_orbit,
                    "psi_min must lie below the constant solution value");

    const int n = p.n;
    auto accel = [n](double, double u, double) { return detail::radial_accel(n, u); };
    auto jerk = [n](double, double u, double v) { return detail::radial_accel_dpsi(n, u) * v; };

    // Generous horizon: the period grows only logarithmically in 1/psi_min.
    const double t_limit = 200.0 + 40.0 * std::abs(std::log(p.psi_min));
    bool armed = false;
    auto stop = [&armed](double, const detail::state2& y) {
        if (y[1] > 0) armed = true;
        return armed && y[1] <= 0;
    };
    auto probe = detail::integrate_dense(accel, jerk, 0.0, t_limit, {p.psi_min, 0.0}, opt, stop);
    if (probe.nodes.back().v > 0)
        throw error(errc::integration_failure, "no return of psi' to zero before horizon");

    // Bisect the dense output for the psi' sign change.
    double lo = 0, hi = probe.t_end();
    for (std::size_t k = probe.nodes.size() - 1; k-- > 0;) {
        if (probe.nodes[k].v > 0) {
            lo = probe.nodes[k].t;
            hi = probe.nodes[k + 1].t;
            break;
        }
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (probe.eval(mid)[1] > 0 ? lo : hi) = mid;
    }
    const double t_half = 0.5 * (lo + hi);

    PeriodicSolution s;
    s.params_ = p;
    s.constant_ = false;
    s.period_ = 2.0 * t_half;
    s.hamiltonian_ = hamiltonian(p.n, p.psi_min, 0.0);
    s.path_ = detail::integrate_dense(accel, jerk, 0.0, s.period_, {p.psi_min, 0.0}, opt);
    s.psi_max_ = s.path_.eval(t_half)[0];
    {
        const int N = kPeriodicSamples;
        std::vector<double> stops(N - 1);
        for (int g = 1; g < N; ++g) stops[g - 1] = s.period_ * g / N;
        auto states = detail::integrate_at(accel, 0.0, stops, {p.psi_min, 0.0}, opt);
        std::vector<double> vp(N), vd(N);
        vp[0] = p.psi_min;
        vd[0] = 0.0;
        for (int g = 1; g < N; ++g) {
            vp[g] = states[g - 1][0];
            vd[g] = states[g - 1][1];
        }
        s.psifn_ = PeriodicFn(s.period_, std::move(vp));
        s.dpsifn_ = PeriodicFn(s.period_, std::move(vd));
    }
    if (!(s.psi_max_ > p.psi_min && s.psi_max_ < 1.0))
        throw error(errc::integration_failure, "orbit escaped the (0,1) band");
    return s;
}

} // namespace yamabe
