#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "yamabe/errors.hpp"

namespace yamabe::detail {

using state2 = std::array<double, 2>;

/// One accepted integration node of a planar system (u, v = u'), together
/// with the acceleration a = v' and jerk j = v'' supplied by the problem's
/// jet. Value and derivative tracks are interpolated by separate quintic
/// Hermite polynomials, so dense values are O(h^6) and dense second
/// derivatives O(h^4) accurate.
struct ode_node {
    double t;
    double u, v, a, j;
};

struct quintic_patch {
    double ta, h;
    // endpoint data (f, f', f'') for the interpolated component
    double f0, d0, s0, f1, d1, s1;

    double eval(double t) const {
        const double s = (t - ta) / h;
        const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
        const double H0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
        const double H1 = s - 6 * s3 + 8 * s4 - 3 * s5;
        const double H2 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5);
        const double K0 = 10 * s3 - 15 * s4 + 6 * s5;
        const double K1 = -4 * s3 + 7 * s4 - 3 * s5;
        const double K2 = 0.5 * (s3 - 2 * s4 + s5);
        return H0 * f0 + H1 * h * d0 + H2 * h * h * s0 + K0 * f1 + K1 * h * d1 + K2 * h * h * s1;
    }

    double eval_d(double t) const {
        const double s = (t - ta) / h;
        const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
        const double H0 = -30 * s2 + 60 * s3 - 30 * s4;
        const double H1 = 1 - 18 * s2 + 32 * s3 - 15 * s4;
        const double H2 = 0.5 * (2 * s - 9 * s2 + 12 * s3 - 5 * s4);
        const double K0 = 30 * s2 - 60 * s3 + 30 * s4;
        const double K1 = -12 * s2 + 28 * s3 - 15 * s4;
        const double K2 = 0.5 * (3 * s2 - 8 * s3 + 5 * s4);
        return (H0 * f0 + H1 * h * d0 + H2 * h * h * s0 + K0 * f1 + K1 * h * d1 + K2 * h * h * s1) / h;
    }
};

/// Dense solution of a planar system on [t_begin, t_end].
class dense_path {
public:
    std::vector<ode_node> nodes;

    double t_begin() const { return nodes.front().t; }
    double t_end() const { return nodes.back().t; }

    /// (u, v) at t; t must lie within the integrated span.
    state2 eval(double t) const {
        const auto [k, lo, hi] = locate(t);
        quintic_patch pu{lo.t, hi.t - lo.t, lo.u, lo.v, lo.a, hi.u, hi.v, hi.a};
        quintic_patch pv{lo.t, hi.t - lo.t, lo.v, lo.a, lo.j, hi.v, hi.a, hi.j};
        (void)k;
        return {pu.eval(t), pv.eval(t)};
    }

    /// Second derivative of u obtained by differentiating the v-track once.
    double eval_d2(double t) const {
        const auto [k, lo, hi] = locate(t);
        (void)k;
        quintic_patch pv{lo.t, hi.t - lo.t, lo.v, lo.a, lo.j, hi.v, hi.a, hi.j};
        return pv.eval_d(t);
    }

private:
    std::tuple<std::size_t, const ode_node&, const ode_node&> locate(double t) const {
        if (nodes.size() < 2)
            throw error(errc::integration_failure, "dense path has no span");
        // clamp minor round-off excursions at the ends
        const double eps = 1e-9 * (1.0 + std::abs(t_end()));
        if (t < t_begin() - eps || t > t_end() + eps)
            throw error(errc::out_of_range, "dense evaluation outside integrated span");
        std::size_t lo = 0, hi = nodes.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (nodes[mid].t <= t)
                lo = mid;
            else
                hi = mid;
        }
        return {lo, nodes[lo], nodes[lo + 1]};
    }
};

struct ode_options {
    double rel_tol = 1e-13;
    double abs_tol = 1e-15;
    double h_max = 0.03;
    double h_init = 1e-3;
    std::size_t max_steps = 50'000'000;
};

/// Integrates u'' = accel(t, u, v) from t0 to t1 (t1 > t0) with an adaptive
/// Runge-Kutta-Fehlberg 7(8) pair, storing dense nodes. `jerk` is
/// d(accel)/dt along the solution. An optional stop predicate, checked at
/// accepted nodes, terminates the sweep early.
template <typename Accel, typename Jerk>
dense_path integrate_dense(Accel&& accel, Jerk&& jerk, double t0, double t1, state2 y0,
                           const ode_options& opt = {},
                           const std::function<bool(double, const state2&)>& stop = {}) {
    namespace odeint = boost::numeric::odeint;
    auto rhs = [&](const state2& y, state2& dy, double t) {
        dy[0] = y[1];
        dy[1] = accel(t, y[0], y[1]);
    };
    odeint::runge_kutta_fehlberg78<state2> base;
    auto ctrl = odeint::make_controlled(opt.abs_tol, opt.rel_tol, base);

    dense_path path;
    auto push = [&](double t, const state2& y) {
        const double a = accel(t, y[0], y[1]);
        path.nodes.push_back({t, y[0], y[1], a, jerk(t, y[0], y[1])});
        (void)a;
    };

    double t = t0, h = std::min(opt.h_init, opt.h_max);
    state2 y = y0;
    push(t, y);
    std::size_t steps = 0;
    while (t < t1) {
        h = std::min({h, opt.h_max, t1 - t});
        auto res = ctrl.try_step(rhs, y, t, h);
        if (res == odeint::success) {
            push(t, y);
            if (stop && stop(t, y)) break;
        }
        if (++steps > opt.max_steps)
            throw error(errc::integration_failure, "step budget exhausted");
        if (h < 1e-14)
            throw error(errc::integration_failure, "step size underflow");
    }
    return path;
}

/// Integrates the same planar system but records the state exactly at the
/// requested stop times (ascending, all > t0). Stepping onto the stops keeps
/// the recorded error smooth in t, which matters when the samples are later
/// differentiated spectrally.
template <typename Accel>
std::vector<state2> integrate_at(Accel&& accel, double t0, const std::vector<double>& stops,
                                 state2 y0, const ode_options& opt = {}) {
    namespace odeint = boost::numeric::odeint;
    auto rhs = [&](const state2& y, state2& dy, double t) {
        dy[0] = y[1];
        dy[1] = accel(t, y[0], y[1]);
    };
    odeint::runge_kutta_fehlberg78<state2> base;
    auto ctrl = odeint::make_controlled(opt.abs_tol, opt.rel_tol, base);

    std::vector<state2> out;
    out.reserve(stops.size());
    double t = t0, h = std::min(opt.h_init, opt.h_max);
    state2 y = y0;
    std::size_t steps = 0;
    for (double target : stops) {
        while (t < target - 1e-14 * std::max(1.0, std::abs(target))) {
            double h_local = std::min({h, opt.h_max, target - t});
            ctrl.try_step(rhs, y, t, h_local);
            h = h_local;
            if (++steps > opt.max_steps)
                throw error(errc::integration_failure, "step budget exhausted");
            if (h < 1e-14)
                throw error(errc::integration_failure, "step size underflow");
        }
        out.push_back(y);
    }
    return out;
}

} // namespace yamabe::detail
