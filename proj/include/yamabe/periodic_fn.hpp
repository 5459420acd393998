#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "yamabe/errors.hpp"

namespace yamabe {

/// Default sample count for periodic coefficient functions.
inline constexpr int kPeriodicSamples = 256;

/// Smooth periodic function represented by uniform samples over one period
/// with a trigonometric (DFT) interpolant. Derivatives, evaluation away from
/// the grid, and exponentially weighted half-line integrals are spectral and
/// therefore exact for the interpolant. A PeriodicFn with a single sample is
/// a constant and combines with any period.
///
/// The half-line transforms implement the geometric tail rule in closed
/// form: for P periodic and sigma > 0,
///   int_0^inf P(t+u) e^(-sigma u) du  has spectrum  P_k / (sigma - i k w),
///   int_0^inf P(t-u) e^(-sigma u) du  has spectrum  P_k / (sigma + i k w),
///   int_0^inf u P(t+u) e^(-sigma u) du has spectrum P_k / (sigma - i k w)^2.
class PeriodicFn {
public:
    using cplx = std::complex<double>;

    PeriodicFn() : PeriodicFn(0.0) {}

    /// Constant function (period-agnostic).
    explicit PeriodicFn(double value) : period_(0), samples_{value} {}

    PeriodicFn(double period, std::vector<double> samples)
        : period_(period), samples_(std::move(samples)) {
        if (samples_.empty()) throw error(errc::invalid_parameter, "empty sample set");
        if (samples_.size() > 1 && !(period > 0))
            throw error(errc::invalid_parameter, "sampled PeriodicFn needs a positive period");
    }

    static PeriodicFn sample(double period, int n, const std::function<double(double)>& f) {
        std::vector<double> v(n);
        for (int j = 0; j < n; ++j) v[j] = f(period * j / n);
        return PeriodicFn(period, std::move(v));
    }

    bool is_constant() const { return samples_.size() == 1; }
    double period() const { return period_; }
    int size() const { return static_cast<int>(samples_.size()); }
    const std::vector<double>& samples() const { return samples_; }

    double eval(double t) const {
        if (is_constant()) return samples_[0];
        ensure_spectrum();
        const int n = size();
        const double w = 2.0 * std::numbers::pi / period_;
        // Hermitian-symmetric sum; k = 1 .. n/2 with Nyquist handled once.
        cplx rot = std::polar(1.0, w * t);
        cplx z = rot;
        double acc = spec_[0].real();
        const int half = n / 2;
        for (int k = 1; k <= half; ++k) {
            const cplx term = spec_[k] * z;
            if (2 * k == n)
                acc += term.real(); // Nyquist appears once
            else
                acc += 2.0 * term.real();
            z *= rot;
        }
        return acc;
    }

    double operator()(double t) const { return eval(t); }

    double mean() const {
        if (is_constant()) return samples_[0];
        ensure_spectrum();
        return spec_[0].real();
    }

    double sup_norm() const {
        double m = 0;
        for (double v : samples_) m = std::max(m, std::abs(v));
        return m;
    }

    PeriodicFn derivative() const {
        if (is_constant()) return PeriodicFn(0.0);
        return transformed([this](int k, cplx c) {
            const int n = size();
            if (2 * k == n) return cplx(0.0, 0.0); // drop Nyquist
            const double w = 2.0 * std::numbers::pi / period_;
            return c * cplx(0.0, k * w);
        });
    }

    /// Antiderivative with mean zero; requires mean() == 0 (small means are
    /// dropped, which is how the Fredholm-solvable case is consumed).
    PeriodicFn antiderivative_meanzero() const {
        if (is_constant()) return PeriodicFn(0.0);
        return transformed([this](int k, cplx c) {
            if (k == 0 || 2 * k == size()) return cplx(0.0, 0.0);
            const double w = 2.0 * std::numbers::pi / period_;
            return c / cplx(0.0, k * w);
        });
    }

    /// g(t) = int_0^inf f(t+u) e^(-sigma u) du, sigma > 0.
    PeriodicFn exp_integral_forward(double sigma) const {
        if (is_constant()) return PeriodicFn(samples_[0] / sigma);
        return transformed([this, sigma](int k, cplx c) {
            return c / cplx(sigma, -freq(k));
        });
    }

    /// g(t) = int_0^inf f(t-u) e^(-sigma u) du, sigma > 0.
    PeriodicFn exp_integral_backward(double sigma) const {
        if (is_constant()) return PeriodicFn(samples_[0] / sigma);
        return transformed([this, sigma](int k, cplx c) {
            return c / cplx(sigma, freq(k));
        });
    }

    /// g(t) = int_0^inf u f(t+u) e^(-sigma u) du, sigma > 0.
    PeriodicFn exp_integral_forward_linear(double sigma) const {
        if (is_constant()) return PeriodicFn(samples_[0] / (sigma * sigma));
        return transformed([this, sigma](int k, cplx c) {
            const cplx d(sigma, -freq(k));
            return c / (d * d);
        });
    }

    friend PeriodicFn operator+(const PeriodicFn& a, const PeriodicFn& b) {
        return combine(a, b, [](double x, double y) { return x + y; });
    }
    friend PeriodicFn operator-(const PeriodicFn& a, const PeriodicFn& b) {
        return combine(a, b, [](double x, double y) { return x - y; });
    }
    friend PeriodicFn operator*(const PeriodicFn& a, const PeriodicFn& b) {
        return combine(a, b, [](double x, double y) { return x * y; });
    }
    friend PeriodicFn operator*(double s, const PeriodicFn& a) {
        PeriodicFn r = a;
        for (double& v : r.samples_) v *= s;
        r.spec_.clear();
        return r;
    }
    PeriodicFn& operator+=(const PeriodicFn& b) { return *this = *this + b; }

private:
    double freq(int k) const { return 2.0 * std::numbers::pi * k / period_; }

    // Applies op(k, c_k) for k = 0..n/2 and rebuilds real samples. op receives
    // the nonnegative-frequency index only; negative frequencies follow by
    // conjugate symmetry.
    template <typename Op>
    PeriodicFn transformed(Op&& op) const {
        ensure_spectrum();
        const int n = size();
        const int half = n / 2;
        std::vector<cplx> out(half + 1);
        for (int k = 0; k <= half; ++k) out[k] = op(k, spec_[k]);
        // inverse transform from the Hermitian half-spectrum
        std::vector<double> v(n);
        const double w0 = 2.0 * std::numbers::pi / n;
        for (int j = 0; j < n; ++j) {
            double acc = out[0].real();
            for (int k = 1; k <= half; ++k) {
                const cplx term = out[k] * std::polar(1.0, w0 * j * k);
                acc += (2 * k == n) ? term.real() : 2.0 * term.real();
            }
            v[j] = acc;
        }
        return PeriodicFn(period_, std::move(v));
    }

    template <typename Op>
    static PeriodicFn combine(const PeriodicFn& a, const PeriodicFn& b, Op&& op) {
        if (a.is_constant() && b.is_constant())
            return PeriodicFn(op(a.samples_[0], b.samples_[0]));
        const PeriodicFn& grid = a.is_constant() ? b : a;
        if (!a.is_constant() && !b.is_constant()) {
            if (std::abs(a.period_ - b.period_) > 1e-9 * std::max(a.period_, b.period_))
                throw error(errc::invalid_parameter, "period mismatch in PeriodicFn arithmetic");
            if (a.size() != b.size())
                throw error(errc::invalid_parameter, "sample-count mismatch in PeriodicFn arithmetic");
        }
        std::vector<double> v(grid.size());
        for (int j = 0; j < grid.size(); ++j) {
            const double x = a.is_constant() ? a.samples_[0] : a.samples_[j];
            const double y = b.is_constant() ? b.samples_[0] : b.samples_[j];
            v[j] = op(x, y);
        }
        return PeriodicFn(grid.period_, std::move(v));
    }

    void ensure_spectrum() const {
        if (!spec_.empty()) return;
        const int n = size();
        spec_.resize(n / 2 + 1);
        const double w0 = 2.0 * std::numbers::pi / n;
        for (int k = 0; k <= n / 2; ++k) {
            cplx acc(0.0, 0.0);
            for (int j = 0; j < n; ++j)
                acc += samples_[j] * std::polar(1.0, -w0 * j * k);
            spec_[k] = acc / static_cast<double>(n);
        }
    }

    double period_;
    std::vector<double> samples_;
    mutable std::vector<cplx> spec_;
};

/// Pointwise transform of the samples (e.g. powers of psi).
inline PeriodicFn map_samples(const PeriodicFn& f, const std::function<double(double)>& op) {
    if (f.is_constant()) return PeriodicFn(op(f.samples()[0]));
    std::vector<double> v = f.samples();
    for (double& x : v) x = op(x);
    return PeriodicFn(f.period(), std::move(v));
}

} // namespace yamabe
