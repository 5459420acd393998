#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "yamabe/periodic_fn.hpp"

using namespace yamabe;
using std::numbers::pi;

TEST_CASE("trig interpolation is exact off the grid") {
    const double T = 5.0;
    auto f = PeriodicFn::sample(T, 64, [&](double t) {
        return 0.7 + std::sin(2 * pi * t / T) - 0.3 * std::cos(6 * pi * t / T);
    });
    for (double t : {0.123, 1.77, 4.999, -3.2, 11.0}) {
        const double exact = 0.7 + std::sin(2 * pi * t / T) - 0.3 * std::cos(6 * pi * t / T);
        CHECK(f.eval(t) == Catch::Approx(exact).margin(1e-13));
    }
    CHECK(f.mean() == Catch::Approx(0.7).margin(1e-13));
}

TEST_CASE("spectral derivative") {
    const double T = 2 * pi;
    auto f = PeriodicFn::sample(T, 64, [](double t) { return std::sin(t) + 0.5 * std::cos(3 * t); });
    auto df = f.derivative();
    for (double t : {0.0, 0.9, 3.3}) {
        CHECK(df.eval(t) == Catch::Approx(std::cos(t) - 1.5 * std::sin(3 * t)).margin(1e-12));
    }
}

TEST_CASE("half-line exponential transforms match quadrature") {
    const double T = 3.0, sigma = 0.8;
    auto f = PeriodicFn::sample(T, 64, [&](double t) { return 1.0 + std::cos(2 * pi * t / T); });
    auto g = f.exp_integral_forward(sigma);
    auto gb = f.exp_integral_backward(sigma);
    auto gu = f.exp_integral_forward_linear(sigma);
    // brute-force Simpson over a long truncated half-line as the oracle
    auto brute = [&](double t, int mode) {
        const double U = 60.0;
        const int N = 600000;
        const double h = U / N;
        double acc = 0;
        for (int i = 0; i <= N; ++i) {
            const double u = i * h;
            const double wgt = (i == 0 || i == N) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            double v = std::exp(-sigma * u);
            if (mode == 0) v *= f.eval(t + u);
            if (mode == 1) v *= f.eval(t - u);
            if (mode == 2) v *= u * f.eval(t + u);
            acc += wgt * v;
        }
        return acc * h / 3.0;
    };
    for (double t : {0.0, 1.1}) {
        CHECK(g.eval(t) == Catch::Approx(brute(t, 0)).margin(1e-9));
        CHECK(gb.eval(t) == Catch::Approx(brute(t, 1)).margin(1e-9));
        CHECK(gu.eval(t) == Catch::Approx(brute(t, 2)).margin(1e-8));
    }
}

TEST_CASE("constants pass through the algebra") {
    PeriodicFn c(2.5);
    auto f = PeriodicFn::sample(4.0, 32, [](double t) { return std::sin(2 * pi * t / 4.0); });
    auto prod = c * f;
    CHECK(prod.eval(1.0) == Catch::Approx(2.5 * f.eval(1.0)).margin(1e-13));
    CHECK(c.exp_integral_forward(0.5).eval(9.0) == Catch::Approx(5.0).margin(1e-13));
    CHECK(c.exp_integral_forward_linear(0.5).eval(0.0) == Catch::Approx(10.0).margin(1e-13));
    CHECK(c.derivative().eval(1.0) == 0.0);
}

TEST_CASE("mean-zero antiderivative") {
    const double T = 2 * pi;
    auto f = PeriodicFn::sample(T, 64, [](double t) { return std::cos(2 * t); });
    auto F = f.antiderivative_meanzero();
    for (double t : {0.4, 2.0}) CHECK(F.eval(t) == Catch::Approx(0.5 * std::sin(2 * t)).margin(1e-12));
}
