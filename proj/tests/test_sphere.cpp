#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "yamabe/sphere.hpp"

using namespace yamabe;
using std::numbers::pi;

TEST_CASE("eigenvalue ladder and multiplicities") {
    for (int n : {3, 4, 6, 8}) {
        CHECK(eigenvalue(0, n) == 0.0);
        CHECK(eigenvalue(1, n) == Catch::Approx(n - 1.0));
        CHECK(eigenvalue(2, n) == Catch::Approx(2.0 * n));
        CHECK(multiplicity(0, n) == 1);
        CHECK(multiplicity(1, n) == n);
    }
    CHECK(multiplicity(2, 3) == 5);
    CHECK(multiplicity(2, 6) == 20);
    CHECK(multiplicity(3, 6) == 50);
}

TEST_CASE("flat enumeration reproduces the ladder with multiplicity") {
    auto b = SphereBasis::s2(3);
    REQUIRE(b.n_modes() == 16);
    int flat = 0;
    for (int k = 0; k <= 3; ++k)
        for (int j = 0; j < multiplicity(k, 3); ++j, ++flat)
            CHECK(b.lambda(flat) == Catch::Approx(eigenvalue(k, 3)));
}

TEST_CASE("quadrature weights are positive and sum to the area") {
    auto b = SphereBasis::s2(3);
    double sum = 0;
    for (int q = 0; q < b.n_nodes(); ++q) {
        CHECK(b.weight(q) > 0);
        sum += b.weight(q);
    }
    CHECK(sum == Catch::Approx(4 * pi).epsilon(1e-13));

    for (int n : {3, 4, 6}) {
        auto z = SphereBasis::zonal(n, 3);
        double zs = 0;
        for (int q = 0; q < z.n_nodes(); ++q) zs += z.weight(q);
        CHECK(zs == Catch::Approx(2.0 * std::pow(pi, n / 2.0) / std::tgamma(n / 2.0)).epsilon(1e-12));
    }
}

TEST_CASE("Gram matrix is the identity") {
    for (bool zonal : {false, true}) {
        auto b = zonal ? SphereBasis::zonal(6, 4) : SphereBasis::s2(4);
        for (int i = 0; i < b.n_modes(); ++i)
            for (int j = i; j < b.n_modes(); ++j) {
                double g = 0;
                for (int q = 0; q < b.n_nodes(); ++q)
                    g += b.weight(q) * b.value(i, q) * b.value(j, q);
                CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-12);
            }
    }
}

TEST_CASE("constant mode value") {
    auto b = SphereBasis::s2(2);
    CHECK(b.eval_s2(0, 0.3, 1.2) == Catch::Approx(std::sqrt(1.0 / (4 * pi))).epsilon(1e-14));
    auto z = SphereBasis::zonal(6, 2);
    CHECK(z.eval_zonal(0, 0.9) == Catch::Approx(1.0 / std::sqrt(std::pow(pi, 3.0))).epsilon(1e-12));
}

TEST_CASE("sphere Laplacian eigenrelation via finite differences") {
    // -Lap Y / Y at off-grid points, 5-point stencils in theta and phi
    auto b = SphereBasis::s2(3);
    const double h = 1e-3;
    auto lap = [&](int m, double th, double ph) {
        auto f = [&](double a, double c) { return b.eval_s2(m, a, c); };
        const double ftt = (-f(th + 2 * h, ph) + 16 * f(th + h, ph) - 30 * f(th, ph)
                            + 16 * f(th - h, ph) - f(th - 2 * h, ph)) / (12 * h * h);
        const double ft = (-f(th + 2 * h, ph) + 8 * f(th + h, ph) - 8 * f(th - h, ph)
                           + f(th - 2 * h, ph)) / (12 * h);
        const double fpp = (-f(th, ph + 2 * h) + 16 * f(th, ph + h) - 30 * f(th, ph)
                            + 16 * f(th, ph - h) - f(th, ph - 2 * h)) / (12 * h * h);
        return ftt + ft / std::tan(th) + fpp / (std::sin(th) * std::sin(th));
    };
    for (int m : {1, 4, 9, 15}) {
        const double th = 1.1, ph = 0.7;
        const double y = b.eval_s2(m, th, ph);
        REQUIRE(std::abs(y) > 1e-3);
        CHECK(-lap(m, th, ph) / y == Catch::Approx(b.lambda(m)).margin(1e-5));
    }
}

TEST_CASE("analytic gradients agree with finite differences") {
    auto b = SphereBasis::s2(3);
    auto z = SphereBasis::zonal(5, 3);
    const double h = 1e-5;
    for (int m : {2, 7, 12}) {
        const int q = b.n_nodes() / 3;
        const double th = b.node_theta(q), ph = b.node_phi(q);
        const double gt_fd = (b.eval_s2(m, th + h, ph) - b.eval_s2(m, th - h, ph)) / (2 * h);
        const double gp_fd = (b.eval_s2(m, th, ph + h) - b.eval_s2(m, th, ph - h)) / (2 * h * std::sin(th));
        CHECK(b.grad_theta(m, q) == Catch::Approx(gt_fd).margin(2e-8));
        CHECK(b.grad_phi(m, q) == Catch::Approx(gp_fd).margin(2e-8));
    }
    for (int m : {1, 3}) {
        const int q = z.n_nodes() / 2;
        const double th = z.node_theta(q);
        const double gt_fd = (z.eval_zonal(m, th + h) - z.eval_zonal(m, th - h)) / (2 * h);
        CHECK(z.grad_theta(m, q) == Catch::Approx(gt_fd).margin(2e-8));
        CHECK(z.grad_phi(m, q) == 0.0);
    }
}

TEST_CASE("projection picks out coefficients") {
    auto b = SphereBasis::s2(4);
    std::vector<double> f(b.n_nodes());
    for (int q = 0; q < b.n_nodes(); ++q) f[q] = b.value(3, q);
    CHECK(b.project(f, 3) == Catch::Approx(1.0).margin(1e-12));
    CHECK(std::abs(b.project(f, 5)) < 1e-12);

    // X_1 * X_1 has no degree-4 component
    for (int q = 0; q < b.n_nodes(); ++q) f[q] = b.value(1, q) * b.value(1, q);
    CHECK(std::abs(b.project(f, b.degree_offset(4))) < 1e-12);
}

TEST_CASE("product expansion: degree bound and reconstruction") {
    for (bool zonal : {false, true}) {
        auto b = zonal ? SphereBasis::zonal(6, 4) : SphereBasis::s2(4);
        const int i = b.degree_offset(1), j = b.degree_offset(2);
        auto coeffs = b.product_expand(i, j);
        double worst = 0;
        for (int q = 0; q < b.n_nodes(); ++q) {
            double rec = 0;
            for (const auto& [m, c] : coeffs) {
                CHECK(b.mode(m).degree <= 3);
                rec += c * b.value(m, q);
            }
            worst = std::max(worst, std::abs(rec - b.value(i, q) * b.value(j, q)));
        }
        CHECK(worst < 1e-10);
    }

    // X_0 X_j has the single coefficient (4 pi)^(-1/2) on mode j
    auto b = SphereBasis::s2(3);
    auto c0 = b.product_expand(0, 5);
    REQUIRE(c0.size() == 1);
    CHECK(c0[0].first == 5);
    CHECK(c0[0].second == Catch::Approx(std::sqrt(1.0 / (4 * pi))).epsilon(1e-12));

    // X_1^2 lives on degrees 0 and 2 only
    for (const auto& [m, c] : b.product_expand(1, 1)) {
        const int deg = b.mode(m).degree;
        CHECK((deg == 0 || deg == 2));
    }

    CHECK_THROWS_AS(b.product_expand(b.degree_offset(3), b.degree_offset(3)), error);
}
