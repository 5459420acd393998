#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "yamabe/linear_solver.hpp"

using namespace yamabe;

namespace {

std::shared_ptr<const SphereBasis> s2basis() {
    static auto b = std::make_shared<SphereBasis>(SphereBasis::s2(3));
    return b;
}

/// finite-mode field with envelope e^(-mu t) and periodic texture
CylinderField make_rhs(const LinearSolver& ls, const PeriodicSolution& psi, double mu,
                       unsigned seed) {
    auto f = ls.zeros();
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    const double Tp = psi.is_constant() ? 0.0 : psi.period();
    for (int m = 0; m < f.n_modes(); ++m) {
        if (coef(rng) < -0.2) continue; // leave some modes empty
        const double c0 = coef(rng), c1 = 0.4 * coef(rng);
        for (int j = 0; j < f.nt; ++j) {
            const double t = f.t(j);
            const double texture =
                (Tp > 0) ? c0 + c1 * std::sin(2 * std::numbers::pi * t / Tp) : c0;
            f.modes[m][j] = texture * std::exp(-mu * t);
        }
    }
    return f;
}

double rel_roundtrip(const LinearSolver& ls, const PeriodicSolution& psi,
                     const CylinderField& f) {
    auto w = ls.invert(f);
    auto lw = apply_L(w, psi);
    lw.axpy(-1.0, f);
    return weighted_norm(lw, ls.mu()) / weighted_norm(f, ls.mu());
}

} // namespace

TEST_CASE("apply_L annihilates kernel fields and matches closed forms") {
    auto basis = s2basis();
    const double mu = 2.5;

    // constant profile: L_i e^{-mu t} = (mu^2 - rho_i^2) e^{-mu t}
    auto psic = PeriodicSolution::constant(3);
    auto f = CylinderField::zeros(basis, 0.0, 0.01, 2001);
    for (int j = 0; j < f.nt; ++j) {
        f.modes[1][j] = std::exp(-mu * f.t(j));          // degree 1, rho = 1
        f.modes[0][j] = std::cos(f.t(j));                // mode-0 kernel, sqrt(n-2) = 1
    }
    auto lf = apply_L(f, psic);
    auto err_low = [&](const CylinderField& field, const CylinderField& image) {
        double worst = 0;
        for (int j = 0; j < field.nt; ++j) {
            const double expect = (mu * mu - 1.0) * std::exp(-mu * field.t(j));
            worst = std::max(worst, std::abs(image.modes[1][j] - expect));
        }
        return worst;
    };
    const double worst_low = err_low(f, lf);
    double worst_ker = 0;
    for (int j = 0; j < f.nt; ++j)
        worst_ker = std::max(worst_ker, std::abs(lf.modes[0][j]));
    CHECK(worst_low < 3e-7); // O(h^4) truncation at h = 0.01
    CHECK(worst_ker < 1e-8);

    // fourth-order convergence of the truncation error
    auto f2 = CylinderField::zeros(basis, 0.0, 0.005, 4001);
    for (int j = 0; j < f2.nt; ++j) f2.modes[1][j] = std::exp(-mu * f2.t(j));
    CHECK(err_low(f2, apply_L(f2, psic)) < worst_low / 12.0);

    // nonconstant profile: psi_i^+ X_i lies in the kernel
    auto psin = solve_periodic({3, 0.5 * constant_solution(3)});
    auto ms = floquet_basis(psin, eigenvalue(1, 3));
    auto g = CylinderField::zeros(basis, 0.0, 0.01, 2001);
    for (int j = 0; j < g.nt; ++j) g.modes[2][j] = ms.psi_plus(g.t(j));
    auto lg = apply_L(g, psin);
    double worst = 0;
    for (int j = 0; j < g.nt; ++j) worst = std::max(worst, std::abs(lg.modes[2][j]));
    CHECK(worst < 1e-7); // FD truncation on an O(1) kernel element
}

TEST_CASE("low-mode closed forms (constant profile)") {
    auto psi = PeriodicSolution::constant(3);
    auto cat = std::make_shared<ModeCatalog>(ModeCatalog::build(psi, 3));
    const double mu = 2.5, t0 = 5.0;
    LinearSolver ls(s2basis(), cat, mu, t0, GridSpec{0.01});

    std::vector<double> f(ls.nt());
    for (int j = 0; j < ls.nt(); ++j) f[j] = std::exp(-mu * ls.t(j));

    for (int deg : {1, 2}) {
        const double rho = cat->rho(deg);
        REQUIRE(rho < mu);
        auto w = ls.solve_mode(deg, f);
        double worst = 0;
        for (int j = 0; j < ls.nt(); ++j) {
            const double expect = std::exp(-mu * ls.t(j)) / (mu * mu - rho * rho);
            worst = std::max(worst, std::abs(w[j] - expect) / std::abs(expect));
        }
        CHECK(worst < 1e-8);
    }

    // mode 0 via the oscillatory kernel: w = e^{-mu t} / (mu^2 + (n-2))
    auto w0 = ls.solve_mode(0, f);
    double worst = 0;
    for (int j = 0; j < ls.nt(); ++j) {
        const double expect = std::exp(-mu * ls.t(j)) / (mu * mu + 1.0);
        worst = std::max(worst, std::abs(w0[j] - expect) / std::abs(expect));
    }
    CHECK(worst < 1e-8);

    // zero data solves to zero
    std::vector<double> z(ls.nt(), 0.0);
    for (double v : ls.solve_mode(1, z)) CHECK(v == 0.0);

    // wrong-branch guards
    CHECK_THROWS_AS(ls.solve_mode_low(cat->by_degree.at(3), f), error);
    CHECK_THROWS_AS(ls.solve_mode_high(1, f), error);
}

TEST_CASE("high-mode boundary-value solve against the analytic limit") {
    auto psi = PeriodicSolution::constant(3);
    auto cat = std::make_shared<ModeCatalog>(ModeCatalog::build(psi, 3));
    const double mu = 2.5, t0 = 5.0, rho = std::sqrt(11.0);
    LinearSolver ls(s2basis(), cat, mu, t0, GridSpec{0.01});

    std::vector<double> f(ls.nt());
    for (int j = 0; j < ls.nt(); ++j) f[j] = std::exp(-mu * ls.t(j));
    auto w = ls.solve_mode(3, f);

    CHECK(w.front() == 0.0); // imposed boundary row
    CHECK(w.back() == 0.0);

    double worst = 0;
    for (int j = 0; j < ls.nt() && ls.t(j) <= t0 + 10; ++j) {
        const double expect = (std::exp(-mu * ls.t(j))
                               - std::exp(-mu * t0) * std::exp(-rho * (ls.t(j) - t0)))
                            / (mu * mu - rho * rho);
        worst = std::max(worst, std::abs(w[j] - expect));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("mode solves satisfy the equation for the nonconstant profile") {
    auto psi = solve_periodic({3, 0.5 * constant_solution(3)});
    auto cat = std::make_shared<ModeCatalog>(ModeCatalog::build(psi, 3));
    const double mu = 2.1, t0 = 5.0;
    LinearSolver ls(s2basis(), cat, mu, t0, GridSpec{0.01});

    std::vector<double> f(ls.nt());
    for (int j = 0; j < ls.nt(); ++j)
        f[j] = std::exp(-mu * ls.t(j))
             * (1.0 + 0.3 * std::sin(2 * std::numbers::pi * ls.t(j) / psi.period()));

    for (int deg : {0, 1, 2, 3}) {
        auto w = ls.solve_mode(deg, f);
        auto d2 = detail::fd_derivative(w, ls.dt(), 2);
        double worst = 0, scale = 0;
        for (int j = 3; j < ls.nt() - 3; ++j) {
            const double Lw = d2[j]
                            + (detail::mode_potential(psi, ls.t(j)) - eigenvalue(deg, 3)) * w[j];
            const double wgt = std::exp(mu * ls.t(j));
            worst = std::max(worst, wgt * std::abs(Lw - f[j]));
            scale = std::max(scale, wgt * std::abs(f[j]));
        }
        CHECK(worst / scale < 1e-6);
    }
}

TEST_CASE("invert: round trip, linearity, and the built-in boundary") {
    auto basis = s2basis();
    for (bool constant : {true, false}) {
        auto psi = constant ? PeriodicSolution::constant(3)
                            : solve_periodic({3, 0.5 * constant_solution(3)});
        const double mu = constant ? 2.5 : 2.1;
        auto cat = std::make_shared<ModeCatalog>(ModeCatalog::build(psi, 3));
        LinearSolver ls(basis, cat, mu, 5.0, GridSpec{0.005});

        auto f = make_rhs(ls, psi, mu, constant ? 7u : 8u);
        CHECK(rel_roundtrip(ls, psi, f) < 1e-6);

        // linearity within rounding
        auto g = make_rhs(ls, psi, mu, constant ? 17u : 18u);
        auto sum = f;
        sum.axpy(2.5, g);
        auto w_sum = ls.invert(sum);
        auto w_split = ls.invert(f);
        w_split.axpy(2.5, ls.invert(g));
        w_split.axpy(-1.0, w_sum);
        CHECK(weighted_norm(w_split, mu) < 1e-10 * weighted_norm(w_sum, mu));

        // high-mode component vanishes at t0 exactly: a pure degree-3 field
        auto h = ls.zeros();
        for (int j = 0; j < h.nt; ++j)
            h.modes[basis->degree_offset(3)][j] = std::exp(-mu * h.t(j));
        auto wh = ls.invert(h);
        CHECK(wh.modes[basis->degree_offset(3)][0] == 0.0);
    }
}

TEST_CASE("operator-norm ratio is uniform in t0") {
    auto psi = solve_periodic({3, 0.5 * constant_solution(3)});
    auto cat = std::make_shared<ModeCatalog>(ModeCatalog::build(psi, 3));
    const double mu = 2.1;
    std::vector<double> ratios;
    for (double t0 : {5.0, 10.0, 20.0}) {
        LinearSolver ls(s2basis(), cat, mu, t0, GridSpec{0.01});
        auto f = ls.zeros();
        for (int j = 0; j < f.nt; ++j) {
            const double e = std::exp(-mu * f.t(j));
            f.modes[0][j] = 0.7 * e;
            f.modes[1][j] = e;
            f.modes[s2basis()->degree_offset(2)][j] = 0.5 * e;
            f.modes[s2basis()->degree_offset(3)][j] = 0.3 * e;
        }
        ratios.push_back(weighted_norm(ls.invert(f), mu) / weighted_norm(f, mu));
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    CHECK(*hi / *lo < 2.0);
}

TEST_CASE("grid convergence of the round trip") {
    auto psi = solve_periodic({3, 0.5 * constant_solution(3)});
    auto cat = std::make_shared<ModeCatalog>(ModeCatalog::build(psi, 3));
    const double mu = 2.1;
    double res_coarse, res_fine;
    {
        LinearSolver ls(s2basis(), cat, mu, 5.0, GridSpec{0.04});
        res_coarse = rel_roundtrip(ls, psi, make_rhs(ls, psi, mu, 5u));
    }
    {
        LinearSolver ls(s2basis(), cat, mu, 5.0, GridSpec{0.02});
        res_fine = rel_roundtrip(ls, psi, make_rhs(ls, psi, mu, 5u));
    }
    CHECK(res_coarse / res_fine >= 8.0);
}

TEST_CASE("weighted norms") {
    auto basis = s2basis();
    const double mu = 1.5;
    auto f = CylinderField::zeros(basis, 0.0, 0.01, 1501);
    const double sqrt4pi = std::sqrt(4.0 * std::numbers::pi);
    for (int j = 0; j < f.nt; ++j) f.modes[0][j] = sqrt4pi * std::exp(-mu * f.t(j));
    CHECK(weighted_norm(f, mu, 0) == Catch::Approx(1.0).epsilon(1e-12));

    // faster-decaying envelope attains its sup at t0 = 0
    for (int j = 0; j < f.nt; ++j) f.modes[0][j] = sqrt4pi * std::exp(-(mu + 1.0) * f.t(j));
    CHECK(weighted_norm(f, mu, 0) == Catch::Approx(1.0).epsilon(1e-12));

    // C^1 norm of e^{-mu t}: sup e^{mu t}(|w|) + sup e^{mu t}|w_t| = 1 + mu
    for (int j = 0; j < f.nt; ++j) f.modes[0][j] = sqrt4pi * std::exp(-mu * f.t(j));
    CHECK(weighted_norm(f, mu, 1) == Catch::Approx(1.0 + mu).epsilon(1e-8));

    // decaying kernel mode with rho > mu: finite, positive
    auto psi = solve_periodic({3, 0.5 * constant_solution(3)});
    auto ms = floquet_basis(psi, eigenvalue(3, 3));
    REQUIRE(ms.rho > mu);
    auto g = CylinderField::zeros(basis, 0.0, 0.01, 1501);
    for (int j = 0; j < g.nt; ++j) g.modes[basis->degree_offset(3)][j] = ms.psi_plus(g.t(j));
    const double norm = weighted_norm(g, mu, 0);
    CHECK(std::isfinite(norm));
    CHECK(norm > 0);

    CHECK_THROWS_AS(weighted_norm(f, mu, 3), error);
}
