#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "yamabe/cylinder.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/floquet.hpp"
#include "yamabe/index_set.hpp"
#include "yamabe/linear_solver.hpp"
#include "yamabe/periodic_fn.hpp"
#include "yamabe/radial.hpp"
#include "yamabe/sphere.hpp"

namespace yamabe {

/// Generalized binomial coefficient of (1+s)^((n+2)/(n-2)) at order k.
inline double taylor_coeff(int n, int k) {
    if (k < 0) throw error(errc::invalid_parameter, "k must be nonnegative");
    const double p = (n + 2.0) / (n - 2.0);
    double c = 1.0;
    for (int i = 0; i < k; ++i) c *= (p - i) / (i + 1.0);
    return c;
}

/// One structured term: coeff(t) * t^tpow * e^(-sigma t) * X_mode(theta)
/// with a periodic coefficient. Sums of these are closed under the
/// operations the construction needs (products, L-images, derivatives).
struct Term {
    double sigma = 0;
    int tpow = 0;
    int mode = 0;
    PeriodicFn coeff;
};

using TermSum = std::vector<Term>;

namespace detail {

inline TermSum normalize_terms(TermSum in, double sigma_tol) {
    std::sort(in.begin(), in.end(), [](const Term& a, const Term& b) {
        if (a.sigma != b.sigma) return a.sigma < b.sigma;
        if (a.tpow != b.tpow) return a.tpow < b.tpow;
        return a.mode < b.mode;
    });
    TermSum out;
    for (auto& t : in) {
        if (!out.empty()) {
            auto& last = out.back();
            if (std::abs(last.sigma - t.sigma) <= sigma_tol && last.tpow == t.tpow
                && last.mode == t.mode) {
                last.coeff += t.coeff;
                continue;
            }
        }
        out.push_back(std::move(t));
    }
    // drop exact-cancellation dust relative to the largest coefficient
    double scale = 0;
    for (const auto& t : out) scale = std::max(scale, t.coeff.sup_norm());
    TermSum pruned;
    for (auto& t : out)
        if (t.coeff.sup_norm() > 1e-13 * scale) pruned.push_back(std::move(t));
    return pruned;
}

/// Product of two term sums, expanding angular factors over the basis.
inline TermSum term_product(const TermSum& A, const TermSum& B, const SphereBasis& basis,
                            double sigma_cap, double sigma_tol) {
    TermSum out;
    for (const auto& a : A)
        for (const auto& b : B) {
            const double sigma = a.sigma + b.sigma;
            if (sigma > sigma_cap + sigma_tol) continue;
            const PeriodicFn c = a.coeff * b.coeff;
            for (const auto& [m, x] : basis.product_expand(a.mode, b.mode))
                out.push_back({sigma, a.tpow + b.tpow, m, x * c});
        }
    return normalize_terms(std::move(out), sigma_tol);
}

} // namespace detail

/// Decaying kernel combination: coefficients c_i on flat modes i >= 1 whose
/// channel satisfies rho_i + rho_1 < mu (deeper kernel modes would only
/// source orders beyond mu and are rejected).
struct KernelSeed {
    std::vector<std::pair<int, double>> coefficients; // (flat mode, c_i)
};

struct CorrectionRecord {
    double rho_tilde = 0;
    int max_tpow = 0;
    int degree_budget = 0;                 // K-tilde of this order
    std::vector<int> modes;                // flat modes solved
    double smallest_divisor = std::numeric_limits<double>::infinity();
    bool resonant = false;
};

struct ApproxConfig {
    double mu = 2.5;
    double rate_tol = 0.05;
    double fit_window_lo = 2.0;  // offsets from t0
    double fit_window_hi = 10.0;
    double positivity_guard = 0.5; // sup|eta| < guard * min psi
    double resonance_tol = 1e-8;
    double divisor_floor = 1e-10;
    double admit_tol = 1e-3;
};

/// v-hat = psi + eta + eta-tilde with per-order correction ledger. The term
/// list `phi` holds v-hat - psi; `l_phi` holds the exact image L(phi)
/// (zero for kernel seeds, the negated collected residual for corrections).
class ApproxSolution {
public:
    ApproxSolution(PeriodicSolution p, std::shared_ptr<const SphereBasis> b,
                   std::shared_ptr<const ModeCatalog> c)
        : psi(std::move(p)), basis(std::move(b)), catalog(std::move(c)) {}

    PeriodicSolution psi;
    std::shared_ptr<const SphereBasis> basis;
    std::shared_ptr<const ModeCatalog> catalog;
    KernelSeed seed;
    double mu = 0;
    TermSum phi;
    TermSum l_phi;
    std::vector<CorrectionRecord> corrections;
    IndexSet orders; // the coefficient-sum >= 2 generation below mu

    /// v-hat values at every quadrature node for one t.
    std::vector<double> node_values(double t) const {
        std::vector<double> v(basis->n_nodes(), psi.psi(t));
        add_terms_at(phi, t, v);
        return v;
    }

    /// psi-projected perturbation phi = v-hat - psi sampled onto a grid.
    CylinderField phi_field(double t0, double dt, int nt) const {
        auto f = CylinderField::zeros(basis, t0, dt, nt);
        for (const auto& term : phi) {
            for (int j = 0; j < nt; ++j) {
                const double t = f.t(j);
                f.modes[term.mode][j] += term.coeff.eval(t) * std::pow(t, term.tpow)
                                       * std::exp(-term.sigma * t);
            }
        }
        return f;
    }

    /// Structured residual N(v-hat) = L(phi) + nonlinear expansion; the
    /// corrected orders cancel inside the term algebra, so this evaluator
    /// stays accurate arbitrarily deep in the tail.
    TermSum residual_terms(double sigma_cap) const;

    /// sup over theta of |R(t, .)| for a term sum.
    double sup_theta(const TermSum& terms, double t) const {
        std::vector<double> v(basis->n_nodes(), 0.0);
        add_terms_at(terms, t, v);
        double s = 0;
        for (double x : v) s = std::max(s, std::abs(x));
        return s;
    }

    /// sup over theta of |grad R(t, .)| (cylinder gradient).
    double sup_theta_grad(const TermSum& terms, double t) const {
        const int Q = basis->n_nodes();
        std::vector<double> dt(Q, 0.0), gth(Q, 0.0), gph(Q, 0.0);
        for (const auto& term : terms) {
            const double e = std::exp(-term.sigma * t);
            const double tj = std::pow(t, term.tpow);
            const double val = term.coeff.eval(t) * tj * e;
            const double tjm = term.tpow > 0 ? term.tpow * std::pow(t, term.tpow - 1) : 0.0;
            const double dval = (term.coeff.derivative().eval(t) * tj
                                 + term.coeff.eval(t) * (tjm - term.sigma * tj)) * e;
            for (int q = 0; q < Q; ++q) {
                dt[q] += dval * basis->value(term.mode, q);
                gth[q] += val * basis->grad_theta(term.mode, q);
                gph[q] += val * basis->grad_phi(term.mode, q);
            }
        }
        double s = 0;
        for (int q = 0; q < Q; ++q)
            s = std::max(s, std::sqrt(dt[q] * dt[q] + gth[q] * gth[q] + gph[q] * gph[q]));
        return s;
    }

private:
    void add_terms_at(const TermSum& terms, double t, std::vector<double>& v) const {
        for (const auto& term : terms) {
            const double x = term.coeff.eval(t) * std::pow(t, term.tpow)
                           * std::exp(-term.sigma * t);
            for (int q = 0; q < basis->n_nodes(); ++q)
                v[q] += x * basis->value(term.mode, q);
        }
    }
};

namespace detail {

/// Periodic solve of the shifted channel operator
///   c'' - 2 rho~ c' + (rho~^2 + A(t) - lambda_m) c = g
/// through the paper's Wronskian-integral prescription, realized with the
/// closed-form half-line Fourier transforms.
inline PeriodicFn periodic_channel_solve(const ModeSystem& ms, const PeriodicFn& g,
                                         double rho_t, double divisor_floor) {
    const double W = ms.wronskian;
    if (ms.mode0) {
        const PeriodicFn gm = (1.0 / W) * (ms.p_minus * g);
        const PeriodicFn gp = (1.0 / W) * (ms.p_plus * g);
        return ms.p_plus * gm.exp_integral_forward(rho_t)
             - ms.p_minus * gp.exp_integral_forward(rho_t)
             + ms.mode0_a * (ms.p_plus * gp.exp_integral_forward_linear(rho_t));
    }
    const double gap = rho_t - ms.rho;
    if (std::abs(gap) * (rho_t + ms.rho) < divisor_floor)
        throw error(errc::near_resonance, "channel divisor below the floor");
    const PeriodicFn gm = (1.0 / W) * (ms.p_minus * g);
    const PeriodicFn gp = (1.0 / W) * (ms.p_plus * g);
    if (ms.rho < rho_t)
        return ms.p_plus * gm.exp_integral_forward(gap)
             - ms.p_minus * gp.exp_integral_forward(rho_t + ms.rho);
    return -1.0 * (ms.p_plus * gm.exp_integral_backward(-gap))
         - ms.p_minus * gp.exp_integral_forward(rho_t + ms.rho);
}

/// Singular (resonant) periodic solve of c'' - 2 rho~ c' + (...) c = g for
/// rho_m = rho~: requires the Fredholm condition <g, p-> = 0 and returns the
/// particular solution with no p+ component fixed yet.
inline PeriodicFn resonant_channel_solve(const ModeSystem& ms, const PeriodicFn& g,
                                         double rho_t) {
    const double W = ms.wronskian;
    const PeriodicFn gm = (1.0 / W) * (ms.p_minus * g);
    const PeriodicFn gp = (1.0 / W) * (ms.p_plus * g);
    return -1.0 * (ms.p_plus * gm.antiderivative_meanzero())
         - ms.p_minus * gp.exp_integral_forward(2.0 * rho_t);
}

} // namespace detail

/// Solves L_m(sum_j c_j t^j e^(-rho~ t)) = sum_j a_j t^j e^(-rho~ t).
/// Non-resonant channels keep the t-power stack; a resonant channel
/// (rho_m = rho~) gains one power of t. Returns c_0..c_J(+1).
inline std::vector<PeriodicFn> solve_correction(const ModeSystem& ms,
                                                const std::vector<PeriodicFn>& rhs, double rho_t,
                                                const ApproxConfig& cfg = {}) {
    const int J = static_cast<int>(rhs.size()) - 1;
    const bool resonant = !ms.mode0 && std::abs(ms.rho - rho_t) < cfg.resonance_tol;

    if (!resonant) {
        std::vector<PeriodicFn> c(J + 1, PeriodicFn(0.0));
        for (int j = J; j >= 0; --j) {
            PeriodicFn g = rhs[j];
            if (j + 1 <= J) {
                g = g - 2.0 * (j + 1.0) * (c[j + 1].derivative() - rho_t * c[j + 1]);
            }
            if (j + 2 <= J) {
                g = g - (j + 2.0) * (j + 1.0) * c[j + 2];
            }
            c[j] = detail::periodic_channel_solve(ms, g, rho_t, cfg.divisor_floor);
        }
        return c;
    }

    // resonant cascade with one extra power; kernel multiples are fixed by
    // the solvability of the next level down
    std::vector<PeriodicFn> c(J + 2, PeriodicFn(0.0));
    const double s2 = -0.5 * ms.wronskian; // mean((p+' - rho~ p+) p-)
    for (int j = J; j >= 0; --j) {
        PeriodicFn g0 = rhs[j];
        if (j + 2 <= J + 1) g0 = g0 - (j + 2.0) * (j + 1.0) * c[j + 2];
        g0 = g0 - 2.0 * (j + 1.0) * (c[j + 1].derivative() - rho_t * c[j + 1]);
        // solvability: subtract the right kernel multiple at level j+1
        const double num = (g0 * ms.p_minus).mean();
        const double gamma = num / (2.0 * (j + 1.0) * s2);
        c[j + 1] = c[j + 1] + gamma * ms.p_plus;
        g0 = g0 - gamma * 2.0 * (j + 1.0) * (ms.dp_plus - rho_t * ms.p_plus);
        c[j] = detail::resonant_channel_solve(ms, g0, rho_t);
    }
    return c;
}

/// Structured expansion of the nonlinearity:
/// N(psi + phi) = L(phi) + sum_{k=2..K} (n(n-2)/4) binom(p, k) psi^(p-k) phi^k,
/// truncated to exponents <= sigma_cap.
inline TermSum nonlinear_expansion(const PeriodicSolution& psi, const SphereBasis& basis,
                                   const TermSum& phi, double sigma_cap, int K) {
    const int n = psi.n();
    const double p = (n + 2.0) / (n - 2.0);
    const double sigma_tol = 1e-9;
    TermSum out;
    TermSum power = phi; // phi^k
    for (int k = 2; k <= K; ++k) {
        power = detail::term_product(power, phi, basis, sigma_cap, sigma_tol);
        if (power.empty()) break;
        const double ak = 0.25 * n * (n - 2.0) * taylor_coeff(n, k);
        if (ak == 0.0) continue;
        const PeriodicFn psipow = map_samples(psi.is_constant()
                                                  ? PeriodicFn(psi.psi(0.0))
                                                  : psi.psi_fn(),
                                              [&](double v) { return std::pow(v, p - k); });
        for (const auto& t : power)
            out.push_back({t.sigma, t.tpow, t.mode, ak * (psipow * t.coeff)});
    }
    return detail::normalize_terms(std::move(out), sigma_tol);
}

inline TermSum ApproxSolution::residual_terms(double sigma_cap) const {
    const int K = static_cast<int>(std::floor(sigma_cap)) + 1;
    TermSum out = l_phi;
    auto nl = nonlinear_expansion(psi, *basis, phi, sigma_cap, K);
    out.insert(out.end(), nl.begin(), nl.end());
    return detail::normalize_terms(std::move(out), 1e-9);
}

/// Least-squares decay rate of samples (t, y) over a window, ignoring
/// points at or below the numerical floor. Returns +infinity when too few
/// points carry signal (rate indeterminate).
inline double decay_rate(const std::vector<std::pair<double, double>>& samples, double floor_level) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [t, y] : samples)
        if (y > floor_level) pts.emplace_back(t, std::log(y));
    if (pts.size() < 5) return std::numeric_limits<double>::infinity();
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (const auto& [t, ly] : pts) {
        st += t;
        sy += ly;
        stt += t * t;
        sty += t * ly;
    }
    const double m = static_cast<double>(pts.size());
    const double slope = (m * sty - st * sy) / (m * stt - st * st);
    return -slope;
}

/// Fitted decay rate of sup_theta |N(v-hat)| over [t0+lo, t0+hi].
inline double fitted_residual_rate(const ApproxSolution& v, double t0, const ApproxConfig& cfg,
                                   bool gradient = false) {
    auto terms = v.residual_terms(cfg.mu + 1.5);
    std::vector<std::pair<double, double>> samples;
    const int npts = 40;
    for (int i = 0; i <= npts; ++i) {
        const double t = t0 + cfg.fit_window_lo
                       + (cfg.fit_window_hi - cfg.fit_window_lo) * i / npts;
        samples.emplace_back(t, gradient ? v.sup_theta_grad(terms, t) : v.sup_theta(terms, t));
    }
    return decay_rate(samples, 1e-280);
}

/// Proposition-style construction: solve corrections order by order through
/// the coefficient-sum >= 2 index ladder until every exponent below mu is
/// cancelled.
inline ApproxSolution build_approx(const PeriodicSolution& psi,
                                   std::shared_ptr<const SphereBasis> basis,
                                   std::shared_ptr<const ModeCatalog> catalog,
                                   const KernelSeed& seed, const ApproxConfig& cfg,
                                   int max_orders = -1) {
    ApproxSolution v(psi, std::move(basis), std::move(catalog));
    v.seed = seed;
    v.mu = cfg.mu;
    const auto& B = *v.basis;
    const auto& cat = *v.catalog;
    const double sigma_tol = 1e-9;

    // admissibility of mu against the full index set
    std::vector<double> roots;
    std::vector<int> degs;
    for (const auto& [k, ms] : cat.by_degree) {
        roots.push_back(ms.rho);
        degs.push_back(k);
    }
    auto full = generate(roots, degs, cfg.mu + 1.0, 1);
    auto adm = check_mu(full, cfg.mu, cfg.admit_tol);
    if (!adm.admissible)
        throw error(errc::index_conflict, std::string("mu inadmissible: ") + adm.reason);

    const double rho1 = cat.rho(1);

    // seed eligibility and the kernel combination
    for (const auto& [m, ci] : seed.coefficients) {
        const int deg = B.mode(m).degree;
        if (deg < 1)
            throw error(errc::invalid_parameter, "seed must use decaying kernel modes (degree >= 1)");
        const auto& ms = cat.by_degree.at(deg);
        if (!(ms.rho + rho1 < cfg.mu))
            throw error(errc::invalid_parameter,
                        "seed mode with rho_i + rho_1 >= mu sources only orders beyond mu");
        v.phi.push_back({ms.rho, 0, m, ci * ms.p_plus});
    }
    v.phi = detail::normalize_terms(std::move(v.phi), sigma_tol);

    // positivity guard: sup |eta| < guard * min psi
    double eta_sup = 0;
    for (int q = 0; q < B.n_nodes(); ++q) {
        double s = 0;
        for (const auto& t : v.phi) s += t.coeff.sup_norm() * std::abs(B.value(t.mode, q));
        eta_sup = std::max(eta_sup, s);
    }
    if (eta_sup >= cfg.positivity_guard * psi.psi_min())
        throw error(errc::seed_too_large, "kernel seed threatens positivity of v-hat");

    // correction orders: coefficient-sum >= 2 combinations below mu
    v.orders = generate(roots, degs, cfg.mu, 2);
    const double sigma_cap = cfg.mu + 1.5;
    const int K = static_cast<int>(std::floor(cfg.mu / rho1)) + 1;

    int orders_done = 0;
    for (const auto& order : v.orders.elements) {
        if (order.value >= cfg.mu) break;
        if (max_orders >= 0 && orders_done >= max_orders) break;
        const double rho_t = order.value;

        TermSum residual = v.l_phi;
        auto nl = nonlinear_expansion(psi, B, v.phi, sigma_cap, K);
        residual.insert(residual.end(), nl.begin(), nl.end());
        residual = detail::normalize_terms(std::move(residual), sigma_tol);

        for (const auto& t : residual)
            if (t.sigma < rho_t - 1e-6)
                throw error(errc::induction_violation,
                            "uncancelled term below the current order");

        // collect coefficients at this order: (mode, tpow) -> a(t)
        std::map<std::pair<int, int>, PeriodicFn> collected;
        for (const auto& t : residual) {
            if (std::abs(t.sigma - rho_t) > 1e-6) continue;
            auto key = std::make_pair(t.mode, t.tpow);
            auto it = collected.find(key);
            if (it == collected.end())
                collected.emplace(key, t.coeff);
            else
                it->second += t.coeff;
        }
        if (collected.empty()) continue;

        CorrectionRecord rec;
        rec.rho_tilde = rho_t;
        rec.degree_budget = order.max_degree_weight;

        // group by mode
        std::map<int, std::vector<PeriodicFn>> by_mode;
        for (const auto& [key, a] : collected) {
            const auto [m, j] = key;
            if (B.mode(m).degree > order.max_degree_weight)
                throw error(errc::induction_violation,
                            "correction exceeds the angular degree budget of its order");
            auto& stack = by_mode[m];
            if (static_cast<int>(stack.size()) <= j) stack.resize(j + 1, PeriodicFn(0.0));
            stack[j] = a;
        }

        for (auto& [m, stack] : by_mode) {
            const int deg = B.mode(m).degree;
            const ModeSystem* ms = nullptr;
            if (deg == 0) {
                if (psi.is_constant()) {
                    // constant-profile mode 0: diagonal division, all
                    // coefficients constant
                    std::vector<PeriodicFn> c(stack.size(), PeriodicFn(0.0));
                    const double denom = rho_t * rho_t + (psi.n() - 2.0);
                    // cascade in descending power (same structure, scalar)
                    const int J = static_cast<int>(stack.size()) - 1;
                    std::vector<double> cv(J + 1, 0.0);
                    for (int j = J; j >= 0; --j) {
                        double g = -stack[j].mean();
                        if (j + 1 <= J) g -= 2.0 * (j + 1.0) * (-rho_t * cv[j + 1]);
                        if (j + 2 <= J) g -= (j + 2.0) * (j + 1.0) * cv[j + 2];
                        cv[j] = g / denom;
                        rec.smallest_divisor = std::min(rec.smallest_divisor, denom);
                    }
                    for (int j = 0; j <= J; ++j) {
                        v.phi.push_back({rho_t, j, m, PeriodicFn(cv[j])});
                        v.l_phi.push_back({rho_t, j, m, -1.0 * stack[j]});
                    }
                    rec.modes.push_back(m);
                    rec.max_tpow = std::max(rec.max_tpow, J);
                    continue;
                }
                ms = &*cat.mode0;
            } else {
                ms = &cat.by_degree.at(deg);
            }

            std::vector<PeriodicFn> rhs;
            rhs.reserve(stack.size());
            for (const auto& a : stack) rhs.push_back(-1.0 * a);
            const bool resonant = !ms->mode0 && std::abs(ms->rho - rho_t) < cfg.resonance_tol;
            auto c = solve_correction(*ms, rhs, rho_t, cfg);
            for (int j = 0; j < static_cast<int>(c.size()); ++j) {
                if (c[j].sup_norm() == 0.0) continue;
                v.phi.push_back({rho_t, j, m, c[j]});
            }
            for (int j = 0; j < static_cast<int>(stack.size()); ++j)
                v.l_phi.push_back({rho_t, j, m, -1.0 * stack[j]});
            rec.modes.push_back(m);
            rec.resonant = rec.resonant || resonant;
            rec.max_tpow = std::max(rec.max_tpow, static_cast<int>(c.size()) - 1);
            if (!ms->mode0 && !resonant)
                rec.smallest_divisor =
                    std::min(rec.smallest_divisor,
                             std::abs(rho_t * rho_t - ms->rho * ms->rho));
        }
        v.phi = detail::normalize_terms(std::move(v.phi), sigma_tol);
        v.l_phi = detail::normalize_terms(std::move(v.l_phi), sigma_tol);
        v.corrections.push_back(std::move(rec));
        ++orders_done;
    }
    return v;
}

} // namespace yamabe
