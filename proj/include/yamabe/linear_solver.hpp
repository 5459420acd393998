#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "yamabe/cylinder.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/floquet.hpp"
#include "yamabe/index_set.hpp"
#include "yamabe/periodic_fn.hpp"
#include "yamabe/radial.hpp"
#include "yamabe/sphere.hpp"

namespace yamabe {

/// L applied on the grid: per mode, fourth-order second differences in t
/// plus the (A(t) - lambda_i) zero-order coefficient. Boundary rows use
/// one-sided stencils.
inline CylinderField apply_L(const CylinderField& f, const PeriodicSolution& psi) {
    CylinderField out = CylinderField::zeros(f.basis, f.t0, f.dt, f.nt);
    std::vector<double> A(f.nt);
    for (int j = 0; j < f.nt; ++j) A[j] = detail::mode_potential(psi, f.t(j));
    for (int m = 0; m < f.n_modes(); ++m) {
        const double lam = f.basis->lambda(m);
        const auto d2 = detail::fd_derivative(f.modes[m], f.dt, 2);
        for (int j = 0; j < f.nt; ++j)
            out.modes[m][j] = d2[j] + (A[j] - lam) * f.modes[m][j];
    }
    return out;
}

/// Floquet data for every degree carried by a basis, built once and shared.
struct ModeCatalog {
    PeriodicSolution psi;
    std::map<int, ModeSystem> by_degree; // degree >= 1
    std::optional<ModeSystem> mode0;     // nonconstant psi only

    static ModeCatalog build(const PeriodicSolution& psi, int max_degree,
                             const detail::ode_options& opt = {}) {
        ModeCatalog cat{psi, {}, {}};
        for (int k = 1; k <= max_degree; ++k)
            cat.by_degree.emplace(k, floquet_basis(psi, eigenvalue(k, psi.n()), opt));
        if (!psi.is_constant()) cat.mode0 = mode0_basis(psi, opt);
        return cat;
    }

    double rho(int degree) const {
        if (degree == 0) return 0.0;
        return by_degree.at(degree).rho;
    }

    int max_degree() const { return by_degree.empty() ? 0 : by_degree.rbegin()->first; }
};

struct GridSpec {
    double t_step = 0.01;
    double min_span = 20.0;
    double decay_budget = 20.0; // span >= budget / sigma_min
    double max_span = 400.0;
};

/// Truncation rule: the domain extends far enough that every per-mode decay
/// gap |mu - rho_i| has unwound by decay_budget e-foldings.
inline double truncation_span(const ModeCatalog& cat, double mu, const GridSpec& g) {
    double sigma_min = mu; // mode-0 gap
    for (const auto& [k, ms] : cat.by_degree)
        sigma_min = std::min(sigma_min, std::abs(mu - ms.rho));
    if (sigma_min <= 0)
        throw error(errc::index_conflict, "mu collides with an indicial root");
    return std::min(g.max_span, std::max(g.min_span, g.decay_budget / sigma_min));
}

namespace detail {

/// Moments int_0^h u^k e^(-sigma u) du, k = 0..4; series for small |sigma| h.
template <typename S>
std::array<S, 5> exp_moments(S sigma, double h) {
    std::array<S, 5> M;
    if (std::abs(sigma) * h < 1e-4) {
        for (int k = 0; k <= 4; ++k) {
            S acc(0.0), pw(1.0);
            double fact = 1.0;
            for (int m = 0; m <= 8; ++m) {
                acc += pw / (fact * (k + m + 1.0));
                pw *= -sigma * h;
                fact *= (m + 1.0);
            }
            M[k] = acc * std::pow(h, k + 1.0);
        }
        return M;
    }
    const S E = std::exp(-sigma * h);
    M[0] = (1.0 - E) / sigma;
    double hk = 1.0;
    for (int k = 1; k <= 4; ++k) {
        hk *= h;
        M[k] = (static_cast<double>(k) * M[k - 1] - hk * E) / sigma;
    }
    return M;
}

/// Monomial coefficients (in u, relative to the interval start) of the cubic
/// through four uniformly spaced samples starting at offset o*h.
inline Eigen::Matrix4d cubic_coeff_map(int o, double h) {
    Eigen::Matrix4d V;
    for (int r = 0; r < 4; ++r) {
        const double u = (o + r) * h;
        double pw = 1.0;
        for (int k = 0; k < 4; ++k) {
            V(r, k) = pw;
            pw *= u;
        }
    }
    return V.inverse();
}

/// Cubic interpolation of uniform grid samples at an arbitrary point.
inline double grid_interp(const std::vector<double>& y, double t0, double dt, double t) {
    const int n = static_cast<int>(y.size());
    int j = static_cast<int>(std::floor((t - t0) / dt));
    j = std::clamp(j - 1, 0, n - 4);
    double acc = 0;
    for (int i = 0; i < 4; ++i) {
        double ell = 1.0;
        for (int r = 0; r < 4; ++r)
            if (r != i) ell *= (t - (t0 + (j + r) * dt)) / ((i - r) * dt);
        acc += ell * y[j + i];
    }
    return acc;
}

} // namespace detail

/// Bounded right inverse of L on [t0, t0 + span] with the built-in boundary
/// condition: modes with rho_i < mu solve by the Wronskian integral
/// formulas with exact geometric tail closure (envelope rate mu); the
/// remaining modes solve zero-Dirichlet two-point problems whose left
/// boundary value vanishes identically.
class LinearSolver {
public:
    LinearSolver(std::shared_ptr<const SphereBasis> basis, std::shared_ptr<const ModeCatalog> cat,
                 double mu, double t0, GridSpec grid = {})
        : basis_(std::move(basis)), cat_(std::move(cat)), mu_(mu), t0_(t0), grid_(grid) {
        if (!(mu > 1.0))
            throw error(errc::index_conflict, "the solver requires mu > 1");
        const double span = truncation_span(*cat_, mu, grid);
        nt_ = static_cast<int>(std::ceil(span / grid.t_step)) + 1;
        dt_ = span / (nt_ - 1);
        for (const auto& [k, ms] : cat_->by_degree)
            if (std::abs(ms.rho - mu) < 1e-9)
                throw error(errc::index_conflict, "mu equals an indicial root");

        apot_.resize(nt_);
        for (int j = 0; j < nt_; ++j)
            apot_[j] = detail::mode_potential(cat_->psi, t(j));

        // periodic parts sampled on the grid, one pair per low degree
        for (const auto& [k, ms] : cat_->by_degree) {
            if (ms.rho > mu_) {
                factorize_high(k, ms.lambda);
                continue;
            }
            auto& smp = low_samples_[k];
            smp.pp.resize(nt_);
            smp.pm.resize(nt_);
            for (int j = 0; j < nt_; ++j) {
                smp.pp[j] = ms.p_plus.eval(t(j));
                smp.pm[j] = ms.p_minus.eval(t(j));
            }
        }
        if (cat_->mode0) {
            auto& smp = low_samples_[0];
            smp.pp.resize(nt_);
            smp.pm.resize(nt_);
            for (int j = 0; j < nt_; ++j) {
                smp.pp[j] = cat_->mode0->p_plus.eval(t(j));
                smp.pm[j] = cat_->mode0->p_minus.eval(t(j));
            }
        }

        cubic_interior_ = detail::cubic_coeff_map(-1, dt_);
        cubic_left_ = detail::cubic_coeff_map(0, dt_);
        cubic_right_ = detail::cubic_coeff_map(-2, dt_);
    }

    double t0() const { return t0_; }
    double dt() const { return dt_; }
    int nt() const { return nt_; }
    double t(int j) const { return t0_ + j * dt_; }
    double mu() const { return mu_; }
    const ModeCatalog& catalog() const { return *cat_; }
    const std::shared_ptr<const SphereBasis>& basis() const { return basis_; }

    CylinderField zeros() const { return CylinderField::zeros(basis_, t0_, dt_, nt_); }

    /// L^{-1} f: per-mode routing by rho_i vs mu; linear in f.
    CylinderField invert(const CylinderField& f) const {
        check_grid(f);
        CylinderField w = zeros();
        for (int m = 0; m < f.n_modes(); ++m) {
            bool empty = true;
            for (double v : f.modes[m])
                if (v != 0.0) { empty = false; break; }
            if (empty) continue;
            const int deg = basis_->mode(m).degree;
            w.modes[m] = solve_mode(deg, f.modes[m]);
        }
        return w;
    }

    /// One scalar channel, routed like invert().
    std::vector<double> solve_mode(int degree, const std::vector<double>& f) const {
        if (degree == 0) {
            if (cat_->psi.is_constant()) return solve_mode0_const(f);
            return solve_mode0_low(*cat_->mode0, f);
        }
        const auto& ms = cat_->by_degree.at(degree);
        if (ms.rho < mu_) return solve_mode_low(ms, f);
        return solve_mode_high(degree, f);
    }

    /// Wronskian-integral solve (rho_i < mu):
    /// w = psi+ int_t^inf psi- f / W - psi- int_t^inf psi+ f / W,
    /// computed with per-step scaled recurrences and Fourier tail closure.
    std::vector<double> solve_mode_low(const ModeSystem& ms, const std::vector<double>& f) const {
        if (!(ms.rho < mu_))
            throw error(errc::wrong_branch, "rho >= mu: use the boundary-value branch");
        if (!(mu_ - ms.rho > 1e-9))
            throw error(errc::tail_truncation_error, "tail integral does not converge");
        const double rho = ms.rho, W = ms.wronskian, h = dt_;
        const int deg_key = lookup_degree(ms);
        const auto& smp = low_samples_.at(deg_key);

        std::vector<double> P1(nt_), P2(nt_);
        for (int j = 0; j < nt_; ++j) {
            P1[j] = smp.pm[j] * f[j];
            P2[j] = smp.pp[j] * f[j];
        }
        const double j1_tail = tail_transform(ms.p_minus, f, mu_ - rho) / W;
        const double j2_tail = tail_transform(ms.p_plus, f, mu_ + rho) / W;

        const auto Mm = detail::exp_moments(-rho, h); // for e^{+rho u}
        const auto Mp = detail::exp_moments(+rho, h);
        std::vector<double> J1(nt_), J2(nt_);
        J1[nt_ - 1] = j1_tail;
        J2[nt_ - 1] = j2_tail;
        const double em = std::exp(rho * h), ep = std::exp(-rho * h);
        for (int j = nt_ - 2; j >= 0; --j) {
            J1[j] = em * J1[j + 1] + local_integral(P1, j, Mm) / W;
            J2[j] = ep * J2[j + 1] + local_integral(P2, j, Mp) / W;
        }
        std::vector<double> w(nt_);
        for (int j = 0; j < nt_; ++j) w[j] = smp.pp[j] * J1[j] - smp.pm[j] * J2[j];
        return w;
    }

    /// Mode-0 solve for nonconstant psi via the three-term formula built on
    /// the kernel basis p0+ and a t p0+ + p0-.
    std::vector<double> solve_mode0_low(const ModeSystem& ms0, const std::vector<double>& f) const {
        const double W = ms0.wronskian, a = ms0.mode0_a, h = dt_;
        const auto& smp = low_samples_.at(0);
        std::vector<double> PA(nt_), PB(nt_);
        for (int j = 0; j < nt_; ++j) {
            PA[j] = smp.pm[j] * f[j];
            PB[j] = smp.pp[j] * f[j];
        }
        const auto M0 = detail::exp_moments(0.0, h);
        std::vector<double> IA(nt_), IB(nt_), IC(nt_);
        IA[nt_ - 1] = tail_transform(ms0.p_minus, f, mu_) / W;
        IB[nt_ - 1] = tail_transform(ms0.p_plus, f, mu_) / W;
        IC[nt_ - 1] = tail_transform_linear(ms0.p_plus, f, mu_) / W;
        for (int j = nt_ - 2; j >= 0; --j) {
            IA[j] = IA[j + 1] + local_integral(PA, j, M0) / W;
            IB[j] = IB[j + 1] + local_integral(PB, j, M0) / W;
            IC[j] = IC[j + 1] + h * IB[j + 1] + local_integral_linear(PB, j, M0) / W;
        }
        std::vector<double> w(nt_);
        for (int j = 0; j < nt_; ++j)
            w[j] = smp.pp[j] * IA[j] - smp.pm[j] * IB[j] + a * smp.pp[j] * IC[j];
        return w;
    }

    /// Mode-0 solve for the constant profile: oscillatory kernel
    /// w(t) = (1/kappa) int_t^inf sin(kappa (s-t)) f(s) ds, kappa = sqrt(n-2).
    std::vector<double> solve_mode0_const(const std::vector<double>& f) const {
        using cplx = std::complex<double>;
        const double kappa = std::sqrt(cat_->psi.n() - 2.0);
        const auto Mc = detail::exp_moments(cplx(0.0, -kappa), dt_);
        // Z(t) = int_t^inf e^{i kappa s} f(s) ds, with the pure-exponential
        // tail model f(s) = f(T) e^{-mu (s-T)} beyond the grid.
        std::vector<cplx> Z(nt_);
        const double T = t(nt_ - 1);
        Z[nt_ - 1] = std::polar(1.0, kappa * T) * (f[nt_ - 1] / cplx(mu_, -kappa));
        for (int j = nt_ - 2; j >= 0; --j) {
            const auto a4 = cubic_at(f, j);
            cplx loc(0.0, 0.0);
            for (int k = 0; k < 4; ++k) loc += a4[k] * Mc[k];
            Z[j] = Z[j + 1] + std::polar(1.0, kappa * t(j)) * loc;
        }
        std::vector<double> w(nt_);
        for (int j = 0; j < nt_; ++j)
            w[j] = std::imag(std::polar(1.0, -kappa * t(j)) * Z[j]) / kappa;
        return w;
    }

    /// Two-point boundary-value solve (rho_i > mu): L_i w = f,
    /// w(t0) = w(T) = 0, fourth-order pentadiagonal-plus-edges system.
    std::vector<double> solve_mode_high(int degree, const std::vector<double>& f) const {
        const auto& ms = cat_->by_degree.at(degree);
        if (!(ms.rho > mu_))
            throw error(errc::wrong_branch, "rho <= mu: use the integral branch");
        const auto it = high_lu_.find(degree);
        if (it == high_lu_.end())
            throw error(errc::discretization_failure, "no factorization for this degree");
        Eigen::VectorXd rhs(nt_);
        for (int j = 0; j < nt_; ++j) rhs(j) = f[j];
        rhs(0) = rhs(nt_ - 1) = 0.0;
        Eigen::VectorXd x = it->second->solve(rhs);
        if (it->second->info() != Eigen::Success)
            throw error(errc::discretization_failure, "singular boundary-value system");
        std::vector<double> w(x.data(), x.data() + nt_);
        w.front() = 0.0; // imposed rows hold exactly
        w.back() = 0.0;
        return w;
    }

private:
    struct LowSamples {
        std::vector<double> pp, pm;
    };

    int lookup_degree(const ModeSystem& ms) const {
        for (const auto& [k, m] : cat_->by_degree)
            if (&m == &ms) return k;
        // external ModeSystem: accept if it matches a catalog entry's lambda
        for (const auto& [k, m] : cat_->by_degree)
            if (std::abs(m.lambda - ms.lambda) < 1e-12) return k;
        throw error(errc::invalid_parameter, "mode system is not part of the catalog");
    }

    void check_grid(const CylinderField& f) const {
        if (f.nt != nt_ || std::abs(f.t0 - t0_) > 1e-12 || std::abs(f.dt - dt_) > 1e-12)
            throw error(errc::invalid_parameter, "field grid does not match the solver grid");
    }

    std::array<double, 4> cubic_at(const std::vector<double>& y, int j) const {
        const Eigen::Matrix4d* C = &cubic_interior_;
        int base = j - 1;
        if (j == 0) {
            C = &cubic_left_;
            base = 0;
        } else if (j >= nt_ - 2) {
            C = &cubic_right_;
            base = j - 2;
        }
        std::array<double, 4> a{};
        for (int k = 0; k < 4; ++k)
            for (int r = 0; r < 4; ++r) a[k] += (*C)(k, r) * y[base + r];
        return a;
    }

    double local_integral(const std::vector<double>& P, int j,
                          const std::array<double, 5>& M) const {
        const auto a = cubic_at(P, j);
        double acc = 0;
        for (int k = 0; k < 4; ++k) acc += a[k] * M[k];
        return acc;
    }

    double local_integral_linear(const std::vector<double>& P, int j,
                                 const std::array<double, 5>& M) const {
        const auto a = cubic_at(P, j);
        double acc = 0;
        for (int k = 0; k < 4; ++k) acc += a[k] * M[k + 1];
        return acc;
    }

    /// (1/1) int_0^inf p(T+tau) F(tau) e^(-sigma tau) dtau where F is the
    /// periodic tail model of f beyond the grid with envelope rate mu.
    double tail_transform(const PeriodicFn& p, const std::vector<double>& f, double sigma) const {
        PeriodicFn pf = tail_product(p, f);
        return pf.exp_integral_forward(sigma).eval(0.0);
    }

    double tail_transform_linear(const PeriodicFn& p, const std::vector<double>& f,
                                 double sigma) const {
        PeriodicFn pf = tail_product(p, f);
        return pf.exp_integral_forward_linear(sigma).eval(0.0);
    }

    PeriodicFn tail_product(const PeriodicFn& p, const std::vector<double>& f) const {
        const double T = t(nt_ - 1);
        if (cat_->psi.is_constant())
            return PeriodicFn(p.eval(0.0) * f[nt_ - 1]);
        const double Tp = cat_->psi.period();
        const int N = 64;
        std::vector<double> v(N);
        for (int g = 0; g < N; ++g) {
            const double tau = Tp * g / N;
            const double s = T + tau - Tp; // in-grid sample one period back
            v[g] = p.eval(T + tau) * detail::grid_interp(f, t0_, dt_, s) * std::exp(mu_ * (tau - Tp));
        }
        return PeriodicFn(Tp, std::move(v));
    }

    void factorize_high(int degree, double lambda) {
        // truncation quality of the zero right boundary
        const double rho = cat_->by_degree.at(degree).rho;
        const double span = (nt_ - 1) * dt_;
        if (std::exp(-(rho - mu_) * span) > 1e-6)
            throw error(errc::extend_truncation, "right boundary too close for this mode");

        using Trip = Eigen::Triplet<double>;
        std::vector<Trip> trips;
        const auto add_row = [&](int j, int at, const std::vector<double>& w) {
            for (std::size_t s = 0; s < w.size(); ++s)
                trips.emplace_back(j, at + static_cast<int>(s), w[s]);
        };
        // second-derivative stencils: centered 5-point inside, one-sided
        // 7-point (still 4th order) on the two rows next to each boundary
        static const auto c5 = detail::fd_stencil_uniform(5, 2, 2, 1.0);
        static const auto e7_1 = detail::fd_stencil_uniform(7, 1, 2, 1.0);
        static const auto e7_5 = detail::fd_stencil_uniform(7, 5, 2, 1.0);
        const double ih2 = 1.0 / (dt_ * dt_);
        trips.emplace_back(0, 0, 1.0);
        trips.emplace_back(nt_ - 1, nt_ - 1, 1.0);
        for (int j = 1; j < nt_ - 1; ++j) {
            std::vector<double> w;
            int at;
            if (j == 1) {
                w = e7_1;
                at = 0;
            } else if (j == nt_ - 2) {
                w = e7_5;
                at = nt_ - 7;
            } else {
                w = c5;
                at = j - 2;
            }
            for (double& x : w) x *= ih2;
            add_row(j, at, w);
            trips.emplace_back(j, j, apot_[j] - lambda);
        }
        Eigen::SparseMatrix<double> Amat(nt_, nt_);
        Amat.setFromTriplets(trips.begin(), trips.end());
        auto lu = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
        lu->compute(Amat);
        if (lu->info() != Eigen::Success)
            throw error(errc::discretization_failure, "boundary-value factorization failed");
        high_lu_.emplace(degree, std::move(lu));
    }

    std::shared_ptr<const SphereBasis> basis_;
    std::shared_ptr<const ModeCatalog> cat_;
    double mu_, t0_, dt_ = 0;
    int nt_ = 0;
    GridSpec grid_;
    std::vector<double> apot_;
    std::map<int, LowSamples> low_samples_;
    std::map<int, std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>>> high_lu_;
    Eigen::Matrix4d cubic_interior_, cubic_left_, cubic_right_;
};

} // namespace yamabe
