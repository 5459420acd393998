#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "yamabe/errors.hpp"

namespace yamabe {

/// Eigenvalue ladder of -Laplacian on S^(n-1): lambda = k(k+n-2).
inline double eigenvalue(int k, int n) {
    if (k < 0 || n < 3) throw error(errc::invalid_parameter, "need k >= 0, n >= 3");
    return static_cast<double>(k) * (k + n - 2.0);
}

/// Dimension of the degree-k spherical harmonics on S^(n-1):
/// C(n+k-1, k) - C(n+k-3, k-2).
inline std::int64_t multiplicity(int k, int n) {
    if (k < 0 || n < 3) throw error(errc::invalid_parameter, "need k >= 0, n >= 3");
    auto binom = [](std::int64_t a, std::int64_t b) -> std::int64_t {
        if (b < 0 || b > a) return 0;
        b = std::min(b, a - b);
        std::int64_t r = 1;
        for (std::int64_t i = 1; i <= b; ++i) r = r * (a - b + i) / i;
        return r;
    };
    return binom(n + k - 1, k) - binom(n + k - 3, k - 2);
}

struct ModeIndex {
    int flat = 0;
    int degree = 0;
    int order = 0; // index within the degree block
};

namespace detail {

inline double sphere_area(int m) {
    // |S^m| = 2 pi^((m+1)/2) / Gamma((m+1)/2)
    return 2.0 * std::pow(std::numbers::pi, (m + 1) / 2.0) / std::tgamma((m + 1) / 2.0);
}

/// Gauss-Jacobi nodes/weights for weight (1-x)^a (1+x)^a on [-1,1] by
/// Golub-Welsch. a = 0 gives Gauss-Legendre.
inline void gauss_jacobi_sym(int q, double a, std::vector<double>& x, std::vector<double>& w) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
    for (int k = 1; k < q; ++k) {
        const double s = 2.0 * k + 2.0 * a;
        const double bk = 4.0 * k * (k + a) * (k + a) * (k + 2.0 * a)
                        / (s * s * (s + 1.0) * (s - 1.0));
        J(k, k - 1) = J(k - 1, k) = std::sqrt(bk);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    const double mu0 = std::pow(2.0, 2.0 * a + 1.0) * std::tgamma(a + 1.0) * std::tgamma(a + 1.0)
                     / std::tgamma(2.0 * a + 2.0);
    x.resize(q);
    w.resize(q);
    for (int i = 0; i < q; ++i) {
        x[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        w[i] = mu0 * v0 * v0;
    }
}

/// Orthonormal associated Legendre values P(l, m) at x = cos(theta), scaled
/// so that the real spherical harmonics below are L2(S^2)-orthonormal.
/// Returns the table P[l][m] for l <= lmax together with d/dtheta values.
inline void legendre_table(int lmax, double x, std::vector<std::vector<double>>& P,
                           std::vector<std::vector<double>>& dP) {
    const double sx = std::sqrt(std::max(0.0, 1.0 - x * x)); // sin(theta) >= 0
    P.assign(lmax + 1, {});
    dP.assign(lmax + 1, {});
    for (int l = 0; l <= lmax; ++l) {
        P[l].assign(l + 1, 0.0);
        dP[l].assign(l + 1, 0.0);
    }
    P[0][0] = std::sqrt(1.0 / (4.0 * std::numbers::pi));
    for (int m = 1; m <= lmax; ++m)
        P[m][m] = P[m - 1][m - 1] * sx * std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    for (int m = 0; m < lmax; ++m)
        P[m + 1][m] = P[m][m] * x * std::sqrt(2.0 * m + 3.0);
    for (int m = 0; m <= lmax; ++m)
        for (int l = m + 2; l <= lmax; ++l) {
            const double al = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
            const double bl = std::sqrt(((l - 1.0) * (l - 1.0) - m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
            P[l][m] = al * (x * P[l - 1][m] - bl * P[l - 2][m]);
        }
    // d/dtheta via (1-x^2) P' recurrence; nodes are interior so sx > 0.
    for (int l = 0; l <= lmax; ++l)
        for (int m = 0; m <= l; ++m) {
            double up = 0.0;
            if (l >= 1 && m <= l - 1)
                up = std::sqrt((2.0 * l + 1.0) * (static_cast<double>(l) * l - m * m) / (2.0 * l - 1.0))
                   * P[l - 1][m];
            dP[l][m] = (l * x * P[l][m] - up) / sx;
        }
}

/// Gegenbauer values C_k^(nu)(x), k = 0..kmax.
inline std::vector<double> gegenbauer(int kmax, double nu, double x) {
    std::vector<double> C(kmax + 1);
    C[0] = 1.0;
    if (kmax >= 1) C[1] = 2.0 * nu * x;
    for (int k = 2; k <= kmax; ++k)
        C[k] = (2.0 * x * (k + nu - 1.0) * C[k - 1] - (k + 2.0 * nu - 2.0) * C[k - 2]) / k;
    return C;
}

} // namespace detail

/// Angular discretization of S^(n-1): a fixed orthonormal family of real
/// spherical harmonics with a quadrature that integrates their pairwise and
/// triple products exactly. Two flavors:
///   - full basis on S^2 (n = 3), all orders per degree;
///   - zonal basis on S^(n-1) for any n >= 3 (axisymmetric fields only),
///     one Gegenbauer mode per degree.
/// Field-level work in dimensions other than 3 is supported exactly on the
/// zonal subspace, which is closed under products.
class SphereBasis {
public:
    static SphereBasis s2(int max_degree) {
        SphereBasis b;
        b.n_ = 3;
        b.zonal_ = false;
        b.max_degree_ = max_degree;
        b.build_s2();
        return b;
    }

    static SphereBasis zonal(int n, int max_degree) {
        if (n < 3) throw error(errc::invalid_dimension, "need n >= 3");
        SphereBasis b;
        b.n_ = n;
        b.zonal_ = true;
        b.max_degree_ = max_degree;
        b.build_zonal();
        return b;
    }

    int n() const { return n_; }
    bool is_zonal() const { return zonal_; }
    int max_degree() const { return max_degree_; }
    int exact_degree() const { return exact_degree_; }
    int n_modes() const { return static_cast<int>(modes_.size()); }
    int n_nodes() const { return static_cast<int>(weights_.size()); }

    const ModeIndex& mode(int m) const { return modes_.at(m); }
    double lambda(int m) const { return eigenvalue(modes_.at(m).degree, n_); }
    double weight(int q) const { return weights_[q]; }
    double value(int m, int q) const { return values_[m][q]; }
    /// Angular gradient frame components of mode m at node q: polar
    /// derivative and (1/sin theta) d/dphi (zero for zonal bases).
    double grad_theta(int m, int q) const { return grad_theta_[m][q]; }
    double grad_phi(int m, int q) const { return grad_phi_[m][q]; }

    /// First flat index of each degree block (and one-past-the-end sentinel).
    int degree_offset(int k) const { return degree_offsets_.at(k); }

    /// Evaluate harmonic m at a point of S^2 (full basis only).
    double eval_s2(int m, double theta, double phi) const {
        if (zonal_)
            throw error(errc::unsupported_dimension_for_fields,
                        "pointwise (theta, phi) evaluation needs the S^2 basis");
        std::vector<std::vector<double>> P, dP;
        detail::legendre_table(max_degree_, std::cos(theta), P, dP);
        const auto& mi = modes_[m];
        const int l = mi.degree;
        if (mi.order == 0) return P[l][0];
        const int mm = (mi.order + 1) / 2;
        const double f = std::numbers::sqrt2 * P[l][mm];
        return (mi.order % 2 == 1) ? f * std::cos(mm * phi) : f * std::sin(mm * phi);
    }

    /// Evaluate zonal harmonic m at polar angle theta (zonal basis only).
    double eval_zonal(int m, double theta) const {
        if (!zonal_) throw error(errc::invalid_parameter, "not a zonal basis");
        const double nu = (n_ - 2.0) / 2.0;
        const auto C = detail::gegenbauer(max_degree_, nu, std::cos(theta));
        return znorm_[modes_[m].degree] * C[modes_[m].degree];
    }

    /// Quadrature projection of nodewise values onto mode m.
    double project(const std::vector<double>& node_values, int m) const {
        double acc = 0;
        for (int q = 0; q < n_nodes(); ++q) acc += weights_[q] * node_values[q] * values_[m][q];
        return acc;
    }

    /// Coefficients c of X_i X_j = sum_m c_m X_m (exact for the quadrature
    /// degree). Only degrees <= deg(i)+deg(j) can appear; requires the basis
    /// to extend that far.
    const std::vector<std::pair<int, double>>& product_expand(int i, int j) const {
        const auto key = std::make_pair(std::min(i, j), std::max(i, j));
        auto it = product_cache_.find(key);
        if (it != product_cache_.end()) return it->second;
        const int dsum = modes_[i].degree + modes_[j].degree;
        if (dsum > max_degree_)
            throw error(errc::degree_overflow, "product degree exceeds the built basis");
        std::vector<std::pair<int, double>> out;
        for (int m = 0; m < n_modes(); ++m) {
            if (modes_[m].degree > dsum) break; // degree-major ordering
            double c = 0;
            for (int q = 0; q < n_nodes(); ++q)
                c += weights_[q] * values_[i][q] * values_[j][q] * values_[m][q];
            if (std::abs(c) > 1e-13) out.emplace_back(m, c);
        }
        return product_cache_.emplace(key, std::move(out)).first->second;
    }

    /// Node coordinates: polar angle (and azimuth for S^2).
    double node_theta(int q) const { return node_theta_[q]; }
    double node_phi(int q) const { return zonal_ ? 0.0 : node_phi_[q]; }

private:
    SphereBasis() = default;

    void build_zonal() {
        const double nu = (n_ - 2.0) / 2.0;
        exact_degree_ = std::max(2 * max_degree_ + 4, 3 * max_degree_);
        const int q = exact_degree_ / 2 + 2;
        std::vector<double> x, w;
        detail::gauss_jacobi_sym(q, nu - 0.5, x, w);
        const double ring = detail::sphere_area(n_ - 2);
        weights_.resize(q);
        node_theta_.resize(q);
        for (int i = 0; i < q; ++i) {
            weights_[i] = ring * w[i];
            node_theta_[i] = std::acos(x[i]);
        }

        znorm_.resize(max_degree_ + 1);
        for (int k = 0; k <= max_degree_; ++k) {
            const double hk = std::numbers::pi * std::pow(2.0, 1.0 - 2.0 * nu)
                            * std::tgamma(k + 2.0 * nu)
                            / ((k + nu) * std::tgamma(k + 1.0) * std::tgamma(nu) * std::tgamma(nu));
            znorm_[k] = 1.0 / std::sqrt(ring * hk);
        }

        degree_offsets_.assign(max_degree_ + 2, 0);
        for (int k = 0; k <= max_degree_; ++k) {
            degree_offsets_[k] = static_cast<int>(modes_.size());
            modes_.push_back({static_cast<int>(modes_.size()), k, 0});
        }
        degree_offsets_[max_degree_ + 1] = static_cast<int>(modes_.size());

        values_.assign(modes_.size(), std::vector<double>(q));
        grad_theta_.assign(modes_.size(), std::vector<double>(q));
        grad_phi_.assign(modes_.size(), std::vector<double>(q, 0.0));
        for (int i = 0; i < q; ++i) {
            const auto C = detail::gegenbauer(max_degree_, nu, x[i]);
            const auto Cup = detail::gegenbauer(std::max(0, max_degree_ - 1), nu + 1.0, x[i]);
            const double st = std::sin(node_theta_[i]);
            for (int k = 0; k <= max_degree_; ++k) {
                values_[k][i] = znorm_[k] * C[k];
                grad_theta_[k][i] = (k >= 1) ? -znorm_[k] * st * 2.0 * nu * Cup[k - 1] : 0.0;
            }
        }
    }

    void build_s2() {
        exact_degree_ = std::max(2 * max_degree_ + 4, 3 * max_degree_);
        const int qp = exact_degree_ / 2 + 2;   // polar Gauss-Legendre
        const int qa = exact_degree_ + 2;       // azimuthal trapezoid
        std::vector<double> x, w;
        detail::gauss_jacobi_sym(qp, 0.0, x, w);

        degree_offsets_.assign(max_degree_ + 2, 0);
        for (int l = 0; l <= max_degree_; ++l) {
            degree_offsets_[l] = static_cast<int>(modes_.size());
            for (int ord = 0; ord < 2 * l + 1; ++ord)
                modes_.push_back({static_cast<int>(modes_.size()), l, ord});
        }
        degree_offsets_[max_degree_ + 1] = static_cast<int>(modes_.size());

        const int Q = qp * qa;
        weights_.resize(Q);
        node_theta_.resize(Q);
        node_phi_.resize(Q);
        values_.assign(modes_.size(), std::vector<double>(Q));
        grad_theta_.assign(modes_.size(), std::vector<double>(Q));
        grad_phi_.assign(modes_.size(), std::vector<double>(Q));

        for (int i = 0; i < qp; ++i) {
            const double theta = std::acos(x[i]);
            const double st = std::sin(theta);
            std::vector<std::vector<double>> P, dP;
            detail::legendre_table(max_degree_, x[i], P, dP);
            for (int j = 0; j < qa; ++j) {
                const int q = i * qa + j;
                const double phi = 2.0 * std::numbers::pi * j / qa;
                weights_[q] = w[i] * 2.0 * std::numbers::pi / qa;
                node_theta_[q] = theta;
                node_phi_[q] = phi;
                for (const auto& mi : modes_) {
                    const int l = mi.degree;
                    double val, gth, gph;
                    if (mi.order == 0) {
                        val = P[l][0];
                        gth = dP[l][0];
                        gph = 0.0;
                    } else {
                        const int mm = (mi.order + 1) / 2;
                        const double c = std::cos(mm * phi), s = std::sin(mm * phi);
                        const double r2 = std::numbers::sqrt2;
                        if (mi.order % 2 == 1) { // cosine branch
                            val = r2 * P[l][mm] * c;
                            gth = r2 * dP[l][mm] * c;
                            gph = -r2 * mm * P[l][mm] * s / st;
                        } else {
                            val = r2 * P[l][mm] * s;
                            gth = r2 * dP[l][mm] * s;
                            gph = r2 * mm * P[l][mm] * c / st;
                        }
                    }
                    values_[mi.flat][q] = val;
                    grad_theta_[mi.flat][q] = gth;
                    grad_phi_[mi.flat][q] = gph;
                }
            }
        }
    }

    int n_ = 3;
    bool zonal_ = false;
    int max_degree_ = 0;
    int exact_degree_ = 0;
    std::vector<ModeIndex> modes_;
    std::vector<int> degree_offsets_;
    std::vector<double> weights_, node_theta_, node_phi_;
    std::vector<double> znorm_;
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<double>> grad_theta_, grad_phi_;
    mutable std::map<std::pair<int, int>, std::vector<std::pair<int, double>>> product_cache_;
};

} // namespace yamabe
