#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "yamabe/errors.hpp"

namespace yamabe {

/// One element of the index set: a value sum_k m_k rho_k together with one
/// realizing coefficient vector and the largest degree weight
/// sum_k deg(rho_k) m_k over all realizations found (the angular-degree
/// budget of corrections at this order).
struct IndexElement {
    double value = 0;
    std::vector<int> witness;
    int coeff_sum = 0;
    int max_degree_weight = 0;
};

/// Finite truncation of the index set: all positive-integer combinations of
/// the distinct indicial roots up to mu_max, deduplicated within tol.
class IndexSet {
public:
    std::vector<double> roots;      // distinct roots, ascending
    std::vector<int> root_degrees;  // originating spherical-harmonic degree
    double mu_max = 0;
    double tol = 0;
    std::vector<IndexElement> elements; // sorted ascending

    double reconstruct(const IndexElement& e) const {
        double v = 0;
        for (std::size_t k = 0; k < roots.size(); ++k) v += e.witness[k] * roots[k];
        return v;
    }

    /// Nearest element to x (by absolute distance); nullopt if empty.
    std::optional<IndexElement> nearest(double x) const {
        if (elements.empty()) return std::nullopt;
        const IndexElement* best = &elements.front();
        for (const auto& e : elements)
            if (std::abs(e.value - x) < std::abs(best->value - x)) best = &e;
        return *best;
    }
};

/// Exhaustive bounded enumeration of {sum m_k rho_k <= mu_max,
/// sum m_k >= min_coeff_sum}. Depth-first over coefficient vectors with
/// value pruning; duplicates within tol are merged keeping the larger
/// degree weight.
inline IndexSet generate(const std::vector<double>& roots, const std::vector<int>& degrees,
                         double mu_max, int min_coeff_sum, double tol_override = -1.0) {
    if (!(mu_max > 0)) throw error(errc::invalid_parameter, "mu_max must be positive");
    for (double r : roots)
        if (!(r > 0)) throw error(errc::invalid_parameter, "roots must be positive");
    if (degrees.size() != roots.size())
        throw error(errc::invalid_parameter, "one degree per root required");

    IndexSet set;
    set.mu_max = mu_max;
    set.tol = tol_override > 0 ? tol_override : 1e-9 * mu_max;

    // ascending root order, degrees carried along
    std::vector<std::size_t> perm(roots.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(), [&](auto a, auto b) { return roots[a] < roots[b]; });
    for (auto i : perm) {
        set.roots.push_back(roots[i]);
        set.root_degrees.push_back(degrees[i]);
    }

    if (set.roots.empty()) return set;

    std::vector<IndexElement> found;
    std::vector<int> counts(set.roots.size(), 0);
    auto dfs = [&](auto&& self, std::size_t k, double value, int csum, int dweight) -> void {
        if (k == set.roots.size()) {
            if (csum >= min_coeff_sum && csum >= 1)
                found.push_back({value, counts, csum, dweight});
            return;
        }
        for (int m = 0;; ++m) {
            const double v = value + m * set.roots[k];
            if (v > mu_max + set.tol) break;
            counts[k] = m;
            self(self, k + 1, v, csum + m, dweight + m * set.root_degrees[k]);
        }
        counts[k] = 0;
    };
    dfs(dfs, 0, 0.0, 0, 0);

    std::sort(found.begin(), found.end(),
              [](const IndexElement& a, const IndexElement& b) { return a.value < b.value; });
    for (const auto& e : found) {
        if (!set.elements.empty() && std::abs(e.value - set.elements.back().value) <= set.tol) {
            auto& last = set.elements.back();
            last.max_degree_weight = std::max(last.max_degree_weight, e.max_degree_weight);
        } else {
            IndexElement el = e;
            el.max_degree_weight = e.max_degree_weight;
            set.elements.push_back(el);
        }
    }
    return set;
}

struct AdmissibilityResult {
    bool admissible = false;
    double nearest = 0;
    double distance = 0;
    const char* reason = "";
};

/// mu is admissible when mu > 1 and it stays clear of every index-set
/// element by more than tol_admit.
inline AdmissibilityResult check_mu(const IndexSet& set, double mu, double tol_admit = 1e-3) {
    if (mu > set.mu_max + set.tol)
        throw error(errc::out_of_range, "mu exceeds the enumerated range");
    AdmissibilityResult r;
    if (!(mu > 1.0)) {
        r.admissible = false;
        r.reason = "requires mu > 1";
        return r;
    }
    auto near = set.nearest(mu);
    if (!near) {
        r.admissible = true;
        return r;
    }
    r.nearest = near->value;
    r.distance = std::abs(near->value - mu);
    r.admissible = r.distance > tol_admit;
    r.reason = r.admissible ? "" : "coincides with an index-set element";
    return r;
}

/// Roots lying (within tol) in the coefficient-sum >= 2 sub-generation: each
/// forces the polynomial-in-t branch of the correction solves.
inline std::vector<std::pair<double, IndexElement>>
resonances(const std::vector<double>& roots, const std::vector<int>& degrees, double mu_max) {
    auto sums = generate(roots, degrees, mu_max, 2);
    std::vector<std::pair<double, IndexElement>> out;
    for (double r : roots) {
        if (r > mu_max) continue;
        auto near = sums.nearest(r);
        if (near && std::abs(near->value - r) <= sums.tol) out.emplace_back(r, *near);
    }
    return out;
}

} // namespace yamabe
