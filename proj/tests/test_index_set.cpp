#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "yamabe/index_set.hpp"

using namespace yamabe;

namespace {

// breadth-first oracle: level s holds all sums of exactly s roots
std::vector<double> bfs_enumerate(const std::vector<double>& roots, double mu_max,
                                  int min_coeff_sum, double tol) {
    std::vector<double> out;
    std::vector<double> level = {0.0};
    for (int s = 1; !level.empty(); ++s) {
        std::vector<double> next;
        for (double v : level)
            for (double r : roots)
                if (v + r <= mu_max + tol) next.push_back(v + r);
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end(),
                               [&](double a, double b) { return std::abs(a - b) <= tol; }),
                   next.end());
        if (s >= min_coeff_sum) out.insert(out.end(), next.begin(), next.end());
        level = std::move(next);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [&](double a, double b) { return std::abs(a - b) <= tol; }),
              out.end());
    return out;
}

} // namespace

TEST_CASE("integer multiples of a single root") {
    auto set = generate({1.0}, {1}, 3.5, 1);
    REQUIRE(set.elements.size() == 3);
    CHECK(set.elements[0].value == Catch::Approx(1.0));
    CHECK(set.elements[1].value == Catch::Approx(2.0));
    CHECK(set.elements[2].value == Catch::Approx(3.0));
}

TEST_CASE("constant-profile n=3 ladder up to 3") {
    const std::vector<double> roots = {1.0, std::sqrt(5.0), std::sqrt(11.0)};
    auto set = generate(roots, {1, 2, 3}, 3.0, 1);
    REQUIRE(set.elements.size() == 4);
    CHECK(set.elements[0].value == Catch::Approx(1.0));
    CHECK(set.elements[1].value == Catch::Approx(2.0));
    CHECK(set.elements[2].value == Catch::Approx(std::sqrt(5.0)));
    CHECK(set.elements[3].value == Catch::Approx(3.0));
}

TEST_CASE("coefficient-sum >= 2 sub-generation") {
    auto set = generate({1.0, std::sqrt(5.0)}, {1, 2}, 3.3, 2);
    REQUIRE(set.elements.size() == 3);
    CHECK(set.elements[0].value == Catch::Approx(2.0));
    CHECK(set.elements[1].value == Catch::Approx(3.0));
    CHECK(set.elements[2].value == Catch::Approx(1.0 + std::sqrt(5.0)));

    // degree weights: 2 = 1+1 (weight 2), 3 = 1+1+1 (weight 3),
    // 1+sqrt5 = deg1 + deg2 (weight 3)
    CHECK(set.elements[0].max_degree_weight == 2);
    CHECK(set.elements[1].max_degree_weight == 3);
    CHECK(set.elements[2].max_degree_weight == 3);
}

TEST_CASE("witnesses reproduce their elements") {
    const std::vector<double> roots = {1.0, std::sqrt(5.0), std::sqrt(11.0)};
    auto set = generate(roots, {1, 2, 3}, 4.0, 1);
    for (const auto& e : set.elements)
        CHECK(std::abs(set.reconstruct(e) - e.value) < 1e-12);
}

TEST_CASE("min_coeff_sum=1 contains the sub-generation and the roots") {
    const std::vector<double> roots = {1.0, std::sqrt(5.0)};
    auto all = generate(roots, {1, 2}, 4.0, 1);
    auto sub = generate(roots, {1, 2}, 4.0, 2);
    auto contains = [&](double v) {
        return std::any_of(all.elements.begin(), all.elements.end(),
                           [&](const IndexElement& e) { return std::abs(e.value - v) <= all.tol; });
    };
    for (const auto& e : sub.elements) CHECK(contains(e.value));
    for (double r : roots)
        if (r <= 4.0) CHECK(contains(r));
}

TEST_CASE("depth-first agrees with the breadth-first oracle") {
    for (int n : {3, 4, 6}) {
        std::vector<double> roots;
        std::vector<int> degs;
        for (int k = 1; k <= 6; ++k) {
            const double gap = k * (k + n - 2.0) - (n - 2.0);
            roots.push_back(std::sqrt(gap));
            degs.push_back(k);
            if (roots.back() > 4.0) break;
        }
        auto set = generate(roots, degs, 4.0, 1);
        auto oracle = bfs_enumerate(roots, 4.0, 1, set.tol);
        REQUIRE(set.elements.size() == oracle.size());
        for (std::size_t i = 0; i < oracle.size(); ++i)
            CHECK(std::abs(set.elements[i].value - oracle[i]) < 1e-9);
    }
}

TEST_CASE("admissibility of mu") {
    const std::vector<double> roots = {1.0, std::sqrt(5.0), std::sqrt(11.0)};
    auto set = generate(roots, {1, 2, 3}, 4.0, 1);

    auto ok = check_mu(set, 2.5);
    CHECK(ok.admissible);

    auto conflict = check_mu(set, 2.0);
    CHECK_FALSE(conflict.admissible);
    CHECK(conflict.nearest == Catch::Approx(2.0));
    CHECK(conflict.distance < 1e-12);

    auto low = check_mu(set, 1.0);
    CHECK_FALSE(low.admissible);

    CHECK_THROWS_AS(check_mu(set, 5.0), error);
}

TEST_CASE("resonance detection") {
    // constant profile n=3: no root collides with the sub-generation
    CHECK(resonances({1.0, std::sqrt(5.0), std::sqrt(11.0)}, {1, 2, 3}, 3.0).empty());

    auto r12 = resonances({1.0, 2.0}, {1, 2}, 3.0);
    REQUIRE(r12.size() == 1);
    CHECK(r12[0].first == Catch::Approx(2.0));
    CHECK(r12[0].second.witness == std::vector<int>{2, 0});

    auto rgold = resonances({1.0, std::sqrt(5.0), 1.0 + std::sqrt(5.0)}, {1, 2, 3}, 4.0);
    REQUIRE(rgold.size() == 1);
    CHECK(rgold[0].first == Catch::Approx(1.0 + std::sqrt(5.0)));
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(generate({1.0, -2.0}, {1, 2}, 3.0, 1), error);
    CHECK_THROWS_AS(generate({1.0}, {1}, -1.0, 1), error);
    CHECK(generate({}, {}, 3.0, 1).elements.empty());
}
