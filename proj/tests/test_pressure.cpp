#include "quadray/pressure.hpp"

#include "quadray/external_rays.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace quadray;
using quadray::test::Gen;

namespace {

// Direct backward-tree sum: both square roots at every level.
double brute_tree_log_sum(cplx c, cplx z, double t, int n)
{
    std::vector<std::pair<cplx, double>> level{{z, 0.0}}; // point, log |(f^k)'|
    for (int k = 0; k < n; ++k) {
        std::vector<std::pair<cplx, double>> next;
        for (auto [x, lg] : level) {
            const cplx w = std::sqrt(x - c);
            const double step = std::log(2.0 * std::abs(w));
            next.push_back({w, lg + step});
            next.push_back({-w, lg + step});
        }
        level = std::move(next);
    }
    double mx = -INFINITY;
    for (auto& [x, lg] : level)
        mx = std::max(mx, -t * lg);
    double s = 0.0;
    for (auto& [x, lg] : level)
        s += std::exp(-t * lg - mx);
    return mx + std::log(s);
}

} // namespace

TEST_SUITE("pressure")
{
    TEST_CASE("periodic pressure at c = 0 in closed form")
    {
        OrbitCatalog catalog(QuadraticMap(0.0), PrecisionConfig{});
        for (int n = 2; n <= 10; ++n)
            for (double t : {0.0, 0.5, 1.0, 2.0, 3.5}) {
                const auto e = periodic_pressure_estimate(catalog, t, n);
                // 2^n - 1 points on the unit circle, |(f^n)'| = 2^n; z = 0 is attracting.
                const double oracle = (std::log(std::ldexp(1.0, n) - 1.0) - n * t * kLog2) / n;
                CHECK(e.value == doctest::Approx(oracle).epsilon(1e-10));
                CHECK(e.excluded_attracting == 1);
                CHECK(e.terms == (std::size_t{1} << n) - 1);
            }
    }

    TEST_CASE("tree pressure at c = 0 in closed form")
    {
        for (double rho : {0.5, 1.0, 2.0})
            for (int n : {3, 8, 12})
                for (double t : {0.0, 1.0, 2.0}) {
                    const auto e = tree_pressure_estimate(QuadraticMap(0.0), std::polar(rho, 0.3), t, n,
                                                          PrecisionConfig{});
                    // |x_i| = rho^(2^(i-n)), so |(f^n)'(x)| = 2^n rho^(1 - 2^-n) for all 2^n leaves.
                    const double lg = n * kLog2 + (1.0 - std::ldexp(1.0, -n)) * std::log(rho);
                    const double oracle = (n * kLog2 - t * lg) / n;
                    CHECK(e.value == doctest::Approx(oracle).epsilon(1e-10));
                    CHECK(e.terms == (std::size_t{1} << n));
                }
    }

    TEST_CASE("tree pressure agrees with a brute-force tree")
    {
        Gen g(51);
        for (int k = 0; k < 30; ++k) {
            const cplx c = g.in_disc(0.0, 1.2);
            const cplx z = g.in_disc(0.0, 2.0);
            const int n = g.integer(1, 10);
            const double t = g.uniform(0.0, 3.0);
            const auto e = tree_pressure_estimate(QuadraticMap(c), z, t, n, PrecisionConfig{});
            CHECK(e.log_sum == doctest::Approx(brute_tree_log_sum(c, z, t, n)).epsilon(1e-9));
        }
    }

    TEST_CASE("t = 0 counts the points summed")
    {
        Gen g(52);
        for (int k = 0; k < 10; ++k) {
            const QuadraticMap map(g.in_disc(0.0, 1.5));
            const int n = g.integer(2, 8);
            OrbitCatalog catalog(map, PrecisionConfig{});
            const auto e = periodic_pressure_estimate(catalog, 0.0, n);
            CHECK(e.log_sum == doctest::Approx(std::log(static_cast<double>(e.terms))));
            CHECK(e.terms + e.excluded_attracting == (std::size_t{1} << n));
        }
    }

    TEST_CASE("pressure is non-increasing and convex in t")
    {
        Gen g(53);
        for (int k = 0; k < 10; ++k) {
            const QuadraticMap map(g.in_disc(0.0, 1.5));
            OrbitCatalog catalog(map, PrecisionConfig{});
            const cplx z = default_tree_basepoint(map);
            std::vector<double> per, tree;
            for (int i = 0; i <= 8; ++i) {
                const double t = 0.25 * i;
                per.push_back(periodic_pressure_estimate(catalog, t, 7).value);
                tree.push_back(tree_pressure_estimate(map, z, t, 7, PrecisionConfig{}).value);
            }
            for (const auto* v : {&per, &tree})
                for (std::size_t i = 1; i + 1 < v->size(); ++i) {
                    CHECK((*v)[i] <= (*v)[i - 1] + 1e-12);
                    CHECK((*v)[i - 1] + (*v)[i + 1] - 2.0 * (*v)[i] >= -1e-9);
                }
        }
    }

    TEST_CASE("default basepoint sits at potential 0.01 on the 1/7 ray")
    {
        for (cplx c : {cplx(0.0), cplx(-1.0), cplx(-2.0), cplx(0.3, 0.4)}) {
            const QuadraticMap map(c);
            const cplx z = default_tree_basepoint(map);
            CHECK(green_potential(map, z, PrecisionConfig{}) == doctest::Approx(0.01).epsilon(1e-6));
            CHECK(std::abs(z - ray_point(map, Angle(1, 7), 0.01)) < 1e-12);
        }
    }

    TEST_CASE("comparison bookkeeping")
    {
        const std::vector<double> grid{0.0, 0.5, 1.0};
        const QuadraticMap map(cplx(-0.2, 0.3));
        const auto curve = pressure_comparison(map, default_tree_basepoint(map), grid, 6, PrecisionConfig{});
        REQUIRE(curve.periodic.size() == 3);
        REQUIRE(curve.tree_prev.size() == 3);
        double d = 0.0, dp = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            d = std::max(d, std::abs(curve.periodic[i].value - curve.tree[i].value));
            dp = std::max(dp, std::abs(curve.periodic_prev[i].value - curve.tree_prev[i].value));
            CHECK(curve.periodic_prev[i].n == 5);
        }
        CHECK(curve.discrepancy == doctest::Approx(d));
        CHECK(curve.discrepancy_prev == doctest::Approx(dp));
        CHECK(curve.trend_non_increasing == (d <= dp));
    }

    TEST_CASE("input errors")
    {
        const QuadraticMap map(0.0);
        const std::vector<double> unsorted{1.0, 0.0};
        CHECK_THROWS_AS(pressure_comparison(map, 2.0, unsorted, 4, PrecisionConfig{}), DomainError);
        CHECK_THROWS_AS(tree_pressure_estimate(map, 2.0, 1.0, 0, PrecisionConfig{}), DomainError);
        CHECK_THROWS_AS(tree_pressure_estimate(QuadraticMap(-1.0), -1.0, 1.0, 3, PrecisionConfig{}), DomainError);
        CHECK(tree_pressure_estimate(map, 2.0, -1.0, 3, PrecisionConfig{}).negative_t);
    }
}
