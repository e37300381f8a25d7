#include "quadray/core_dynamics.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace quadray;
using quadray::test::Gen;

TEST_SUITE("core_dynamics")
{
    TEST_CASE("evaluate is z^2 + c")
    {
        Gen g(11);
        for (int k = 0; k < 200; ++k) {
            const cplx c = g.in_disc(0.0, 2.0), z = g.in_disc(0.0, 3.0);
            CHECK(std::abs(evaluate(QuadraticMap(c), z) - (z * z + c)) <= 1e-14 * (1.0 + std::norm(z)));
        }
    }

    TEST_CASE("iterate_orbit chains evaluate and reports escape")
    {
        Gen g(12);
        for (int k = 0; k < 50; ++k) {
            const QuadraticMap map(g.cardioid());
            const cplx z = g.in_disc(0.0, 0.3);
            const auto seg = iterate_orbit(map, z, 20);
            REQUIRE(seg.points.size() == 21);
            CHECK_FALSE(seg.escaped);
            for (std::size_t i = 0; i + 1 < seg.points.size(); ++i)
                CHECK(seg.points[i + 1] == evaluate(map, seg.points[i]));
        }
        const auto esc = iterate_orbit(QuadraticMap(0.0), 3.0, 40);
        CHECK(esc.escaped);
    }

    TEST_CASE("derivative_along_orbit matches finite differences and the chain rule")
    {
        Gen g(13);
        for (int k = 0; k < 100; ++k) {
            const QuadraticMap map(g.in_disc(0.0, 0.7));
            const cplx z = g.in_disc(0.0, 0.5);
            const int n = g.integer(1, 5);
            const double h = 1e-6;
            auto fn = [&](cplx w) { return iterate_orbit(map, w, n).points.back(); };
            const cplx fd = (fn(z + h) - fn(z - h)) / (2.0 * h);
            const cplx d = derivative_along_orbit(map, z, n);
            CHECK(std::abs(fd - d) <= 1e-6 * (1.0 + std::abs(d)));

            const int a = g.integer(1, 4), b = g.integer(1, 4);
            const cplx zb = iterate_orbit(map, z, b).points.back();
            const cplx lhs = derivative_along_orbit(map, z, a + b);
            const cplx rhs = derivative_along_orbit(map, zb, a) * derivative_along_orbit(map, z, b);
            CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
        }
    }

    TEST_CASE("escape radius makes the modulus grow")
    {
        Gen g(14);
        for (int k = 0; k < 200; ++k) {
            const QuadraticMap map(g.in_disc(0.0, 2.0));
            const cplx z = g.on_circle(0.0, map.escape_radius() * g.uniform(1.0001, 3.0));
            CHECK(std::abs(evaluate(map, z)) > std::abs(z));
        }
    }

    TEST_CASE("Green function at c = 0 is log|z| outside the unit disc")
    {
        const PrecisionConfig cfg;
        Gen g(15);
        for (int k = 0; k < 100; ++k) {
            const cplx z = g.on_circle(0.0, g.uniform(1.05, 10.0));
            CHECK(green_potential(QuadraticMap(0.0), z, cfg) == doctest::Approx(std::log(std::abs(z))).epsilon(1e-12));
            CHECK(green_potential(QuadraticMap(0.0), g.in_disc(0.0, 0.95), cfg) == 0.0);
        }
    }

    TEST_CASE("Green function satisfies G(f(z)) = 2 G(z)")
    {
        const PrecisionConfig cfg;
        Gen g(16);
        for (int k = 0; k < 100; ++k) {
            const QuadraticMap map(g.in_disc(0.0, 1.5));
            const cplx z = g.on_circle(0.0, g.uniform(2.0, 4.0));
            const double gz = green_potential(map, z, cfg);
            REQUIRE(gz > 0.0);
            CHECK(green_potential(map, evaluate(map, z), cfg) == doctest::Approx(2.0 * gz).epsilon(1e-10));
        }
    }

    TEST_CASE("preimages: all 2^n leaves map back onto z")
    {
        const PrecisionConfig cfg;
        Gen g(17);
        for (int k = 0; k < 20; ++k) {
            const QuadraticMap map(g.in_disc(0.0, 1.0));
            const cplx z = g.in_disc(0.0, 1.5);
            const int n = g.integer(1, 8);
            const auto pre = preimages(map, z, n, cfg);
            CHECK_FALSE(pre.branch_degenerate);
            CHECK(std::accumulate(pre.multiplicity.begin(), pre.multiplicity.end(), 0) == (1 << n));
            CHECK(std::is_sorted(pre.points.begin(), pre.points.end(), [](cplx a, cplx b) {
                return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
            }));
            for (cplx x : pre.points)
                CHECK(std::abs(iterate_orbit(map, x, n).points.back() - z) <= 1e-9 * (1.0 + std::abs(z)));
        }
    }

    TEST_CASE("preimages at c = 0 are the 2^n-th roots")
    {
        const PrecisionConfig cfg;
        const cplx z = std::polar(1.7, 0.4);
        const int n = 5;
        const auto pre = preimages(QuadraticMap(0.0), z, n, cfg);
        std::vector<cplx> oracle;
        for (int k = 0; k < (1 << n); ++k)
            oracle.push_back(std::polar(std::pow(1.7, 1.0 / 32.0), (0.4 + kTwoPi * k) / 32.0));
        CHECK(quadray::test::match_sets(pre.points, oracle) < 1e-13);
    }

    TEST_CASE("preimages through the critical value carry multiplicity")
    {
        const PrecisionConfig cfg;
        const QuadraticMap map(cplx(-0.3, 0.2));
        const auto pre = preimages(map, map.c(), 1, cfg);
        CHECK(pre.branch_degenerate);
        CHECK(pre.degenerate_level == 1);
        REQUIRE(pre.points.size() == 1);
        CHECK(pre.multiplicity[0] == 2);
        CHECK(std::abs(pre.points[0]) == 0.0);
    }

    TEST_CASE("extended precision agrees with binary64")
    {
        PrecisionConfig hi;
        hi.mantissa_bits = 113;
        const QuadraticMap map(cplx(-0.12, 0.75));
        const auto a = preimages(map, cplx(0.4, 0.1), 6, PrecisionConfig{});
        const auto b = preimages(map, cplx(0.4, 0.1), 6, hi);
        CHECK(quadray::test::match_sets(a.points, b.points) < 1e-12);
        CHECK(green_potential(map, 1.5, hi) == doctest::Approx(green_potential(map, 1.5, PrecisionConfig{})));
    }

    TEST_CASE("precision configuration is validated")
    {
        PrecisionConfig cfg;
        cfg.mantissa_bits = 20;
        CHECK_THROWS_AS(cfg.validate(), DomainError);
        cfg = {};
        cfg.newton_tol = 0.0;
        CHECK_THROWS_AS(cfg.validate(), DomainError);
        cfg = {};
        cfg.dedup_tol = 1e-15;
        CHECK_THROWS_AS(cfg.validate(), DomainError);
        CHECK_NOTHROW(PrecisionConfig{}.validate());
    }
}
