#include "quadray/external_rays.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace quadray;
using quadray::test::Gen;

TEST_SUITE("external_rays")
{
    TEST_CASE("c = 0: rays are radial, z = exp(G + 2 pi i theta)")
    {
        Gen g(41);
        for (int k = 0; k < 100; ++k) {
            const Angle a = g.angle(1000);
            const double G = g.uniform(0.01, 3.0);
            const cplx z = ray_point(QuadraticMap(0.0), a, G);
            CHECK(std::abs(z - std::exp(cplx(G, kTwoPi * a.turns()))) < 1e-9 * std::abs(z));
        }
    }

    TEST_CASE("ray points carry the requested potential")
    {
        Gen g(42);
        const PrecisionConfig cfg;
        for (int k = 0; k < 60; ++k) {
            const QuadraticMap map(g.in_disc(0.0, 1.0));
            const Angle a = g.angle(200);
            const double G = g.uniform(0.05, 2.0);
            const cplx z = ray_point(map, a, G);
            CHECK(green_potential(map, z, cfg) == doctest::Approx(G).epsilon(1e-8));
        }
    }

    TEST_CASE("f maps R_theta to R_{2 theta} and doubles the potential")
    {
        Gen g(43);
        for (int k = 0; k < 60; ++k) {
            const QuadraticMap map(g.in_disc(0.0, 1.0));
            const Angle a = g.angle(500);
            const double G = g.uniform(0.05, 1.0);
            const cplx z = ray_point(map, a, G);
            const cplx w = ray_point(map, doubled(a), 2.0 * G);
            CHECK(std::abs(evaluate(map, z) - w) < 1e-7 * (1.0 + std::abs(w)));
        }
    }

    TEST_CASE("traces have strictly decreasing potential")
    {
        const auto tr = trace_ray(QuadraticMap(cplx(-0.12, 0.74)), Angle(1, 7));
        CHECK(tr.status == RayStatus::ok);
        REQUIRE(tr.samples.size() > 10);
        for (std::size_t i = 1; i < tr.samples.size(); ++i)
            CHECK(tr.samples[i].potential < tr.samples[i - 1].potential);
    }

    TEST_CASE("landing points from closed forms")
    {
        const auto zero = estimate_landing(QuadraticMap(0.0), Angle(1, 7));
        CHECK(zero.converged);
        CHECK(std::abs(zero.z - std::polar(1.0, kTwoPi / 7.0)) < 1e-6);

        const cplx alpha = (1.0 - std::sqrt(5.0)) / 2.0;
        for (const Angle& a : {Angle(1, 3), Angle(2, 3)}) {
            const auto l = estimate_landing(QuadraticMap(-1.0), a);
            CHECK(l.converged);
            CHECK(std::abs(l.z - alpha) < 1e-6);
        }

        // c = -2: R_theta lands at 2 cos(2 pi theta).
        for (const Angle& a : {Angle(1, 5), Angle(2, 5), Angle(1, 3), Angle(0, 1)}) {
            const auto l = estimate_landing(QuadraticMap(-2.0), a);
            CHECK(std::abs(l.z - 2.0 * std::cos(kTwoPi * a.turns())) < 1e-5);
        }
    }

    TEST_CASE("portraits at orbits with closed-form landing")
    {
        OrbitCatalog bas(QuadraticMap(-1.0), PrecisionConfig{});
        PeriodicOrbit alpha;
        for (const auto& o : bas.orbits_of_minimal_period(1))
            if (o.points[0].real() < 0.0)
                alpha = o;
        const auto rep = portrait_at_orbit(bas.map(), alpha, 1);
        REQUIRE(rep.portrait.sets.size() == 1);
        CHECK(rep.portrait.sets[0] == std::vector<Angle>{Angle(1, 3), Angle(2, 3)});
        CHECK(rep.validation.valid());

        OrbitCatalog cheb(QuadraticMap(-2.0), PrecisionConfig{});
        const auto two = cheb.orbits_of_minimal_period(2);
        REQUIRE(two.size() == 1);
        const auto r2 = portrait_at_orbit(cheb.map(), two[0], 2);
        REQUIRE(r2.portrait.sets.size() == 2);
        // 2 cos(2 pi / 5) is approached from 1/5 and 4/5; 2 cos(4 pi / 5) from 2/5 and 3/5.
        std::set<std::vector<Angle>> sets(r2.portrait.sets.begin(), r2.portrait.sets.end());
        auto sorted = [](std::vector<Angle> v) {
            std::sort(v.begin(), v.end());
            return v;
        };
        std::set<std::vector<Angle>> got;
        for (const auto& s : r2.portrait.sets)
            got.insert(sorted(s));
        CHECK(got.contains(std::vector<Angle>{Angle(1, 5), Angle(4, 5)}));
        CHECK(got.contains(std::vector<Angle>{Angle(2, 5), Angle(3, 5)}));
        CHECK(r2.max_landing_error < 1e-4);
    }

    TEST_CASE("circle exits follow the order at infinity")
    {
        const QuadraticMap map(0.0);
        std::vector<RayTrace> rays;
        for (const Angle& a : {Angle(1, 7), Angle(2, 7), Angle(4, 7)})
            rays.push_back(trace_ray(map, a));
        const auto rep = circle_exit_cyclic_order(map, rays, 0.0, 1.5);
        CHECK(rep.match);
        REQUIRE(rep.exits.size() == 3);
        for (const auto& e : rep.exits) {
            CHECK(std::abs(std::abs(e.exit_point) - 1.5) < 1e-6);
            CHECK(e.exit_is_last);
        }
        CHECK_THROWS_AS(circle_exit_cyclic_order(map, rays, 0.0, 0.5), DomainError);
    }

    TEST_CASE("ray configuration is validated")
    {
        RayConfig cfg;
        cfg.substeps = 0;
        CHECK_THROWS_AS(cfg.validate(), DomainError);
        cfg = {};
        cfg.g0 = -1.0;
        CHECK_THROWS_AS(cfg.validate(), DomainError);
        CHECK_NOTHROW(RayConfig{}.validate());
    }
}
