#include "quadray/bunch_analysis.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace quadray;
using quadray::test::Gen;

namespace {

PeriodicOrbit synthetic(std::vector<cplx> pts)
{
    PeriodicOrbit o;
    o.minimal_period = static_cast<int>(pts.size());
    o.points = std::move(pts);
    return o;
}

PeriodicOrbit rotated(const PeriodicOrbit& o, std::size_t s)
{
    PeriodicOrbit r = o;
    std::rotate(r.points.begin(), r.points.begin() + static_cast<std::ptrdiff_t>(s), r.points.end());
    return r;
}

} // namespace

TEST_SUITE("bunch_analysis")
{
    TEST_CASE("orbit metric is a metric on bounded orbits")
    {
        Gen g(61);
        const QuadraticMap map(cplx(-0.1, 0.2));
        for (int k = 0; k < 200; ++k) {
            const cplx x = g.in_disc(0.0, 0.4), y = g.in_disc(0.0, 0.4), z = g.in_disc(0.0, 0.4);
            const int n = g.integer(1, 12);
            const double xy = orbit_metric(map, x, y, n);
            CHECK(orbit_metric(map, x, x, n) == 0.0);
            CHECK(xy == orbit_metric(map, y, x, n));
            CHECK(xy >= std::abs(x - y));
            CHECK(xy <= orbit_metric(map, x, z, n) + orbit_metric(map, z, y, n) + 1e-15);
        }
        CHECK_THROWS_AS(orbit_metric(QuadraticMap(0.0), 0.1, 5.0, 30), DomainError);
    }

    TEST_CASE("orbit distance ignores the starting point")
    {
        Gen g(62);
        for (int k = 0; k < 100; ++k) {
            const int n = g.integer(1, 8);
            std::vector<cplx> a, b;
            for (int i = 0; i < n; ++i) {
                a.push_back(g.in_disc(0.0, 2.0));
                b.push_back(g.in_disc(0.0, 2.0));
            }
            const auto oa = synthetic(a), ob = synthetic(b);
            const auto s = static_cast<std::size_t>(g.integer(0, n - 1));
            CHECK(orbit_distance(oa, rotated(oa, s)) == 0.0);
            CHECK(orbit_distance(oa, ob) == doctest::Approx(orbit_distance(rotated(oa, s), ob)));
            CHECK(orbit_distance(oa, ob) == doctest::Approx(orbit_distance(ob, oa)));
        }
    }

    TEST_CASE("clusters of synthetic orbits")
    {
        // Three orbits within 1e-3 of each other and one far away.
        const auto base = synthetic({1.0, -1.0, cplx(0.0, 1.0)});
        std::vector<PeriodicOrbit> orbits{base, base, base, synthetic({5.0, 6.0, 7.0})};
        orbits[1].points[0] += 5e-4;
        orbits[2].points[2] += cplx(0.0, 6e-4);
        orbits[2] = rotated(orbits[2], 1);
        const auto r = bunch_clusters(orbits, BunchMode::BMS, 2e-3);
        CHECK(r.max_cluster == 3);
        CHECK(r.component_bound == 3);
        CHECK(r.orbit_count == 4);
        CHECK(r.bound == 6.0);
        CHECK(r.pass);
        const auto tight = bunch_clusters(orbits, BunchMode::BMS, 1e-5);
        CHECK(tight.max_cluster == 1);
    }

    TEST_CASE("complete linkage: every cluster is pairwise within the threshold")
    {
        Gen g(63);
        for (int k = 0; k < 30; ++k) {
            std::vector<PeriodicOrbit> orbits;
            const int n = g.integer(1, 4);
            for (int i = 0; i < 40; ++i) {
                std::vector<cplx> pts;
                for (int j = 0; j < n; ++j)
                    pts.push_back(g.in_disc(0.0, 0.3));
                orbits.push_back(synthetic(pts));
            }
            const double thr = g.uniform(0.01, 0.2);
            const auto r = bunch_clusters(orbits, BunchMode::BMS, thr);
            std::vector<int> seen(orbits.size(), 0);
            std::size_t largest = 0;
            for (const auto& cl : r.clusters) {
                largest = std::max(largest, cl.size());
                for (std::size_t a : cl) {
                    ++seen[a];
                    for (std::size_t b : cl)
                        CHECK(orbit_distance(orbits[a], orbits[b]) <= thr);
                }
            }
            for (int s : seen)
                CHECK(s == 1);
            CHECK(largest == r.max_cluster);
            CHECK(r.max_cluster <= r.component_bound);
        }
    }

    TEST_CASE("hypothesis H at c = 0: orbits are isolated")
    {
        OrbitCatalog catalog(QuadraticMap(0.0), PrecisionConfig{});
        for (int n = 1; n <= 10; ++n) {
            const auto r = verify_hypothesis_h(catalog, n, 0.1);
            CHECK(r.max_cluster == 1);
            CHECK(r.pass);
            CHECK(r.threshold == doctest::Approx(std::exp(-0.1 * n)));
            CHECK(r.hard_bound == static_cast<std::size_t>(2 * n));
        }
    }

    TEST_CASE("disc patterns are validated")
    {
        const std::vector<cplx> cycle{(-1.0 - std::sqrt(5.0)) / 2.0, (-1.0 + std::sqrt(5.0)) / 2.0};
        const auto p = DiscPattern::around_orbit(cycle, 5, 2.0, 0.5, 0.3);
        CHECK(p.p() == 2);
        const double k = 0.5 * std::exp(-0.3 * 5 * 2);
        for (int i = 0; i < 2; ++i) {
            const double rho = p.radii()[static_cast<std::size_t>(i)];
            CHECK(2.0 * rho <= k * (std::abs(cycle[static_cast<std::size_t>(i)]) - 2.0 * rho));
            CHECK(rho > 0.99 * k * std::abs(cycle[static_cast<std::size_t>(i)]) / (2.0 + 2.0 * k));
        }
        CHECK_THROWS_AS(DiscPattern(cycle, {0.5, 0.5}, 5, 2.0, 0.5, 0.3), DomainError);
        CHECK_THROWS_AS(DiscPattern({0.5, 0.5 + 1e-6}, {1e-6, 1e-6}, 1, 2.0, 0.5, 0.0), DomainError);
        CHECK_THROWS_AS(DiscPattern({0.5}, {}, 1, 2.0, 0.5, 0.1), DomainError);
    }

    TEST_CASE("trapped orbit counts: catalog and local search agree")
    {
        struct Case {
            cplx c;
            int p;
            int n;
        };
        for (const Case& cs : {Case{-2.0, 2, 3}, Case{-1.0, 1, 4}, Case{cplx(-0.12, 0.75), 1, 5}}) {
            OrbitCatalog catalog(QuadraticMap(cs.c), PrecisionConfig{});
            const auto orbit = catalog.orbits_of_minimal_period(cs.p).front();
            const auto a = count_orbits_near_point(catalog, orbit.points[0], cs.p, cs.n, 0.3, 0.5,
                                                   TrappedSearchMethod::catalog);
            const auto b = count_orbits_near_point(catalog, orbit.points[0], cs.p, cs.n, 0.3, 0.5,
                                                   TrappedSearchMethod::local);
            CHECK(a.count == b.count);
            CHECK(a.method == TrappedSearchMethod::catalog);
            CHECK(b.method == TrappedSearchMethod::local);
            CHECK(a.bound == static_cast<std::size_t>(cs.p));

            const auto pat = DiscPattern::around_orbit(orbit.points, cs.n, 2.0, 0.5, 0.3);
            const auto pa = count_orbits_in_disc_pattern(catalog, pat, TrappedSearchMethod::catalog);
            const auto pb = count_orbits_in_disc_pattern(catalog, pat, TrappedSearchMethod::local);
            CHECK(pa.count == pb.count);
        }
    }

    TEST_CASE("near-point requires a periodic center")
    {
        OrbitCatalog catalog(QuadraticMap(0.0), PrecisionConfig{});
        CHECK_THROWS_AS(count_orbits_near_point(catalog, 0.3, 1, 3, 0.3, 0.5), DomainError);
        // z = 1 is a repelling fixed point at c = 0.
        const auto r = count_orbits_near_point(catalog, 1.0, 1, 6, 0.3, 0.5);
        CHECK(r.count == 0);
        CHECK(r.pass);
    }

    TEST_CASE("distortion shrinks linearly with the radius at an indifferent point")
    {
        const double theta = (std::sqrt(5.0) - 1.0) / 2.0;
        const cplx lam = std::polar(1.0, kTwoPi * theta);
        const QuadraticMap map(lam / 2.0 - lam * lam / 4.0);
        const cplx alpha = lam / 2.0;
        const auto a = distortion_ratio(map, alpha, 1e-4, 10, 512);
        const auto b = distortion_ratio(map, alpha, 5e-5, 10, 512);
        CHECK(a.indifferent_regime);
        CHECK(a.center_multiplier_modulus == doctest::Approx(1.0));
        CHECK(b.sup_ratio_minus_one / a.sup_ratio_minus_one == doctest::Approx(0.5).epsilon(0.01));
        // Koebe-type bound: |log g'| <= sum of per-step bounds.
        CHECK(a.sup_ratio_minus_one <= std::expm1(2.0 * 10 * a.per_step_log_derivative_bound) + 1e-12);
        CHECK_THROWS_AS(distortion_ratio(map, alpha + 0.1, 1e-4, 10), DomainError);
    }

    TEST_CASE("good and bad indices")
    {
        const auto o = synthetic({0.0, -1.0});
        const auto part = good_bad_partition(o, 0.5);
        CHECK(part.bad == std::vector<std::size_t>{0});
        CHECK(part.good == std::vector<std::size_t>{1});
        CHECK(part.a_bound == 1);
        CHECK(part.threshold == doctest::Approx(std::exp(-0.5)));
    }
}
