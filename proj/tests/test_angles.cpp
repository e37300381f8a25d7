#include "quadray/angles.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

using namespace quadray;
using quadray::test::Gen;

namespace {

OrbitPortrait make_portrait(std::vector<std::vector<std::pair<int, int>>> sets)
{
    OrbitPortrait p;
    for (const auto& s : sets) {
        std::vector<Angle> a;
        for (auto [num, den] : s)
            a.emplace_back(num, den);
        p.sets.push_back(std::move(a));
    }
    return p;
}

// The period-2 parabolic portrait with three rays per point.
OrbitPortrait appendix_portrait()
{
    return make_portrait({{{22, 63}, {25, 63}, {37, 63}}, {{11, 63}, {44, 63}, {50, 63}}});
}

OrbitPortrait airplane_portrait()
{
    return make_portrait({{{3, 7}, {4, 7}}, {{6, 7}, {1, 7}}, {{5, 7}, {2, 7}}});
}

} // namespace

TEST_SUITE("angles_combinatorics")
{
    TEST_CASE("angles are reduced modulo one")
    {
        CHECK(Angle(2, 4) == Angle(1, 2));
        CHECK(Angle(7, 7) == Angle(0, 1));
        CHECK(Angle(-1, 3) == Angle(2, 3));
        CHECK(Angle(10, 7) == Angle(3, 7));
        CHECK(Angle(3, 7).to_string() == "3/7");
        CHECK(Angle::parse("22/63") == Angle(22, 63));
        CHECK(Angle::parse(" 5 ") == Angle(0, 1));
        CHECK_THROWS_AS(Angle(1, 0), DomainError);
        CHECK_THROWS(Angle::parse("1/x"));
        CHECK(Angle(1, 4).turns() == 0.25);
    }

    TEST_CASE("to_string and parse round-trip")
    {
        Gen g(21);
        for (int k = 0; k < 300; ++k) {
            const Angle a = g.angle(100000);
            CHECK(Angle::parse(a.to_string()) == a);
            CHECK(a.numerator() < a.denominator());
            CHECK(boost::multiprecision::gcd(a.numerator(), a.denominator()) == 1);
        }
    }

    TEST_CASE("doubling")
    {
        CHECK(doubled(Angle(1, 7)) == Angle(2, 7));
        CHECK(doubled(Angle(4, 7)) == Angle(1, 7));
        CHECK(doubled(Angle(1, 2)) == Angle(0, 1));
        Gen g(22);
        for (int k = 0; k < 200; ++k) {
            const Angle a = g.angle(1 << 20);
            const auto steps = static_cast<std::uint64_t>(g.integer(0, 40));
            Angle b = a;
            for (std::uint64_t i = 0; i < steps; ++i)
                b = doubled(b);
            CHECK(doubled(a, steps) == b);
        }
    }

    TEST_CASE("period is the least k with 2^k a = a")
    {
        CHECK(angle_period(Angle(1, 7)) == 3u);
        CHECK(angle_period(Angle(22, 63)) == 6u);
        CHECK(angle_period(Angle(1, 3)) == 2u);
        CHECK(angle_period(Angle(0, 1)) == 1u);
        CHECK_FALSE(angle_period(Angle(1, 2)).has_value());
        Gen g(23);
        for (int k = 0; k < 200; ++k) {
            const long long den = 2 * g.integer(0, 2000) + 1;
            const Angle a(g.integer(0, static_cast<int>(den) - 1), den);
            const auto p = angle_period(a);
            REQUIRE(p.has_value());
            CHECK(doubled(a, *p) == a);
            for (std::uint64_t j = 1; j < *p; ++j)
                CHECK(doubled(a, j) != a);
        }
    }

    TEST_CASE("orbit type splits off the power of two")
    {
        const auto t = angle_orbit_type(Angle(1, 12));
        CHECK(t.preperiod == 2);
        CHECK(t.period == 2);
        const auto u = angle_orbit_type(Angle(1, 4));
        CHECK(u.preperiod == 2);
        CHECK(u.period == 1);
        Gen g(24);
        for (int k = 0; k < 100; ++k) {
            const Angle a = g.angle(5000);
            const auto ty = angle_orbit_type(a);
            const Angle q = doubled(a, ty.preperiod);
            CHECK(doubled(q, ty.period) == q);
            if (ty.preperiod > 0)
                CHECK(doubled(doubled(a, ty.preperiod - 1), ty.period) != doubled(a, ty.preperiod - 1));
        }
    }

    TEST_CASE("counts of periodic angles")
    {
        for (int n = 1; n <= 12; ++n) {
            const auto all = periodic_angles(n);
            CHECK(all.size() == (std::size_t{1} << n) - 1);
            std::set<Angle> unique(all.begin(), all.end());
            CHECK(unique.size() == all.size());
            // Angles of exact period n: sum over d | n of mu(n/d) (2^d - 1).
            long long expected = 0;
            for (int d = 1; d <= n; ++d)
                if (n % d == 0)
                    expected += quadray::test::mobius(n / d) * ((1LL << d) - 1);
            const auto exact = angles_of_exact_period(n);
            CHECK(static_cast<long long>(exact.size()) == expected);
            for (const auto& a : exact)
                CHECK(angle_period(a) == static_cast<std::uint64_t>(n));
        }
    }

    TEST_CASE("cyclic order and linking")
    {
        const std::vector<Angle> dom{Angle(1, 7), Angle(2, 7), Angle(4, 7)};
        const std::vector<Angle> img{Angle(2, 7), Angle(4, 7), Angle(1, 7)};
        CHECK(cyclic_order_preserved(dom, img));
        const std::vector<Angle> bad{Angle(4, 7), Angle(2, 7), Angle(1, 7)};
        CHECK_FALSE(cyclic_order_preserved(dom, bad));

        const std::vector<Angle> third{Angle(1, 3), Angle(2, 3)};
        CHECK(unlinked(third, std::vector<Angle>{Angle(1, 7), Angle(2, 7)}));
        CHECK_FALSE(unlinked(third, std::vector<Angle>{Angle(1, 2), Angle(0, 1)}));
        CHECK_THROWS_AS(unlinked(third, std::vector<Angle>{Angle(1, 3)}), DomainError);
    }

    TEST_CASE("linking is symmetric")
    {
        Gen g(25);
        for (int k = 0; k < 300; ++k) {
            std::vector<Angle> a{g.angle(97), g.angle(97)}, b{g.angle(89), g.angle(89)};
            std::set<Angle> all(a.begin(), a.end());
            bool disjoint = all.size() == 2 && a[0] != a[1] && b[0] != b[1];
            for (const auto& x : b)
                disjoint = disjoint && !all.contains(x);
            if (!disjoint)
                continue;
            CHECK(unlinked(a, b) == unlinked(b, a));
        }
    }

    TEST_CASE("appendix portrait is a valid satellite portrait")
    {
        const auto v = validate_formal_portrait(appendix_portrait());
        CHECK(v.finite_nonempty);
        CHECK(v.doubling_preserves_order);
        CHECK(v.common_period);
        CHECK(v.pairwise_unlinked);
        CHECK(v.valid());
        CHECK(v.ray_period == 6u);
        const auto cls = classify_portrait(appendix_portrait());
        CHECK(cls.kind == PortraitKind::satellite);
        CHECK(cls.valence == 3);
        CHECK(cls.rays_per_cycle == 3);
        CHECK(cls.ray_period == 6);
        CHECK(cls.ray_cycles == 1);
    }

    TEST_CASE("airplane portrait is primitive")
    {
        const auto cls = classify_portrait(airplane_portrait());
        CHECK(cls.kind == PortraitKind::primitive);
        CHECK(cls.valence == 2);
        CHECK(cls.rays_per_cycle == 1);
        CHECK(cls.ray_period == 3);
        CHECK(cls.ray_cycles == 2);
    }

    TEST_CASE("broken portraits are rejected")
    {
        // Images out of order.
        const auto swapped = make_portrait({{{1, 7}, {2, 7}}, {{2, 7}, {1, 7}}});
        CHECK_FALSE(validate_formal_portrait(swapped).valid());
        // A_2 is not the image of A_1.
        const auto wrong = make_portrait({{{1, 3}, {2, 3}}, {{1, 7}, {2, 7}}});
        const auto v = validate_formal_portrait(wrong);
        CHECK_FALSE(v.valid());
        CHECK_FALSE(v.violations.empty());
        // Linked sets.
        const auto linked = make_portrait({{{1, 5}, {3, 5}}, {{2, 5}, {1, 5}}});
        CHECK_FALSE(validate_formal_portrait(linked).valid());
        CHECK_FALSE(validate_formal_portrait(OrbitPortrait{}).finite_nonempty);
        CHECK_THROWS_AS(classify_portrait(wrong), DomainError);
    }

    TEST_CASE("exact-period angle pairs form valid portraits")
    {
        // Doubling orbits of rays landing at the alpha fixed point of the
        // p/q limb: one set, rays rotated by doubling.
        for (int q = 3; q <= 9; ++q) {
            const long long den = (1LL << q) - 1;
            for (long long num = 1; num < den; ++num) {
                std::vector<Angle> orbit{Angle(num, den)};
                for (int i = 1; i < q; ++i)
                    orbit.push_back(doubled(orbit.back()));
                std::set<Angle> s(orbit.begin(), orbit.end());
                if (s.size() != static_cast<std::size_t>(q))
                    continue;
                std::vector<Angle> sorted(s.begin(), s.end());
                std::vector<Angle> images;
                for (const auto& a : sorted)
                    images.push_back(doubled(a));
                // Rotation orbits are exactly the ones preserving cyclic order.
                OrbitPortrait p;
                p.sets.push_back(sorted);
                CHECK(validate_formal_portrait(p).doubling_preserves_order ==
                      cyclic_order_preserved(sorted, images));
            }
        }
    }

    TEST_CASE("normalize and JSON round-trip")
    {
        const auto p = appendix_portrait();
        const auto norm = normalize_portrait(p);
        CHECK(normalize_portrait(norm).sets == norm.sets);
        const auto back = portrait_from_json(portrait_to_json(norm));
        CHECK(back.sets == norm.sets);
        OrbitPortrait rotated;
        rotated.sets = {p.sets[1], p.sets[0]};
        CHECK(normalize_portrait(rotated).sets == norm.sets);
        const auto air = normalize_portrait(airplane_portrait());
        CHECK(air.sets[0] == std::vector<Angle>{Angle(3, 7), Angle(4, 7)});
        CHECK(air.sets[1] == std::vector<Angle>{Angle(6, 7), Angle(1, 7)});
        CHECK(air.sets[2] == std::vector<Angle>{Angle(5, 7), Angle(2, 7)});
    }

    TEST_CASE("golden mean continued fraction: Fibonacci denominators")
    {
        using precision::Quad;
        const Quad golden = (Quad(sqrt(Quad(5))) - 1) / 2;
        const int N = 40;
        const auto r = bryuno_sums(golden, N);
        REQUIRE(r.partial_quotients.size() == N + 1);
        BigInt f0 = 1, f1 = 1; // q_1 = 1, q_2 = 2 for a_i = 1
        double bryuno = 0.0;
        std::vector<BigInt> q;
        for (int i = 0; i <= N; ++i) {
            CHECK(r.partial_quotients[static_cast<std::size_t>(i)] == 1);
            const BigInt next = f0 + f1;
            q.push_back(f1);
            f0 = f1;
            f1 = next;
        }
        for (int i = 0; i <= N; ++i)
            CHECK(r.denominators[static_cast<std::size_t>(i)] == q[static_cast<std::size_t>(i)]);
        for (int i = 0; i < N; ++i) {
            const double qi = static_cast<double>(q[static_cast<std::size_t>(i)]);
            const double qn = static_cast<double>(q[static_cast<std::size_t>(i) + 1]);
            bryuno += std::log(qn) / qi;
            CHECK(r.bryuno_terms[static_cast<std::size_t>(i)] == doctest::Approx(std::log(qn) / qi).epsilon(1e-12));
        }
        CHECK(r.bryuno_partial == doctest::Approx(bryuno).epsilon(1e-12));
    }

    TEST_CASE("partial quotients given directly")
    {
        std::vector<BigInt> a;
        for (int i = 1; i <= 12; ++i)
            a.emplace_back(i);
        const auto r = bryuno_sums_from_quotients(a, 11);
        BigInt qm1 = 0, q0 = 1;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const BigInt qn = a[i] * q0 + qm1;
            CHECK(r.denominators[i] == qn);
            qm1 = q0;
            q0 = qn;
        }
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < a.size(); ++i)
            sum += log_big(r.denominators[i + 1]) / static_cast<double>(r.denominators[i]);
        CHECK(r.bryuno_partial == doctest::Approx(sum).epsilon(1e-12));
    }

    TEST_CASE("continued fraction errors")
    {
        CHECK_THROWS_AS(bryuno_sums(0.5, 5), DomainError);
        CHECK_THROWS_AS(bryuno_sums((std::sqrt(5.0) - 1.0) / 2.0, 60), PrecisionExhausted);
        const auto d = bryuno_sums((std::sqrt(5.0) - 1.0) / 2.0, 10);
        using precision::Quad;
        const auto q = bryuno_sums((Quad(sqrt(Quad(5))) - 1) / 2, 10);
        CHECK(d.denominators == q.denominators);
    }

    TEST_CASE("log of big integers")
    {
        const BigInt big = BigInt(1) << 300;
        CHECK(log_big(big) == doctest::Approx(300.0 * kLog2).epsilon(1e-14));
        CHECK(log_big(BigInt(1)) == 0.0);
    }
}
