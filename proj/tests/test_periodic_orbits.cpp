#include "quadray/periodic_orbits.hpp"

#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <thread>

using namespace quadray;
using quadray::test::Gen;

namespace {

int multiplicity_sum(const std::vector<PeriodicPoint>& pts)
{
    return std::accumulate(pts.begin(), pts.end(), 0, [](int s, const PeriodicPoint& p) { return s + p.multiplicity; });
}

std::vector<cplx> positions(const std::vector<PeriodicPoint>& pts)
{
    std::vector<cplx> out;
    for (const auto& p : pts)
        out.push_back(p.z);
    return out;
}

// Roots of f^n(z) - z from the eigenvalues of the companion matrix.
std::vector<cplx> companion_roots(cplx c, int n)
{
    const auto coeff = quadray::test::iterate_minus_identity(c, n);
    const int deg = static_cast<int>(coeff.size()) - 1;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i)
        m(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i)
        m(i, deg - 1) = -coeff[static_cast<std::size_t>(i)] / coeff.back();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, false);
    std::vector<cplx> roots;
    for (int i = 0; i < deg; ++i) {
        // Polish on the coefficient polynomial; eigenvalues alone carry about
        // sqrt(eps) error near clustered roots.
        cplx z = solver.eigenvalues()[i];
        for (int it = 0; it < 4; ++it) {
            cplx p = 0.0, dp = 0.0;
            for (std::size_t j = coeff.size(); j-- > 0;) {
                dp = dp * z + p;
                p = p * z + coeff[j];
            }
            if (std::abs(dp) < 1e-3 * std::abs(p))
                break;
            z -= p / dp;
        }
        roots.push_back(z);
    }
    return roots;
}

} // namespace

TEST_SUITE("periodic_orbits")
{
    TEST_CASE("minimal-period counts follow the Moebius formula")
    {
        for (cplx c : {cplx(0.0), cplx(-2.0), cplx(0.3, 0.5)}) {
            OrbitCatalog catalog(QuadraticMap(c), PrecisionConfig{});
            for (int n = 1; n <= 10; ++n) {
                std::size_t count = 0;
                for (const auto& o : catalog.orbits_of_minimal_period(n))
                    count += o.points.size() * static_cast<std::size_t>(o.multiplicity);
                CHECK(static_cast<long long>(count) == quadray::test::minimal_period_point_count(n));
                CHECK(multiplicity_sum(catalog.points(n)) == (1 << n));
            }
        }
    }

    TEST_CASE("c = 0: zero and the roots of unity of order 2^n - 1")
    {
        for (int n = 1; n <= 9; ++n) {
            const auto pts = fixed_points_of_iterate(QuadraticMap(0.0), n, PrecisionConfig{});
            std::vector<cplx> oracle{0.0};
            const int m = (1 << n) - 1;
            for (int k = 0; k < m; ++k)
                oracle.push_back(std::polar(1.0, kTwoPi * k / m));
            CHECK(quadray::test::match_sets(positions(pts), oracle) < 1e-10);
        }
    }

    TEST_CASE("c = -2: Chebyshev closed form 2 cos(2 pi k / (2^n +- 1))")
    {
        for (int n = 1; n <= 9; ++n) {
            const auto pts = fixed_points_of_iterate(QuadraticMap(-2.0), n, PrecisionConfig{});
            std::vector<double> oracle;
            for (int den : {(1 << n) - 1, (1 << n) + 1})
                for (int k = 0; k < den; ++k)
                    oracle.push_back(2.0 * std::cos(kTwoPi * k / den));
            std::sort(oracle.begin(), oracle.end());
            oracle.erase(std::unique(oracle.begin(), oracle.end(),
                                     [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                         oracle.end());
            std::vector<cplx> oz(oracle.begin(), oracle.end());
            CHECK(quadray::test::match_sets(positions(pts), oz) < 1e-9);
            for (const auto& p : pts)
                CHECK(std::abs(p.z.imag()) < 1e-9);
        }
    }

    TEST_CASE("c = -2 at n = 15: census includes the roots beside the critical point")
    {
        const int n = 15;
        const auto pts = fixed_points_of_iterate(QuadraticMap(-2.0), n, PrecisionConfig{});
        REQUIRE(multiplicity_sum(pts) == (1 << n));
        // Closest roots to 0 in the closed form: 2 cos(pi/2 (1 -+ 1/den)).
        for (int den : {(1 << n) - 1, (1 << n) + 1}) {
            const double x = 2.0 * std::cos(kTwoPi * ((den + 1) / 4) / den);
            const auto hit = std::any_of(pts.begin(), pts.end(),
                                         [&](const PeriodicPoint& p) { return std::abs(p.z - x) < 1e-10; });
            CHECK(hit);
        }
    }

    TEST_CASE("random parameters agree with companion-matrix eigenvalues")
    {
        Gen g(31);
        for (int k = 0; k < 25; ++k) {
            const cplx c = g.in_disc(0.0, 1.6);
            const int n = g.integer(1, 5);
            const auto pts = fixed_points_of_iterate(QuadraticMap(c), n, PrecisionConfig{});
            REQUIRE(multiplicity_sum(pts) == (1 << n));
            std::vector<cplx> expanded;
            for (const auto& p : pts)
                for (int m = 0; m < p.multiplicity; ++m)
                    expanded.push_back(p.z);
            CHECK(quadray::test::match_sets(expanded, companion_roots(c, n)) < 1e-6);
        }
    }

    TEST_CASE("multipliers")
    {
        OrbitCatalog cheb(QuadraticMap(-2.0), PrecisionConfig{});
        const auto two = cheb.orbits_of_minimal_period(2);
        REQUIRE(two.size() == 1);
        CHECK(std::abs(two[0].multiplier - cplx(-4.0)) < 1e-9);
        CHECK(two[0].stability == Stability::repelling);

        OrbitCatalog bas(QuadraticMap(-1.0), PrecisionConfig{});
        const auto b2 = bas.orbits_of_minimal_period(2);
        REQUIRE(b2.size() == 1);
        CHECK(std::abs(b2[0].multiplier) < 1e-12);
        CHECK(b2[0].stability == Stability::attracting);
        for (const auto& o : bas.orbits_of_minimal_period(1))
            CHECK(o.stability == Stability::repelling);
    }

    TEST_CASE("orbits are closed under f and multipliers are consistent")
    {
        Gen g(32);
        for (int k = 0; k < 10; ++k) {
            const QuadraticMap map(g.in_disc(0.0, 1.8));
            const int n = g.integer(2, 7);
            OrbitCatalog catalog(map, PrecisionConfig{});
            for (const auto& o : catalog.orbits(n)) {
                const std::size_t len = o.points.size();
                CHECK(n % o.minimal_period == 0);
                CHECK(len == static_cast<std::size_t>(o.minimal_period));
                for (std::size_t i = 0; i < len; ++i) {
                    const cplx img = evaluate(map, o.points[i]);
                    CHECK(std::abs(img - o.points[(i + 1) % len]) < 1e-8 * (1.0 + std::abs(img)));
                }
                const cplx lam = derivative_along_orbit(map, o.points[0], o.minimal_period);
                CHECK(std::abs(lam - o.multiplier) < 1e-6 * (1.0 + std::abs(lam)));
            }
        }
    }

    TEST_CASE("multiple roots at parabolic parameters")
    {
        // c = 1/4: double fixed point at 1/2.
        const auto quarter = fixed_points_of_iterate(QuadraticMap(0.25), 1, PrecisionConfig{});
        REQUIRE(quarter.size() == 1);
        CHECK(quarter[0].multiplicity == 2);
        CHECK(std::abs(quarter[0].z - 0.5) < 1e-6);

        // c = -3/4: the 2-cycle collapses onto alpha = -1/2 (triple root of f^2 - z).
        const auto pts = fixed_points_of_iterate(QuadraticMap(-0.75), 2, PrecisionConfig{});
        CHECK(multiplicity_sum(pts) == 4);
        const auto it = std::find_if(pts.begin(), pts.end(), [](const PeriodicPoint& p) { return p.multiplicity == 3; });
        REQUIRE(it != pts.end());
        CHECK(std::abs(it->z + 0.5) < 1e-5);
    }

    TEST_CASE("alpha and beta fixed points")
    {
        Gen g(33);
        for (int k = 0; k < 100; ++k) {
            const cplx c = g.in_disc(0.0, 2.0);
            const auto ab = alpha_beta_fixed_points(QuadraticMap(c));
            CHECK(std::abs(ab.alpha + ab.beta - 1.0) < 1e-12);
            CHECK(std::abs(ab.alpha * ab.beta - c) < 1e-12);
            CHECK(ab.beta.real() >= ab.alpha.real());
        }
        CHECK(alpha_beta_fixed_points(QuadraticMap(0.25)).degenerate);
        const auto bas = alpha_beta_fixed_points(QuadraticMap(-1.0));
        CHECK(bas.alpha.real() == doctest::Approx((1.0 - std::sqrt(5.0)) / 2.0));
    }

    TEST_CASE("extended precision reproduces the binary64 census")
    {
        PrecisionConfig hi;
        hi.mantissa_bits = 113;
        const QuadraticMap map(cplx(-0.1, 0.65));
        const auto a = fixed_points_of_iterate(map, 6, PrecisionConfig{});
        const auto b = fixed_points_of_iterate(map, 6, hi);
        CHECK(quadray::test::match_sets(positions(a), positions(b)) < 1e-10);
        CHECK(enumeration_cap(PrecisionConfig{}) == 20);
        CHECK(enumeration_cap(hi) > 20);
        CHECK_THROWS_AS(fixed_points_of_iterate(map, enumeration_cap(PrecisionConfig{}) + 1, PrecisionConfig{}),
                        DomainError);
    }

    TEST_CASE("catalog is safe to share between threads")
    {
        OrbitCatalog catalog(QuadraticMap(cplx(-0.5, 0.3)), PrecisionConfig{});
        std::vector<std::size_t> sizes(4);
        std::vector<std::thread> workers;
        for (std::size_t i = 0; i < sizes.size(); ++i)
            workers.emplace_back([&, i] { sizes[i] = catalog.orbits(8).size(); });
        for (auto& w : workers)
            w.join();
        for (auto s : sizes)
            CHECK(s == sizes[0]);
        CHECK(&catalog.orbits(8) == &catalog.orbits(8));
    }

    TEST_CASE("classification thresholds")
    {
        PeriodicOrbit o;
        o.points = {0.0};
        o.minimal_period = 1;
        o.multiplier = 0.5;
        CHECK(classify_orbit(o) == Stability::attracting);
        o.multiplier = 2.0;
        CHECK(classify_orbit(o) == Stability::repelling);
        o.multiplier = -1.0;
        CHECK(classify_orbit(o) == Stability::parabolic_candidate);
        o.multiplier = std::polar(1.0, kTwoPi * (std::sqrt(5.0) - 1.0) / 2.0);
        CHECK(classify_orbit(o) == Stability::indifferent_candidate);
    }
}

TEST_SUITE("periodic_orbits_slow")
{
    TEST_CASE("c = -1.999 at n = 15: escaping Newton iterates are not reported as roots")
    {
        // Deflated starts outside the Julia set overflow dF before F; the
        // census must still be exact and every point a genuine fixed point.
        const QuadraticMap map(-1.999);
        const int n = 15;
        const auto pts = fixed_points_of_iterate(map, n, PrecisionConfig{});
        CHECK(multiplicity_sum(pts) == (1 << n));
        for (const auto& p : pts) {
            CHECK(std::abs(p.z) < 2.0);
            CHECK(iterate_orbit(map, p.z, n).escaped == false);
        }
    }
}
