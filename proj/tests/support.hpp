#pragma once

// Shared helpers for the unit tests: seeded generators and small
// independent oracles.

#include "quadray/angles.hpp"
#include "quadray/types.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace quadray::test {

/// Hand-rolled generator for property tests; every case is reproducible from
/// the seed.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    cplx in_disc(cplx center, double radius)
    {
        const double r = radius * std::sqrt(uniform(0.0, 1.0));
        return center + std::polar(r, uniform(0.0, kTwoPi));
    }

    cplx on_circle(cplx center, double radius) { return center + std::polar(radius, uniform(0.0, kTwoPi)); }

    /// c inside the main cardioid (attracting fixed point of multiplier m).
    cplx cardioid(double max_modulus = 0.9)
    {
        const cplx m = std::polar(uniform(0.0, max_modulus), uniform(0.0, kTwoPi));
        return m / 2.0 - m * m / 4.0;
    }

    Angle angle(long long max_den)
    {
        const long long den = std::uniform_int_distribution<long long>(1, max_den)(rng_);
        const long long num = std::uniform_int_distribution<long long>(0, den - 1)(rng_);
        return Angle(num, den);
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline int mobius(int n)
{
    int result = 1;
    for (int p = 2; p * p <= n; ++p) {
        if (n % p == 0) {
            n /= p;
            if (n % p == 0)
                return 0;
            result = -result;
        }
    }
    if (n > 1)
        result = -result;
    return result;
}

/// Number of points of minimal period n for a degree-2 polynomial with all
/// cycles simple: sum over d | n of mu(n/d) 2^d.
inline long long minimal_period_point_count(int n)
{
    long long total = 0;
    for (int d = 1; d <= n; ++d)
        if (n % d == 0)
            total += mobius(n / d) * (1LL << d);
    return total;
}

/// Coefficients (ascending) of f^n(z) - z for f(z) = z^2 + c, by repeated
/// squaring of the coefficient vector.
inline std::vector<cplx> iterate_minus_identity(cplx c, int n)
{
    std::vector<cplx> p{0.0, 1.0};
    for (int k = 0; k < n; ++k) {
        std::vector<cplx> sq(2 * p.size() - 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i)
            for (std::size_t j = 0; j < p.size(); ++j)
                sq[i + j] += p[i] * p[j];
        sq[0] += c;
        p = std::move(sq);
    }
    p[1] -= 1.0;
    return p;
}

/// Greedy matching of two point sets; returns the worst distance, or
/// infinity if the sizes differ.
inline double match_sets(std::vector<cplx> a, std::vector<cplx> b)
{
    if (a.size() != b.size())
        return INFINITY;
    double worst = 0.0;
    for (cplx z : a) {
        std::size_t best = 0;
        double d = INFINITY;
        for (std::size_t j = 0; j < b.size(); ++j)
            if (std::abs(b[j] - z) < d) {
                d = std::abs(b[j] - z);
                best = j;
            }
        worst = std::max(worst, d);
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return worst;
}

} // namespace quadray::test
