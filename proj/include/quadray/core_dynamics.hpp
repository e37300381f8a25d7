#pragma once

#include "quadray/precision.hpp"
#include "quadray/types.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

namespace quadray {

/// Trajectory z_0..z_n with z_{i+1} = f(z_i).
struct OrbitSegment {
    std::vector<cplx> points;
    QuadraticMap map;
    bool escaped = false;
};

/// Full inverse image f^{-n}(z), sorted lexicographically on (re, im).
/// multiplicity[i] > 1 only where the backward tree passed through the
/// critical value; the multiplicities always sum to 2^n.
struct PreimageSet {
    std::vector<cplx> points;
    std::vector<int> multiplicity;
    bool branch_degenerate = false;
    int degenerate_level = -1;
    bool precision_exhausted = false;
    double max_step = 0.0; // largest final Newton correction over all leaves
};

inline constexpr double kOrbitEscapeRadius = 1e8;

cplx evaluate(const QuadraticMap& map, cplx z);

OrbitSegment iterate_orbit(const QuadraticMap& map, cplx z, int n);

/// (f^n)'(z) = prod_{i<n} 2 z_i.
cplx derivative_along_orbit(const QuadraticMap& map, cplx z, int n);

/// G(z) = lim 2^{-k} log|f^k(z)|; zero for points that do not escape within
/// cfg.max_iter iterations.
double green_potential(const QuadraticMap& map, cplx z, const PrecisionConfig& cfg);

PreimageSet preimages(const QuadraticMap& map, cplx z, int n, const PrecisionConfig& cfg);

namespace detail {

template <class C>
C iterate(C z, const C& c, int k)
{
    for (int i = 0; i < k; ++i)
        z = z * z + c;
    return z;
}

template <class C>
struct ValueAndDerivative {
    C value;
    C derivative;
};

template <class C>
ValueAndDerivative<C> iterate_with_derivative(C z, const C& c, int k)
{
    C d(1);
    for (int i = 0; i < k; ++i) {
        d = C(2) * z * d;
        z = z * z + c;
    }
    return {z, d};
}

/// Taylor coefficients of h -> f^k(z + h) up to order Order.
template <std::size_t Order, class C>
std::array<C, Order + 1> iterate_jet(const C& z, const C& c, int k)
{
    std::array<C, Order + 1> p{};
    p[0] = z;
    if constexpr (Order >= 1)
        p[1] = C(1);
    for (int step = 0; step < k; ++step) {
        std::array<C, Order + 1> sq{};
        for (std::size_t i = 0; i <= Order; ++i)
            for (std::size_t j = 0; i + j <= Order; ++j)
                sq[i + j] += p[i] * p[j];
        sq[0] += c;
        p = sq;
    }
    return p;
}

template <class Real>
struct TreeLeaf {
    precision::Complex<Real> x;
    Real log_abs_derivative; // log |(f^n)'(x)|; -inf on a degenerate branch
    int multiplicity;
};

/// Breadth-first expansion of the backward tree of z to depth n. Both square
/// roots are enumerated explicitly, so the branch cut never decides the set.
template <class Real>
std::vector<TreeLeaf<Real>> expand_preimage_tree(const precision::Complex<Real>& z,
                                                 const precision::Complex<Real>& c, int n,
                                                 int* degenerate_level)
{
    using C = precision::Complex<Real>;
    using std::log;
    std::vector<TreeLeaf<Real>> level{{z, Real(0), 1}};
    if (degenerate_level)
        *degenerate_level = -1;
    for (int depth = 1; depth <= n; ++depth) {
        std::vector<TreeLeaf<Real>> next;
        next.reserve(level.size() * 2);
        for (const auto& node : level) {
            const C u = node.x - c;
            if (u == C(0)) {
                if (degenerate_level && *degenerate_level < 0)
                    *degenerate_level = depth;
                next.push_back({C(0), -std::numeric_limits<Real>::infinity(), node.multiplicity * 2});
                continue;
            }
            const C w = precision::principal_sqrt(u);
            const Real lg = log(Real(2) * precision::modulus(w)) + node.log_abs_derivative;
            next.push_back({w, lg, node.multiplicity});
            next.push_back({-w, lg, node.multiplicity});
        }
        level = std::move(next);
    }
    return level;
}

template <class Real>
Real green_potential_impl(precision::Complex<Real> z, const precision::Complex<Real>& c, int max_iter,
                          double escape_radius)
{
    using std::ldexp;
    using std::log;
    const Real bailout(kOrbitEscapeRadius);
    const Real esc(escape_radius);
    int k = 0;
    bool escaped = precision::modulus(z) > esc;
    while (precision::modulus(z) <= bailout) {
        if (k >= max_iter && !escaped)
            return Real(0);
        z = z * z + c;
        ++k;
        if (!escaped && precision::modulus(z) > esc)
            escaped = true;
    }
    return ldexp(log(precision::modulus(z)), -k);
}

} // namespace detail

} // namespace quadray
