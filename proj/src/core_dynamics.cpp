#include "quadray/core_dynamics.hpp"

#include "quadray/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace quadray {

QuadraticMap::QuadraticMap(cplx c) : c_(c)
{
    if (!is_finite(c))
        throw DomainError("parameter c must be finite");
}

double QuadraticMap::escape_radius() const noexcept
{
    return std::max(4.0, 2.0 * std::abs(c_));
}

void PrecisionConfig::validate() const
{
    if (mantissa_bits < 53)
        throw DomainError("mantissa_bits must be at least 53");
    if (mantissa_bits > precision::kMaxMantissaBits)
        throw DomainError("mantissa_bits must not exceed 256");
    if (!(newton_tol > 0.0))
        throw DomainError("newton_tol must be positive");
    if (!(dedup_tol >= newton_tol))
        throw DomainError("dedup_tol must be at least newton_tol");
    if (max_iter <= 0)
        throw DomainError("max_iter must be positive");
}

cplx evaluate(const QuadraticMap& map, cplx z)
{
    if (!is_finite(z))
        throw DomainError("evaluate: non-finite argument");
    const cplx w = z * z + map.c();
    if (!is_finite(w))
        throw DomainError("evaluate: overflow");
    return w;
}

OrbitSegment iterate_orbit(const QuadraticMap& map, cplx z, int n)
{
    if (n < 0)
        throw DomainError("iterate_orbit: negative iteration count");
    OrbitSegment seg{{z}, map, false};
    seg.points.reserve(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i < n; ++i) {
        if (std::abs(z) > kOrbitEscapeRadius) {
            seg.escaped = true;
            break;
        }
        z = z * z + map.c();
        seg.points.push_back(z);
    }
    if (std::abs(seg.points.back()) > kOrbitEscapeRadius)
        seg.escaped = true;
    return seg;
}

cplx derivative_along_orbit(const QuadraticMap& map, cplx z, int n)
{
    if (n < 1)
        throw DomainError("derivative_along_orbit: n must be at least 1");
    return detail::iterate_with_derivative(z, map.c(), n).derivative;
}

double green_potential(const QuadraticMap& map, cplx z, const PrecisionConfig& cfg)
{
    cfg.validate();
    if (!is_finite(z))
        throw DomainError("green_potential: non-finite argument");
    return precision::dispatch(cfg.mantissa_bits, [&]<class Real>(std::type_identity<Real>) {
        return precision::to_double(detail::green_potential_impl<Real>(
            precision::from_cplx<Real>(z), precision::from_cplx<Real>(map.c()), cfg.max_iter,
            map.escape_radius()));
    });
}

namespace {

template <class Real>
PreimageSet preimages_impl(const QuadraticMap& map, cplx z, int n, const PrecisionConfig& cfg)
{
    using C = precision::Complex<Real>;
    const C zc = precision::from_cplx<Real>(z);
    const C c = precision::from_cplx<Real>(map.c());

    PreimageSet out;
    auto leaves = detail::expand_preimage_tree<Real>(zc, c, n, &out.degenerate_level);
    out.branch_degenerate = out.degenerate_level >= 0;

    std::vector<double> steps(leaves.size(), 0.0);
    parallel_for(leaves.size(), [&](std::size_t i) {
        auto& leaf = leaves[i];
        if (leaf.multiplicity > 1)
            return;
        // One or two Newton corrections on f^n(x) - z; the step size measures
        // how far x sits from an exact preimage.
        double last = 0.0;
        for (int it = 0; it < 2; ++it) {
            const auto vd = detail::iterate_with_derivative(leaf.x, c, n);
            if (vd.derivative == C(0))
                break;
            const C step = (vd.value - zc) / vd.derivative;
            leaf.x -= step;
            last = precision::to_double(precision::modulus(step));
        }
        steps[i] = last;
    });

    std::vector<std::size_t> order(leaves.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<cplx> pts(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i)
        pts[i] = precision::to_cplx(leaves[i].x);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (pts[a].real() != pts[b].real())
            return pts[a].real() < pts[b].real();
        return pts[a].imag() < pts[b].imag();
    });

    out.points.reserve(leaves.size());
    out.multiplicity.reserve(leaves.size());
    for (std::size_t idx : order) {
        out.points.push_back(pts[idx]);
        out.multiplicity.push_back(leaves[idx].multiplicity);
        const double scale = 1.0 + std::abs(pts[idx]);
        out.max_step = std::max(out.max_step, steps[idx]);
        if (steps[idx] > cfg.newton_tol * scale)
            out.precision_exhausted = true;
    }
    return out;
}

} // namespace

PreimageSet preimages(const QuadraticMap& map, cplx z, int n, const PrecisionConfig& cfg)
{
    cfg.validate();
    if (n < 0)
        throw DomainError("preimages: negative depth");
    if (n > 26)
        throw DomainError("preimages: depth " + std::to_string(n) + " exceeds the supported cap of 26");
    if (!is_finite(z))
        throw DomainError("preimages: non-finite argument");
    return precision::dispatch(cfg.mantissa_bits, [&]<class Real>(std::type_identity<Real>) {
        return preimages_impl<Real>(map, z, n, cfg);
    });
}

} // namespace quadray
