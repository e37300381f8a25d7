#include "quadray/pressure.hpp"

#include "quadray/core_dynamics.hpp"
#include "quadray/external_rays.hpp"
#include "quadray/precision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace quadray {

std::string to_string(PressureMode m)
{
    return m == PressureMode::periodic ? "periodic" : "tree";
}

namespace {

double log_sum_exp(const std::vector<double>& terms)
{
    if (terms.empty())
        return -std::numeric_limits<double>::infinity();
    const double top = *std::max_element(terms.begin(), terms.end());
    if (!std::isfinite(top))
        return top;
    double acc = 0.0;
    for (double x : terms)
        acc += std::exp(x - top);
    return top + std::log(acc);
}

void check_level(int n)
{
    if (n < 1)
        throw DomainError("pressure: n must be at least 1");
}

} // namespace

PressureEstimate periodic_pressure_estimate(OrbitCatalog& catalog, double t, int n)
{
    check_level(n);
    if (!std::isfinite(t))
        throw DomainError("pressure: t must be finite");
    PressureEstimate est;
    est.t = t;
    est.n = n;
    est.mode = PressureMode::periodic;
    est.negative_t = t < 0.0;

    std::vector<double> terms;
    for (const auto& orbit : catalog.orbits(n)) {
        if (orbit.stability == Stability::attracting) {
            est.excluded_attracting += orbit.points.size();
            continue;
        }
        if (orbit.stability == Stability::indifferent_candidate)
            est.indifferent_kept += orbit.points.size();
        // |(f^n)'| = |lambda|^{n/m} at every point of an m-cycle.
        const double log_deriv = (n / orbit.minimal_period) * std::log(std::abs(orbit.multiplier));
        for (std::size_t i = 0; i < orbit.points.size(); ++i)
            terms.push_back(-t * log_deriv);
    }
    est.terms = terms.size();
    est.log_sum = log_sum_exp(terms);
    est.value = est.log_sum / n;
    return est;
}

PressureEstimate periodic_pressure_estimate(const QuadraticMap& map, double t, int n, const PrecisionConfig& cfg)
{
    OrbitCatalog catalog(map, cfg);
    return periodic_pressure_estimate(catalog, t, n);
}

PressureEstimate tree_pressure_estimate(const QuadraticMap& map, cplx z, double t, int n, const PrecisionConfig& cfg)
{
    cfg.validate();
    check_level(n);
    if (n > 26)
        throw DomainError("tree_pressure_estimate: n=" + std::to_string(n) + " exceeds the preimage cap of 26");
    if (!is_finite(z) || !std::isfinite(t))
        throw DomainError("tree_pressure_estimate: non-finite input");

    const auto logs = precision::dispatch(cfg.mantissa_bits, [&]<class Real>(std::type_identity<Real>) {
        int degenerate = -1;
        const auto leaves = detail::expand_preimage_tree<Real>(precision::from_cplx<Real>(z),
                                                               precision::from_cplx<Real>(map.c()), n, &degenerate);
        if (degenerate >= 0)
            throw DomainError("tree_pressure_estimate: the backward tree of z hits the critical value at level " +
                              std::to_string(degenerate));
        std::vector<double> out;
        out.reserve(leaves.size());
        for (const auto& leaf : leaves)
            out.push_back(precision::to_double(leaf.log_abs_derivative));
        return out;
    });

    PressureEstimate est;
    est.t = t;
    est.n = n;
    est.mode = PressureMode::tree;
    est.basepoint = z;
    est.negative_t = t < 0.0;
    std::vector<double> terms;
    terms.reserve(logs.size());
    for (double l : logs)
        terms.push_back(-t * l);
    est.terms = terms.size();
    est.log_sum = log_sum_exp(terms);
    est.value = est.log_sum / n;
    return est;
}

cplx default_tree_basepoint(const QuadraticMap& map)
{
    return ray_point(map, Angle(1, 7), 0.01);
}

PressureCurve pressure_comparison(OrbitCatalog& catalog, cplx z, std::span<const double> t_grid, int n)
{
    check_level(n);
    if (t_grid.empty())
        throw DomainError("pressure_comparison: empty t grid");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw DomainError("pressure_comparison: t grid must be strictly increasing");

    PressureCurve curve;
    curve.t_grid.assign(t_grid.begin(), t_grid.end());
    curve.n = n;
    for (double t : t_grid) {
        curve.periodic.push_back(periodic_pressure_estimate(catalog, t, n));
        curve.tree.push_back(tree_pressure_estimate(catalog.map(), z, t, n, catalog.precision()));
        curve.discrepancy = std::max(curve.discrepancy, std::abs(curve.periodic.back().value - curve.tree.back().value));
        if (n > 1) {
            curve.periodic_prev.push_back(periodic_pressure_estimate(catalog, t, n - 1));
            curve.tree_prev.push_back(tree_pressure_estimate(catalog.map(), z, t, n - 1, catalog.precision()));
            curve.discrepancy_prev = std::max(
                curve.discrepancy_prev, std::abs(curve.periodic_prev.back().value - curve.tree_prev.back().value));
        }
    }
    curve.trend_non_increasing = n == 1 || curve.discrepancy <= curve.discrepancy_prev;
    return curve;
}

PressureCurve pressure_comparison(const QuadraticMap& map, cplx z, std::span<const double> t_grid, int n,
                                  const PrecisionConfig& cfg)
{
    OrbitCatalog catalog(map, cfg);
    return pressure_comparison(catalog, z, t_grid, n);
}

} // namespace quadray
