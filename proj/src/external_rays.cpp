#include "quadray/external_rays.hpp"

#include "quadray/core_dynamics.hpp"
#include "quadray/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>

namespace quadray {

void RayConfig::validate() const
{
    if (!(g0 > 0.0))
        throw DomainError("ray config: g0 must be positive");
    if (substeps < 1)
        throw DomainError("ray config: substeps must be at least 1");
    if (trace_halvings < 1 || trace_halvings > 60)
        throw DomainError("ray config: trace_halvings must lie in [1, 60]");
    if (!(step_tol > 0.0) || !(landing_tol > 0.0) || !(match_tol > 0.0))
        throw DomainError("ray config: tolerances must be positive");
    if (newton_iter < 1 || stall_halvings < 1)
        throw DomainError("ray config: iteration limits must be positive");
    if (max_candidate_period < 1 || max_candidate_period > 24)
        throw DomainError("ray config: max_candidate_period must lie in [1, 24]");
}

std::string to_string(RayStatus s)
{
    switch (s) {
    case RayStatus::ok:
        return "ok";
    case RayStatus::stalled:
        return "stalled";
    case RayStatus::precision_exhausted:
        return "precision_exhausted";
    }
    return "unknown";
}

namespace {

constexpr int kMaxLandingPeriod = 64;
constexpr int kLandingDepth = 24; // halvings below g0 before pulling back

// Smallest k >= 0 with 2^k g >= g0.
int level_iterations(double g, double g0)
{
    int k = 0;
    while (std::ldexp(g, k) < g0)
        ++k;
    return k;
}

// psi(W) = W - c/(2W), the inverse Boettcher map to first order, at
// potential 2^k g and angle 2^k theta.
cplx level_target(cplx c, const Angle& theta, double g, int k)
{
    const double turns = doubled(theta, static_cast<std::uint64_t>(k)).turns();
    const cplx W = std::polar(std::exp(std::ldexp(g, k)), kTwoPi * turns);
    return W - c / (2.0 * W);
}

// Newton on f^k(z) = target.
std::optional<cplx> solve_level(cplx c, cplx z, int k, cplx target, const RayConfig& cfg)
{
    for (int it = 0; it < cfg.newton_iter; ++it) {
        const auto vd = detail::iterate_with_derivative(z, c, k);
        if (vd.derivative == cplx(0.0) || !is_finite(vd.value))
            return std::nullopt;
        const cplx step = (vd.value - target) / vd.derivative;
        z -= step;
        if (!is_finite(z))
            return std::nullopt;
        if (std::abs(step) <= cfg.step_tol * (1.0 + std::abs(z)))
            return z;
    }
    return std::nullopt;
}

// Walks the potentials G 2^{(M-m)/S}, m = 0..M, from above g0 down to G.
cplx descend(const QuadraticMap& map, const Angle& theta, double G, const RayConfig& cfg,
             std::vector<RaySample>* samples)
{
    const cplx c = map.c();
    int halvings = 0;
    while (std::ldexp(G, halvings) < cfg.g0)
        ++halvings;
    const int M = halvings * cfg.substeps;
    cplx z{};
    for (int m = 0; m <= M; ++m) {
        const double g = G * std::exp2(static_cast<double>(M - m) / cfg.substeps);
        const int k = level_iterations(g, cfg.g0);
        const cplx target = level_target(c, theta, g, k);
        if (m == 0) {
            z = target;
        } else {
            auto next = solve_level(c, z, k, target, cfg);
            if (!next)
                throw PrecisionExhausted("ray_point: Newton failed on ray " + theta.to_string() +
                                         " at potential " + std::to_string(g));
            z = *next;
        }
        if (samples)
            samples->push_back({g, z});
    }
    return z;
}

// Ray point at potential g, Newton started from a nearby point on the ray.
cplx ray_point_near(const QuadraticMap& map, const Angle& theta, double g, cplx guess, const RayConfig& cfg)
{
    const int k = level_iterations(g, cfg.g0);
    if (auto z = solve_level(map.c(), guess, k, level_target(map.c(), theta, g, k), cfg))
        return *z;
    return descend(map, theta, g, cfg, nullptr);
}

struct PeriodicLanding {
    cplx z;
    double residual;
    bool converged;
    RayStatus status;
};

// theta periodic with period m: pull the deep ray point back along f^m.
PeriodicLanding land_periodic(const QuadraticMap& map, const Angle& theta, int m, const RayConfig& cfg)
{
    const cplx c = map.c();
    const double g_deep = std::ldexp(cfg.g0, -kLandingDepth);
    cplx p = descend(map, theta, g_deep, cfg, nullptr);

    double d_prev = std::numeric_limits<double>::infinity();
    double d_ref = d_prev;
    double tail = d_prev;
    double d = d_prev;
    int since_halved = 0;
    bool converged = false;
    bool stalled = false;
    std::vector<cplx> refs(static_cast<std::size_t>(m));
    const int max_rounds = 4 * cfg.stall_halvings + 64;
    for (int round = 0; round < max_rounds; ++round) {
        refs[0] = p;
        for (int j = 1; j < m; ++j)
            refs[static_cast<std::size_t>(j)] = refs[static_cast<std::size_t>(j) - 1] *
                                                   refs[static_cast<std::size_t>(j) - 1] + c;
        // q runs backward along the ray: at step j it approximates the ray
        // point of angle 2^j theta, and f^j(p) fixes the branch.
        cplx q = p;
        for (int j = m - 1; j >= 0; --j) {
            const cplx s = std::sqrt(q - c);
            const cplx& ref = refs[static_cast<std::size_t>(j)];
            q = std::abs(s - ref) <= std::abs(s + ref) ? s : -s;
        }
        d = std::abs(q - p);
        p = q;
        if (d == 0.0) {
            tail = 0.0;
            converged = true;
            break;
        }
        if (std::isfinite(d_prev)) {
            const double rho = d / d_prev;
            tail = rho < 1.0 ? d * rho / (1.0 - rho) : std::numeric_limits<double>::infinity();
        }
        d_prev = d;
        if (tail < cfg.landing_tol && d < cfg.landing_tol) {
            converged = true;
            break;
        }
        if (!std::isfinite(d_ref) || d <= 0.5 * d_ref) {
            d_ref = d;
            since_halved = 0;
        } else if ((since_halved += m) >= cfg.stall_halvings) {
            stalled = true;
            break;
        }
    }

    // Newton on f^m(z) - z from the best estimate; kept only if it stays
    // within the error the pullback sequence itself admits.
    cplx z = p;
    for (int it = 0; it < 100; ++it) {
        const auto vd = detail::iterate_with_derivative(z, c, m);
        const cplx dF = vd.derivative - 1.0;
        if (dF == cplx(0.0))
            break;
        const cplx step = (vd.value - z) / dF;
        z -= step;
        if (!is_finite(z) || std::abs(step) <= 1e-15 * (1.0 + std::abs(z)))
            break;
    }
    if (is_finite(z) && std::abs(z - p) <= 4.0 * tail + cfg.landing_tol)
        p = z;
    return {p, d, converged && !stalled, stalled ? RayStatus::stalled : RayStatus::ok};
}

} // namespace

cplx ray_point(const QuadraticMap& map, const Angle& theta, double G, const RayConfig& cfg)
{
    cfg.validate();
    if (!(G > 0.0) || !std::isfinite(G))
        throw DomainError("ray_point: potential must be positive and finite");
    return descend(map, theta, G, cfg, nullptr);
}

RayTrace trace_ray(const QuadraticMap& map, const Angle& theta, const RayConfig& cfg)
{
    cfg.validate();
    RayTrace trace{theta, {}, RayStatus::ok};
    try {
        descend(map, theta, std::ldexp(cfg.g0, -cfg.trace_halvings), cfg, &trace.samples);
    } catch (const PrecisionExhausted&) {
        trace.status = RayStatus::precision_exhausted;
    }
    return trace;
}

LandingEstimate estimate_landing(const QuadraticMap& map, const Angle& theta, const RayConfig& cfg)
{
    cfg.validate();
    const auto type = angle_orbit_type(theta);
    if (type.period > kMaxLandingPeriod)
        throw DomainError("estimate_landing: period " + std::to_string(type.period) + " of " + theta.to_string() +
                          " exceeds " + std::to_string(kMaxLandingPeriod));
    const Angle base = doubled(theta, type.preperiod);
    LandingEstimate out;
    PeriodicLanding landing;
    try {
        landing = land_periodic(map, base, static_cast<int>(type.period), cfg);
    } catch (const PrecisionExhausted&) {
        out.status = RayStatus::precision_exhausted;
        return out;
    }
    cplx w = landing.z;
    // Strictly preperiodic part: pull back along the rays of 2^j theta. The
    // reference only fixes a sign, so a shallower point is acceptable when
    // the ray runs into a precritical point.
    for (std::uint64_t j = type.preperiod; j-- > 0;) {
        cplx ref{};
        for (int depth = kLandingDepth;; depth -= 8) {
            try {
                ref = descend(map, doubled(theta, j), std::ldexp(cfg.g0, -depth), cfg, nullptr);
                break;
            } catch (const PrecisionExhausted&) {
                if (depth <= 0) {
                    out.status = RayStatus::precision_exhausted;
                    return out;
                }
            }
        }
        const cplx s = std::sqrt(w - map.c());
        w = std::abs(s - ref) <= std::abs(s + ref) ? s : -s;
    }
    out.z = w;
    out.residual = landing.residual;
    out.converged = landing.converged;
    out.status = landing.status;
    return out;
}

PortraitReport portrait_at_orbit(const QuadraticMap& map, const PeriodicOrbit& orbit, int n, const RayConfig& cfg)
{
    cfg.validate();
    if (orbit.minimal_period != n || static_cast<int>(orbit.points.size()) != n)
        throw DomainError("portrait_at_orbit: orbit does not have minimal period " + std::to_string(n));
    if (orbit.stability != Stability::repelling && orbit.stability != Stability::parabolic_candidate)
        throw DomainError("portrait_at_orbit: orbit is " + to_string(orbit.stability) +
                          "; rays land only on repelling or parabolic cycles");
    if (n > cfg.max_candidate_period)
        throw DomainError("portrait_at_orbit: period " + std::to_string(n) + " exceeds max_candidate_period " +
                          std::to_string(cfg.max_candidate_period));

    // One representative numerator per doubling cycle of exact period rp.
    struct Candidate {
        int rp;
        std::uint64_t num;
    };
    std::vector<Candidate> candidates;
    for (int k = 1; k <= 4 && k * n <= cfg.max_candidate_period; ++k) {
        const int rp = k * n;
        const std::uint64_t D = (std::uint64_t{1} << rp) - 1;
        if (D == 0) {
            candidates.push_back({rp, 0});
            continue;
        }
        std::vector<bool> seen(D, false);
        for (std::uint64_t j = 0; j < D; ++j) {
            if (seen[j])
                continue;
            int len = 0;
            std::uint64_t x = j;
            do {
                seen[x] = true;
                x = (2 * x) % D;
                ++len;
            } while (x != j);
            if (len == rp)
                candidates.push_back({rp, j});
        }
    }

    std::vector<LandingEstimate> landings(candidates.size());
    parallel_for(candidates.size(), [&](std::size_t i) {
        const auto& cand = candidates[i];
        const BigInt den = (BigInt(1) << cand.rp) - 1;
        landings[i] = estimate_landing(map, Angle(BigInt(cand.num), den), cfg);
    });

    std::vector<std::vector<Angle>> sets(static_cast<std::size_t>(n));
    std::set<int> periods;
    double worst = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (landings[i].status == RayStatus::precision_exhausted)
            continue;
        std::size_t best = 0;
        double dist = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < orbit.points.size(); ++p) {
            const double d = std::abs(landings[i].z - orbit.points[p]);
            if (d < dist) {
                dist = d;
                best = p;
            }
        }
        if (dist >= cfg.match_tol)
            continue;
        worst = std::max(worst, dist);
        const auto& cand = candidates[i];
        const std::uint64_t D = (std::uint64_t{1} << cand.rp) - 1;
        std::uint64_t num = cand.num;
        for (int t = 0; t < cand.rp; ++t) {
            const BigInt den = D == 0 ? BigInt(1) : BigInt(D);
            sets[(best + static_cast<std::size_t>(t)) % static_cast<std::size_t>(n)].emplace_back(BigInt(num), den);
            num = D == 0 ? 0 : (2 * num) % D;
        }
        periods.insert(cand.rp);
    }
    if (periods.empty())
        throw DomainError("portrait_at_orbit: no candidate ray lands within match_tol of the orbit");

    OrbitPortrait raw;
    raw.sets = std::move(sets);
    for (auto& s : raw.sets)
        std::sort(s.begin(), s.end());
    if (periods.size() == 1)
        raw.ray_period = static_cast<std::uint64_t>(*periods.begin());

    PortraitReport report;
    report.portrait = normalize_portrait(raw);
    report.portrait.ray_period = raw.ray_period;
    report.validation = validate_formal_portrait(report.portrait);
    report.max_landing_error = worst;

    const std::set<Angle> first(report.portrait.sets.front().begin(), report.portrait.sets.front().end());
    std::size_t shift = 0;
    for (std::size_t i = 0; i < raw.sets.size(); ++i)
        if (std::set<Angle>(raw.sets[i].begin(), raw.sets[i].end()) == first)
            shift = i;
    for (std::size_t i = 0; i < orbit.points.size(); ++i)
        report.points.push_back(orbit.points[(shift + i) % orbit.points.size()]);
    return report;
}

CircleOrderReport circle_exit_cyclic_order(const QuadraticMap& map, std::span<const RayTrace> rays, cplx center,
                                           double r, const RayConfig& cfg)
{
    cfg.validate();
    if (!(r > 0.0))
        throw DomainError("circle_exit_cyclic_order: radius must be positive");
    CircleOrderReport report;
    for (const auto& ray : rays) {
        const auto& s = ray.samples;
        auto outside = [&](cplx z) { return std::abs(z - center) - r; };
        if (s.empty() || outside(s.back().z) > 0.0)
            throw DomainError("circle_exit_cyclic_order: ray " + ray.angle.to_string() +
                              " does not enter B(center, r) within its samples; trace deeper");
        std::vector<std::size_t> crossings;
        for (std::size_t i = 0; i + 1 < s.size(); ++i)
            if ((outside(s[i].z) > 0.0) != (outside(s[i + 1].z) > 0.0))
                crossings.push_back(i);
        if (crossings.empty())
            throw DomainError("circle_exit_cyclic_order: ray " + ray.angle.to_string() +
                              " never crosses the circle; start the trace farther out");
        const std::size_t i = crossings.back();

        // Bisection in potential between the bracketing samples.
        double g_hi = s[i].potential;
        double g_lo = s[i + 1].potential;
        cplx z_hi = s[i].z;
        cplx z = s[i + 1].z;
        for (int it = 0; it < 200; ++it) {
            const double g_mid = std::sqrt(g_hi * g_lo);
            const cplx z_mid = ray_point_near(map, ray.angle, g_mid, z_hi, cfg);
            const double f_mid = outside(z_mid);
            z = z_mid;
            if (f_mid > 0.0) {
                g_hi = g_mid;
                z_hi = z_mid;
            } else {
                g_lo = g_mid;
            }
            if (std::abs(f_mid) <= 1e-13 * (1.0 + r) || g_hi - g_lo <= 1e-15 * g_hi)
                break;
        }

        // Several crossings within a factor 2 of the last one cannot be told
        // apart from sampling noise.
        int band = 0;
        for (std::size_t k : crossings)
            if (s[k].potential <= 2.0 * s[i].potential)
                ++band;
        report.exits.push_back({ray.angle, z, std::sqrt(g_hi * g_lo), band == 1});
    }

    const std::size_t m = rays.size();
    report.order_at_circle.resize(m);
    report.order_at_infinity.resize(m);
    std::iota(report.order_at_circle.begin(), report.order_at_circle.end(), 0);
    std::iota(report.order_at_infinity.begin(), report.order_at_infinity.end(), 0);
    auto arg01 = [&](std::size_t k) {
        const double a = std::arg(report.exits[k].exit_point - center);
        return a < 0.0 ? a + kTwoPi : a;
    };
    std::stable_sort(report.order_at_circle.begin(), report.order_at_circle.end(),
                     [&](std::size_t a, std::size_t b) { return arg01(a) < arg01(b); });
    std::stable_sort(report.order_at_infinity.begin(), report.order_at_infinity.end(),
                     [&](std::size_t a, std::size_t b) { return rays[a].angle < rays[b].angle; });

    report.match = m == 0;
    for (std::size_t shift = 0; shift < m && !report.match; ++shift) {
        bool same = true;
        for (std::size_t k = 0; k < m && same; ++k)
            same = report.order_at_circle[(k + shift) % m] == report.order_at_infinity[k];
        report.match = same;
    }
    return report;
}

} // namespace quadray
