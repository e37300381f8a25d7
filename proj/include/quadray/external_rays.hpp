#pragma once

// External rays traced through the Boettcher coordinate. All ray arithmetic
// runs in binary64; angles stay exact.

#include "quadray/angles.hpp"
#include "quadray/periodic_orbits.hpp"
#include "quadray/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace quadray {

struct RayConfig {
    double g0 = 16.0 * kLog2;  // potential where psi(W) = W - c/(2W) is used directly
    int substeps = 8;          // samples per halving of the potential
    int trace_halvings = 30;   // trace_ray stops at g0 * 2^-trace_halvings
    double step_tol = 1e-12;   // relative Newton tolerance per sample
    int newton_iter = 64;
    double landing_tol = 1e-8;
    int stall_halvings = 200;
    double match_tol = 1e-6;
    int max_candidate_period = 16; // rp <= min(4n, this) in portrait_at_orbit

    void validate() const;
};

enum class RayStatus { ok, stalled, precision_exhausted };

std::string to_string(RayStatus s);

struct RaySample {
    double potential;
    cplx z;
};

struct RayTrace {
    Angle angle;
    std::vector<RaySample> samples; // potential strictly decreasing
    RayStatus status = RayStatus::ok;
};

/// Point of potential G on the ray of angle theta.
cplx ray_point(const QuadraticMap& map, const Angle& theta, double G, const RayConfig& cfg = {});

/// Samples from g0 down to g0 * 2^-trace_halvings, `substeps` per halving.
/// A Newton failure ends the trace early with status precision_exhausted.
RayTrace trace_ray(const QuadraticMap& map, const Angle& theta, const RayConfig& cfg = {});

struct LandingEstimate {
    cplx z;
    double residual = 0.0; // distance between the last two pullback iterates
    bool converged = false;
    RayStatus status = RayStatus::ok;
};

LandingEstimate estimate_landing(const QuadraticMap& map, const Angle& theta, const RayConfig& cfg = {});

struct PortraitReport {
    OrbitPortrait portrait;        // normalized: A_1 carries the shortest arc
    PortraitValidation validation;
    std::vector<cplx> points;      // points[i] is where the rays of A_{i+1} land
    double max_landing_error = 0.0; // worst |landing - orbit point| among matches
};

/// Collects the rational rays landing on the orbit. Throws DomainError when
/// no candidate lands there.
PortraitReport portrait_at_orbit(const QuadraticMap& map, const PeriodicOrbit& orbit, int n,
                                 const RayConfig& cfg = {});

struct TruncatedRay {
    Angle angle;
    cplx exit_point;
    double exit_potential = 0.0;
    bool exit_is_last = true; // false when the trace crosses the circle more than once
};

struct CircleOrderReport {
    std::vector<std::size_t> order_at_circle;   // ray indices by argument of the exit point
    std::vector<std::size_t> order_at_infinity; // ray indices by external angle
    bool match = false;
    std::vector<TruncatedRay> exits;
};

/// Compares the cyclic order of the last exits from B(center, r) with the
/// order of the angles. Throws DomainError if a ray never crosses the circle
/// within its samples.
CircleOrderReport circle_exit_cyclic_order(const QuadraticMap& map, std::span<const RayTrace> rays, cplx center,
                                           double r, const RayConfig& cfg = {});

} // namespace quadray
