#pragma once

#include "quadray/core_dynamics.hpp"
#include "quadray/types.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace quadray {

enum class Stability { repelling, attracting, parabolic_candidate, indifferent_candidate };

std::string to_string(Stability s);

inline constexpr double kDefaultTolClass = 1e-6;

/// A root of f^n(z) - z. residual is the size of the final Newton correction.
struct PeriodicPoint {
    cplx z;
    int period_tested = 0;
    int minimal_period = 0; // filled in by group_into_orbits; 0 until then
    double residual = 0.0;
    int multiplicity = 1;
};

struct PeriodicOrbit {
    std::vector<cplx> points; // z_{i+1} = f(z_i)
    int minimal_period = 0;
    cplx multiplier{};
    Stability stability = Stability::repelling;
    int multiplicity = 1;          // root multiplicity of each point in Fix(f^n)
    double multiplier_spread = 0.0; // max_i |lambda(z_i) - lambda(z_0)|
};

/// Fewer than 2^n roots (with multiplicity) were found.
class IncompleteEnumeration : public DomainError {
public:
    IncompleteEnumeration(std::string what, std::vector<PeriodicPoint> found, long long expected);

    const std::vector<PeriodicPoint>& found() const noexcept { return found_; }
    long long expected() const noexcept { return expected_; }

private:
    std::vector<PeriodicPoint> found_;
    long long expected_;
};

/// Largest n accepted by fixed_points_of_iterate for the given precision.
int enumeration_cap(const PrecisionConfig& cfg);

/// All roots of f^n(z) = z, sorted by (re, im), multiplicities summing to 2^n.
std::vector<PeriodicPoint> fixed_points_of_iterate(const QuadraticMap& map, int n, const PrecisionConfig& cfg);

/// Partitions Fix(f^n) into cycles of f. Throws DomainError when the image of
/// a point cannot be matched to a unique root.
std::vector<PeriodicOrbit> group_into_orbits(std::span<const PeriodicPoint> points, const QuadraticMap& map,
                                             int n, const PrecisionConfig& cfg,
                                             double tol_class = kDefaultTolClass);

Stability classify_orbit(const PeriodicOrbit& orbit, double tol_class = kDefaultTolClass);

struct FixedPointPair {
    cplx alpha;
    cplx beta; // larger real part
    bool degenerate = false; // c = 1/4
};

FixedPointPair alpha_beta_fixed_points(const QuadraticMap& map);

/// Lazily computed Fix(f^n) levels and orbit lists for one parameter.
/// Thread-safe; results are shared between callers.
class OrbitCatalog {
public:
    OrbitCatalog(QuadraticMap map, PrecisionConfig cfg, double tol_class = kDefaultTolClass);

    const QuadraticMap& map() const noexcept { return map_; }
    const PrecisionConfig& precision() const noexcept { return cfg_; }

    const std::vector<PeriodicPoint>& points(int n);
    /// Every cycle in Fix(f^n), whatever its minimal period.
    const std::vector<PeriodicOrbit>& orbits(int n);
    /// Cycles of minimal period exactly n.
    std::vector<PeriodicOrbit> orbits_of_minimal_period(int n);

private:
    QuadraticMap map_;
    PrecisionConfig cfg_;
    double tol_class_;
    std::mutex mutex_;
    std::map<int, std::shared_ptr<const std::vector<PeriodicPoint>>> points_;
    std::map<int, std::shared_ptr<const std::vector<PeriodicOrbit>>> orbits_;
};

} // namespace quadray
