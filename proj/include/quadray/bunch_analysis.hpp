#pragma once

// Orbit-separation diagnostics: the sup metric along orbits, bunches of
// periodic orbits, counts of orbits trapped near a cycle or in a pattern of
// discs, and distortion of iterates on small discs.

#include "quadray/periodic_orbits.hpp"
#include "quadray/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace quadray {

/// max_{i<n} |f^i(x) - f^i(y)|. Throws DomainError when either orbit leaves
/// the escape disc within n steps.
double orbit_metric(const QuadraticMap& map, cplx x, cplx y, int n);

/// Orbit-to-orbit distance: min over cyclic shifts s of max_i |a_i - b_{i+s}|.
/// Both orbits must have the same length.
double orbit_distance(const PeriodicOrbit& a, const PeriodicOrbit& b);

enum class BunchMode {
    H,  // threshold exp(-delta n)
    BMS // threshold r
};

std::string to_string(BunchMode m);

struct BunchReport {
    int n = 0;
    BunchMode mode = BunchMode::H;
    double param = 0.0;     // delta (H) or r (BMS)
    double threshold = 0.0;
    std::vector<std::vector<std::size_t>> clusters; // indices into the clustered orbit list
    std::size_t max_cluster = 0;     // certified lower bound on the largest bunch
    std::size_t component_bound = 0; // largest connected component: upper bound
    double bound = 0.0;              // exp(delta n) in H mode, 2n in BMS mode
    std::size_t hard_bound = 0;      // 2n
    bool pass = true;                // max_cluster <= min(bound, hard_bound)
    std::size_t orbit_count = 0;
};

/// Complete-linkage clusters cut at the threshold; every emitted cluster is
/// re-checked pairwise. All orbits must share one length.
BunchReport bunch_clusters(std::span<const PeriodicOrbit> orbits, BunchMode mode, double param);

/// Clusters the non-attracting cycles of minimal period n.
BunchReport verify_hypothesis_h(OrbitCatalog& catalog, int n, double delta);
BunchReport verify_hypothesis_h(const QuadraticMap& map, int n, double delta, const PrecisionConfig& cfg);

/// A pattern of discs B_0..B_{p-1} visited cyclically. The constructor checks
/// that the C-fold enlargements are pairwise disjoint and that
/// diam B_i <= r0 exp(-delta n p) dist(C B_i, 0).
class DiscPattern {
public:
    DiscPattern(std::vector<cplx> centers, std::vector<double> radii, int n, double C, double r0, double delta);

    /// Largest admissible radii around the points of a cycle.
    static DiscPattern around_orbit(std::span<const cplx> orbit, int n, double C, double r0, double delta);

    const std::vector<cplx>& centers() const noexcept { return centers_; }
    const std::vector<double>& radii() const noexcept { return radii_; }
    int p() const noexcept { return static_cast<int>(centers_.size()); }
    int n() const noexcept { return n_; }
    double C() const noexcept { return C_; }
    double r0() const noexcept { return r0_; }
    double delta() const noexcept { return delta_; }

private:
    std::vector<cplx> centers_;
    std::vector<double> radii_;
    int n_;
    double C_;
    double r0_;
    double delta_;
};

/// automatic: exact enumeration of Fix(f^{np}) when np <= kCatalogSearchCap,
/// local search in the discs beyond. local: contracting inverse branches
/// along itineraries, or the argument principle plus deflated Newton where
/// no contraction is certified.
enum class TrappedSearchMethod { automatic, catalog, local };

std::string to_string(TrappedSearchMethod m);

inline constexpr int kCatalogSearchCap = 16;

struct TrappedOrbitReport {
    TrappedSearchMethod method = TrappedSearchMethod::automatic; // the method actually used
    int period = 0;      // n p: the minimal period counted
    double radius = 0.0; // r0 exp(-delta n p) before per-point scaling
    std::vector<double> radii;
    std::size_t count = 0;
    std::size_t bound = 0; // p
    bool pass = true;
    std::vector<cplx> witnesses; // one point per counted orbit (or each counted point)
};

/// Orbits of minimal period n p, other than the cycle of z0, lying entirely in
/// the union of the discs B(f^i(z0), r_i), r_i = r0 exp(-delta n p) scaled by
/// |(f^i)'(z0)| when the cycle of z0 is indifferent. Throws DomainError when z0
/// is not periodic of minimal period p.
TrappedOrbitReport count_orbits_near_point(OrbitCatalog& catalog, cplx z0, int p, int n, double delta, double r0,
                                           TrappedSearchMethod method = TrappedSearchMethod::automatic);
TrappedOrbitReport count_orbits_near_point(const QuadraticMap& map, cplx z0, int p, int n, double delta, double r0,
                                           const PrecisionConfig& cfg = {},
                                           TrappedSearchMethod method = TrappedSearchMethod::automatic);

/// Points x in B_0 of minimal period n p with f^{kp+i}(x) in B_i for all k, i.
TrappedOrbitReport count_orbits_in_disc_pattern(OrbitCatalog& catalog, const DiscPattern& pattern,
                                                TrappedSearchMethod method = TrappedSearchMethod::automatic);
TrappedOrbitReport count_orbits_in_disc_pattern(const QuadraticMap& map, const DiscPattern& pattern,
                                                const PrecisionConfig& cfg = {},
                                                TrappedSearchMethod method = TrappedSearchMethod::automatic);

struct DistortionReport {
    cplx center;
    double r = 0.0;
    int n = 0;
    int p = 1;
    std::size_t samples = 0;
    double sup_ratio_minus_one = 0.0; // sup over pairs and i <= n of |(g^i)'(x)/(g^i)'(y) - 1|
    double per_step_log_derivative_bound = 0.0; // sup over the disc of |log|g'(x)||
    double center_multiplier_modulus = 0.0;     // |g'(center)|
    bool indifferent_regime = false;             // | |g'(center)| - 1 | <= 1e-3
};

inline constexpr std::size_t kDefaultDistortionSamples = 2048;

/// g = f^p. Pairs are drawn from a Halton sequence in B(center, r). Throws
/// DomainError if center is not fixed by g or a sample escapes.
DistortionReport distortion_ratio(const QuadraticMap& map, cplx center, double r, int n,
                                  std::size_t samples = kDefaultDistortionSamples, int p = 1);

struct GoodBadPartition {
    std::vector<std::size_t> good;
    std::vector<std::size_t> bad;
    std::size_t a_bound = 0; // observed |bad|
    double threshold = 0.0;  // exp(-n delta / 2)
};

/// Splits orbit indices by distance to the critical point 0.
GoodBadPartition good_bad_partition(const PeriodicOrbit& orbit, double delta);

} // namespace quadray
