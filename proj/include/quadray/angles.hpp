#pragma once

// Exact rational angles on the circle R/Z (unit: one full turn), the doubling
// map, formal orbit portraits and continued-fraction sums.

#include "quadray/precision.hpp"
#include "quadray/types.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quadray {

using BigInt = boost::multiprecision::cpp_int;

/// Reduced fraction num/den with 0 <= num < den.
class Angle {
public:
    Angle() = default;
    Angle(BigInt numerator, BigInt denominator);
    Angle(long long numerator, long long denominator) : Angle(BigInt(numerator), BigInt(denominator)) {}

    /// Parses "num/den" (or a bare integer, meaning 0 mod 1).
    static Angle parse(std::string_view text);

    const BigInt& numerator() const noexcept { return num_; }
    const BigInt& denominator() const noexcept { return den_; }

    std::string to_string() const;
    double turns() const;

    friend bool operator==(const Angle&, const Angle&) = default;
    friend std::strong_ordering operator<=>(const Angle& a, const Angle& b);

private:
    BigInt num_{0};
    BigInt den_{1};
};

/// 2a mod 1.
Angle doubled(const Angle& a);
/// 2^k a mod 1.
Angle doubled(const Angle& a, std::uint64_t k);

/// Largest period angle_period() will search before giving up.
inline constexpr std::uint64_t kAnglePeriodCap = std::uint64_t{1} << 24;

/// Multiplicative order of 2 modulo the denominator; nullopt when the
/// denominator is even (strictly preperiodic angle).
std::optional<std::uint64_t> angle_period(const Angle& a);

struct AngleOrbitType {
    std::uint64_t preperiod = 0;
    std::uint64_t period = 1;
};

/// Preperiod (power of 2 in the denominator) and eventual period.
AngleOrbitType angle_orbit_type(const Angle& a);

/// k/(2^n - 1), k = 0..2^n-2, reduced.
std::vector<Angle> periodic_angles(int n, int cap = 24);

/// Angles of exact period n under doubling.
std::vector<Angle> angles_of_exact_period(int n, int cap = 24);

/// images[i] is the image of domain[i]. True when the images, read in the
/// cyclic order of the domain, are again in cyclic order.
bool cyclic_order_preserved(std::span<const Angle> domain, std::span<const Angle> images);

/// True when b lies in a single complementary arc of a. Throws DomainError
/// if the sets intersect.
bool unlinked(std::span<const Angle> a, std::span<const Angle> b);

struct OrbitPortrait {
    std::vector<std::vector<Angle>> sets; // A_1..A_p
    std::optional<std::uint64_t> ray_period;

    std::size_t orbit_period() const noexcept { return sets.size(); }
};

struct PortraitValidation {
    bool finite_nonempty = false;     // (1)
    bool doubling_preserves_order = false; // (2)
    bool common_period = false;       // (3)
    bool pairwise_unlinked = false;   // (4)
    std::optional<std::uint64_t> ray_period;
    std::vector<std::string> violations;

    bool valid() const noexcept
    {
        return finite_nonempty && doubling_preserves_order && common_period && pairwise_unlinked;
    }
};

PortraitValidation validate_formal_portrait(const OrbitPortrait& portrait);

enum class PortraitKind { primitive, satellite, invalid };

std::string to_string(PortraitKind kind);

struct PortraitClassification {
    std::size_t valence = 0;        // nu = |A_i|
    std::uint64_t rays_per_cycle = 0; // r = ray period / p
    std::uint64_t ray_period = 0;   // r p
    std::size_t ray_cycles = 0;     // nu / r
    PortraitKind kind = PortraitKind::invalid;
};

/// Primitive/satellite dichotomy. Requires a portrait that validates;
/// throws DomainError otherwise.
PortraitClassification classify_portrait(const OrbitPortrait& portrait);

/// Rotates the portrait so A_1 carries the shortest complementary arc and
/// orders each A_{i+1} as the image sequence of A_i (A_1 ascending).
OrbitPortrait normalize_portrait(const OrbitPortrait& portrait);

/// {"p": int, "sets": [["num/den", ...], ...]}
nlohmann::json portrait_to_json(const OrbitPortrait& portrait);
OrbitPortrait portrait_from_json(const nlohmann::json& doc);

struct ContinuedFractionReport {
    double alpha = 0.0;
    std::vector<BigInt> partial_quotients; // a_1..a_{N+1}
    std::vector<BigInt> denominators;      // q_1..q_{N+1}
    std::vector<double> bryuno_terms;      // log q_{n+1} / q_n, n = 1..N
    std::vector<double> perez_marco_terms; // log log q_{n+1} / q_n
    double bryuno_partial = 0.0;
    double perez_marco_partial = 0.0;
};

/// Continued fraction of alpha in (0,1) (integer part discarded), N >= 2.
/// Throws DomainError when alpha turns out rational, or PrecisionExhausted
/// once q_{N+1}^2 outgrows the working precision.
ContinuedFractionReport bryuno_sums(const precision::Quad& alpha, int N);
ContinuedFractionReport bryuno_sums(double alpha, int N);

/// Sums for alpha = [0; a_1, a_2, ...] given the partial quotients directly;
/// uses a_1..a_{N+1}.
ContinuedFractionReport bryuno_sums_from_quotients(std::span<const BigInt> quotients, int N);

/// Natural log of a positive big integer.
double log_big(const BigInt& x);

} // namespace quadray
