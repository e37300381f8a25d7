#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace quadray {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kLog2 = 0.69314718055994530942;

// Raised for failures that belong to the problem instance (escape, incomplete
// enumeration, branch degeneracy, ...). The CLI maps these to exit code 1.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Arithmetic ran out of digits: Newton diverged or a residual cannot be
// pushed below tolerance at the configured precision.
class PrecisionExhausted : public DomainError {
public:
    using DomainError::DomainError;
};

/// f_c(z) = z^2 + c.
class QuadraticMap {
public:
    explicit QuadraticMap(cplx c);

    cplx c() const noexcept { return c_; }

    /// Escape criterion for bounded orbits: once |z| exceeds this the orbit
    /// grows monotonically to infinity.
    double escape_radius() const noexcept;

private:
    cplx c_;
};

struct PrecisionConfig {
    int mantissa_bits = 53;
    double newton_tol = 1e-12;
    double dedup_tol = 1e-9;
    int max_iter = 4096;

    /// Throws DomainError when an invariant is broken.
    void validate() const;
};

inline bool is_finite(cplx z) noexcept
{
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

} // namespace quadray
