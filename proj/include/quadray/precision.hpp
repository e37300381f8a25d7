#pragma once

// Scalar types for the templated numeric engine. binary64 is the default;
// wider mantissas fall back to x87 extended and then to boost software floats.

#include "quadray/types.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <type_traits>

namespace quadray::precision {

namespace mp = boost::multiprecision;

using QuadComplex = mp::cpp_complex_quad;
using Quad = QuadComplex::value_type;
using WideComplex = mp::number<mp::complex_adaptor<mp::cpp_bin_float<256, mp::digit_base_2>>>;
using Wide = WideComplex::value_type;

template <class Real>
struct complex_of;
template <>
struct complex_of<double> {
    using type = std::complex<double>;
};
template <>
struct complex_of<long double> {
    using type = std::complex<long double>;
};
template <>
struct complex_of<Quad> {
    using type = QuadComplex;
};
template <>
struct complex_of<Wide> {
    using type = WideComplex;
};

template <class Real>
using Complex = typename complex_of<Real>::type;

inline constexpr int kMaxMantissaBits = 256;

/// Calls fn(std::type_identity<Real>{}) with the narrowest supported Real
/// carrying at least `mantissa_bits` bits.
template <class Fn>
decltype(auto) dispatch(int mantissa_bits, Fn&& fn)
{
    if (mantissa_bits <= std::numeric_limits<double>::digits)
        return fn(std::type_identity<double>{});
    if (mantissa_bits <= std::numeric_limits<long double>::digits)
        return fn(std::type_identity<long double>{});
    if (mantissa_bits <= std::numeric_limits<Quad>::digits)
        return fn(std::type_identity<Quad>{});
    if (mantissa_bits <= std::numeric_limits<Wide>::digits)
        return fn(std::type_identity<Wide>{});
    throw DomainError("mantissa_bits exceeds the widest supported format (256)");
}

template <class Real>
Complex<Real> from_cplx(cplx z)
{
    return Complex<Real>(Real(z.real()), Real(z.imag()));
}

template <class C>
cplx to_cplx(const C& z)
{
    using std::imag;
    using std::real;
    return {static_cast<double>(real(z)), static_cast<double>(imag(z))};
}

template <class Real>
double to_double(const Real& x)
{
    return static_cast<double>(x);
}

template <class C>
auto modulus(const C& z)
{
    using std::abs;
    return abs(z);
}

template <class C>
auto principal_sqrt(const C& z)
{
    using std::sqrt;
    return sqrt(z);
}

template <class C>
bool finite(const C& z)
{
    using std::imag;
    using std::isfinite;
    using std::real;
    return isfinite(real(z)) && isfinite(imag(z));
}

/// The next wider format, used to confirm decisions binary64 cannot make.
template <class Real>
struct higher {
    using type = Quad;
};
template <>
struct higher<Quad> {
    using type = Wide;
};
template <>
struct higher<Wide> {
    using type = Wide;
};
template <class Real>
using higher_t = typename higher<Real>::type;

template <class To, class C>
Complex<To> convert(const C& z)
{
    using std::imag;
    using std::real;
    return Complex<To>(static_cast<To>(real(z)), static_cast<To>(imag(z)));
}

template <class Real>
Real epsilon()
{
    return std::numeric_limits<Real>::epsilon();
}

} // namespace quadray::precision
