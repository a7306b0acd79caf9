// Scalar types, physical constants and small helpers shared by all modules.
#pragma once

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/float128.hpp>

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ccsn {

/// 113-bit significand; used where partial-fraction sums cancel to ~1e-18.
using Quad = boost::multiprecision::float128;

template <class R>
using Cplx = std::complex<R>;

namespace constants {
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double k_B = 1.380649e-23;         // J/K
inline constexpr double c = 299792458.0;            // m/s
inline constexpr double G = 6.67430e-11;            // m^3 kg^-1 s^-2
inline constexpr double two_pi = 2.0 * std::numbers::pi;
}  // namespace constants

/// Invalid physical parameters (negative mass, ω_Q ≤ γ, ...).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

template <class R>
inline R pi_v() {
  return boost::math::constants::pi<R>();
}

template <class R>
inline Cplx<R> imag_unit() {
  return Cplx<R>(R(0), R(1));
}

template <class To, class From>
inline Cplx<To> cplx_cast(const Cplx<From>& z) {
  return Cplx<To>(static_cast<To>(z.real()), static_cast<To>(z.imag()));
}

/// (e^{ixτ} − 1)/x, accurate for small |xτ|.
template <class R>
Cplx<R> expm1_ratio(const Cplx<R>& x, R tau) {
  using std::abs;
  using std::exp;
  const Cplx<R> u = imag_unit<R>() * x * tau;
  if (abs(u) < R(1e-3)) {
    // u(1 + u/2 + u²/6 + ...)/x = iτ(1 + u/2 + ...)
    Cplx<R> term(R(1)), sum(R(1));
    for (int k = 2; k < 40; ++k) {
      term *= u / R(k);
      sum += term;
      if (abs(term) < std::numeric_limits<R>::epsilon() * abs(sum)) break;
    }
    return imag_unit<R>() * tau * sum;
  }
  return (exp(u) - R(1)) / x;
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace ccsn
