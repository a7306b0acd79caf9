// Causal spectral factorization S = φ₊φ₋ of output spectra.
//
// φ₊ carries the lower-half-plane poles and zeros, so both φ₊ and 1/φ₊ are
// causal in the e^{iωt} convention; φ₋(ω) = conj φ₊(ω) on the real axis.
#pragma once

#include "ccsn/freq_algebra.hpp"

#include <Eigen/Core>
#include <unsupported/Eigen/Polynomials>

namespace ccsn {

struct RootSignAmbiguity : AlgebraError {
  using AlgebraError::AlgebraError;
};
struct NegativeSpectrum : AlgebraError {
  using AlgebraError::AlgebraError;
};

template <class R>
struct SpectralFactorization {
  RationalFn<R> phi_plus;
  RationalFn<R> phi_minus;
  Cplx<R> beta;           ///< lower-half-plane zero of φ₊ with Re β > 0
  Cplx<R> omega_q_tilde;  ///< lower-half-plane pole of φ₊ with Re > 0
};

/// √(ω0² − γ²) − iγ
template <class R>
Cplx<R> damped_frequency(R omega0, R gamma) {
  using std::sqrt;
  if (!(omega0 > gamma)) throw ParameterError("damped_frequency: need omega0 > gamma");
  return Cplx<R>(sqrt(omega0 * omega0 - gamma * gamma), -gamma);
}

/// b with Re b ≥ 0, Im b < 0 such that ω⁴ − 2Aω² + A² + d = |(ω − b)(ω + b*)|², d > 0.
template <class R>
Cplx<R> biquadratic_lower_root(R A, R d) {
  using std::sqrt;
  if (!(d > R(0))) throw RootSignAmbiguity("biquadratic roots on an axis");
  Cplx<R> b = sqrt(Cplx<R>(A, -sqrt(d)));
  if (b.real() < R(0)) b = -b;
  if (!(b.imag() < R(0))) throw RootSignAmbiguity("no lower-half-plane root");
  return b;
}

/// Spectrum of the quantum part of the homodyne output of a monitored oscillator,
/// |cos ζ + Λ² sin ζ/D_Q|² + sin²ζ with D_Q = ω_Q² − 2iγω − ω².
template <class R>
R single_mass_output_spectrum(R omega_q, R gamma, R lambda, R zeta, R w) {
  using std::cos;
  using std::norm;
  using std::sin;
  const Cplx<R> dq(omega_q * omega_q - w * w, -R(2) * gamma * w);
  const R s = sin(zeta), c = cos(zeta);
  return norm(c + lambda * lambda * s / dq) + s * s;
}

template <class R>
SpectralFactorization<R> factor_single_mass(R omega_q, R gamma, R lambda, R zeta) {
  using std::conj;
  using std::cos;
  using std::sin;
  using std::sqrt;
  if (!(gamma > R(0))) throw ParameterError("factor_single_mass: need gamma > 0");
  if (!(lambda >= R(0))) throw ParameterError("factor_single_mass: need Lambda >= 0");
  const Cplx<R> wt = damped_frequency(omega_q, gamma);
  const R s = sin(zeta), c = cos(zeta);
  const R L2 = lambda * lambda, g2 = gamma * gamma, wq2 = omega_q * omega_q;
  const R disc = R(4) * g2 * (wq2 - g2) + R(2) * g2 * L2 * sin(R(2) * zeta) + L2 * L2 * s * s * s * s;
  if (disc < R(0)) throw RootSignAmbiguity("negative discriminant in beta^2");
  Cplx<R> b = sqrt(Cplx<R>(wq2 - R(2) * g2 + L2 * s * c, -sqrt(disc)));
  if (b.real() < R(0)) b = -b;
  if (!(b.imag() < R(0)) || !(b.real() > R(0)))
    throw RootSignAmbiguity("beta outside the fourth quadrant");
  SpectralFactorization<R> f;
  f.beta = b;
  f.omega_q_tilde = wt;
  f.phi_plus = RationalFn<R>(Cplx<R>(R(1)), {b, -conj(b)}, {wt, -conj(wt)});
  f.phi_minus = f.phi_plus.conj();
  return f;
}

namespace detail {

template <class R>
std::vector<Cplx<R>> polish_roots(const Poly<R>& p, std::vector<Cplx<R>> roots) {
  using std::abs;
  const auto dp = poly_derivative(p);
  for (auto& r : roots) {
    for (int it = 0; it < 8; ++it) {
      const Cplx<R> d = poly_eval(dp, r);
      if (d == Cplx<R>(R(0))) break;
      const Cplx<R> step = poly_eval(p, r) / d;
      r -= step;
      if (abs(step) <= std::numeric_limits<R>::epsilon() * abs(r)) break;
    }
  }
  return roots;
}

/// Companion-matrix roots in double, Newton-polished in R.
template <class R>
std::vector<Cplx<R>> poly_roots(const Poly<R>& p) {
  std::size_t n = p.size();
  while (n > 0 && p[n - 1] == Cplx<R>(R(0))) --n;
  if (n <= 1) return {};
  Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 1> coeffs(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) coeffs[static_cast<Eigen::Index>(i)] = cplx_cast<double>(p[i]);
  Eigen::PolynomialSolver<std::complex<double>, Eigen::Dynamic> solver(coeffs);
  std::vector<Cplx<R>> roots;
  for (Eigen::Index i = 0; i < solver.roots().size(); ++i) roots.push_back(cplx_cast<R>(solver.roots()[i]));
  return polish_roots(Poly<R>(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n)), roots);
}

}  // namespace detail

/// Factorization of a nonnegative rational spectrum given in pole-zero form.
template <class R>
SpectralFactorization<R> factor_numeric(const RationalFn<R>& S, double axis_tol = 1e-9) {
  using std::abs;
  using std::sqrt;
  const R g = S.gain.real();
  if (!(g > R(0)) || abs(S.gain.imag()) > R(1e-12) * abs(S.gain))
    throw NegativeSpectrum("spectrum gain is not positive real");
  SpectralFactorization<R> f;
  f.phi_plus.gain = Cplx<R>(sqrt(g));
  auto split = [&](const std::vector<Cplx<R>>& roots, std::vector<Cplx<R>>& lower, const char* what) {
    int up = 0;
    for (const auto& r : roots) {
      if (abs(r.imag()) <= R(axis_tol) * std::max(abs(r), R(1e-300)))
        throw DegenerateDenominator(std::string(what) + " on the real axis");
      if (r.imag() < R(0))
        lower.push_back(r);
      else
        ++up;
    }
    if (up != static_cast<int>(lower.size())) throw NegativeSpectrum(std::string(what) + " not in conjugate pairs");
  };
  split(S.zeros, f.phi_plus.zeros, "zeros");
  split(S.poles, f.phi_plus.poles, "poles");
  f.phi_minus = f.phi_plus.conj();

  // sample the input; a valid spectrum is real and nonnegative
  R scale(1);
  for (const auto& r : S.zeros) scale = std::max(scale, abs(r));
  for (const auto& r : S.poles) scale = std::max(scale, abs(r));
  for (int k = -200; k <= 200; ++k) {
    const R w = scale * R(k) / R(50);
    const Cplx<R> v = S(w);
    if (v.real() < -R(1e-9) * abs(v) || abs(v.imag()) > R(1e-6) * abs(v))
      throw NegativeSpectrum("spectrum negative or complex on the real axis");
  }

  auto pick = [](const std::vector<Cplx<R>>& v) {
    Cplx<R> best(R(0));
    for (const auto& r : v)
      if (r.real() > best.real()) best = r;
    return best;
  };
  f.beta = pick(f.phi_plus.zeros);
  f.omega_q_tilde = pick(f.phi_plus.poles);
  return f;
}

/// Factorization of num(ω)/den(ω) given by ascending coefficients.
template <class R>
SpectralFactorization<R> factor_numeric(const Poly<R>& num, const Poly<R>& den, double axis_tol = 1e-9) {
  auto lead = [](const Poly<R>& p) {
    std::size_t n = p.size();
    while (n > 0 && p[n - 1] == Cplx<R>(R(0))) --n;
    if (n == 0) throw NegativeSpectrum("zero polynomial");
    return p[n - 1];
  };
  RationalFn<R> S(lead(num) / lead(den), detail::poly_roots(num), detail::poly_roots(den));
  return factor_numeric(S, axis_tol);
}

}  // namespace ccsn
