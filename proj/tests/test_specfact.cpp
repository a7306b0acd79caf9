#include "doctest.h"

#include "ccsn/specfact.hpp"

#include <random>

using namespace ccsn;
using C = Cplx<double>;

namespace {

// right side of the quartic identity: |D|² + Λ⁴s² + Λ²sc(D + D*)
double quartic_rhs(double wq, double g, double L, double z, double w) {
  const C wt = damped_frequency(wq, g);
  const C a = (w - wt) * (w + std::conj(wt)), b = (w - std::conj(wt)) * (w + wt);
  const double s = std::sin(z), c = std::cos(z);
  return (a * b + L * L * L * L * s * s - L * L * s * c * (a + b)).real();
}

}  // namespace

TEST_CASE("no measurement leaves the output white") {
  auto f = factor_single_mass(1.0, 1e-3, 0.0, 1.2);
  CHECK(std::abs(f.beta - f.omega_q_tilde) < 1e-14);
  for (double w : {0.1, 0.9, 1.0, 3.0}) CHECK(std::abs(f.phi_plus(w) * f.phi_minus(w) - 1.0) < 1e-12);
}

TEST_CASE("quartic identity on random parameters") {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 50; ++t) {
    const double wq = 0.2 + 3 * u(g), gam = wq * std::pow(10.0, -1 - 8 * u(g)), L = 5 * u(g), z = 0.05 + 3.0 * u(g);
    auto f = factor_single_mass(wq, gam, L, z);
    CHECK(f.beta.real() > 0);
    CHECK(f.beta.imag() < 0);
    for (int k = 0; k < 100; ++k) {
      const double w = 6 * (u(g) - 0.5);
      const C b = f.beta;
      const double lhs = ((w - b) * (w + std::conj(b)) * (w - std::conj(b)) * (w + b)).real();
      const double rhs = quartic_rhs(wq, gam, L, z, w);
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs));
      const double S = single_mass_output_spectrum(wq, gam, L, z, w);
      CHECK(std::abs((f.phi_plus(w) * f.phi_minus(w)).real() - S) <= 1e-10 * S);
      // whitened output has unit spectrum
      CHECK(std::abs(S / std::norm(f.phi_plus(w)) - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("phi_plus singularities lie in the lower half plane") {
  auto f = factor_single_mass(1.3, 0.01, 2.0, 1.0);
  for (const auto& z : f.phi_plus.zeros) CHECK(z.imag() < 0);
  for (const auto& p : f.phi_plus.poles) CHECK(p.imag() < 0);
  for (const auto& z : f.phi_minus.zeros) CHECK(z.imag() > 0);
  for (double w : {-2.0, 0.3, 1.1}) CHECK(std::abs(f.phi_minus(w) - std::conj(f.phi_plus(w))) < 1e-14);
}

TEST_CASE("weak damping phase quadrature limit") {
  const double wq = 1.0, g = 1e-9, L = 0.8;
  auto f = factor_single_mass(wq, g, L, std::numbers::pi / 2);
  const C b2 = f.beta * f.beta;
  CHECK(std::abs(b2 - C(wq * wq, -std::sqrt(L * L * L * L + 4 * g * g))) < 1e-12);
  for (double w : {0.2, 0.999, 1.0, 1.7}) {
    const double S = single_mass_output_spectrum(wq, g, L, std::numbers::pi / 2, w);
    CHECK(std::abs((f.phi_plus(w) * f.phi_minus(w)).real() / S - 1) < 1e-8);
  }
}

TEST_CASE("mHz frequencies with a kHz coupling") {
  const double wm = 2 * std::numbers::pi * 0.01, wsn = 2 * std::numbers::pi * 0.057;
  const double wq = std::hypot(wm, wsn) / wm, g = 1.0 / (2e7), L = wsn / wm;
  auto f = factor_single_mass(wq, g, L, std::numbers::pi / 2);
  double worst = 0;
  for (int k = 0; k < 10000; ++k) {
    const double w = 1e-2 * std::pow(1e4, k / 9999.0);
    const double S = single_mass_output_spectrum(wq, g, L, std::numbers::pi / 2, w);
    worst = std::max(worst, std::abs((f.phi_plus(w) * f.phi_minus(w)).real() / S - 1));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("numeric factorization round trip") {
  auto f = factor_single_mass(1.2, 0.03, 1.5, 1.1);
  const RationalFn<double> S = f.phi_plus * f.phi_minus;
  auto n = factor_numeric(S);
  CHECK(std::abs(n.beta - f.beta) < 1e-8);
  CHECK(std::abs(n.omega_q_tilde - f.omega_q_tilde) < 1e-8);

  // coefficient input goes through the companion-matrix roots
  const auto num = poly_from_roots(S.zeros), den = poly_from_roots(S.poles);
  auto c = factor_numeric(num, den);
  CHECK(std::abs(c.beta - f.beta) < 1e-8);
  for (double w : {0.1, 1.19, 2.5}) CHECK(std::abs((c.phi_plus(w) * c.phi_minus(w)).real() / S(w).real() - 1) < 1e-9);
}

TEST_CASE("numeric factorization of unity and invalid inputs") {
  auto one = factor_numeric(RationalFn<double>(1.0));
  CHECK(std::abs(one.phi_plus(0.7) - 1.0) < 1e-15);
  CHECK_THROWS_AS(factor_numeric(RationalFn<double>(-1.0)), NegativeSpectrum);
  // ω² − 1 changes sign on the real axis
  CHECK_THROWS(factor_numeric(RationalFn<double>(1.0, {C(1, 0), C(-1, 0)}, {C(0, 1), C(0, -1), C(1, 1), C(1, -1)})));
  // unpaired zero
  CHECK_THROWS_AS(factor_numeric(RationalFn<double>(1.0, {C(0, 1)}, {C(0, 1), C(0, -1)})), NegativeSpectrum);
}

TEST_CASE("biquadratic root helper") {
  const C b(1.3, -0.2);
  const double A = (b * b).real(), d = std::pow((b * b).imag(), 2);
  CHECK(std::abs(biquadratic_lower_root(A, d) - b) < 1e-14);
  CHECK_THROWS_AS(biquadratic_lower_root(1.0, 0.0), RootSignAmbiguity);
}

TEST_CASE("extended precision factorization") {
  auto f = factor_single_mass<Quad>(Quad(1), Quad(1e-10), Quad(2), Quad(1.5707963267948966));
  CHECK(f.beta.imag() < 0);
  const Quad w(0.999);
  const Quad S = single_mass_output_spectrum<Quad>(Quad(1), Quad(1e-10), Quad(2), Quad(1.5707963267948966), w);
  CHECK(static_cast<double>(abs((f.phi_plus(w) * f.phi_minus(w)).real() / S - 1)) < 1e-25);
}
