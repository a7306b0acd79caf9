#include "doctest.h"

#include "ccsn/freq_algebra.hpp"
#include "ccsn/quadrature.hpp"

#include <random>

using namespace ccsn;
using C = Cplx<double>;
using RF = RationalFn<double>;
using ER = ExpRational<double>;

namespace {

double rel(C a, C b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<double> random_freqs(int n, unsigned seed, double scale = 3.0) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> w(n);
  for (auto& x : w) x = u(g);
  return w;
}

}  // namespace

TEST_CASE("textbook two-pole decomposition") {
  const C i(0, 1);
  RF f(1.0, {}, {i, -i});
  auto pf = partial_fractions(f);
  REQUIRE(pf.terms.size() == 2);
  CHECK_FALSE(pf.has_polynomial());
  for (const auto& t : pf.terms) {
    CHECK(t.order == 1);
    const C expect = t.pole.imag() > 0 ? 1.0 / (2.0 * i) : -1.0 / (2.0 * i);
    CHECK(std::abs(t.coeff - expect) < 1e-15);
  }
}

TEST_CASE("constant has only a polynomial part") {
  auto pf = partial_fractions(RF(1.0));
  CHECK(pf.terms.empty());
  REQUIRE(pf.polynomial.size() == 1);
  CHECK(std::abs(pf.polynomial[0] - 1.0) < 1e-15);
}

TEST_CASE("oscillator susceptibility poles and coefficients") {
  const double wq = 1.0, g = 0.1;
  const double wr = std::sqrt(wq * wq - g * g);
  // χ = −1/(ω² + 2iγω − ω_Q²) with poles ±ω_r − iγ
  RF chi(-1.0, {}, {C(wr, -g), C(-wr, -g)});
  auto pf = partial_fractions(chi);
  REQUIRE(pf.terms.size() == 2);
  // coefficients from long division of the numerator by the other factor
  for (const auto& t : pf.terms) {
    const C other = t.pole.real() > 0 ? C(-wr, -g) : C(wr, -g);
    CHECK(rel(t.coeff, -1.0 / (t.pole - other)) < 1e-14);
  }
  for (double w : random_freqs(100, 1)) {
    const C direct = 1.0 / (wq * wq - C(0, 2 * g * w) - w * w);
    CHECK(rel(pf(C(w)), direct) < 1e-12);
  }
}

TEST_CASE("reconstruction with multiple poles and polynomial part") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<C> zs, ps;
    const int nz = trial % 5, np = 3 + trial % 3;
    for (int k = 0; k < nz; ++k) zs.emplace_back(n(gen), n(gen));
    for (int k = 0; k < np; ++k) {
      double im = n(gen);
      if (std::abs(im) < 0.1) im = 0.3;
      ps.emplace_back(n(gen), im);
    }
    ps.push_back(ps[0]);  // a double pole
    RF f(C(n(gen), n(gen)), zs, ps);
    auto pf = partial_fractions(f);
    for (double w : random_freqs(1000, 100 + trial)) CHECK(rel(pf(C(w)), f(w)) < 1e-10);
  }
}

TEST_CASE("coincident poles rejected when multiple poles disallowed") {
  PartialFractionOptions opt;
  opt.allow_multiple = false;
  RF f(1.0, {}, {C(1, -1), C(1, -1) * (1 + 1e-12)});
  CHECK_THROWS_AS(partial_fractions(f, opt), DegenerateDenominator);
  CHECK_THROWS_AS(partial_fractions(RF(1.0, {}, {C(1, 0)})), DegenerateDenominator);
}

TEST_CASE("cancelled zero removes the pole") {
  RF f(2.0, {C(1, -1)}, {C(1, -1), C(0, 1)});
  auto pf = partial_fractions(f);
  REQUIRE(pf.terms.size() == 1);
  CHECK(std::abs(pf.terms[0].pole - C(0, 1)) < 1e-15);
}

TEST_CASE("causal part elementary rules") {
  const C up(0.4, 0.7), dn(0.4, -0.7);
  CHECK(causal_part(ER(RF(1.0, {}, {up})), 0.3).empty());
  auto id = causal_part(ER(RF(1.0, {}, {dn})), 0.0);
  for (double w : random_freqs(50, 3)) CHECK(rel(id(w), 1.0 / (w - dn)) < 1e-14);
  const double tau = 0.6;
  auto sh = causal_part(ER(RF(1.0, {}, {dn})), tau);
  for (double w : random_freqs(50, 4)) {
    const C expect = std::exp(C(0, 1) * (w - dn) * tau) / (w - dn);
    CHECK(rel(sh(w), expect) < 1e-13);
  }
}

TEST_CASE("delayed term beyond threshold is unchanged") {
  const C dn(1.0, -0.5);
  ER f(0.3, RF(1.0, {}, {dn}));
  auto g = causal_part(f, 0.1);
  for (double w : random_freqs(50, 5)) CHECK(rel(g(w), f(w)) < 1e-14);

  // inverse transform f(t) = ∫dω/2π e^{−iωt} F(ω) of both sides, by residues
  auto at = [](const ER& h, double t) {
    ER g = h * ER(-t, RF(1.0));
    // 1/ω terms are integrable in the principal-value sense here; use the tail-free pieces
    C v = 0;
    for (const auto& term : canonical(g).terms) {
      if (term.delay == 0.0) continue;
      v += integrate_real_line(ER(term.delay, term.rational)).value;
    }
    return v;
  };
  for (double t : {0.05, 0.2, 0.35, 0.8}) {
    const C lhs = at(f, t), rhs = at(g, t);
    CHECK(std::abs(lhs - rhs) < 1e-13);
    const C expect = t > 0.3 ? -C(0, 1) * std::exp(-C(0, 1) * dn * (t - 0.3)) : C(0);
    CHECK(std::abs(lhs - expect) < 1e-13);
  }
}

TEST_CASE("nested thresholds compose to the maximum") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 10; ++trial) {
    ER f;
    for (int k = 0; k < 3; ++k) {
      double im = n(gen);
      if (std::abs(im) < 0.2) im = -0.4;
      std::vector<C> ps{C(n(gen), im), C(n(gen), -std::abs(im))};
      if (k == 2) ps.push_back(ps[1]);
      f.add(k == 1 ? 0.25 : 0.0, RF(C(n(gen), n(gen)), {}, ps));
    }
    const double t1 = 0.1 + 0.2 * trial / 10.0, t2 = 0.35 - 0.3 * trial / 10.0;
    auto a = causal_part(causal_part(f, t1), t2);
    auto b = causal_part(f, std::max(t1, t2));
    for (double w : random_freqs(200, 50 + trial)) CHECK(rel(a(w), b(w)) < 1e-10);
  }
}

TEST_CASE("causal plus anticausal remainder reconstructs") {
  ER f(RF(C(1, 2), {C(0.3, 0.1)}, {C(1, -0.2), C(-1, -0.2), C(0.5, 0.8)}));
  auto c = causal_part(f, 0.0);
  auto a = anticausal_part(f, 0.0);
  for (double w : random_freqs(200, 9)) CHECK(rel(c(w) + a(w), f(w)) < 1e-12);
  // the causal piece keeps only lower-half-plane poles
  for (const auto& t : c.terms)
    for (const auto& p : t.rational.poles) CHECK(p.imag() < 0);
}

TEST_CASE("causal part preserves real-signal symmetry") {
  const double wr = 1.3, g = 0.2;
  ER chi(RF(-1.0, {}, {C(wr, -g), C(-wr, -g)}));
  auto c = causal_part(chi, 0.7);
  for (double w : random_freqs(100, 13)) CHECK(rel(c(-w), std::conj(c(w))) < 1e-12);
}

TEST_CASE("residue integral of a quartic denominator") {
  const C i(0, 1);
  ER f(RF(1.0, {}, {i, -i, 2.0 * i, -2.0 * i}));
  const auto r = integrate_real_line(f);
  CHECK(std::abs(r.value - 1.0 / 12.0) < 1e-15);
  const auto q = integrate_quadrature(f);
  CHECK(rel(q.value, r.value) < 1e-8);
}

TEST_CASE("Lorentzian area") {
  const double w0 = 1.7, g = 0.05;
  const double wr = std::sqrt(w0 * w0 - g * g);
  ER f(RF(2 * g * w0 * w0, {}, {C(wr, g), C(-wr, g), C(wr, -g), C(-wr, -g)}));
  const auto r = integrate_real_line(f);
  // ∫dΩ/2π 1/|D|² = 1/(4γω0²)
  CHECK(rel(r.value, C(0.5)) < 1e-12);
  CHECK(rel(integrate_quadrature(f).value, r.value) < 1e-8);
}

TEST_CASE("zero integrand and slow decay") {
  CHECK(integrate_real_line(ER()).value == C(0));
  CHECK_THROWS_AS(integrate_real_line(ER(RF(1.0, {}, {C(0, -1)}))), SlowDecay);
  CHECK_THROWS_AS(integrate_real_line(ER(RF(1.0))), SlowDecay);
}

TEST_CASE("delayed modulus squared by residues") {
  const C z(1.0, -0.3);
  const double tau = 0.7;
  auto c = causal_part(ER(RF(1.0, {}, {z})), tau);
  auto r = integrate_real_line(c * c.conj());
  CHECK(rel(r.value, C(std::exp(-2 * 0.3 * tau) / (2 * 0.3))) < 1e-13);
  CHECK(rel(integrate_quadrature(c * c.conj()).value, r.value) < 1e-8);
}

TEST_CASE("oscillatory delayed cross term against quadrature") {
  const C z1(1.0, -0.3), z2(-0.6, -0.5);
  ER a(0.4, RF(1.0, {}, {z1, z2}));
  ER b(RF(C(0.5, 1), {}, {z1, C(0.2, 0.9)}));
  auto f = a * b.conj() + b * a.conj();
  auto r = integrate_real_line(f);
  auto q = integrate_quadrature(f);
  CHECK(rel(q.value, r.value) < 1e-7);
}

TEST_CASE("algebra in extended precision") {
  using CQ = Cplx<Quad>;
  RationalFn<Quad> f(Quad(1), {}, {CQ(Quad(1), Quad(-1e-9)), CQ(Quad(-1), Quad(-1e-9))});
  ExpRational<Quad> e(f);
  auto r = integrate_real_line(e * e.conj());
  // poles ±1 − iγ: ω0² = 1 + γ², area 1/(4γω0²)
  const double expect = 1.0 / (4.0 * 1e-9);
  CHECK(std::abs(static_cast<double>(r.value.real()) - expect) / expect < 1e-12);
}
