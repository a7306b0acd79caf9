// One continuously monitored mass with causal-conditional self-gravity.
//
// Internally all frequencies are in units of ω_m, spectra of the measured
// quadrature are in shot-noise units.  D(ω) = ω0² − 2iγω − ω² throughout.
#pragma once

#include "ccsn/freq_algebra.hpp"
#include "ccsn/parallel.hpp"
#include "ccsn/specfact.hpp"

#include <optional>
#include <vector>

namespace ccsn {

/// ζ = 0 leaves no position signal in the measured quadrature.
struct DegenerateQuadrature : ParameterError {
  using ParameterError::ParameterError;
};

enum class ThermalModel {
  markov,     ///< white force, S_f = 8Mγ k_B T
  full_coth,  ///< 4ħMωγ coth(ħω/2k_BT)
};

struct OpticalStack {
  double P_cav = 0;       ///< W
  double finesse = 0;
  double wavelength = 0;  ///< m
};

/// Λ = (4F/π) √(2ω₀P/(Mc²))
double lambda_from_optics(double M, const OpticalStack& o);

/// ω_SN = √(G m_atom/(6√π x_int³))
double omega_sn_from_lattice(double m_atom, double x_int);

struct SingleMassParams {
  double M = 1e-6;          ///< kg
  double omega_m = 0;       ///< rad/s
  double omega_sn = 0;      ///< rad/s
  double gamma = 0;         ///< rad/s, Q_m = ω_m/(2γ)
  double T = 0;             ///< K
  double Lambda = 0;        ///< rad/s
  double zeta = 1.5707963267948966;
  double tau = 0;           ///< s
  std::optional<double> n_th_pinned;  ///< replaces k_B T/(ħω_m Q_m) when set
  ThermalModel thermal = ThermalModel::markov;

  double omega_q() const;
  double quality() const { return omega_m / (2 * gamma); }
  /// thermal occupation over Q_m
  double n_th() const;
  void validate() const;  // throws ParameterError
};

/// Normalized model quantities, ω_m = 1.
template <class R>
struct SingleMassModel {
  R wm{1}, wsn, wq, g, L, zeta, s, c, tau;
  R n_th;
  R kT;  ///< k_B T/(ħω_m)
  ThermalModel thermal = ThermalModel::markov;
  Cplx<R> wt;   ///< damped ω_Q
  Cplx<R> wct;  ///< damped ω_m
  Cplx<R> beta, beta_c;
  Cplx<R> r1, r2;  ///< residue weights of the delayed filter

  static SingleMassModel from(const SingleMassParams& p);
  /// Fills wt, wct, beta, beta_c, r1, r2 from wm, wq, g, L, zeta, s, c, tau.
  void finish();

  Cplx<R> DQ(R w) const { return Cplx<R>(wq * wq - w * w, -R(2) * g * w); }
  Cplx<R> Dc(R w) const { return Cplx<R>(wm * wm - w * w, -R(2) * g * w); }
  Cplx<R> P(R w) const { return (w - beta) * (w + std::conj(beta)); }
  Cplx<R> Pc(R w) const { return (w - beta_c) * (w + std::conj(beta_c)); }
  /// thermal force spectrum over ħM ω_m²
  R s_th(R w) const;
  R s_th_markov() const { return R(4) * n_th * wm * wm; }
};

// χ-like building blocks as rational functions of normalized ω.
template <class R>
RationalFn<R> inverse_D(const Cplx<R>& wt, R scale = R(1)) {
  // 1/D = −1/((ω − ω̃)(ω + ω̃*))
  return RationalFn<R>(Cplx<R>(-scale), {}, {wt, -std::conj(wt)});
}

/// αK_τ (α times the delayed Wiener filter) as two delayed terms.
template <class R>
ExpRational<R> wiener_filter(const SingleMassModel<R>& m);

/// αK_τ built as [S_{αx b}/φ₋]_τ/φ₊ through the causal-part algebra.
template <class R>
ExpRational<R> wiener_filter_wiener_hopf(const SingleMassModel<R>& m);

/// Zero-delay filter (1/sin ζ)(1 + D_Q/P).
template <class R>
Cplx<R> wiener_filter_zero_delay(const SingleMassModel<R>& m, R w);

/// E = (αK_τ sin ζ − 1)P/D_Q, equal to 1 at τ = 0.
template <class R>
Cplx<R> sn_factor(const SingleMassModel<R>& m, R w);
template <class R>
ExpRational<R> sn_factor_expr(const SingleMassModel<R>& m);

/// |D_c|²(S^SN − S^QG)/ω_SN², real on the real axis.
template <class R>
R sn_excess(const SingleMassModel<R>& m, R w);
template <class R>
ExpRational<R> sn_excess_expr(const SingleMassModel<R>& m);

enum class Units {
  shot,   ///< measured-quadrature spectrum, shot-noise units
  force,  ///< referred to force, units ħMω_m²
};

struct SpectrumResult {
  std::vector<double> omega;  ///< rad/s
  std::vector<double> total, shot, back_action, sn, thermal;
  Units units = Units::shot;
};

struct GridSpec {
  double w_lo = 0;  ///< rad/s; 0 picks ω_m/30
  double w_hi = 0;  ///< rad/s; 0 picks 30·max(ω_Q, Λ, π/τ)
  std::size_t n_log = 2000;
  std::size_t n_window = 201;  ///< points per resonance window
};

/// Log grid with linear windows of half-width 10³γ around ω_m and ω_Q, plus
/// π/(8τ) spacing when τ > 0.
std::vector<double> make_grid(const SingleMassParams& p, const GridSpec& spec = {});

SpectrumResult spectrum_ccsn(const SingleMassParams& p, const std::vector<double>& omega,
                             Units units = Units::shot, Exec exec = Exec::parallel);
/// Same spectrum with ω_SN = 0.
SpectrumResult spectrum_qm(const SingleMassParams& p, const std::vector<double>& omega,
                           Units units = Units::shot, Exec exec = Exec::parallel);
/// Low-damping closed form [|𝒬|² + 4Λ²n_th ω_m² sin²ζ]/|D_c|²; total only.
SpectrumResult spectrum_ccsn_compact(const SingleMassParams& p, const std::vector<double>& omega,
                                     Units units = Units::shot);
/// Expectation-value SN model: phase quadrature, D_Q resonance.
SpectrumResult spectrum_preselection(const SingleMassParams& p, const std::vector<double>& omega,
                                     Units units = Units::shot);

// ---------------------------------------------------------------------------

template <class R>
SingleMassModel<R> SingleMassModel<R>::from(const SingleMassParams& p) {
  using std::conj;
  using std::cos;
  using std::sin;
  p.validate();
  SingleMassModel<R> m;
  const R sc = R(p.omega_m);
  m.wm = R(1);
  m.wsn = R(p.omega_sn) / sc;
  m.wq = R(p.omega_q()) / sc;
  m.g = R(p.gamma) / sc;
  m.L = R(p.Lambda) / sc;
  m.zeta = R(p.zeta);
  m.s = sin(m.zeta);
  m.c = cos(R(p.zeta));
  if (p.zeta == constants::two_pi / 4) m.c = R(0);
  m.tau = R(p.tau) * sc;
  m.n_th = R(p.n_th());
  m.kT = m.n_th * R(p.quality());
  m.thermal = p.thermal;
  m.finish();
  return m;
}

template <class R>
void SingleMassModel<R>::finish() {
  using std::conj;
  wt = damped_frequency(wq, g);
  wct = damped_frequency(wm, g);
  beta = factor_single_mass(wq, g, L, zeta).beta;
  beta_c = factor_single_mass(wm, g, L, zeta).beta;

  const Cplx<R> i = imag_unit<R>();
  const Cplx<R> w = wt, ws = conj(wt), b = beta, bs = conj(beta);
  const R L2 = L * L;
  r1 = L2 * (L2 * s + R(4) * i * g * w * c) / ((w + ws) * (w + b) * (w - bs));
  r2 = -L2 * (L2 * s - R(4) * i * g * ws * c) / ((w + ws) * (ws - b) * (ws + bs));
}

template <class R>
R SingleMassModel<R>::s_th(R w) const {
  using std::abs;
  using std::tanh;
  if (thermal == ThermalModel::markov) return s_th_markov();
  const R aw = abs(w);
  if (kT <= R(0)) return R(4) * g * aw;
  const R x = aw / (R(2) * kT);
  if (x < R(1e-8)) return R(4) * g * R(2) * kT;
  return R(4) * g * aw / tanh(x);
}

template <class R>
ExpRational<R> wiener_filter(const SingleMassModel<R>& m) {
  using std::conj;
  using std::exp;
  if (m.s == R(0)) throw DegenerateQuadrature("wiener_filter: zeta = 0");
  const Cplx<R> i = imag_unit<R>();
  const std::vector<Cplx<R>> P{m.beta, -conj(m.beta)};
  ExpRational<R> k;
  k.add(m.tau, RationalFn<R>(m.r1 * exp(-i * m.wt * m.tau), {-conj(m.wt)}, P));
  k.add(m.tau, RationalFn<R>(m.r2 * exp(i * conj(m.wt) * m.tau), {m.wt}, P));
  return k;
}

template <class R>
ExpRational<R> wiener_filter_wiener_hopf(const SingleMassModel<R>& m) {
  if (m.s == R(0)) throw DegenerateQuadrature("wiener_filter: zeta = 0");
  const R L2 = m.L * m.L;
  const auto invDQ = inverse_D(m.wt);
  const auto invDQc = invDQ.conj();
  // S_{αx,b} = Λ²(cos ζ D_Q* + Λ² sin ζ)/|D_Q|²
  ExpRational<R> S(invDQ.scaled(Cplx<R>(L2 * m.c)));
  S += ExpRational<R>((invDQ * invDQc).scaled(Cplx<R>(L2 * L2 * m.s)));
  const auto f = factor_single_mass(m.wq, m.g, m.L, m.zeta);
  auto k = causal_part(S * f.phi_minus.reciprocal(), m.tau);
  return k * f.phi_plus.reciprocal();
}

template <class R>
Cplx<R> wiener_filter_zero_delay(const SingleMassModel<R>& m, R w) {
  if (m.s == R(0)) throw DegenerateQuadrature("wiener_filter: zeta = 0");
  return (R(1) + m.DQ(w) / m.P(w)) / m.s;
}

template <class R>
Cplx<R> sn_factor(const SingleMassModel<R>& m, R w) {
  using std::conj;
  return R(1) - m.s * m.r1 * expm1_ratio(Cplx<R>(w) - m.wt, m.tau) -
         m.s * m.r2 * expm1_ratio(Cplx<R>(w) + conj(m.wt), m.tau);
}

template <class R>
ExpRational<R> sn_factor_expr(const SingleMassModel<R>& m) {
  using std::conj;
  using std::exp;
  const Cplx<R> i = imag_unit<R>();
  ExpRational<R> e = ExpRational<R>::constant(Cplx<R>(R(1)));
  if (m.tau == R(0)) return e;
  const Cplx<R> a1 = m.s * m.r1, a2 = m.s * m.r2;
  const Cplx<R> p1 = m.wt, p2 = -conj(m.wt);
  // g(x) = (e^{ixτ} − 1)/x with x = ω − p
  e.add(m.tau, RationalFn<R>(-a1 * exp(-i * p1 * m.tau), {}, {p1}));
  e.add(R(0), RationalFn<R>(a1, {}, {p1}));
  e.add(m.tau, RationalFn<R>(-a2 * exp(-i * p2 * m.tau), {}, {p2}));
  e.add(R(0), RationalFn<R>(a2, {}, {p2}));
  return e;
}

template <class R>
R sn_excess(const SingleMassModel<R>& m, R w) {
  using std::conj;
  using std::norm;
  const Cplx<R> E = sn_factor(m, w);
  const Cplx<R> P = m.P(w);
  return m.wq * m.wq + m.wm * m.wm - R(2) * w * w + R(2) * m.L * m.L * m.s * m.c +
         R(2) * (conj(P) * E).real() + m.wsn * m.wsn * norm(E);
}

template <class R>
ExpRational<R> sn_excess_expr(const SingleMassModel<R>& m) {
  using std::conj;
  const auto E = sn_factor_expr(m);
  const auto Ec = E.conj();
  const RationalFn<R> P(Cplx<R>(R(1)), {m.beta, -conj(m.beta)}, {});
  const RationalFn<R> Pc = P.conj();
  ExpRational<R> y = ExpRational<R>::constant(Cplx<R>(m.wq * m.wq + m.wm * m.wm + R(2) * m.L * m.L * m.s * m.c));
  y.add(R(0), RationalFn<R>::monomial(Cplx<R>(R(-2)), 2));
  y += Pc * E + P * Ec;
  y += (E * Ec).scaled(Cplx<R>(m.wsn * m.wsn));
  return canonical(y);
}

}  // namespace ccsn
