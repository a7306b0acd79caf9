#include "ccsn/nonstationary.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace ccsn {

namespace {

template <class R>
std::vector<Cplx<R>> pair(const Cplx<R>& z) {
  return {z, -std::conj(z)};
}

// poles of the conjugated (anticausal) factor
template <class R>
std::vector<Cplx<R>> cpair(const Cplx<R>& z) {
  return {std::conj(z), -z};
}

void require_phase(const SingleMassParams& p) {
  if (p.zeta != constants::two_pi / 4) throw ParameterError("non-stationary trace needs zeta = pi/2");
}

}  // namespace

template <class R>
R TotalWhitening<R>::spectrum(R w) const {
  return std::norm(coeff_q(w)) + std::norm(coeff_f(w)) * s_th;
}

template <class R>
TotalWhitening<R> whiten_total(const SingleMassModel<R>& m) {
  using std::abs;
  const R wsn2 = m.wsn * m.wsn;
  // |P + ω_SN²|² + Λ²s_th = ω⁴ − 2Aω² + A² + d
  const R a = R(2) * abs(m.beta.imag());
  const R c = std::norm(m.beta) - wsn2;
  const R A = c - a * a / R(2);
  const R sth = m.s_th_markov();
  const R d = a * a * (c - a * a / R(4)) + m.L * m.L * sth;
  TotalWhitening<R> t;
  t.beta_tot = biquadratic_lower_root(A, d);
  t.s_th = sth;
  const auto Pt = pair(t.beta_tot);
  t.coeff_q = ExpRational<R>(RationalFn<R>(Cplx<R>(R(1)), pair(m.beta), Pt));
  t.coeff_q += ExpRational<R>(RationalFn<R>(Cplx<R>(wsn2), {}, Pt));
  t.coeff_f = ExpRational<R>(RationalFn<R>(Cplx<R>(-m.L), {}, Pt));
  return t;
}

template struct TotalWhitening<double>;
template struct TotalWhitening<Quad>;
template TotalWhitening<double> whiten_total(const SingleMassModel<double>&);
template TotalWhitening<Quad> whiten_total(const SingleMassModel<Quad>&);

TotalWhitening<double> whiten_total(const SingleMassParams& p) {
  require_phase(p);
  return whiten_total(SingleMassModel<double>::from(p));
}

namespace {

struct Blocks {
  Quad quantum, classical;
};

Quad norm_integral(const ExpRational<Quad>& f) {
  const auto v = integrate_real_line(canonical(f * f.conj()));
  return v.value.real();
}

Blocks variance_blocks(const SingleMassModel<Quad>& m, const TotalWhitening<Quad>& wt, Quad tau,
                       ConditioningKernel kernel) {
  using E = ExpRational<Quad>;
  using F = RationalFn<Quad>;
  const Quad L = m.L, L2 = L * L;
  const E xQ(inverse_D(m.wt, L));     // Λ/D_Q
  const E xc(inverse_D(m.wct, L));    // Λ/D_c
  const E chi(inverse_D(m.wct));      // 1/D_c
  const F S_aw(Cplx<Quad>(-L2), {}, cpair(m.beta));
  const auto Pt = cpair(wt.beta_tot);
  E S_ww(F(Cplx<Quad>(Quad(1)), cpair(m.beta), Pt));
  S_ww += E(F(Cplx<Quad>(m.wsn * m.wsn), {}, Pt));
  const F S_fw(Cplx<Quad>(-L * wt.s_th), {}, Pt);

  Blocks b;
  const auto q1 = causal_part(xQ, tau);
  const auto q2 = causal_part(q1 * S_aw, tau);
  b.quantum = norm_integral(q1) - norm_integral(q2);

  E k;
  if (kernel == ConditioningKernel::literal) {
    k = causal_part(causal_part(xc, tau) * S_aw, tau);
  } else {
    const F ratio(Cplx<Quad>(Quad(1)), pair(m.wt), pair(m.wct));  // D_Q/D_c
    k = causal_part(causal_part(xQ * S_aw, Quad(0)) * ratio, tau);
  }
  const auto mix = causal_part(k * S_ww, tau) + causal_part(chi * S_fw, tau);
  b.classical = norm_integral(k) + wt.s_th * norm_integral(chi) - norm_integral(mix);
  return b;
}

struct Columns {
  std::vector<double> q, c, t;
};

Columns evaluate(const SingleMassParams& p, const std::vector<double>& times, const NonstationaryOptions& opt) {
  const auto m = SingleMassModel<Quad>::from(p);
  const auto wt = whiten_total(m);
  // normalized variance V·ħ/(Mω_m), with V = ½ Σ blocks
  const double scale = 0.5 * constants::hbar / (p.M * p.omega_m);
  Columns out{std::vector<double>(times.size()), std::vector<double>(times.size()),
              std::vector<double>(times.size())};
  auto errs = for_each_index(times.size(), opt.exec, [&](std::size_t i) {
    const auto b = variance_blocks(m, wt, Quad(times[i] * p.omega_m), opt.kernel);
    out.q[i] = static_cast<double>(b.quantum) * scale;
    out.c[i] = static_cast<double>(b.classical) * scale;
    out.t[i] = out.q[i] + out.c[i];
  });
  if (!errs.empty())
    throw QuadratureNotConverged("variance trace failed at t = " + std::to_string(times[errs.front().index]) +
                                 ": " + errs.front().message);
  return out;
}

}  // namespace

VarianceTrace conditional_variance_trace(const SingleMassParams& p, const std::vector<double>& times,
                                         const NonstationaryOptions& opt) {
  p.validate();
  require_phase(p);
  for (double t : times)
    if (!(t >= 0)) throw ParameterError("times must be nonnegative");
  VarianceTrace r;
  r.times = times;
  r.x_zp2 = constants::hbar / (2 * p.M * p.omega_m);
  auto a = evaluate(p, times, opt);
  r.v_quantum = std::move(a.q);
  r.v_classical = std::move(a.c);
  r.v_total = std::move(a.t);
  for (double v : r.v_total) r.zero_point.push_back(v / r.x_zp2);
  if (opt.with_reference) {
    auto q = p;
    q.omega_sn = 0;
    auto b = evaluate(q, times, opt);
    r.ref_quantum = std::move(b.q);
    r.ref_classical = std::move(b.c);
    r.ref_total = std::move(b.t);
  }
  return r;
}

namespace {

using LD = long double;
using MatL = Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic>;
using MatC = Eigen::Matrix<std::complex<LD>, Eigen::Dynamic, Eigen::Dynamic>;

// Filter Riccati AP + PAᵀ − PCᵀR⁻¹CP + Q = 0 from the stable subspace of the Hamiltonian.
MatL care_filter(const MatL& A, const MatL& C, const MatL& Qn, const MatL& R) {
  const Eigen::Index n = A.rows();
  const MatL Ri = R.inverse();
  MatL H(2 * n, 2 * n);
  H << A.transpose(), -C.transpose() * Ri * C, -Qn, -A;
  Eigen::ComplexEigenSolver<MatC> es(H.cast<std::complex<LD>>());
  MatC U(2 * n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i)
    if (es.eigenvalues()[i].real() < 0) {
      if (k == n) throw AlgebraError("Riccati: Hamiltonian spectrum not split");
      U.col(k++) = es.eigenvectors().col(i);
    }
  if (k != n) throw AlgebraError("Riccati: Hamiltonian spectrum not split");
  const MatC P = U.bottomRows(n) * U.topRows(n).inverse();
  return P.real();
}

}  // namespace

double stationary_variance_riccati(const SingleMassParams& p) {
  p.validate();
  require_phase(p);
  const LD wsn2 = LD(p.omega_sn / p.omega_m) * LD(p.omega_sn / p.omega_m);
  const LD wq2 = 1 + wsn2;
  const LD g = LD(p.gamma / p.omega_m), L = LD(p.Lambda / p.omega_m);
  const LD sth = 4 * LD(p.n_th());
  const LD h = 0.5L;

  // quantum oscillator alone: a₁ drives v by Λ, record Λx_Q + a₂
  MatL A(2, 2), C(1, 2), G(2, 1), R(1, 1);
  A << 0, 1, -wq2, -2 * g;
  C << L, 0;
  G << 0, L;
  R << h;
  const MatL PQ = care_filter(A, C, G * h * G.transpose(), R);
  const MatL KQ = PQ * C.transpose() * R.inverse();

  // state (x_Q, v_Q, x̂_Q, v̂_Q, x_cl, v_cl), noises (a₁, a₂, f)
  MatL Af = MatL::Zero(6, 6), Gf = MatL::Zero(6, 3), Cf(1, 6);
  Af.block(0, 0, 2, 2) = A;
  Gf(1, 0) = L;
  Af.block(2, 2, 2, 2) = A;
  for (int r = 0; r < 2; ++r) {
    Af(2 + r, 0) += KQ(r, 0) * L;
    Af(2 + r, 2) -= KQ(r, 0) * L;
    Gf(2 + r, 1) = KQ(r, 0);
  }
  // classical part feels the gravity of the estimate
  Af(4, 5) = 1;
  Af(5, 4) = -wq2 + wsn2;
  Af(5, 5) = -2 * g;
  Af(5, 2) = wsn2;
  Gf(5, 2) = 1;
  Cf << L, 0, 0, 0, L, 0;
  MatL Qn = MatL::Zero(3, 3), N = MatL::Zero(3, 1);
  Qn(0, 0) = h;
  Qn(1, 1) = h;
  Qn(2, 2) = h * sth;
  N(1, 0) = h;
  const MatL Abar = Af - Gf * N * R.inverse() * Cf;
  const MatL Qbar = Gf * (Qn - N * R.inverse() * N.transpose()) * Gf.transpose();
  const MatL P = care_filter(Abar, Cf, Qbar, R);
  Eigen::Matrix<LD, 6, 1> e;
  e << 1, 0, 0, 0, 1, 0;
  const LD v = e.transpose() * P * e;
  return static_cast<double>(v) * constants::hbar / (p.M * p.omega_m);
}

double oscillation_period(const std::vector<double>& t, const std::vector<double>& v, double window) {
  if (t.size() != v.size() || t.size() < 3) throw ParameterError("oscillation_period: need matching t, v");
  if (!(window > 0)) throw ParameterError("oscillation_period: window must be positive");
  const std::size_t n = t.size();
  // running mean by trapezoids over [t − w/2, t + w/2], interior points only
  std::vector<double> cum(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) cum[i] = cum[i - 1] + 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
  auto at = [&](double x) {
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t j = static_cast<std::size_t>(it - t.begin());
    if (j == 0) return cum[0];
    if (j >= n) return cum[n - 1];
    const double f = (x - t[j - 1]) / (t[j] - t[j - 1]);
    const double vx = v[j - 1] + f * (v[j] - v[j - 1]);
    return cum[j - 1] + 0.5 * (v[j - 1] + vx) * (x - t[j - 1]);
  };
  std::vector<double> ts, os;
  for (std::size_t i = 0; i < n; ++i) {
    if (t[i] - window / 2 < t.front() || t[i] + window / 2 > t.back()) continue;
    ts.push_back(t[i]);
    os.push_back(v[i] - (at(t[i] + window / 2) - at(t[i] - window / 2)) / window);
  }
  std::vector<double> up;
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (os[i - 1] < 0 && os[i] >= 0) up.push_back(ts[i - 1] + (ts[i] - ts[i - 1]) * (-os[i - 1]) / (os[i] - os[i - 1]));
  if (up.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return (up.back() - up.front()) / static_cast<double>(up.size() - 1);
}

}  // namespace ccsn
