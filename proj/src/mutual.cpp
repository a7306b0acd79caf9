#include "ccsn/mutual.hpp"

#include "ccsn/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace ccsn {

double MutualParams::omega_g_resolved() const {
  if (d_AB) return std::sqrt(2 * constants::G * std::sqrt(A.M * B.M) / std::pow(*d_AB, 3));
  return omega_g;
}

double MutualParams::omega_AB2() const {
  const double g = omega_g_resolved();
  return g * g * std::sqrt(B.M / A.M);
}

double MutualParams::omega_BA2() const {
  const double g = omega_g_resolved();
  return g * g * std::sqrt(A.M / B.M);
}

double MutualParams::omega_minus() const {
  const double g = omega_g_resolved();
  return std::sqrt(A.omega_m * A.omega_m - 2 * g * g);
}

double MutualParams::n_th_A() const {
  return constants::k_B * T * 2 * A.gamma / (constants::hbar * A.omega_m * A.omega_m);
}

void MutualParams::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ParameterError(what);
  };
  for (const auto* s : {&A, &B}) {
    need(s->M > 0, "M must be positive");
    need(s->omega_m > 0, "omega_m must be positive");
    need(s->gamma > 0, "gamma must be positive");
    need(s->omega_m > s->gamma, "omega_m must exceed gamma");
    need(s->Lambda >= 0, "Lambda must be nonnegative");
    need(s->tau >= 0, "tau must be nonnegative");
    need(std::isfinite(s->zeta), "zeta must be finite");
  }
  need(omega_g >= 0, "omega_g must be nonnegative");
  need(!d_AB || *d_AB > 0, "d_AB must be positive");
  need(T >= 0, "T must be nonnegative");
  need(A.omega_m * A.omega_m > omega_AB2() && B.omega_m * B.omega_m > omega_BA2(),
       "coupling too strong: omega_Q^2 must stay positive");
  need(A.omega_m * A.omega_m > 2 * omega_g_resolved() * omega_g_resolved(), "need omega_m^2 > 2 omega_g^2");
}

const char* model_name(MutualModel m) {
  switch (m) {
    case MutualModel::qg:
      return "QG";
    case MutualModel::naive_sn:
      return "naiveSN";
    case MutualModel::ccsn:
      return "CCSN";
  }
  return "?";
}

namespace {

using C = Cplx<Quad>;
constexpr std::size_t kNoises = 6;  // a1A, a2A, a1B, a2B, fA, fB
using Row = std::array<C, kNoises>;

struct Side {
  Quad wq2, g, L, s, c, sth;
  SingleMassModel<Quad> model;
  ExpRational<Quad> K;  ///< α K_τ acting on z
};

Side make_side(const MutualSystem& sys, Quad sc, Quad self_shift, Quad kT, bool filter) {
  Side d;
  const Quad wm = Quad(sys.omega_m) / sc;
  d.wq2 = wm * wm - self_shift;
  d.g = Quad(sys.gamma) / sc;
  d.L = Quad(sys.Lambda) / sc;
  d.s = sin(Quad(sys.zeta));
  d.c = cos(Quad(sys.zeta));
  if (sys.zeta == constants::two_pi / 4) d.c = 0;
  if (sys.zeta == 0) d.s = 0;
  d.sth = Quad(8) * d.g * kT;
  if (!filter) return d;
  auto& m = d.model;
  m.wq = sqrt(d.wq2);
  m.wm = m.wq;
  m.wsn = 0;
  m.g = d.g;
  m.L = d.L;
  m.zeta = Quad(sys.zeta);
  m.s = d.s;
  m.c = d.c;
  m.tau = Quad(sys.tau) * sc;
  m.finish();
  if (m.s == 0)
    d.K = causal_part(ExpRational<Quad>(inverse_D(m.wt, m.L * m.L)), m.tau);
  else
    d.K = wiener_filter(m);
  return d;
}

struct Core {
  Quad sc, wg2;
  Side A, B;

  Core(const MutualParams& p, bool filters) {
    p.validate();
    sc = Quad(p.A.omega_m);
    const Quad wg = Quad(p.omega_g_resolved()) / sc;
    wg2 = wg * wg;
    const Quad kT = Quad(constants::k_B * p.T / constants::hbar) / sc;
    A = make_side(p.A, sc, Quad(p.omega_AB2()) / (sc * sc), kT, filters);
    B = make_side(p.B, sc, Quad(p.omega_BA2()) / (sc * sc), kT, filters);
  }

  static C D(const Side& d, Quad w) { return C(d.wq2 - w * w, -Quad(2) * d.g * w); }

  std::array<Row, 2> transfer(MutualModel model, Quad w) const {
    const C DA = D(A, w), DB = D(B, w);
    const C zero(Quad(0));
    std::array<Row, 2> H{};
    if (model == MutualModel::naive_sn) {
      const C xa = C(Quad(1)) / DA, xb = C(Quad(1)) / DB;
      H[0] = {A.c + A.s * A.L * A.L * xa, C(A.s), zero, zero, A.s * A.L * xa, zero};
      H[1] = {zero, zero, B.c + B.s * B.L * B.L * xb, C(B.s), zero, B.s * B.L * xb};
      return H;
    }
    const C det = DA * DB - wg2 * wg2;
    const C xaa = DB / det, xbb = DA / det, xab = -wg2 / det;
    if (model == MutualModel::qg) {
      H[0] = {A.c + A.s * A.L * A.L * xaa, C(A.s), A.s * A.L * B.L * xab, zero, A.s * A.L * xaa, A.s * A.L * xab};
      H[1] = {B.s * B.L * A.L * xab, zero, B.c + B.s * B.L * B.L * xbb, C(B.s), B.s * B.L * xab, B.s * B.L * xbb};
      return H;
    }
    // records of the quantum parts alone
    const Row zA{A.c + A.s * A.L * A.L / DA, C(A.s), zero, zero, zero, zero};
    const Row zB{zero, zero, B.c + B.s * B.L * B.L / DB, C(B.s), zero, zero};
    const C KA = A.K(w), KB = B.K(w);
    const C self_A = A.s * wg2 * wg2 / det * KA, self_B = B.s * wg2 * wg2 / det * KB;
    const C cross_A = B.L == 0 ? zero : -A.s * (A.L / B.L) * wg2 * DB / det * KB;
    const C cross_B = A.L == 0 ? zero : -B.s * (B.L / A.L) * wg2 * DA / det * KA;
    for (std::size_t k = 0; k < kNoises; ++k) {
      H[0][k] = (C(Quad(1)) + self_A) * zA[k] + cross_A * zB[k];
      H[1][k] = (C(Quad(1)) + self_B) * zB[k] + cross_B * zA[k];
    }
    H[0][4] = A.s * A.L * xaa;
    H[0][5] = A.s * A.L * xab;
    H[1][4] = B.s * B.L * xab;
    H[1][5] = B.s * B.L * xbb;
    return H;
  }

  struct Point {
    Quad SAA, SBB, thAA, thBB;
    C SAB;
    Quad cab() const { return SAA > 0 && SBB > 0 ? std::norm(SAB) / (SAA * SBB) : Quad(0); }
  };

  Point spectra(MutualModel model, Quad w) const {
    const auto H = transfer(model, w);
    const std::array<Quad, kNoises> wt{1, 1, 1, 1, A.sth, B.sth};
    Point pt{0, 0, 0, 0, C(Quad(0))};
    for (std::size_t k = 0; k < kNoises; ++k) {
      pt.SAA += std::norm(H[0][k]) * wt[k];
      pt.SBB += std::norm(H[1][k]) * wt[k];
      pt.SAB += H[0][k] * std::conj(H[1][k]) * wt[k];
    }
    for (std::size_t k = 4; k < kNoises; ++k) {
      pt.thAA += std::norm(H[0][k]) * wt[k];
      pt.thBB += std::norm(H[1][k]) * wt[k];
    }
    return pt;
  }
};

CorrelationSpectra run(const MutualParams& p, const std::vector<double>& omega, MutualModel model,
                       bool drop_thermal, Exec exec) {
  Core core(p, model == MutualModel::ccsn);
  if (drop_thermal) core.A.sth = core.B.sth = 0;
  CorrelationSpectra r;
  r.model = model;
  r.omega = omega;
  const std::size_t n = omega.size();
  r.S_AA.assign(n, 0);
  r.S_BB.assign(n, 0);
  r.S_AB.assign(n, 0);
  r.C_AB.assign(n, 0);
  r.thermal_AA.assign(n, 0);
  r.thermal_BB.assign(n, 0);
  auto errs = for_each_index(n, exec, [&](std::size_t i) {
    const auto pt = core.spectra(model, Quad(omega[i]) / core.sc);
    r.S_AA[i] = static_cast<double>(pt.SAA);
    r.S_BB[i] = static_cast<double>(pt.SBB);
    r.S_AB[i] = cplx_cast<double>(pt.SAB);
    r.C_AB[i] = static_cast<double>(pt.cab());
    r.thermal_AA[i] = static_cast<double>(pt.thAA);
    r.thermal_BB[i] = static_cast<double>(pt.thBB);
  });
  if (!errs.empty())
    throw AlgebraError("mutual spectrum failed at omega = " + std::to_string(omega[errs.front().index]) + ": " +
                       errs.front().message);
  return r;
}

template <class F>
std::vector<double> pointwise(const std::vector<double>& omega, Exec exec, F&& f) {
  std::vector<double> out(omega.size());
  auto errs = for_each_index(omega.size(), exec, [&](std::size_t i) { out[i] = f(omega[i]); });
  if (!errs.empty())
    throw AlgebraError("mutual evaluation failed at omega = " + std::to_string(omega[errs.front().index]) + ": " +
                       errs.front().message);
  return out;
}

}  // namespace

CorrelationSpectra qg_spectra(const MutualParams& p, const std::vector<double>& omega, Exec exec) {
  return run(p, omega, MutualModel::qg, false, exec);
}

CorrelationSpectra naive_sn_spectra(const MutualParams& p, const std::vector<double>& omega, bool quantum_only,
                                    Exec exec) {
  return run(p, omega, MutualModel::naive_sn, quantum_only, exec);
}

CorrelationSpectra ccsn_spectra(const MutualParams& p, const std::vector<double>& omega, Exec exec) {
  return run(p, omega, MutualModel::ccsn, false, exec);
}

std::vector<double> correlation_deviation(const MutualParams& p, const std::vector<double>& omega, Exec exec) {
  const Core core(p, true);
  return pointwise(omega, exec, [&](double w) {
    const Quad x = Quad(w) / core.sc;
    const Quad q = core.spectra(MutualModel::qg, x).cab(), s = core.spectra(MutualModel::ccsn, x).cab();
    return q > 0 ? static_cast<double>(s / q - 1) : 0.0;
  });
}

namespace {

Quad sbb_shift(const Core& core, Quad x) {
  const Quad q = core.spectra(MutualModel::qg, x).SBB, s = core.spectra(MutualModel::ccsn, x).SBB;
  return (s - q) / q;
}

}  // namespace

std::vector<double> sbb_relative_shift(const MutualParams& p, const std::vector<double>& omega, Exec exec) {
  const Core core(p, true);
  return pointwise(omega, exec, [&](double w) { return static_cast<double>(sbb_shift(core, Quad(w) / core.sc)); });
}

std::complex<double> delay_factor(const MutualParams& p, double omega) {
  const Core core(p, true);
  const auto& m = core.A.model;
  const ExpRational<Quad> chi(inverse_D(m.wt));
  const auto cut = causal_part(chi, m.tau);
  const Quad x = Quad(omega) / core.sc;
  return cplx_cast<double>(cut(x) / chi(x));
}

double qg_correlation_closed_form(const MutualParams& p, double omega) {
  p.validate();
  const double sc = p.A.omega_m;
  const double w = omega / sc, g = p.A.gamma / sc, L = p.A.Lambda / sc, wg = p.omega_g_resolved() / sc;
  const double wm2 = 1.0, wg2 = wg * wg;
  const double wminus2 = wm2 - 2 * wg2;
  const std::complex<double> Pp(w * w - wm2, 2 * g * w), Pm(w * w - wminus2, 2 * g * w);
  const double nc = p.n_th_A();
  const double L4 = L * L * (L * L + 4 * nc);
  return 2 * std::pow(L, 4) * wg2 * wg2 /
         (2 * std::norm(Pp * Pm) + L4 * (std::norm(Pp) + std::norm(Pm)));
}

std::pair<double, double> peak_window(const MutualParams& p) {
  return {p.omega_minus() - 20 * p.A.gamma, p.omega_plus() + 20 * p.A.gamma};
}

std::vector<double> mutual_grid(const MutualParams& p, std::size_t n_log, std::size_t n_peak) {
  p.validate();
  const double wm = p.A.omega_m;
  std::vector<double> g;
  const double a = std::log(wm / 10), b = std::log(wm * 10);
  for (std::size_t k = 0; k < n_log; ++k) g.push_back(std::exp(a + (b - a) * double(k) / double(n_log - 1)));
  const double lw = 10 * 2 * p.A.gamma;
  const double lo = p.omega_minus() - lw, hi = p.omega_plus() + lw;
  for (std::size_t k = 0; k < n_peak; ++k) g.push_back(lo + (hi - lo) * double(k) / double(n_peak - 1));
  for (double c : {p.omega_minus(), p.omega_QA(), p.omega_plus()})
    for (int k = -50; k <= 50; ++k) g.push_back(c + p.A.gamma * k / 5.0);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

namespace {

double observation_rate(const MutualParams& p) {
  const Core core(p, true);
  auto f = [&](double x) {
    if (x <= 0) return Cplx<double>(0);
    const double r = static_cast<double>(sbb_shift(core, Quad(x)));
    return Cplx<double>(r * r);
  };
  const double sc = p.A.omega_m;
  const double g = p.A.gamma / sc;
  const double wm = 1, wq = p.omega_QA() / sc, wmn = p.omega_minus() / sc;
  std::vector<double> breaks{0.0};
  for (double c : {wmn, wq, wm})
    for (double k : {0.0, 1.0, 10.0, 100.0, 1e3, 1e4}) {
      breaks.push_back(c + k * g);
      breaks.push_back(c - k * g);
    }
  const double spread = wm - wmn;
  for (double k : {1.0, 3.0, 10.0, 30.0, 100.0}) {
    breaks.push_back(wm + k * spread);
    breaks.push_back(wmn - k * spread);
  }
  const double top = 100.0;
  breaks.push_back(top);
  const double tau = std::max(p.A.tau, p.B.tau) * sc;
  if (tau > 0)
    for (double w = std::numbers::pi / tau; w < top && breaks.size() < 4000; w += std::numbers::pi / tau)
      breaks.push_back(w);
  std::erase_if(breaks, [](double x) { return x < 0; });
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  QuadratureOptions opt;
  opt.rel_tol = 1e-8;
  const auto I = integrate_pointwise(f, breaks, opt);
  return I.value.real() * sc;
}

}  // namespace

std::vector<ObservationTime> mutual_observation_time(const MutualParams& p, const std::vector<double>& taus) {
  std::vector<ObservationTime> out;
  for (double tau : taus) {
    MutualParams q = p;
    q.A.zeta = 0;
    q.B.zeta = constants::two_pi / 4;
    q.A.tau = q.B.tau = tau;
    const double rate = observation_rate(q);
    const double wg2 = q.omega_g_resolved() * q.omega_g_resolved(), wm = q.A.omega_m;
    const double nc = q.n_th_A();
    ObservationTime t;
    t.tau = tau;
    t.T_obs = rate > 0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
    t.T_scaling = wm / wg2 * std::pow(nc * wm * wm / wg2, 2);
    out.push_back(t);
  }
  return out;
}

MutualContour mutual_contour(const MutualParams& p, const std::vector<double>& lambda,
                             const std::vector<double>& temperature, const std::vector<double>& taus, Exec exec) {
  MutualContour c{lambda, temperature, taus, {}, {}};
  const std::size_t nL = lambda.size(), nT = temperature.size();
  for (std::size_t t = 0; t < taus.size(); ++t) c.T_obs.emplace_back(nL * nT, std::numeric_limits<double>::quiet_NaN());
  c.failures = for_each_index(nL * nT, exec, [&](std::size_t k) {
    MutualParams q = p;
    q.A.Lambda = q.B.Lambda = lambda[k / nT];
    q.T = temperature[k % nT];
    const auto r = mutual_observation_time(q, taus);
    for (std::size_t t = 0; t < taus.size(); ++t) c.T_obs[t][k] = r[t].T_obs;
  });
  return c;
}

namespace asymptotic {

namespace {
struct Norm {
  double wm2, wg2, L, wq2, L4eff;
};
Norm norm_of(const MutualParams& p) {
  const double sc = p.A.omega_m;
  Norm n;
  n.wm2 = 1;
  const double wg = p.omega_g_resolved() / sc;
  n.wg2 = wg * wg;
  n.L = p.A.Lambda / sc;
  n.wq2 = 1 - n.wg2;
  n.L4eff = n.L * n.L * (n.L * n.L + 4 * p.n_th_A());
  return n;
}
}  // namespace

double detuning(const MutualParams& p, double omega) {
  const double g2 = p.omega_g_resolved() * p.omega_g_resolved();
  return omega * omega - (p.A.omega_m * p.A.omega_m - g2);
}

double qg_correlation(const MutualParams& p, double omega) {
  const auto n = norm_of(p);
  const double d = detuning(p, omega) / (p.A.omega_m * p.A.omega_m);
  const double g4 = n.wg2 * n.wg2;
  return std::pow(n.L, 4) * g4 / (std::pow(d, 4) + d * d * (n.L4eff - 2 * g4) + g4 * (n.L4eff + g4));
}

double qg_peak(const MutualParams& p) {
  const double L = p.A.Lambda / p.A.omega_m;
  return L * L / (L * L + 4 * p.n_th_A());
}

double sbb_qg(const MutualParams& p, double omega) {
  const auto n = norm_of(p);
  const double d = detuning(p, omega) / (p.A.omega_m * p.A.omega_m);
  const double g4 = n.wg2 * n.wg2;
  return 1 + n.L4eff * (g4 + d * d) / ((d * d - g4) * (d * d - g4));
}

double sbb_sn(const MutualParams& p, double omega) {
  const auto n = norm_of(p);
  const double d = detuning(p, omega) / (p.A.omega_m * p.A.omega_m);
  const double g4 = n.wg2 * n.wg2;
  const double coef = p.A.zeta == 0 ? 2.0 : 4.0;
  const double X = std::sqrt(std::pow(n.L, 4) + n.wq2 * n.wq2) - n.wq2;
  return sbb_qg(p, omega) + coef * g4 * d * X / ((d * d - g4) * (d * d - g4));
}

double correlation_ratio(const MutualParams& p, double omega) {
  const auto n = norm_of(p);
  const double d = detuning(p, omega) / (p.A.omega_m * p.A.omega_m);
  const double g4 = n.wg2 * n.wg2;
  return 1 - 2 * g4 * d / ((g4 + d * d) * (n.wq2 + std::sqrt(std::pow(n.L, 4) + n.wq2 * n.wq2)));
}

std::complex<double> delay_factor(const MutualParams& p, double omega) {
  const double wq = p.omega_QA(), t = p.A.tau;
  const std::complex<double> i(0, 1);
  return std::exp(i * omega * t) * (std::cos(wq * t) - i * omega / wq * std::sin(wq * t));
}

}  // namespace asymptotic

}  // namespace ccsn
