#include "ccsn/single_mass.hpp"

#include <algorithm>
#include <cmath>

namespace ccsn {

double lambda_from_optics(double M, const OpticalStack& o) {
  if (!(M > 0) || !(o.P_cav >= 0) || !(o.finesse > 0) || !(o.wavelength > 0))
    throw ParameterError("optical stack needs M, P_cav, finesse, wavelength > 0");
  const double w0 = constants::two_pi * constants::c / o.wavelength;
  return 4.0 * o.finesse / std::numbers::pi * std::sqrt(2.0 * w0 * o.P_cav / (M * constants::c * constants::c));
}

double omega_sn_from_lattice(double m_atom, double x_int) {
  if (!(m_atom > 0) || !(x_int > 0)) throw ParameterError("omega_sn needs m_atom, x_int > 0");
  return std::sqrt(constants::G * m_atom / (6.0 * std::sqrt(std::numbers::pi) * x_int * x_int * x_int));
}

double SingleMassParams::omega_q() const { return std::sqrt(omega_m * omega_m + omega_sn * omega_sn); }

double SingleMassParams::n_th() const {
  if (n_th_pinned) return *n_th_pinned;
  return constants::k_B * T / (constants::hbar * omega_m * quality());
}

void SingleMassParams::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ParameterError(what);
  };
  need(M > 0, "M must be positive");
  need(omega_m > 0, "omega_m must be positive");
  need(omega_sn >= 0, "omega_sn must be nonnegative");
  need(gamma > 0, "gamma must be positive");
  need(omega_m > gamma, "omega_m must exceed gamma");
  need(T >= 0, "T must be nonnegative");
  need(Lambda >= 0, "Lambda must be nonnegative");
  need(tau >= 0, "tau must be nonnegative");
  need(std::isfinite(zeta), "zeta must be finite");
  need(!n_th_pinned || *n_th_pinned >= 0, "n_th must be nonnegative");
}

std::vector<double> make_grid(const SingleMassParams& p, const GridSpec& spec) {
  p.validate();
  const double wq = p.omega_q();
  double hi_scale = std::max(wq, p.Lambda);
  if (p.tau > 0) hi_scale = std::max(hi_scale, std::numbers::pi / p.tau);
  const double lo = spec.w_lo > 0 ? spec.w_lo : p.omega_m / 30.0;
  const double hi = spec.w_hi > 0 ? spec.w_hi : 30.0 * hi_scale;
  if (!(hi > lo)) throw ParameterError("grid: w_hi must exceed w_lo");

  std::vector<double> g;
  g.reserve(spec.n_log + 3 * spec.n_window);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t k = 0; k < spec.n_log; ++k)
    g.push_back(std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(spec.n_log - 1)));
  auto window = [&](double c) {
    const double hw = 1e3 * p.gamma;
    for (std::size_t k = 0; k < spec.n_window; ++k) {
      const double w = c - hw + 2.0 * hw * static_cast<double>(k) / static_cast<double>(spec.n_window - 1);
      if (w >= lo && w <= hi) g.push_back(w);
    }
  };
  window(std::sqrt(p.omega_m * p.omega_m - p.gamma * p.gamma));
  window(std::sqrt(wq * wq - p.gamma * p.gamma));
  if (p.tau > 0) {
    const double step = std::numbers::pi / (8.0 * p.tau);
    for (int k = 0; k <= 20000; ++k) {
      const double w = lo + k * step;
      if (w > hi) break;
      g.push_back(w);
    }
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

namespace {

void resize(SpectrumResult& r, std::size_t n) {
  r.total.assign(n, 0.0);
  r.shot.assign(n, 0.0);
  r.back_action.assign(n, 0.0);
  r.sn.assign(n, 0.0);
  r.thermal.assign(n, 0.0);
}

void finish(SpectrumResult& r, const std::vector<CellError>& errs) {
  if (!errs.empty())
    throw AlgebraError("spectrum failed at omega = " + std::to_string(r.omega[errs.front().index]) + ": " +
                       errs.front().message);
}

SpectrumResult spectrum_impl(const SingleMassParams& p, const std::vector<double>& omega, Units units, Exec exec,
                             bool sn_on) {
  SingleMassParams q = p;
  if (!sn_on) q.omega_sn = 0;
  const auto m = SingleMassModel<double>::from(q);
  if (units == Units::force && m.s == 0) throw DegenerateQuadrature("force units need zeta != 0");
  SpectrumResult r;
  r.omega = omega;
  r.units = units;
  resize(r, omega.size());
  const double sc = p.omega_m;
  const double L2 = m.L * m.L, s = m.s, c = m.c;
  auto errs = for_each_index(omega.size(), exec, [&](std::size_t k) {
    const double w = omega[k] / sc;
    const double dc2 = std::norm(m.Dc(w));
    double shot = 1.0;
    double ba = (L2 * L2 * s * s + 2.0 * L2 * s * c * (m.wm * m.wm - w * w)) / dc2;
    double sn = m.wsn == 0 ? 0.0 : m.wsn * m.wsn * sn_excess(m, w) / dc2;
    double th = L2 * s * s * m.s_th(w) / dc2;
    if (units == Units::force) {
      const double f = dc2 / (L2 * s * s);
      shot *= f;
      ba *= f;
      sn *= f;
      th *= f;
    }
    r.shot[k] = shot;
    r.back_action[k] = ba;
    r.sn[k] = sn;
    r.thermal[k] = th;
    r.total[k] = shot + ba + sn + th;
    if (!std::isfinite(r.total[k])) throw AlgebraError("non-finite spectrum");
  });
  finish(r, errs);
  return r;
}

}  // namespace

SpectrumResult spectrum_ccsn(const SingleMassParams& p, const std::vector<double>& omega, Units units, Exec exec) {
  return spectrum_impl(p, omega, units, exec, true);
}

SpectrumResult spectrum_qm(const SingleMassParams& p, const std::vector<double>& omega, Units units, Exec exec) {
  return spectrum_impl(p, omega, units, exec, false);
}

SpectrumResult spectrum_ccsn_compact(const SingleMassParams& p, const std::vector<double>& omega, Units units) {
  const auto m = SingleMassModel<double>::from(p);
  if (m.s == 0) throw DegenerateQuadrature("compact form needs zeta != 0");
  const std::complex<double> i(0, 1);
  const double wq = m.wt.real();
  const double L2 = m.L * m.L;
  const auto Pq = m.P(wq);
  const auto eid = i * std::exp(i * wq * m.tau / 2.0) * L2 * m.s / Pq;
  auto sinc = [](double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; };
  SpectrumResult r;
  r.omega = omega;
  r.units = units;
  resize(r, omega.size());
  for (std::size_t k = 0; k < omega.size(); ++k) {
    const double w = omega[k] / p.omega_m;
    const auto bracket = std::conj(eid) * sinc((w - wq) * m.tau / 2.0) + eid * sinc((w + wq) * m.tau / 2.0);
    const auto Q = m.P(w) + m.wsn * m.wsn * (1.0 + L2 * m.tau * std::exp(i * w * m.tau / 2.0) * m.s / (2.0 * wq) * bracket);
    const double dc2 = std::norm(m.Dc(w));
    double tot = (std::norm(Q) + L2 * m.s * m.s * m.s_th_markov()) / dc2;
    if (units == Units::force) tot *= dc2 / (L2 * m.s * m.s);
    r.total[k] = tot;
  }
  return r;
}

SpectrumResult spectrum_preselection(const SingleMassParams& p, const std::vector<double>& omega, Units units) {
  const auto m = SingleMassModel<double>::from(p);
  SpectrumResult r;
  r.omega = omega;
  r.units = units;
  resize(r, omega.size());
  const double L2 = m.L * m.L;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    const double w = omega[k] / p.omega_m;
    const double dq2 = std::norm(m.DQ(w));
    double shot = 1.0, ba = L2 * L2 / dq2, th = L2 * m.s_th(w) / dq2;
    if (units == Units::force) {
      const double f = dq2 / L2;
      shot *= f;
      ba *= f;
      th *= f;
    }
    r.shot[k] = shot;
    r.back_action[k] = ba;
    r.thermal[k] = th;
    r.total[k] = shot + ba + th;
  }
  return r;
}

}  // namespace ccsn
