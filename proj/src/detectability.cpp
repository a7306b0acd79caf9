#include "ccsn/detectability.hpp"

#include "ccsn/quadrature.hpp"

#include <cmath>

namespace ccsn {

namespace {

DetectabilityResult from_rate(double rate, double T_obs) {
  if (!(T_obs > 0)) throw ParameterError("T_obs must be positive");
  DetectabilityResult r;
  r.rate = rate;
  r.rho2 = rate * T_obs;
  r.T_required = rate > 0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
  return r;
}

// 1/(|P_c|² + Λ² sin²ζ s_th) as four simple poles
RationalFn<Quad> inverse_noise(const SingleMassModel<Quad>& m) {
  const Cplx<Quad> b2 = m.beta_c * m.beta_c;
  const Quad d = b2.imag() * b2.imag() + m.L * m.L * m.s * m.s * m.s_th_markov();
  const Cplx<Quad> b = biquadratic_lower_root(b2.real(), d);
  return RationalFn<Quad>(Cplx<Quad>(Quad(1)), {}, {b, -std::conj(b), std::conj(b), -b});
}

}  // namespace

DetectabilityResult kl_snr(const SingleMassParams& p, double T_obs) {
  if (p.thermal != ThermalModel::markov) return kl_snr_quadrature(p, T_obs);
  p.validate();
  if (p.omega_sn == 0) return from_rate(0.0, T_obs);
  const auto m = SingleMassModel<Quad>::from(p);
  const auto ratio = canonical(sn_excess_expr(m) * inverse_noise(m));
  const auto I = integrate_real_line(ratio * ratio);
  const Quad w4 = m.wsn * m.wsn * m.wsn * m.wsn;
  // positive frequencies only: half the full-line integral; dΩ = ω_m dΩ̂
  const double rate = static_cast<double>(I.value.real() * w4 / Quad(2)) * p.omega_m;
  return from_rate(rate, T_obs);
}

DetectabilityResult kl_snr_quadrature(const SingleMassParams& p, double T_obs) {
  p.validate();
  if (p.omega_sn == 0) return from_rate(0.0, T_obs);
  const auto m = SingleMassModel<double>::from(p);
  auto f = [&](double w) {
    const double n = std::norm(m.Pc(w)) + m.L * m.L * m.s * m.s * m.s_th(w);
    const double r = m.wsn * m.wsn * sn_excess(m, w) / n;
    return Cplx<double>(r * r);
  };
  std::vector<Cplx<double>> poles{m.beta_c, m.beta, m.wt, m.wct};
  auto breaks = pole_breakpoints(poles);
  std::erase_if(breaks, [](double x) { return x <= 0; });
  breaks.push_back(0.0);
  const double top = 20.0 * std::max({m.wq, m.L, 1.0});
  breaks.push_back(top);
  if (m.tau > 0)
    for (double w = std::numbers::pi / m.tau; w < top; w += std::numbers::pi / m.tau) breaks.push_back(w);
  std::sort(breaks.begin(), breaks.end());
  QuadratureOptions opt;
  opt.rel_tol = 1e-9;
  // integrate_pointwise covers the full line; fold the negative side away
  auto half = [&](double w) { return w < 0 ? Cplx<double>(0) : f(w); };
  const auto I = integrate_pointwise(half, breaks, opt);
  return from_rate(I.value.real() * p.omega_m, T_obs);
}

TminEstimates t_min_estimates(const SingleMassParams& p) {
  p.validate();
  if (!(p.omega_sn > 0)) throw ParameterError("t_min_estimates needs omega_sn > 0");
  // 2k_BT/(ħω_SN Q_m) = 2 n_th ω_m/ω_SN
  const double x = 2.0 * p.n_th() * p.omega_m / p.omega_sn;
  TminEstimates t;
  t.T_thermal = p.omega_m / (p.omega_sn * p.omega_sn) * x * x;
  t.T_quantum = std::pow(p.Lambda / p.omega_sn, 4) / p.omega_m;
  return t;
}

SingleMassParams apply_axis(SingleMassParams p, AxisKind kind, double v) {
  const double Q = p.quality();
  switch (kind) {
    case AxisKind::lambda_over_omega_m:
      p.Lambda = v * p.omega_m;
      break;
    case AxisKind::omega_m:
      p.omega_m = v;
      p.gamma = v / (2 * Q);
      break;
    case AxisKind::lambda:
      p.Lambda = v;
      break;
    case AxisKind::temperature:
      p.T = v;
      p.n_th_pinned.reset();
      break;
    default:
      throw ParameterError("unknown sweep axis");
  }
  return p;
}

ContourResult contour_sweep(const SingleMassParams& base, const SweepAxis& a1, const SweepAxis& a2,
                            const std::vector<double>& taus, Exec exec) {
  ContourResult out{a1, a2, {}};
  const std::size_t n1 = a1.values.size(), n2 = a2.values.size();
  // Λ/ω_m must be applied after ω_m so the ratio refers to the cell's ω_m
  const bool swap = a2.kind == AxisKind::omega_m;
  for (double tau : taus) {
    ContourGrid g;
    g.tau = tau;
    g.T_required.assign(n1 * n2, std::numeric_limits<double>::quiet_NaN());
    g.failures = for_each_index(n1 * n2, exec, [&](std::size_t k) {
      const std::size_t i = k / n2, j = k % n2;
      SingleMassParams p = base;
      p.tau = tau;
      if (swap) {
        p = apply_axis(p, a2.kind, a2.values[j]);
        p = apply_axis(p, a1.kind, a1.values[i]);
      } else {
        p = apply_axis(p, a1.kind, a1.values[i]);
        p = apply_axis(p, a2.kind, a2.values[j]);
      }
      g.T_required[k] = kl_snr(p, 1.0).T_required;
    });
    out.grids.push_back(std::move(g));
  }
  return out;
}

}  // namespace ccsn
