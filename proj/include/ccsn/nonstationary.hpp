// Conditional position variance after the measurement is switched off at t = 0.
#pragma once

#include "ccsn/parallel.hpp"
#include "ccsn/single_mass.hpp"

#include <vector>

namespace ccsn {

/// Innovation of the full record (quantum and thermal parts) in phase quadrature:
/// w_tot = (P + ω_SN²)/P_tot · w_Q − Λ/P_tot · f̂, with P_tot = (ω−β_tot)(ω+β_tot*).
template <class R>
struct TotalWhitening {
  Cplx<R> beta_tot;
  ExpRational<R> coeff_q;    ///< multiplies w_Q
  ExpRational<R> coeff_f;    ///< multiplies f_th/√(ħM)ω_m
  R s_th;                    ///< white thermal force spectrum, normalized
  /// S_{w_tot w_tot}(ω), identically 1
  R spectrum(R w) const;
};

template <class R>
TotalWhitening<R> whiten_total(const SingleMassModel<R>& m);

TotalWhitening<double> whiten_total(const SingleMassParams& p);

enum class ConditioningKernel {
  /// x_c reconstructed through the Q-filter and the susceptibility ratio D_Q/D_c
  physical,
  /// the bracket [[Λχ_c]_τ S_{a₁w_Q}]_τ taken literally
  literal,
};

struct NonstationaryOptions {
  ConditioningKernel kernel = ConditioningKernel::physical;
  bool with_reference = true;  ///< also evaluate ω_SN = 0
  Exec exec = Exec::parallel;
};

struct VarianceTrace {
  std::vector<double> times;  ///< s
  std::vector<double> v_quantum, v_classical, v_total;  ///< m²
  std::vector<double> zero_point;  ///< v_total/(ħ/2Mω_m)
  /// same fields at ω_SN = 0 (empty if not requested)
  std::vector<double> ref_quantum, ref_classical, ref_total;
  double x_zp2 = 0;  ///< ħ/(2Mω_m), m²
};

/// Variance components per time; τ = 0 is the stationary conditional variance.
VarianceTrace conditional_variance_trace(const SingleMassParams& p, const std::vector<double>& times,
                                         const NonstationaryOptions& opt = {});

/// Steady-state conditional variance of x from the Kalman filter of the
/// equivalent state-space model (Riccati), in m². Phase quadrature, white thermal force.
double stationary_variance_riccati(const SingleMassParams& p);

/// Period of the oscillating part of v(t): mean spacing of upward zero crossings
/// after subtracting the running mean over `window` (s). NaN with fewer than 2 crossings.
double oscillation_period(const std::vector<double>& t, const std::vector<double>& v, double window);

}  // namespace ccsn
