// KL signal-to-noise of the SN spectral deviation and detectability sweeps.
#pragma once

#include "ccsn/single_mass.hpp"

#include <limits>
#include <vector>

namespace ccsn {

struct DetectabilityResult {
  double rho2 = 0;
  double rate = 0;  ///< ρ²/T_obs, 1/s
  double T_required = std::numeric_limits<double>::infinity();  ///< s, ρ² = 1
};

/// ρ² = T ∫₀^∞ dΩ/2π (ΔS_F^SN/(S_F^th + S_F^QG))².
///
/// Exact by residues for the Markov thermal model; the coth model goes through
/// adaptive quadrature.
DetectabilityResult kl_snr(const SingleMassParams& p, double T_obs);

/// Quadrature of the same integrand from pointwise spectra (cross-check).
DetectabilityResult kl_snr_quadrature(const SingleMassParams& p, double T_obs);

struct TminEstimates {
  double T_thermal;  ///< (ω_m/ω_SN²)(2k_BT/(ħω_SN Q_m))²
  double T_quantum;  ///< (Λ/ω_SN)⁴/ω_m
};

TminEstimates t_min_estimates(const SingleMassParams& p);

enum class AxisKind { lambda_over_omega_m, omega_m, lambda, temperature };

struct SweepAxis {
  AxisKind kind;
  std::vector<double> values;  ///< SI (rad/s, K) or the ratio Λ/ω_m
};

struct ContourGrid {
  double tau;
  std::vector<double> T_required;  ///< row-major [i1·n2 + i2]; ∞ when ω_SN = 0, NaN on failure
  std::vector<CellError> failures;
};

struct ContourResult {
  SweepAxis axis1, axis2;
  std::vector<ContourGrid> grids;  ///< one per τ
};

/// Sets one axis value on a copy of p; Q_m and ω_SN are held fixed.
SingleMassParams apply_axis(SingleMassParams p, AxisKind kind, double v);

ContourResult contour_sweep(const SingleMassParams& base, const SweepAxis& a1, const SweepAxis& a2,
                            const std::vector<double>& taus, Exec exec = Exec::parallel);

}  // namespace ccsn
