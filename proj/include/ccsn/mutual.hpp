// Two masses coupled by gravity: quantum coupling, naive classical coupling,
// and conditional-expectation (measurement-fed) classical coupling.
#pragma once

#include "ccsn/parallel.hpp"
#include "ccsn/single_mass.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace ccsn {

struct MutualSystem {
  double M = 1e-3;       ///< kg
  double omega_m = 0;    ///< rad/s
  double gamma = 0;      ///< rad/s
  double Lambda = 0;     ///< rad/s
  double zeta = 0;       ///< homodyne angle
  double tau = 0;        ///< s
};

struct MutualParams {
  MutualSystem A, B;
  double omega_g = 0;              ///< rad/s, ω_g² = 2G√(M_A M_B)/d³
  std::optional<double> d_AB;      ///< m; when set, ω_g is derived from it
  double T = 0;                    ///< K, shared bath temperature (independent baths)

  double omega_g_resolved() const;
  double omega_AB2() const;  ///< gravity of B on A, 2GM_B/d³
  double omega_BA2() const;
  double omega_QA() const { return std::sqrt(A.omega_m * A.omega_m - omega_AB2()); }
  double omega_QB() const { return std::sqrt(B.omega_m * B.omega_m - omega_BA2()); }
  /// common / differential eigenfrequencies (identical systems)
  double omega_plus() const { return A.omega_m; }
  double omega_minus() const;
  /// thermal occupation over Q_m for system A
  double n_th_A() const;
  void validate() const;  // throws ParameterError
};

enum class MutualModel { qg, naive_sn, ccsn };
const char* model_name(MutualModel m);

struct CorrelationSpectra {
  MutualModel model = MutualModel::qg;
  std::vector<double> omega;  ///< rad/s
  std::vector<double> S_AA, S_BB;
  std::vector<std::complex<double>> S_AB;  ///< ⟨ξ_A ξ_B*⟩
  std::vector<double> C_AB;
  std::vector<double> thermal_AA, thermal_BB;  ///< thermal-force parts of S_AA, S_BB
};

CorrelationSpectra qg_spectra(const MutualParams& p, const std::vector<double>& omega, Exec exec = Exec::parallel);

/// No measurement feedback: each mass sees ⟨x⟩ = 0. Thermal force dropped
/// unless quantum_only is false.
CorrelationSpectra naive_sn_spectra(const MutualParams& p, const std::vector<double>& omega,
                                    bool quantum_only = true, Exec exec = Exec::parallel);

CorrelationSpectra ccsn_spectra(const MutualParams& p, const std::vector<double>& omega,
                                Exec exec = Exec::parallel);

/// C^SN/C^QG − 1, evaluated in extended precision.
std::vector<double> correlation_deviation(const MutualParams& p, const std::vector<double>& omega,
                                          Exec exec = Exec::parallel);

/// (S_BB^SN − S_BB^QG)/S_BB^QG, extended precision.
std::vector<double> sbb_relative_shift(const MutualParams& p, const std::vector<double>& omega,
                                       Exec exec = Exec::parallel);

/// [χ_QA]_τ/χ_QA at ω (rad/s) from the causal-part algebra.
std::complex<double> delay_factor(const MutualParams& p, double omega);

/// C_AB^QG for (ζ_A, ζ_B) = (0, π/2) in closed form, damping kept.
double qg_correlation_closed_form(const MutualParams& p, double omega);

struct ObservationTime {
  double tau;        ///< s
  double T_obs;      ///< s, (∫₀^∞ dω/2π |ΔS_BB/S_BB|²)⁻¹
  double T_scaling;  ///< (ω_m/ω_g²)(n_th^c ω_m²/ω_g²)²
};

/// Required observation time at (ζ_A, ζ_B) = (0, π/2) for each τ (τ_A = τ_B = τ).
std::vector<ObservationTime> mutual_observation_time(const MutualParams& p, const std::vector<double>& taus);

struct MutualContour {
  std::vector<double> lambda, temperature, taus;
  std::vector<std::vector<double>> T_obs;  ///< per τ, row-major [iΛ·nT + iT]; NaN on failure
  std::vector<CellError> failures;
};

MutualContour mutual_contour(const MutualParams& p, const std::vector<double>& lambda,
                             const std::vector<double>& temperature, const std::vector<double>& taus,
                             Exec exec = Exec::parallel);

/// Log grid over [ω_m/10, 10ω_m] plus a dense band over [ω_−, ω_+] ± 10 linewidths.
std::vector<double> mutual_grid(const MutualParams& p, std::size_t n_log = 2000, std::size_t n_peak = 2001);

/// [ω_− − 20γ, ω_+ + 20γ]
std::pair<double, double> peak_window(const MutualParams& p);

/// Small-ω_g, γ → 0 expansions around the peak, for tests.
namespace asymptotic {
/// Δ = ω² − (ω_m² − ω_g²), in rad²/s²
double detuning(const MutualParams& p, double omega);
double qg_correlation(const MutualParams& p, double omega);
double qg_peak(const MutualParams& p);
/// S_BB^SN with ζ_B = π/2 and ζ_A ∈ {0, π/2}, no thermal force
double sbb_sn(const MutualParams& p, double omega);
double sbb_qg(const MutualParams& p, double omega);
/// C^SN/C^QG at (0, π/2), τ = 0
double correlation_ratio(const MutualParams& p, double omega);
/// low-γ form of [χ_QA]_τ/χ_QA
std::complex<double> delay_factor(const MutualParams& p, double omega);
}  // namespace asymptotic

}  // namespace ccsn
