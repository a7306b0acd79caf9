// Time-domain Monte Carlo of the monitored loops, for checking the analytic spectra.
//
// The quantum part of each record is sampled in innovations form from the
// stationary discrete Kalman filter of the box-averaged measurement; the
// classical part (thermal force, gravity of the conditional mean) is propagated
// with the exact matrix exponential over dt.  Work is in units of ω_m (of A).
#pragma once

#include "ccsn/mutual.hpp"
#include "ccsn/single_mass.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace ccsn {

struct UnstableLoop : AlgebraError {
  using AlgebraError::AlgebraError;
};

struct MCConfig {
  double dt = 0;         ///< s
  double duration = 0;   ///< s per trajectory, floored to whole segments
  std::size_t n_trajectories = 1;
  std::uint64_t seed = 1;
  std::size_t segment = 1u << 15;  ///< Welch segment, samples (Hann, no overlap)
  std::size_t bin_average = 1;     ///< raw bins merged per output bin
  double w_lo = 0, w_hi = 0;       ///< rad/s kept; 0 picks first bin and 4·ω_fast
  std::size_t keep_record = 0;     ///< samples of trajectory 0 returned
  Exec exec = Exec::parallel;

  std::size_t delay_steps(double tau) const;
  std::size_t segments() const;
  /// dt below (2π/ω_fast)/50, segment and duration consistent
  void validate(double omega_fast) const;
  /// copy with the band defaults filled in
  MCConfig resolved(double omega_fast) const;
};

struct SpectrumEstimate {
  std::vector<double> omega;  ///< rad/s
  std::vector<double> mean, std_err;
};

struct CrossEstimate {
  std::vector<double> omega;
  std::vector<std::complex<double>> mean;
  std::vector<double> std_err_re, std_err_im;
};

struct MCSingleResult {
  SpectrumEstimate xi;           ///< record spectrum, shot-noise units
  std::vector<double> record;    ///< ξ_k of trajectory 0
  std::vector<double> x_cond;    ///< conditional mean of x fed to gravity, trajectory 0
  std::size_t delay_steps = 0;
  double lag_bias = 0;  ///< mean information lag minus τ, s
  std::size_t segments = 0;
  MCConfig config;  ///< resolved
};

/// Single mass with causal-conditional self-gravity (ω_SN = 0 is standard QM).
MCSingleResult simulate_single(const SingleMassParams& p, const MCConfig& cfg);

struct MCMutualResult {
  MutualModel model = MutualModel::qg;
  SpectrumEstimate S_AA, S_BB;
  CrossEstimate S_AB;
  SpectrumEstimate C_AB;  ///< jackknife bias-corrected over trajectory groups
  /// 95% interval for C_AB from the Hotelling disk of S_AB (autos at their estimates)
  std::vector<double> C_lo, C_hi;
  std::size_t delay_steps_A = 0, delay_steps_B = 0;
  double lag_bias = 0;
  std::size_t segments = 0;
  MCConfig config;
};

/// qg: two coupled oscillators, no feedback.  ccsn: each side's gravity source
/// is the delayed conditional mean of the other.  naive_sn is not simulated.
MCMutualResult simulate_mutual(const MutualParams& p, const MCConfig& cfg, MutualModel model);

struct MCVarianceResult {
  std::vector<double> times;  ///< s
  std::vector<double> variance, std_err;  ///< m²
  std::vector<double> innovations;  ///< trajectory 0, keep_record samples
};

/// Variance of x at `times` after the measurement is switched off, about the free
/// drift of the Kalman estimate from the full record (thermal force unknown).
/// Phase quadrature, ω_SN = 0.
MCVarianceResult simulate_conditional_variance(const SingleMassParams& p, const MCConfig& cfg,
                                               const std::vector<double>& times);

/// Frequencies (rad/s, from 0 to the Nyquist frequency) at which the model
/// spectrum is needed by expected_periodogram.
std::vector<double> omega_grid(const MCConfig& cfg);

/// Expected value of the windowed, bin-averaged periodogram on the output bins
/// of a resolved cfg, given the model spectrum (normalized by omega_scale) on
/// omega_grid(cfg).  The white part `white` is exempt from the box-average
/// factor sinc²(ω dt/2).  Cross spectra use S(−ω) = S(ω)*.
std::vector<std::complex<double>> expected_periodogram(const std::vector<std::complex<double>>& S_on_grid,
                                                       double white, const MCConfig& cfg);

struct BinComparison {
  std::size_t n_bins = 0, within = 0;
  double fraction = 0;
  double chi2_per_bin = 0;
  double max_abs_z = 0;
};

/// z-scores of estimate against expected on every bin.
BinComparison compare_bins(const std::vector<double>& mean, const std::vector<double>& std_err,
                           const std::vector<double>& expected, double n_sigma = 3.0);

struct LjungBox {
  double Q = 0;
  double p_value = 1;
};

LjungBox ljung_box(const std::vector<double>& x, std::size_t lags);

}  // namespace ccsn
