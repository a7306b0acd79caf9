// Parameter sets of the reference configurations, plus scaled sets that the
// Monte Carlo can reach.
#pragma once

#include "ccsn/mc_oracle.hpp"
#include "ccsn/mutual.hpp"
#include "ccsn/single_mass.hpp"

#include <string>
#include <vector>

namespace ccsn {

struct PresetEntry {
  std::string key;     ///< CLI parameter name, empty for informational rows
  std::string label;
  double value;        ///< in `unit`
  std::string unit;
  std::string source;  ///< table and column
  bool used = true;    ///< false: listed but not fed to the model
};

struct Preset {
  std::string name;
  std::string kind;  ///< "single" or "mutual"
  std::vector<PresetEntry> entries;
};

SingleMassParams preset_fig5();
/// τ defaults to the shorter of the two delays
SingleMassParams preset_fig8(double tau = 0.5);
SingleMassParams preset_fig9();
MutualParams preset_table5();

/// Q = 100, ω_m/2π = 1 Hz, Λ = ω_SN = 5.7 ω_m, n_th^c pinned to 1
SingleMassParams preset_mc_single();
/// Q = 100, ω_m/2π = 1 Hz, ω_g = 0.3 ω_m, Λ = ω_m, k_BT = 100 ħω_m
MutualParams preset_mc_mutual();
/// 64 steps per fastest period, one 2¹⁵-sample segment per trajectory
MCConfig preset_mc_config(double omega_fast, std::size_t n_trajectories, double steps_per_period = 64);

std::vector<Preset> all_presets();
/// throws ParameterError for an unknown name
const Preset& find_preset(const std::string& name);

}  // namespace ccsn
