#include "ccsn/presets.hpp"

#include <cmath>
#include <stdexcept>

namespace ccsn {

namespace {

constexpr double tp = constants::two_pi;

SingleMassParams single_from(const Preset& p) {
  SingleMassParams s;
  double Q = 0;
  for (const auto& e : p.entries) {
    if (!e.used) continue;
    if (e.key == "M") s.M = e.value;
    else if (e.key == "f_m") s.omega_m = tp * e.value;
    else if (e.key == "f_sn") s.omega_sn = tp * e.value;
    else if (e.key == "Q_m") Q = e.value;
    else if (e.key == "T") s.T = e.value;
    else if (e.key == "f_Lambda") s.Lambda = tp * e.value;
    else if (e.key == "zeta") s.zeta = e.value;
    else if (e.key == "tau") s.tau = e.value;
    else if (e.key == "n_th_c") s.n_th_pinned = e.value;
  }
  s.gamma = s.omega_m / (2 * Q);
  return s;
}

std::vector<Preset> build() {
  const std::string t2 = "Table II", t5 = "Table V";
  std::vector<Preset> out;

  // fig5 column
  out.push_back({"fig5", "single", {
      {"f_m", "mirror bare frequency", 0.01, "Hz", t2 + ", Fig. 5"},
      {"f_sn", "SN frequency", 0.057, "Hz", t2 + ", Fig. 5"},
      {"Q_m", "quality factor", 1e7, "", t2 + ", Fig. 5"},
      {"", "mechanical damping 2gamma/2pi", 1e-9, "Hz", t2 + ", Fig. 5", false},
      {"T", "temperature", 1e-3, "K", t2 + ", Fig. 5"},
      {"", "thermal occupation over Q_m", 200, "", t2 + ", Fig. 5", false},
      {"M", "mirror mass", 1e-6, "kg", t2 + ", Fig. 5"},
      {"", "optical wavelength", 1064e-9, "m", t2 + ", Fig. 5", false},
      {"", "cavity finesse", 100, "", t2 + ", Fig. 5", false},
      {"", "input-cavity power", 1e-9, "W", t2 + ", Fig. 5", false},
      // pinned; the optics above give 0.127 Hz
      {"f_Lambda", "optomechanical coupling", 0.057, "Hz", t2 + ", Fig. 5"},
      {"zeta", "homodyne angle", tp / 4, "rad", "Fig. 5 caption"},
      {"tau", "measurement delay", 0, "s", "Fig. 5 caption"},
      {"", "observation time", 1e4, "s", "Fig. 5 caption", false},
  }});

  // fig8 column
  out.push_back({"fig8", "single", {
      {"f_m", "mirror bare frequency", 0.01, "Hz", t2 + ", Fig. 8"},
      {"f_sn", "SN frequency", 0.057, "Hz", t2 + ", Fig. 8"},
      {"Q_m", "quality factor", 3e6, "", t2 + ", Fig. 8"},
      {"", "mechanical damping 2gamma/2pi", 3.3e-9, "Hz", t2 + ", Fig. 8", false},
      {"T", "temperature", 300, "K", t2 + ", Fig. 8"},
      // k_BT/(ħω_m Q_m) at these values is 2.08e8; the model uses T
      {"", "thermal occupation over Q_m", 2e6, "", t2 + ", Fig. 8", false},
      {"M", "mirror mass", 1e-6, "kg", t2 + ", Fig. 8"},
      {"", "optical wavelength", 1064e-9, "m", t2 + ", Fig. 8", false},
      {"", "cavity finesse", 275, "", t2 + ", Fig. 8", false},
      {"", "input-cavity power", 1e-3, "W", t2 + ", Fig. 8", false},
      {"f_Lambda", "optomechanical coupling", 350, "Hz", t2 + ", Fig. 8"},
      {"zeta", "homodyne angle", tp / 4, "rad", "Fig. 8 caption"},
      {"tau", "measurement delay (also 1 s)", 0.5, "s", "Fig. 8 caption"},
      {"", "observation time", 1e4, "s", "Fig. 8 caption", false},
  }});

  // fig9 column
  out.push_back({"fig9", "single", {
      {"f_m", "mirror bare frequency", 0.1, "Hz", t2 + ", Fig. 9"},
      {"f_sn", "SN frequency", 0.057, "Hz", t2 + ", Fig. 9"},
      {"Q_m", "quality factor", 3e7, "", t2 + ", Fig. 9"},
      {"", "mechanical damping 2gamma/2pi", 3.2e-9, "Hz", t2 + ", Fig. 9", false},
      {"T", "temperature", 0.3, "K", t2 + ", Fig. 9"},
      {"", "thermal occupation over Q_m", 2000, "", t2 + ", Fig. 9", false},
      {"M", "mirror mass", 1e-3, "kg", t2 + ", Fig. 9"},
      {"", "optical wavelength", 1064e-9, "m", t2 + ", Fig. 9", false},
      {"", "cavity finesse", 1000, "", t2 + ", Fig. 9", false},
      {"", "input-cavity power", 0.1, "W", t2 + ", Fig. 9", false},
      {"f_Lambda", "optomechanical coupling", 400, "Hz", t2 + ", Fig. 9"},
      {"zeta", "homodyne angle", tp / 4, "rad", "Fig. 9 caption"},
  }});

  // two gravitating mirrors; identical A and B
  out.push_back({"table5", "mutual", {
      {"M", "mirror mass", 1e-3, "kg", t5},
      {"f_m", "mirror bare frequency", 0.01, "Hz", t5},
      {"f_g", "gravity frequency", 2e-4, "Hz", t5},
      {"f_damp", "mechanical damping 2gamma/2pi", 1.67e-8, "Hz", t5},
      {"", "optical wavelength", 1064e-9, "m", t5, false},
      {"", "cavity finesse", 4000, "", t5, false},
      {"", "input-cavity power", 2000, "W", t5, false},
      {"T", "temperature", 300, "K", t5},
      // not in the table; the optics above would give 2.3e5 Hz
      {"f_Lambda", "optomechanical coupling", 350, "Hz", "Fig. 11-12 captions"},
      {"zeta_A", "homodyne angle A", 0, "rad", "Fig. 11 caption"},
      {"zeta_B", "homodyne angle B", tp / 4, "rad", "Fig. 11 caption"},
      {"tau", "measurement delay of A", 0, "s", "Fig. 11 caption"},
  }});

  out.push_back({"mc-single", "single", {
      {"f_m", "mirror bare frequency", 1, "Hz", "scaled"},
      {"f_sn", "SN frequency", 5.7, "Hz", "scaled, fig5 ratio"},
      {"Q_m", "quality factor", 100, "", "scaled"},
      {"n_th_c", "thermal occupation over Q_m", 1, "", "scaled"},
      {"M", "mirror mass", 1e-6, "kg", "scaled"},
      {"f_Lambda", "optomechanical coupling", 5.7, "Hz", "scaled, fig5 ratio"},
      {"zeta", "homodyne angle", tp / 4, "rad", "scaled"},
      {"tau", "measurement delay", 0, "s", "scaled"},
  }});

  out.push_back({"mc-mutual", "mutual", {
      {"M", "mirror mass", 1e-6, "kg", "scaled"},
      {"f_m", "mirror bare frequency", 1, "Hz", "scaled"},
      {"f_g", "gravity frequency", 0.3, "Hz", "scaled"},
      {"f_damp", "mechanical damping 2gamma/2pi", 0.01, "Hz", "scaled"},
      {"T", "temperature", 100 * constants::hbar * tp / constants::k_B, "K", "scaled, k_BT = 100 hbar omega_m"},
      {"f_Lambda", "optomechanical coupling", 1, "Hz", "scaled"},
      {"zeta_A", "homodyne angle A", 0, "rad", "scaled"},
      {"zeta_B", "homodyne angle B", tp / 4, "rad", "scaled"},
      {"tau", "measurement delay of A", 0, "s", "scaled"},
  }});
  return out;
}

MutualParams mutual_from(const Preset& p) {
  MutualParams m;
  for (const auto& e : p.entries) {
    if (!e.used) continue;
    for (auto* s : {&m.A, &m.B}) {
      if (e.key == "M") s->M = e.value;
      else if (e.key == "f_m") s->omega_m = tp * e.value;
      else if (e.key == "f_damp") s->gamma = tp * e.value / 2;
      else if (e.key == "f_Lambda") s->Lambda = tp * e.value;
    }
    if (e.key == "f_g") m.omega_g = tp * e.value;
    else if (e.key == "T") m.T = e.value;
    else if (e.key == "zeta_A") m.A.zeta = e.value;
    else if (e.key == "zeta_B") m.B.zeta = e.value;
    else if (e.key == "tau") m.A.tau = e.value;
  }
  return m;
}

}  // namespace

std::vector<Preset> all_presets() {
  static const std::vector<Preset> p = build();
  return p;
}

const Preset& find_preset(const std::string& name) {
  static const std::vector<Preset> p = build();
  for (const auto& x : p)
    if (x.name == name) return x;
  throw ParameterError("unknown preset '" + name + "'");
}

SingleMassParams preset_fig5() { return single_from(find_preset("fig5")); }

SingleMassParams preset_fig8(double tau) {
  auto p = single_from(find_preset("fig8"));
  p.tau = tau;
  return p;
}

SingleMassParams preset_fig9() { return single_from(find_preset("fig9")); }

MutualParams preset_table5() { return mutual_from(find_preset("table5")); }

SingleMassParams preset_mc_single() { return single_from(find_preset("mc-single")); }

MutualParams preset_mc_mutual() { return mutual_from(find_preset("mc-mutual")); }

MCConfig preset_mc_config(double omega_fast, std::size_t n_trajectories, double steps_per_period) {
  MCConfig c;
  c.dt = tp / omega_fast / steps_per_period;
  c.segment = 1u << 15;
  c.duration = c.dt * static_cast<double>(c.segment);
  c.n_trajectories = n_trajectories;
  c.bin_average = 8;
  c.seed = 7;
  return c;
}

}  // namespace ccsn
