#include "ccsn/cli.hpp"

#include "ccsn/detectability.hpp"
#include "ccsn/mc_oracle.hpp"
#include "ccsn/mutual.hpp"
#include "ccsn/nonstationary.hpp"
#include "ccsn/presets.hpp"
#include "ccsn/single_mass.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace ccsn::cli {

namespace {

constexpr double tp = constants::two_pi;

// A numerical failure tied to one grid cell.
struct CellFailure : std::runtime_error {
  std::string cell;
  CellFailure(std::string c, const std::string& what) : std::runtime_error(what), cell(std::move(c)) {}
};

struct ConfigError : std::runtime_error {
  std::string where;  ///< offending key or option
  explicit ConfigError(const std::string& what, std::string w = "") : std::runtime_error(what), where(std::move(w)) {}
};

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char b[40];
  std::snprintf(b, sizeof b, "%.11e", x);
  return b;
}

std::string exact(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

double parse_number(const std::string& key, const std::string& s) {
  if (s == "pi") return tp / 2;
  if (s.rfind("pi/", 0) == 0) {
    const double d = parse_number(key, s.substr(3));
    return tp / 2 / d;
  }
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("value of '" + key + "' is not a number: '" + s + "'", key);
  }
  if (pos != s.size()) throw ConfigError("value of '" + key + "' is not a number: '" + s + "'", key);
  return v;
}

// ---------------------------------------------------------------------------
// parameter table: SI values keyed like the preset entries

const std::set<std::string> single_keys = {"M", "f_m", "f_sn", "Q_m", "T", "f_Lambda", "zeta", "tau",
                                          "n_th_c", "P_cav", "finesse", "wavelength"};
const std::set<std::string> mutual_keys = {"M", "f_m", "f_g", "d_AB", "f_damp", "T", "f_Lambda", "zeta_A",
                                          "zeta_B", "tau", "tau_B", "P_cav", "finesse", "wavelength"};

struct Table {
  std::string kind, preset;
  std::map<std::string, double> v;
  std::set<std::string> given;

  bool has(const std::string& k) const { return v.count(k) > 0; }
  double at(const std::string& k) const {
    auto it = v.find(k);
    if (it == v.end()) throw ConfigError("parameter '" + k + "' is required");
    return it->second;
  }
};

Table load_table(const std::string& kind, const std::string& preset, const std::vector<std::string>& sets,
                 std::optional<double> tau) {
  Table t;
  t.kind = kind;
  t.preset = preset;
  const Preset* p = nullptr;
  try {
    p = &find_preset(preset);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (p->kind != kind) throw ConfigError("preset '" + preset + "' is a " + p->kind + "-mass preset");
  for (const auto& e : p->entries)
    if (e.used) t.v[e.key] = e.value;
  if (kind == "mutual" && !t.has("tau_B")) t.v["tau_B"] = 0;
  const auto& keys = kind == "single" ? single_keys : mutual_keys;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    const std::string k = s.substr(0, eq);
    if (!keys.count(k)) throw ConfigError("unknown parameter '" + k + "' for " + kind + "-mass runs", k);
    t.v[k] = parse_number(k, s.substr(eq + 1));
    t.given.insert(k);
  }
  if (tau) {
    t.v["tau"] = *tau;
    t.given.insert("tau");
  }
  // Λ from the optics when they are given
  const int n_opt = static_cast<int>(t.given.count("P_cav") + t.given.count("finesse") + t.given.count("wavelength"));
  if (n_opt > 0) {
    if (n_opt < 3) throw ConfigError("optics need all of P_cav, finesse, wavelength", "P_cav,finesse,wavelength");
    const double L = lambda_from_optics(t.at("M"), {t.at("P_cav"), t.at("finesse"), t.at("wavelength")});
    if (t.given.count("f_Lambda")) {
      if (std::abs(tp * t.at("f_Lambda") - L) > 1e-6 * L)
        throw ConfigError("f_Lambda = " + exact(t.at("f_Lambda")) + " Hz disagrees with the optics (" +
                          exact(L / tp) + " Hz)",
                          "f_Lambda");
    } else {
      t.v["f_Lambda"] = L / tp;
    }
  }
  return t;
}

SingleMassParams single_params(const Table& t, const std::string& thermal) {
  SingleMassParams p;
  p.M = t.at("M");
  p.omega_m = tp * t.at("f_m");
  p.omega_sn = tp * t.at("f_sn");
  p.gamma = p.omega_m / (2 * t.at("Q_m"));
  p.T = t.has("n_th_c") && !t.has("T") ? 0.0 : t.at("T");
  p.Lambda = tp * t.at("f_Lambda");
  p.zeta = t.at("zeta");
  p.tau = t.has("tau") ? t.at("tau") : 0.0;
  if (t.has("n_th_c")) p.n_th_pinned = t.at("n_th_c");
  if (thermal == "coth") p.thermal = ThermalModel::full_coth;
  else if (thermal != "markov") throw ConfigError("thermal must be markov or coth");
  p.validate();
  return p;
}

MutualParams mutual_params(const Table& t) {
  MutualParams m;
  for (auto* s : {&m.A, &m.B}) {
    s->M = t.at("M");
    s->omega_m = tp * t.at("f_m");
    s->gamma = tp * t.at("f_damp") / 2;
    s->Lambda = tp * t.at("f_Lambda");
  }
  m.A.zeta = t.at("zeta_A");
  m.B.zeta = t.at("zeta_B");
  m.A.tau = t.at("tau");
  m.B.tau = t.at("tau_B");
  m.omega_g = t.has("f_g") ? tp * t.at("f_g") : 0.0;
  if (t.has("d_AB")) m.d_AB = t.at("d_AB");
  m.T = t.at("T");
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// output

struct Csv {
  std::vector<std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<std::string>> text_rows;  ///< used when rows is empty

  void note(const std::string& s) { meta.push_back(s); }
  void value(const std::string& tag, const std::string& k, double v) { meta.push_back(tag + " " + k + " = " + num(v)); }

  void write(std::ostream& o) const {
    for (const auto& m : meta) o << "# " << m << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) o << (i ? "," : "") << columns[i];
    o << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << num(r[i]);
      o << '\n';
    }
    for (const auto& r : text_rows) {
      for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << r[i];
      o << '\n';
    }
  }
};

std::string to_text(double v) { return exact(v); }
std::string to_text(std::size_t v) { return std::to_string(v); }
std::string to_text(const std::string& v) { return v; }
std::string to_text(bool v) { return v ? "true" : "false"; }

// Options recorded in the header so a previous output can be replayed.
struct OptList {
  std::vector<std::pair<std::string, std::function<std::string()>>> items;

  template <class T>
  CLI::Option* add(CLI::App* a, const std::string& name, T& var, const std::string& desc) {
    items.push_back({name, [&var] { return to_text(var); }});
    return a->add_option("--" + name, var, desc)->capture_default_str();
  }
  CLI::Option* flag(CLI::App* a, const std::string& name, bool& var, const std::string& desc) {
    items.push_back({name, [&var] { return to_text(var); }});
    return a->add_option("--" + name, var, desc)->capture_default_str();
  }
};

struct Common {
  std::string preset;
  std::vector<std::string> sets;
  std::optional<double> tau;
  std::string output;
  std::string config;
  OptList opts;
};

void header(Csv& c, const std::string& sub, const Common& cm, const Table* t) {
  c.note("ccsn " + sub);
  c.note(std::string("version ") + CCSN_VERSION);
  c.note("threads " + std::to_string(omp_get_max_threads()));
  c.note("convention Fourier e^{i omega t}; spectra two-sided in omega, shot-noise units unless stated");
  if (t) {
    c.note("kind " + t->kind);
    c.note("preset " + t->preset);
    for (const auto& [k, v] : t->v) c.note("param " + k + " = " + exact(v));
  }
  for (const auto& [k, f] : cm.opts.items) c.note("option " + k + " = " + f());
}

template <class F>
auto locate(const std::vector<double>& omega, F&& eval) -> decltype(eval(omega)) {
  try {
    return eval(omega);
  } catch (const ParameterError&) {
    throw;
  } catch (const std::exception& e) {
    for (std::size_t i = 0; i < omega.size(); ++i) {
      try {
        eval(std::vector<double>{omega[i]});
      } catch (const std::exception& e2) {
        throw CellFailure("index=" + std::to_string(i) + ";f_Hz=" + num(omega[i] / tp), e2.what());
      }
    }
    throw CellFailure("grid", e.what());
  }
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0) || !(hi > lo) || n < 2) throw ConfigError("grid needs 0 < lo < hi and at least 2 points");
  std::vector<double> g(n);
  for (std::size_t j = 0; j < n; ++j) g[j] = lo * std::pow(hi / lo, static_cast<double>(j) / static_cast<double>(n - 1));
  return g;
}

std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
  if (out.empty()) throw ConfigError(key + " is empty");
  return out;
}

// "name:lo:hi:n", log spaced
struct AxisSpec {
  std::string name;
  std::vector<double> values;  ///< in the display unit of `name`
};

AxisSpec parse_axis(const std::string& key, const std::string& s) {
  std::vector<std::string> f;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) f.push_back(item);
  if (f.size() != 4) throw ConfigError(key + " expects name:lo:hi:n, got '" + s + "'");
  const double n = parse_number(key, f[3]);
  if (n < 2 || n != std::floor(n)) throw ConfigError(key + " needs an integer point count >= 2");
  return {f[0], log_grid(parse_number(key, f[1]), parse_number(key, f[2]), static_cast<std::size_t>(n))};
}

SweepAxis single_axis(const AxisSpec& a) {
  SweepAxis s;
  std::vector<double> v = a.values;
  if (a.name == "f_m") {
    s.kind = AxisKind::omega_m;
    for (auto& x : v) x *= tp;
  } else if (a.name == "f_Lambda") {
    s.kind = AxisKind::lambda;
    for (auto& x : v) x *= tp;
  } else if (a.name == "Lambda_ratio") {
    s.kind = AxisKind::lambda_over_omega_m;
  } else if (a.name == "T") {
    s.kind = AxisKind::temperature;
  } else {
    throw ConfigError("axis must be one of f_m, f_Lambda, Lambda_ratio, T; got '" + a.name + "'");
  }
  s.values = v;
  return s;
}

// ---------------------------------------------------------------------------
// subcommands

struct SingleSpectrum {
  Common cm;
  std::string units = "shot", model = "ccsn", thermal = "markov";
  double f_lo = 0, f_hi = 0;
  std::size_t n_log = 2000, n_window = 201;

  void setup(CLI::App* a) {
    cm.opts.add(a, "units", units, "shot or force")->check(CLI::IsMember({"shot", "force"}));
    cm.opts.add(a, "model", model, "ccsn, qm, compact or preselection")
        ->check(CLI::IsMember({"ccsn", "qm", "compact", "preselection"}));
    cm.opts.add(a, "thermal", thermal, "markov or coth")->check(CLI::IsMember({"markov", "coth"}));
    cm.opts.add(a, "f-lo", f_lo, "lowest frequency, Hz (0: f_m/30)");
    cm.opts.add(a, "f-hi", f_hi, "highest frequency, Hz (0: automatic)");
    cm.opts.add(a, "n-log", n_log, "log-spaced points");
    cm.opts.add(a, "n-window", n_window, "points per resonance window");
  }

  Csv run() {
    const auto t = load_table("single", cm.preset, cm.sets, cm.tau);
    const auto p = single_params(t, thermal);
    GridSpec gs;
    gs.w_lo = tp * f_lo;
    gs.w_hi = tp * f_hi;
    gs.n_log = n_log;
    gs.n_window = n_window;
    const auto g = make_grid(p, gs);
    const Units u = units == "force" ? Units::force : Units::shot;
    const auto r = locate(g, [&](const std::vector<double>& w) {
      if (model == "qm") return spectrum_qm(p, w, u);
      if (model == "compact") return spectrum_ccsn_compact(p, w, u);
      if (model == "preselection") return spectrum_preselection(p, w, u);
      return spectrum_ccsn(p, w, u);
    });
    const auto q = locate(g, [&](const std::vector<double>& w) { return spectrum_qm(p, w, u); });
    Csv c;
    header(c, "single-spectrum", cm, &t);
    c.value("derived", "omega_q_rad_s", p.omega_q());
    c.value("derived", "gamma_rad_s", p.gamma);
    c.value("derived", "n_th_c", p.n_th());
    c.note(u == Units::force ? "units hbar M omega_m^2" : "units shot noise");
    c.columns = {"f_Hz", "S_total", "S_shot", "S_back_action", "S_SN", "S_thermal", "S_QM_total"};
    const bool parts = model != "compact";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < g.size(); ++j)
      c.rows.push_back({g[j] / tp, r.total[j], parts ? r.shot[j] : nan, parts ? r.back_action[j] : nan,
                        parts ? r.sn[j] : nan, parts ? r.thermal[j] : nan, q.total[j]});
    return c;
  }
};

struct SingleBudget {
  Common cm;
  std::string thermal = "markov";
  double t_obs = 1e4, f_lo = 0, f_hi = 0;
  std::size_t n = 400;

  void setup(CLI::App* a) {
    cm.opts.add(a, "t-obs", t_obs, "observation time, s");
    cm.opts.add(a, "thermal", thermal, "markov or coth")->check(CLI::IsMember({"markov", "coth"}));
    cm.opts.add(a, "f-lo", f_lo, "lowest frequency, Hz (0: f_m/100)");
    cm.opts.add(a, "f-hi", f_hi, "highest frequency, Hz (0: 100 f_m)");
    cm.opts.add(a, "n", n, "log-spaced points");
  }

  Csv run() {
    const auto t = load_table("single", cm.preset, cm.sets, cm.tau);
    const auto p = single_params(t, thermal);
    const double fm = p.omega_m / tp;
    const auto g = log_grid(tp * (f_lo > 0 ? f_lo : fm / 100), tp * (f_hi > 0 ? f_hi : fm * 100), n);
    const auto r = locate(g, [&](const std::vector<double>& w) { return spectrum_ccsn(p, w, Units::force); });
    Csv c;
    header(c, "single-budget", cm, &t);
    c.note("units hbar M omega_m^2; scaled = sqrt(2 pi/(Omega T_obs)) times the spectrum");
    c.columns = {"f_Hz", "S_QG_scaled", "S_th_scaled", "S_SN", "sum", "S_QG"};
    double run_lo = 0, best = 0;
    bool in = false;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double k = std::sqrt(tp / (g[j] * t_obs));
      const double qg = r.shot[j] + r.back_action[j];
      const double sum = k * (qg + r.thermal[j]);
      c.rows.push_back({g[j] / tp, k * qg, k * r.thermal[j], r.sn[j], sum, qg});
      const bool above = std::abs(r.sn[j]) > sum;
      if (above && !in) run_lo = g[j];
      if (above) best = std::max(best, std::log10(g[j] / run_lo));
      in = above;
    }
    c.value("result", "decades_SN_above_scaled_noise", best);
    const auto kl = kl_snr(p, t_obs);
    c.value("result", "rho2_SN", kl.rho2);
    c.value("result", "T_required_s", kl.T_required);
    if (cm.preset == "fig5" && t.given.empty())
      c.note("reference_value SN exceeds the scaled QG plus thermal sum over at least a decade [Fig. 5 caption]");
    if (cm.preset == "fig8" && t_obs == 1e4) {
      if (p.tau == 0.5) c.note("reference_value rho2_SN = 1.8 [Fig. 8 caption]");
      if (p.tau == 1.0) c.note("reference_value rho2_SN = 13 [Fig. 8 caption]");
    }
    return c;
  }
};

struct SingleContour {
  Common cm;
  std::string axis1 = "f_m:1e-3:1e-1:21", axis2 = "Lambda_ratio:0.1:100:21", taus = "0", thermal = "markov";

  void setup(CLI::App* a) {
    cm.opts.add(a, "axis1", axis1, "name:lo:hi:n, name in f_m, f_Lambda, Lambda_ratio, T");
    cm.opts.add(a, "axis2", axis2, "name:lo:hi:n");
    cm.opts.add(a, "taus", taus, "comma-separated delays, s");
    cm.opts.add(a, "thermal", thermal, "markov or coth")->check(CLI::IsMember({"markov", "coth"}));
  }

  Csv run() {
    const auto t = load_table("single", cm.preset, cm.sets, cm.tau);
    const auto p = single_params(t, thermal);
    const auto a1 = parse_axis("axis1", axis1), a2 = parse_axis("axis2", axis2);
    const auto tv = parse_list("taus", taus);
    const auto res = contour_sweep(p, single_axis(a1), single_axis(a2), tv);
    Csv c;
    header(c, "single-contour", cm, &t);
    c.note("T_required is the observation time for rho2_SN = 1; inf without self-gravity, nan on failure");
    c.columns = {"tau_s", "axis1_" + a1.name, "axis2_" + a2.name, "T_required_s"};
    const std::size_t n2 = a2.values.size();
    std::vector<std::string> bad;
    for (std::size_t k = 0; k < res.grids.size(); ++k) {
      const auto& G = res.grids[k];
      for (std::size_t i = 0; i < a1.values.size(); ++i)
        for (std::size_t j = 0; j < n2; ++j) c.rows.push_back({G.tau, a1.values[i], a2.values[j], G.T_required[i * n2 + j]});
      for (const auto& f : G.failures)
        bad.push_back("tau=" + num(G.tau) + ";" + a1.name + "=" + num(a1.values[f.index / n2]) + ";" + a2.name + "=" +
                      num(a2.values[f.index % n2]) + ": " + f.message);
    }
    for (const auto& b : bad) c.note("failed_cell " + b);
    return c;
  }
};

struct Nonstationary {
  Common cm;
  double t_max = 0;
  std::size_t n = 301;
  std::string kernel = "physical";
  bool reference = true;

  void setup(CLI::App* a) {
    cm.opts.add(a, "t-max", t_max, "last time after switch-off, s (0: 3 pi/omega_m)");
    cm.opts.add(a, "n", n, "time points");
    cm.opts.add(a, "kernel", kernel, "physical or literal")->check(CLI::IsMember({"physical", "literal"}));
    cm.opts.flag(a, "reference", reference, "also evaluate omega_SN = 0");
  }

  Csv run() {
    const auto t = load_table("single", cm.preset, cm.sets, cm.tau);
    const auto p = single_params(t, "markov");
    if (n < 2) throw ConfigError("n must be at least 2");
    const double hi = t_max > 0 ? t_max : 1.5 * tp / p.omega_m;
    std::vector<double> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i] = hi * static_cast<double>(i) / static_cast<double>(n - 1);
    NonstationaryOptions o;
    o.kernel = kernel == "literal" ? ConditioningKernel::literal : ConditioningKernel::physical;
    o.with_reference = reference;
    VarianceTrace tr;
    try {
      tr = conditional_variance_trace(p, ts, o);
    } catch (const ParameterError&) {
      throw;
    } catch (const std::exception& e) {
      for (std::size_t i = 0; i < n; ++i) {
        try {
          conditional_variance_trace(p, {ts[i]}, o);
        } catch (const std::exception& e2) {
          throw CellFailure("index=" + std::to_string(i) + ";t_s=" + num(ts[i]), e2.what());
        }
      }
      throw CellFailure("grid", e.what());
    }
    Csv c;
    header(c, "nonstationary", cm, &t);
    c.note("units m^2; zero_point = v_total/(hbar/2 M omega_m)");
    c.value("derived", "x_zp2_m2", tr.x_zp2);
    c.value("derived", "omega_q_rad_s", p.omega_q());
    const double period = oscillation_period(ts, tr.v_quantum, tp / 2 / p.omega_q());
    c.value("result", "quantum_oscillation_period_s", period);
    c.value("result", "pi_over_omega_q_s", tp / 2 / p.omega_q());
    c.note("reference_value quantum part oscillates with period pi/omega_Q [Fig. 9 caption]");
    if (p.zeta == tp / 4) {
      const double ric = stationary_variance_riccati(p);
      c.value("result", "stationary_variance_riccati_m2", ric);
      c.value("result", "v_total_0_relative_to_riccati", tr.v_total[0] / ric - 1);
    }
    if (reference) {
      double dev = 0;
      for (std::size_t i = 0; i < n; ++i) dev = std::max(dev, std::abs(tr.v_total[i] / tr.ref_total[i] - 1));
      c.value("result", "max_relative_SN_minus_QM", dev);
    }
    c.columns = {"t_s", "v_quantum", "v_classical", "v_total", "zero_point", "ref_quantum", "ref_classical", "ref_total"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < n; ++i)
      c.rows.push_back({ts[i], tr.v_quantum[i], tr.v_classical[i], tr.v_total[i], tr.zero_point[i],
                        reference ? tr.ref_quantum[i] : nan, reference ? tr.ref_classical[i] : nan,
                        reference ? tr.ref_total[i] : nan});
    return c;
  }
};

struct MutualSpectrum {
  Common cm;
  std::size_t n_log = 2000, n_peak = 2001;

  void setup(CLI::App* a) {
    cm.opts.add(a, "n-log", n_log, "log-spaced points over [f_m/10, 10 f_m]");
    cm.opts.add(a, "n-peak", n_peak, "points across the normal modes");
  }

  Csv run() {
    const auto t = load_table("mutual", cm.preset, cm.sets, cm.tau);
    const auto p = mutual_params(t);
    const auto g = mutual_grid(p, n_log, n_peak);
    const auto q = locate(g, [&](const std::vector<double>& w) { return qg_spectra(p, w); });
    const auto s = locate(g, [&](const std::vector<double>& w) { return ccsn_spectra(p, w); });
    const auto nv = locate(g, [&](const std::vector<double>& w) { return naive_sn_spectra(p, w); });
    const auto dev = locate(g, [&](const std::vector<double>& w) { return correlation_deviation(p, w); });
    const auto sh = locate(g, [&](const std::vector<double>& w) { return sbb_relative_shift(p, w); });
    Csv c;
    header(c, "mutual-spectrum", cm, &t);
    c.value("derived", "omega_g_rad_s", p.omega_g_resolved());
    c.value("derived", "omega_QA_rad_s", p.omega_QA());
    c.value("derived", "omega_minus_rad_s", p.omega_minus());
    c.value("derived", "n_th_c", p.n_th_A());
    double peak = 0, worst = 0;
    const auto [lo, hi] = peak_window(p);
    for (std::size_t j = 0; j < g.size(); ++j) {
      peak = std::max(peak, q.C_AB[j]);
      if (g[j] >= lo && g[j] <= hi) worst = std::max(worst, std::abs(dev[j]));
    }
    const double L2 = std::pow(p.A.Lambda / p.A.omega_m, 2);
    c.value("result", "C_QG_max", peak);
    c.value("result", "C_QG_peak_formula", L2 / (L2 + 4 * p.n_th_A()));
    c.value("result", "max_abs_C_rel_dev_peak_window", worst);
    c.note("reference_value at tau = 0 QG and CCSN correlations coincide [Fig. 11 caption]");
    c.note("reference_value at tau = 6 s the deviation stays below 1e-4 near omega_pm [Fig. 12 caption]");
    c.columns = {"f_Hz",     "S_AA_QG",  "S_BB_QG",     "ReS_AB_QG",  "ImS_AB_QG", "C_QG",     "S_AA_SN",
                 "S_BB_SN",  "ReS_AB_SN", "ImS_AB_SN", "C_SN",       "C_naive",   "C_rel_dev", "S_BB_rel_shift"};
    for (std::size_t j = 0; j < g.size(); ++j)
      c.rows.push_back({g[j] / tp, q.S_AA[j], q.S_BB[j], q.S_AB[j].real(), q.S_AB[j].imag(), q.C_AB[j], s.S_AA[j],
                        s.S_BB[j], s.S_AB[j].real(), s.S_AB[j].imag(), s.C_AB[j], nv.C_AB[j], dev[j], sh[j]});
    return c;
  }
};

struct MutualContourCmd {
  Common cm;
  std::string lambda = "f_Lambda:10:1e4:7", temperature = "T:1:300:7", taus = "0,0.001,0.1,1";

  void setup(CLI::App* a) {
    cm.opts.add(a, "lambda", lambda, "f_Lambda:lo:hi:n, Hz");
    cm.opts.add(a, "temperature", temperature, "T:lo:hi:n, K");
    cm.opts.add(a, "taus", taus, "comma-separated delays of A, s");
  }

  Csv run() {
    const auto t = load_table("mutual", cm.preset, cm.sets, cm.tau);
    const auto p = mutual_params(t);
    const auto la = parse_axis("lambda", lambda), te = parse_axis("temperature", temperature);
    if (la.name != "f_Lambda" || te.name != "T") throw ConfigError("mutual axes are f_Lambda and T");
    std::vector<double> L = la.values;
    for (auto& x : L) x *= tp;
    const auto tv = parse_list("taus", taus);
    const auto r = mutual_contour(p, L, te.values, tv);
    Csv c;
    header(c, "mutual-contour", cm, &t);
    c.note("T_obs = (integral over omega > 0 of |Delta S_BB/S_BB|^2 d omega/2 pi)^-1; nan on failure");
    c.columns = {"tau_s", "f_Lambda_Hz", "T_K", "T_obs_s"};
    const std::size_t nT = te.values.size();
    for (std::size_t k = 0; k < tv.size(); ++k)
      for (std::size_t i = 0; i < L.size(); ++i)
        for (std::size_t j = 0; j < nT; ++j) c.rows.push_back({tv[k], la.values[i], te.values[j], r.T_obs[k][i * nT + j]});
    for (const auto& f : r.failures) c.note("failed_cell index=" + std::to_string(f.index) + ": " + f.message);
    return c;
  }
};

struct McValidate {
  Common cm;
  std::string system = "single", model = "ccsn";
  std::size_t trajectories = 64, segment = 1u << 15, segments = 1, bin_average = 8, n_times = 13;
  double steps_per_period = 0, t_max = 1.5;
  std::uint64_t seed = 7;

  void setup(CLI::App* a) {
    cm.opts.add(a, "system", system, "single, mutual or variance")->check(CLI::IsMember({"single", "mutual", "variance"}));
    cm.opts.add(a, "model", model, "ccsn or qg (mutual)")->check(CLI::IsMember({"ccsn", "qg"}));
    cm.opts.add(a, "trajectories", trajectories, "number of trajectories");
    cm.opts.add(a, "steps-per-period", steps_per_period, "time steps per fastest period (0: 64, variance 256)");
    cm.opts.add(a, "segment", segment, "Welch segment length, samples");
    cm.opts.add(a, "segments", segments, "segments per trajectory");
    cm.opts.add(a, "bin-average", bin_average, "raw bins per output bin");
    cm.opts.add(a, "seed", seed, "RNG seed");
    cm.opts.add(a, "t-max", t_max, "variance: last time after switch-off, s");
    cm.opts.add(a, "n-times", n_times, "variance: number of times");
  }

  MCConfig config(double fast, double spp_default) const {
    auto c = preset_mc_config(fast, trajectories, steps_per_period > 0 ? steps_per_period : spp_default);
    c.segment = segment;
    c.duration = c.dt * static_cast<double>(segment * segments);
    c.bin_average = bin_average;
    c.seed = seed;
    return c;
  }

  static void summary(Csv& c, const std::string& name, const BinComparison& b) {
    c.value("result", name + "_fraction_within_3sigma", b.fraction);
    c.value("result", name + "_chi2_per_bin", b.chi2_per_bin);
  }

  static std::vector<double> expect(const MCConfig& c, const std::vector<double>& S, double white) {
    const auto e = expected_periodogram(std::vector<std::complex<double>>(S.begin(), S.end()), white, c);
    std::vector<double> r;
    for (auto z : e) r.push_back(z.real());
    return r;
  }

  Csv run() {
    Csv c;
    c.note("rng ChaCha20 stream per trajectory (seed, trajectory index); Hann-window Welch, no overlap");
    if (system == "single" || system == "variance") {
      if (cm.preset.empty()) cm.preset = "mc-single";
      if (system == "variance" &&
          std::none_of(cm.sets.begin(), cm.sets.end(), [](const std::string& x) { return x.rfind("f_sn=", 0) == 0; }))
        cm.sets.insert(cm.sets.begin(), "f_sn=0");
      const auto t = load_table("single", cm.preset, cm.sets, cm.tau);
      const auto p = single_params(t, "markov");
      if (system == "variance") {
        const auto cfg = config(p.omega_q(), 256);
        if (n_times < 1) throw ConfigError("n-times must be positive");
        std::vector<double> ts;
        for (std::size_t i = 0; i < n_times; ++i) {
          const double x = n_times == 1 ? 0.0 : t_max * static_cast<double>(i) / static_cast<double>(n_times - 1);
          ts.push_back(cfg.dt * std::round(x / cfg.dt));
        }
        const auto r = simulate_conditional_variance(p, cfg, ts);
        NonstationaryOptions o;
        o.with_reference = false;
        const auto tr = conditional_variance_trace(p, ts, o);
        header(c, "mc-validate", cm, &t);
        c.value("derived", "dt_s", cfg.dt);
        std::size_t within = 0;
        c.columns = {"t_s", "v_mc", "v_err", "v_expected", "z"};
        for (std::size_t i = 0; i < ts.size(); ++i) {
          const double z = (r.variance[i] - tr.v_total[i]) / r.std_err[i];
          within += std::abs(z) <= 3;
          c.rows.push_back({ts[i], r.variance[i], r.std_err[i], tr.v_total[i], z});
        }
        c.value("result", "fraction_within_3sigma", static_cast<double>(within) / static_cast<double>(ts.size()));
        return c;
      }
      const auto cfg = config(p.omega_q(), 64);
      const auto r = simulate_single(p, cfg);
      const auto g = omega_grid(r.config);
      const auto e = expect(r.config, spectrum_ccsn(p, g).total, 1.0);
      const auto b = compare_bins(r.xi.mean, r.xi.std_err, e);
      header(c, "mc-validate", cm, &t);
      c.value("derived", "dt_s", r.config.dt);
      c.note("derived delay_steps = " + std::to_string(r.delay_steps));
      c.value("derived", "lag_bias_s", r.lag_bias);
      summary(c, "S", b);
      c.columns = {"f_Hz", "S_mc", "S_err", "S_expected", "z"};
      for (std::size_t j = 0; j < e.size(); ++j)
        c.rows.push_back({r.xi.omega[j] / tp, r.xi.mean[j], r.xi.std_err[j], e[j], (r.xi.mean[j] - e[j]) / r.xi.std_err[j]});
      return c;
    }
    if (cm.preset.empty()) cm.preset = "mc-mutual";
    const auto t = load_table("mutual", cm.preset, cm.sets, cm.tau);
    const auto p = mutual_params(t);
    const auto mm = model == "qg" ? MutualModel::qg : MutualModel::ccsn;
    const auto cfg = config(std::max(p.A.omega_m, p.B.omega_m), 64);
    const auto r = simulate_mutual(p, cfg, mm);
    const auto g = omega_grid(r.config);
    const auto S = mm == MutualModel::qg ? qg_spectra(p, g) : ccsn_spectra(p, g);
    const auto ea = expect(r.config, S.S_AA, 1.0), eb = expect(r.config, S.S_BB, 1.0);
    const auto ex = expected_periodogram(S.S_AB, 0.0, r.config);
    std::vector<double> xr, xi, er, ei, ec;
    for (std::size_t j = 0; j < ex.size(); ++j) {
      xr.push_back(r.S_AB.mean[j].real());
      xi.push_back(r.S_AB.mean[j].imag());
      er.push_back(ex[j].real());
      ei.push_back(ex[j].imag());
      ec.push_back(std::norm(ex[j]) / (ea[j] * eb[j]));
    }
    header(c, "mc-validate", cm, &t);
    c.value("derived", "dt_s", r.config.dt);
    c.note("derived delay_steps_A = " + std::to_string(r.delay_steps_A));
    c.value("derived", "lag_bias_s", r.lag_bias);
    summary(c, "S_AA", compare_bins(r.S_AA.mean, r.S_AA.std_err, ea));
    summary(c, "S_BB", compare_bins(r.S_BB.mean, r.S_BB.std_err, eb));
    summary(c, "ReS_AB", compare_bins(xr, r.S_AB.std_err_re, er));
    summary(c, "ImS_AB", compare_bins(xi, r.S_AB.std_err_im, ei));
    summary(c, "C_AB", compare_bins(r.C_AB.mean, r.C_AB.std_err, ec));
    c.columns = {"f_Hz",      "S_AA_mc",    "S_AA_err",   "S_AA_expected", "S_BB_mc",  "S_BB_err",
                 "S_BB_expected", "ReS_AB_mc", "ReS_AB_err", "ReS_AB_expected", "ImS_AB_mc", "ImS_AB_err",
                 "ImS_AB_expected", "C_mc",    "C_err",      "C_lo95",         "C_hi95",   "C_expected"};
    for (std::size_t j = 0; j < ea.size(); ++j)
      c.rows.push_back({r.S_AA.omega[j] / tp, r.S_AA.mean[j], r.S_AA.std_err[j], ea[j], r.S_BB.mean[j], r.S_BB.std_err[j],
                        eb[j], xr[j], r.S_AB.std_err_re[j], er[j], xi[j], r.S_AB.std_err_im[j], ei[j], r.C_AB.mean[j],
                        r.C_AB.std_err[j], r.C_lo[j], r.C_hi[j], ec[j]});
    return c;
  }
};

Csv show_presets(const Common& cm) {
  Csv c;
  header(c, "show-presets", cm, nullptr);
  for (const auto& p : all_presets()) {
    double M = 0, P = 0, F = 0, lam = 0;
    for (const auto& e : p.entries) {
      if (e.key == "M") M = e.value;
      if (e.label == "input-cavity power") P = e.value;
      if (e.label == "cavity finesse") F = e.value;
      if (e.label == "optical wavelength") lam = e.value;
    }
    if (P > 0) c.value("derived", p.name + "_Lambda_from_optics_Hz", lambda_from_optics(M, {P, F, lam}) / tp);
  }
  c.columns = {"preset", "kind", "key", "label", "value", "unit", "source", "used"};
  for (const auto& p : all_presets())
    for (const auto& e : p.entries)
      c.text_rows.push_back({p.name, p.kind, e.key, "\"" + e.label + "\"", num(e.value), e.unit, "\"" + e.source + "\"",
                             e.used ? "yes" : "informational"});
  return c;
}

// Replays '# param' and '# option' lines of a previous output as arguments.
std::vector<std::string> config_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::vector<std::string> a;
  std::string line;
  auto split = [](const std::string& s) {
    const auto eq = s.find(" = ");
    if (eq == std::string::npos) throw ConfigError("malformed config line '" + s + "'");
    return std::pair{s.substr(0, eq), s.substr(eq + 3)};
  };
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) != 0) {
      if (!line.empty() && line[0] != '#') break;
      continue;
    }
    const std::string body = line.substr(2);
    if (body.rfind("preset ", 0) == 0) {
      a.push_back("--preset");
      a.push_back(body.substr(7));
    } else if (body.rfind("param ", 0) == 0) {
      const auto [k, v] = split(body.substr(6));
      a.push_back("--set");
      a.push_back(k + "=" + v);
    } else if (body.rfind("option ", 0) == 0) {
      const auto [k, v] = split(body.substr(7));
      a.push_back("--" + k);
      a.push_back(v);
    }
  }
  return a;
}

void error_line(std::ostream& err, int code, const std::string& kind, const std::string& sub, const std::string& cell,
                const std::string& msg) {
  nlohmann::json j = {{"error", kind}, {"exit", code}, {"subcommand", sub}, {"cell", cell}, {"message", msg}};
  err << "error: " << j.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::string sub_name;
  try {
    if (const char* e = std::getenv(threads_env)) {
      const std::string s = e;
      std::size_t pos = 0;
      int n = 0;
      try {
        n = std::stoi(s, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != s.size() || n < 0) throw ConfigError(std::string(threads_env) + " must be a non-negative integer");
      if (n > 0) omp_set_num_threads(n);
    }

    // splice --config FILE in front of the remaining arguments
    std::vector<std::string> args;
    for (int i = 0; i < argc; ++i) args.emplace_back(argv[i]);
    for (std::size_t i = 2; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) {
        const auto extra = config_args(args[i + 1]);
        const std::string path = args[i + 1];
        args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
        args.insert(args.begin() + 2, extra.begin(), extra.end());
        args.push_back("--config");
        args.push_back(path);
        break;
      }
    }

    CLI::App app("Signatures of causal-conditional Schroedinger-Newton gravity", "ccsn");
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    SingleSpectrum ss;
    SingleBudget sb;
    SingleContour sc;
    Nonstationary ns;
    MutualSpectrum ms;
    MutualContourCmd mc;
    McValidate mv;
    Common sp;
    std::map<CLI::App*, std::pair<Common*, std::function<Csv()>>> subs;
    auto add = [&](const std::string& name, const std::string& desc, Common& cm, const std::string& preset,
                   std::function<void(CLI::App*)> setup, std::function<Csv()> fn, bool physics = true) {
      CLI::App* a = app.add_subcommand(name, desc);
      cm.preset = preset;
      if (physics) {
        a->add_option("--preset", cm.preset, "parameter preset (see show-presets)")->capture_default_str();
        a->add_option("--set", cm.sets, "override a parameter, key=value in SI units")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
        a->add_option("--tau", cm.tau, "measurement delay, s");
        a->add_option("--config", cm.config, "replay the header of a previous output");
      }
      a->add_option("-o,--output", cm.output, "output file (default stdout)");
      if (setup) setup(a);
      subs[a] = {&cm, std::move(fn)};
    };
    add("single-spectrum", "measured-quadrature spectrum of one mass", ss.cm, "fig5",
        [&](CLI::App* a) { ss.setup(a); }, [&] { return ss.run(); });
    add("single-budget", "force-referred SN budget against the resolvable noise", sb.cm, "fig5",
        [&](CLI::App* a) { sb.setup(a); }, [&] { return sb.run(); });
    add("single-contour", "observation time for rho2 = 1 over two parameters", sc.cm, "fig5",
        [&](CLI::App* a) { sc.setup(a); }, [&] { return sc.run(); });
    add("nonstationary", "conditional variance after the measurement is switched off", ns.cm, "fig9",
        [&](CLI::App* a) { ns.setup(a); }, [&] { return ns.run(); });
    add("mutual-spectrum", "two gravitating mirrors: spectra and correlation", ms.cm, "table5",
        [&](CLI::App* a) { ms.setup(a); }, [&] { return ms.run(); });
    add("mutual-contour", "observation time to separate CCSN from QG", mc.cm, "table5",
        [&](CLI::App* a) { mc.setup(a); }, [&] { return mc.run(); });
    add("mc-validate", "Monte Carlo against the analytic spectra (scaled parameters)", mv.cm, "",
        [&](CLI::App* a) { mv.setup(a); }, [&] { return mv.run(); });
    add("show-presets", "list the preset parameter tables", sp, "", nullptr, [&] { return show_presets(sp); }, false);

    std::vector<const char*> av;
    for (const auto& s : args) av.push_back(s.c_str());
    try {
      app.parse(static_cast<int>(av.size()), av.data());
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      for (auto* s : app.get_subcommands()) sub_name = s->get_name();
      std::smatch m;
      const std::string what = e.what();
      std::regex_search(what, m, std::regex("--[A-Za-z][A-Za-z-]*"));
      error_line(err, parse_error, "parse", sub_name, m.empty() ? "" : m.str(), what);
      return parse_error;
    }

    CLI::App* chosen = app.get_subcommands().front();
    sub_name = chosen->get_name();
    auto& [cm, fn] = subs.at(chosen);
    const Csv csv = fn();
    if (cm->output.empty()) {
      csv.write(out);
    } else {
      std::ofstream f(cm->output);
      if (!f) throw ConfigError("cannot write '" + cm->output + "'");
      csv.write(f);
    }
    // failed cells are reported after the data is written
    int code = ok;
    for (const auto& m : csv.meta)
      if (m.rfind("failed_cell ", 0) == 0) {
        const std::string body = m.substr(12);
        const auto colon = body.find(": ");
        error_line(err, numerical_error, "numerical", sub_name, body.substr(0, colon),
                   colon == std::string::npos ? "" : body.substr(colon + 2));
        code = numerical_error;
      }
    return code;
  } catch (const ConfigError& e) {
    error_line(err, parse_error, "parse", sub_name, e.where, e.what());
    return parse_error;
  } catch (const ParameterError& e) {
    error_line(err, parse_error, "parameter", sub_name, "", e.what());
    return parse_error;
  } catch (const CellFailure& e) {
    error_line(err, numerical_error, "numerical", sub_name, e.cell, e.what());
    return numerical_error;
  } catch (const std::exception& e) {
    error_line(err, numerical_error, "numerical", sub_name, "", e.what());
    return numerical_error;
  }
}

}  // namespace ccsn::cli
