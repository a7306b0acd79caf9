#include "doctest.h"

#include "ccsn/mc_oracle.hpp"
#include "ccsn/nonstationary.hpp"
#include "ccsn/presets.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace ccsn;

namespace {

constexpr double tp = constants::two_pi;

std::vector<double> expected_auto(const MCConfig& c, const std::vector<double>& S) {
  std::vector<std::complex<double>> v(S.begin(), S.end());
  const auto e = expected_periodogram(v, 1.0, c);
  std::vector<double> r;
  for (auto z : e) r.push_back(z.real());
  return r;
}

BinComparison single_vs(const SingleMassParams& p, const MCSingleResult& r, bool qm = false) {
  const auto g = omega_grid(r.config);
  const auto S = qm ? spectrum_qm(p, g) : spectrum_ccsn(p, g);
  return compare_bins(r.xi.mean, r.xi.std_err, expected_auto(r.config, S.total));
}

struct MutualCheck {
  BinComparison aa, bb, re, im;
  std::vector<double> C_expected;
};

MutualCheck mutual_vs(const MutualParams& p, const MCMutualResult& r, MutualModel model) {
  const auto g = omega_grid(r.config);
  const auto S = model == MutualModel::qg ? qg_spectra(p, g) : ccsn_spectra(p, g);
  const auto ea = expected_auto(r.config, S.S_AA), eb = expected_auto(r.config, S.S_BB);
  const auto ex = expected_periodogram(S.S_AB, 0.0, r.config);
  std::vector<double> xr, xi, er, ei;
  for (std::size_t j = 0; j < ex.size(); ++j) {
    xr.push_back(r.S_AB.mean[j].real());
    xi.push_back(r.S_AB.mean[j].imag());
    er.push_back(ex[j].real());
    ei.push_back(ex[j].imag());
  }
  MutualCheck m;
  m.aa = compare_bins(r.S_AA.mean, r.S_AA.std_err, ea);
  m.bb = compare_bins(r.S_BB.mean, r.S_BB.std_err, eb);
  m.re = compare_bins(xr, r.S_AB.std_err_re, er);
  m.im = compare_bins(xi, r.S_AB.std_err_im, ei);
  for (std::size_t j = 0; j < ex.size(); ++j) m.C_expected.push_back(std::norm(ex[j]) / (ea[j] * eb[j]));
  return m;
}

}  // namespace

TEST_CASE("config rules") {
  MCConfig c = preset_mc_config(tp, 1);
  CHECK_NOTHROW(c.validate(tp));
  for (double tau : {0.0, 0.2, 0.2037, 1.0 / 3}) {
    const auto d = c.delay_steps(tau);
    CHECK(std::abs(static_cast<double>(d) * c.dt - tau) <= c.dt / 2 + 1e-15);
  }
  auto bad = c;
  bad.dt = 1.0 / 40;
  CHECK_THROWS_AS(bad.validate(tp), ParameterError);
  bad = c;
  bad.segment = 1001;
  CHECK_THROWS_AS(bad.validate(tp), ParameterError);
  bad = c;
  bad.duration = c.dt * 10;
  CHECK_THROWS_AS(bad.validate(tp), ParameterError);
  CHECK(c.segments() == 1);
}

TEST_CASE("expected periodogram of a white spectrum is flat") {
  const auto c = preset_mc_config(tp, 1).resolved(tp);
  const auto g = omega_grid(c);
  const std::vector<std::complex<double>> S(g.size(), 2.5);
  for (auto z : expected_periodogram(S, 2.5, c)) CHECK(std::abs(z - 2.5) < 1e-12);
}

TEST_CASE("shot noise only") {
  auto p = preset_mc_single();
  p.omega_sn = 0;
  p.Lambda = 0;
  const auto r = simulate_single(p, preset_mc_config(p.omega_q(), 64));
  const auto b = compare_bins(r.xi.mean, r.xi.std_err, std::vector<double>(r.xi.mean.size(), 1.0));
  CHECK(b.fraction >= 0.97);
  CHECK(b.chi2_per_bin < 1.3);
}

TEST_CASE("single mass matches the analytic spectrum without delay") {
  const auto p = preset_mc_single();
  const auto r = simulate_single(p, preset_mc_config(p.omega_q(), 128));
  const auto b = single_vs(p, r);
  CHECK(b.fraction >= 0.95);
  CHECK(r.lag_bias == 0);
  // the injected self-gravity is resolved: standard QM is rejected
  CHECK(single_vs(p, r, true).fraction < 0.8);
}

TEST_CASE("single mass with a fifth-period delay") {
  auto p = preset_mc_single();
  p.tau = 0.2;
  const auto r = simulate_single(p, preset_mc_config(p.omega_q(), 128));
  CHECK(r.delay_steps == r.config.delay_steps(0.2));
  CHECK(single_vs(p, r).fraction >= 0.95);
}

TEST_CASE("QM limit") {
  auto p = preset_mc_single();
  p.omega_sn = 0;
  const auto r = simulate_single(p, preset_mc_config(p.omega_q(), 64));
  CHECK(single_vs(p, r).fraction >= 0.95);
}

TEST_CASE("determinism") {
  const auto p = preset_mc_single();
  auto c = preset_mc_config(p.omega_q(), 3);
  c.segment = 1u << 12;
  c.duration = c.dt * c.segment * 2;
  c.keep_record = 5000;
  const auto a = simulate_single(p, c);
  auto cs = c;
  cs.exec = Exec::serial;
  const auto b = simulate_single(p, cs);
  CHECK(a.record == b.record);
  CHECK(a.x_cond == b.x_cond);
  CHECK(a.xi.mean == b.xi.mean);
  CHECK(a.record.size() == 5000);
  auto c2 = c;
  c2.seed = c.seed + 1;
  CHECK(simulate_single(p, c2).record != a.record);
}

TEST_CASE("innovations are white") {
  auto p = preset_mc_single();
  p.omega_sn = 0;
  auto c = preset_mc_config(p.omega_q(), 4, 256);
  c.keep_record = c.segment;
  const auto r = simulate_conditional_variance(p, c, {0.0});
  REQUIRE(r.innovations.size() == c.segment);
  CHECK(ljung_box(r.innovations, 20).p_value > 0.01);
  // and the test has power against a correlated series
  std::vector<double> ar(r.innovations.size());
  double prev = 0;
  for (std::size_t k = 0; k < ar.size(); ++k) ar[k] = prev = 0.2 * prev + r.innovations[k];
  CHECK(ljung_box(ar, 20).p_value < 1e-6);
}

TEST_CASE("conditional variance after switch-off") {
  auto p = preset_mc_single();
  p.omega_sn = 0;
  const auto c = preset_mc_config(p.omega_q(), 64, 256);
  std::vector<double> ts;
  for (int i = 0; i <= 12; ++i) ts.push_back(c.dt * std::round(i * 0.125 / c.dt));
  const auto r = simulate_conditional_variance(p, c, ts);
  NonstationaryOptions o;
  o.with_reference = false;
  const auto tr = conditional_variance_trace(p, ts, o);
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(std::abs(r.variance[i] - tr.v_total[i]) < 3 * r.std_err[i]);
  CHECK_THROWS_AS(simulate_conditional_variance(preset_mc_single(), c, ts), ParameterError);
}

TEST_CASE("mutual QG matches the coupled spectra") {
  const auto p = preset_mc_mutual();
  const auto r = simulate_mutual(p, preset_mc_config(p.A.omega_m, 128), MutualModel::qg);
  const auto m = mutual_vs(p, r, MutualModel::qg);
  CHECK(m.aa.fraction >= 0.95);
  CHECK(m.bb.fraction >= 0.95);
  CHECK(m.re.fraction >= 0.95);
  CHECK(m.im.fraction >= 0.95);
}

TEST_CASE("mutual CCSN matches its spectra and QG without delay") {
  const auto p = preset_mc_mutual();
  const auto r = simulate_mutual(p, preset_mc_config(p.A.omega_m, 128), MutualModel::ccsn);
  const auto m = mutual_vs(p, r, MutualModel::ccsn);
  CHECK(m.aa.fraction >= 0.95);
  CHECK(m.bb.fraction >= 0.95);
  CHECK(m.re.fraction >= 0.95);
  const auto q = mutual_vs(p, r, MutualModel::qg);
  CHECK(q.aa.fraction >= 0.95);
  CHECK(q.bb.fraction >= 0.95);
  CHECK(q.re.fraction >= 0.95);
  CHECK(q.im.fraction >= 0.95);
}

TEST_CASE("mutual CCSN with delay") {
  auto p = preset_mc_mutual();
  p.A.tau = 0.2;
  const auto r = simulate_mutual(p, preset_mc_config(p.A.omega_m, 128), MutualModel::ccsn);
  const auto m = mutual_vs(p, r, MutualModel::ccsn);
  CHECK(m.aa.fraction >= 0.95);
  CHECK(m.bb.fraction >= 0.95);
  CHECK(m.re.fraction >= 0.95);
  CHECK(m.im.fraction >= 0.95);
}

TEST_CASE("no coupling: correlation consistent with zero") {
  auto p = preset_mc_mutual();
  p.omega_g = 0;
  const auto r = simulate_mutual(p, preset_mc_config(p.A.omega_m, 512), MutualModel::qg);
  // bins whose 95% interval excludes 0: consistent with a 5% binomial rate
  const double n = static_cast<double>(r.C_lo.size());
  double miss = 0;
  for (double lo : r.C_lo) miss += lo > 0;
  CHECK(miss <= 0.05 * n + 3 * std::sqrt(n * 0.05 * 0.95));
  CHECK(miss >= 0.05 * n - 3 * std::sqrt(n * 0.05 * 0.95));
}

TEST_CASE("correlation peak height") {
  const auto p = preset_mc_mutual();
  auto c = preset_mc_config(p.A.omega_m, 512);
  c.bin_average = 1;
  c.w_lo = 0.8 * p.A.omega_m;
  c.w_hi = 1.1 * p.A.omega_m;
  const auto r = simulate_mutual(p, c, MutualModel::qg);
  const auto m = mutual_vs(p, r, MutualModel::qg);
  const auto k = static_cast<std::size_t>(
      std::max_element(m.C_expected.begin(), m.C_expected.end()) - m.C_expected.begin());
  const double peak = asymptotic::qg_peak(p);
  CHECK(std::abs(r.C_AB.mean[k] - peak) < 3 * r.C_AB.std_err[k]);
  CHECK(r.C_lo[k] <= peak);
  CHECK(peak <= r.C_hi[k]);
  CHECK(std::abs(r.C_AB.omega[k] - p.omega_QA()) < 0.01 * p.A.omega_m);
}

TEST_CASE("invalid requests") {
  const auto p = preset_mc_mutual();
  CHECK_THROWS_AS(simulate_mutual(p, preset_mc_config(p.A.omega_m, 1), MutualModel::naive_sn), ParameterError);
  auto s = preset_mc_single();
  s.thermal = ThermalModel::full_coth;
  CHECK_THROWS_AS(simulate_single(s, preset_mc_config(s.omega_q(), 1)), ParameterError);
}
