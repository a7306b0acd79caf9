// Serial reference against the OpenMP kernels.  Arg 0 = serial, 1 = parallel.
#include "ccsn/detectability.hpp"
#include "ccsn/mc_oracle.hpp"
#include "ccsn/mutual.hpp"
#include "ccsn/nonstationary.hpp"
#include "ccsn/presets.hpp"
#include "ccsn/single_mass.hpp"

#include <benchmark/benchmark.h>

using namespace ccsn;

namespace {

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::parallel : Exec::serial; }

void BM_single_spectrum(benchmark::State& s) {
  const auto p = preset_fig8(0.5);
  const auto g = make_grid(p);
  for (auto _ : s) benchmark::DoNotOptimize(spectrum_ccsn(p, g, Units::shot, exec_of(s)));
  s.SetItemsProcessed(static_cast<long>(s.iterations() * g.size()));
}

void BM_contour(benchmark::State& s) {
  const auto p = preset_fig8(0);
  SweepAxis a{AxisKind::omega_m, {}}, b{AxisKind::lambda_over_omega_m, {}};
  for (int i = 0; i < 8; ++i) {
    a.values.push_back(constants::two_pi * 1e-3 * std::pow(10.0, i / 3.5));
    b.values.push_back(0.1 * std::pow(10.0, i / 2.0));
  }
  for (auto _ : s) benchmark::DoNotOptimize(contour_sweep(p, a, b, {0.0, 1.0}, exec_of(s)));
}

void BM_variance_trace(benchmark::State& s) {
  const auto p = preset_fig9();
  std::vector<double> ts(200);
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = 0.15 * static_cast<double>(i);
  NonstationaryOptions o;
  o.exec = exec_of(s);
  for (auto _ : s) benchmark::DoNotOptimize(conditional_variance_trace(p, ts, o));
}

void BM_mutual_spectra(benchmark::State& s) {
  const auto p = preset_table5();
  const auto g = mutual_grid(p, 500, 501);
  for (auto _ : s) benchmark::DoNotOptimize(ccsn_spectra(p, g, exec_of(s)));
  s.SetItemsProcessed(static_cast<long>(s.iterations() * g.size()));
}

void BM_mc_single(benchmark::State& s) {
  const auto p = preset_mc_single();
  auto c = preset_mc_config(p.omega_q(), 16);
  c.exec = exec_of(s);
  for (auto _ : s) benchmark::DoNotOptimize(simulate_single(p, c));
  s.SetItemsProcessed(static_cast<long>(s.iterations() * 16 * c.segment));
}

void BM_mc_mutual(benchmark::State& s) {
  const auto p = preset_mc_mutual();
  auto c = preset_mc_config(p.A.omega_m, 16);
  c.exec = exec_of(s);
  for (auto _ : s) benchmark::DoNotOptimize(simulate_mutual(p, c, MutualModel::ccsn));
  s.SetItemsProcessed(static_cast<long>(s.iterations() * 16 * c.segment));
}

}  // namespace

BENCHMARK(BM_single_spectrum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_contour)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_variance_trace)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mutual_spectra)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mc_single)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mc_mutual)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
