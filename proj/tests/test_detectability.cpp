#include "doctest.h"

#include "ccsn/detectability.hpp"

#include <algorithm>
#include <cmath>

using namespace ccsn;

namespace {

constexpr double tp = constants::two_pi;

SingleMassParams base(double Q, double T, double lambda_hz, double tau) {
  SingleMassParams p;
  p.M = 1e-6;
  p.omega_m = tp * 0.01;
  p.omega_sn = tp * 0.057;
  p.gamma = p.omega_m / (2 * Q);
  p.T = T;
  p.Lambda = tp * lambda_hz;
  p.tau = tau;
  return p;
}

}  // namespace

TEST_CASE("no SN, no signal") {
  auto p = base(1e7, 1e-3, 0.057, 0.5);
  p.omega_sn = 0;
  CHECK(kl_snr(p, 1e4).rho2 == 0.0);
  CHECK(std::isinf(kl_snr(p, 1e4).T_required));
}

TEST_CASE("residue and quadrature paths agree") {
  for (double tau : {0.0, 0.3, 1.0}) {
    const auto p = base(3e6, 300, 350, tau);
    const double a = kl_snr(p, 1e4).rho2, b = kl_snr_quadrature(p, 1e4).rho2;
    CHECK(std::abs(a / b - 1) < 1e-6);
  }
  const auto p = base(1e7, 1e-3, 0.057, 0.0);
  CHECK(std::abs(kl_snr(p, 1e4).rho2 / kl_snr_quadrature(p, 1e4).rho2 - 1) < 1e-6);
}

TEST_CASE("linear in observation time and unit at T_required") {
  const auto p = base(3e6, 300, 350, 0.5);
  const auto a = kl_snr(p, 1e4), b = kl_snr(p, 2e4);
  CHECK(b.rho2 == 2 * a.rho2);
  CHECK(std::abs(kl_snr(p, a.T_required).rho2 - 1) < 1e-6);
}

TEST_CASE("monotone in temperature and thermal occupation") {
  double prev = 1e300;
  for (double T : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
    const double r = kl_snr(base(1e7, T, 0.2, 0.5), 1e4).rho2;
    CHECK(r <= prev);
    prev = r;
  }
  prev = 1e300;
  for (double n : {1.0, 10.0, 100.0, 1e3}) {
    auto p = base(1e7, 0, 0.2, 0.0);
    p.n_th_pinned = n;
    const double r = kl_snr(p, 1e4).rho2;
    CHECK(r <= prev);
    prev = r;
  }
}

TEST_CASE("minimum observation time estimates") {
  const auto p = base(1e7, 1e-3, 0.057, 0);
  const auto t = t_min_estimates(p);
  CHECK(std::abs(t.T_thermal / 3e3 - 1) < 0.3);
  CHECK(t.T_quantum == doctest::Approx(1 / p.omega_m));
  auto cold = p;
  cold.T = 0;
  CHECK(t_min_estimates(cold).T_thermal == 0.0);
}

TEST_CASE("contour sweep sentinels and determinism") {
  auto p = base(1e7, 1e-3, 0.057, 0);
  SweepAxis a1{AxisKind::lambda_over_omega_m, {0.5, 2, 8}};
  SweepAxis a2{AxisKind::omega_m, {tp * 0.003, tp * 0.01, tp * 0.03}};
  const auto s = contour_sweep(p, a1, a2, {0.0, 0.5}, Exec::serial);
  const auto q = contour_sweep(p, a1, a2, {0.0, 0.5}, Exec::parallel);
  REQUIRE(s.grids.size() == 2);
  for (std::size_t g = 0; g < 2; ++g) {
    CHECK(s.grids[g].failures.empty());
    CHECK(s.grids[g].T_required == q.grids[g].T_required);
  }
  p.omega_sn = 0;
  const auto z = contour_sweep(p, a1, a2, {0.0}, Exec::parallel);
  for (double v : z.grids[0].T_required) CHECK(std::isinf(v));
}

TEST_CASE("no-delay contour has a region below 1e3 s and 1e4 s") {
  const auto p = base(1e7, 1e-3, 0.057, 0);
  SweepAxis a1{AxisKind::lambda_over_omega_m, {}};
  SweepAxis a2{AxisKind::omega_m, {}};
  for (int k = 0; k < 9; ++k) a1.values.push_back(std::pow(10.0, -1 + 3 * k / 8.0));
  for (int k = 0; k < 9; ++k) a2.values.push_back(tp * std::pow(10.0, -3 + 2 * k / 8.0));
  const auto r = contour_sweep(p, a1, a2, {0.0});
  const auto& v = r.grids[0].T_required;
  const double best = *std::min_element(v.begin(), v.end());
  CHECK(best < 1e3);
  CHECK(std::any_of(v.begin(), v.end(), [](double x) { return x > 1e4; }));
}

TEST_CASE("delayed contour: longer delay shortens the required time at strong measurement") {
  const auto p = base(1e7, 300, 350, 0);
  SweepAxis a1{AxisKind::lambda, {tp * 350}};
  SweepAxis a2{AxisKind::temperature, {300}};
  const auto r = contour_sweep(p, a1, a2, {0.25, 0.5, 0.75, 1.0});
  for (std::size_t k = 1; k < r.grids.size(); ++k) CHECK(r.grids[k].T_required[0] < r.grids[k - 1].T_required[0]);
}

TEST_CASE("coth thermal model is close to the Markov one at high temperature") {
  auto p = base(3e6, 300, 350, 0.5);
  const double a = kl_snr(p, 1e4).rho2;
  p.thermal = ThermalModel::full_coth;
  CHECK(std::abs(kl_snr(p, 1e4).rho2 / a - 1) < 1e-6);
}
