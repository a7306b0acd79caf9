// Adaptive quadrature of ExpRational integrands on the real line.
//
// Used to cross-check the residue path and for integrands that are only known
// pointwise (coth thermal spectra).
#pragma once

#include "ccsn/freq_algebra.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <functional>
#include <set>

namespace ccsn {

struct QuadratureOptions {
  double rel_tol = 1e-10;
  unsigned max_depth = 15;
};

/// Breakpoints that resolve each pole's Lorentzian: Re p ± k·|Im p|.
inline std::vector<double> pole_breakpoints(const std::vector<Cplx<double>>& poles) {
  std::set<double> pts;
  for (const auto& p : poles) {
    const double w = std::abs(p.imag());
    pts.insert(p.real());
    for (double k : {1.0, 10.0, 100.0}) {
      pts.insert(p.real() - k * w);
      pts.insert(p.real() + k * w);
    }
  }
  return {pts.begin(), pts.end()};
}

/// ∫dω/2π f(ω) over the real line for a pointwise integrand.
inline IntegralResult<double> integrate_pointwise(const std::function<Cplx<double>(double)>& f,
                                                  std::vector<double> breaks,
                                                  const QuadratureOptions& opt = {}) {
  using boost::math::quadrature::gauss_kronrod;
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  if (breaks.empty()) breaks.push_back(0.0);

  Cplx<double> total(0.0);
  double err = 0.0, l1 = 0.0;
  auto piece = [&](double a, double b) {
    double e = 0.0, l = 0.0;
    if (std::isinf(a) || std::isinf(b)) {
      total += gauss_kronrod<double, 61>::integrate(f, a, b, opt.max_depth, opt.rel_tol, &e, &l);
    } else {
      // boost compares the [-1, 1] error with a tolerance scaled by the half width,
      // which stalls on narrow pieces; hand it the mapped integrand instead
      const double m = 0.5 * (a + b), h = 0.5 * (b - a);
      auto g = [&](double t) { return f(m + h * t) * h; };
      total += gauss_kronrod<double, 61>::integrate(g, -1.0, 1.0, opt.max_depth, opt.rel_tol, &e, &l);
    }
    err += e;
    l1 += l;
  };
  const double inf = std::numeric_limits<double>::infinity();
  piece(-inf, breaks.front());
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) piece(breaks[i], breaks[i + 1]);
  piece(breaks.back(), inf);

  const double two_pi = constants::two_pi;
  if (err > 100.0 * opt.rel_tol * std::max(l1, std::abs(total)) && err > 1e-300)
    throw QuadratureNotConverged("adaptive quadrature log10 relative error " +
                                 std::to_string(std::log10(err / std::max(l1, std::abs(total)))));
  return {total / two_pi, err / two_pi};
}

/// Quadrature path for ExpRational integrands.
template <class R>
IntegralResult<double> integrate_quadrature(const ExpRational<R>& f, const QuadratureOptions& opt = {}) {
  std::vector<Cplx<double>> poles;
  for (const auto& t : f.terms) {
    if (t.rational.excess() < 1) throw SlowDecay("quadrature: term not decaying");
    for (const auto& p : t.rational.poles) poles.push_back(cplx_cast<double>(p));
  }
  const auto fd = f.template cast<double>();
  auto breaks = pole_breakpoints(poles);
  // keep the mapped infinite pieces far out, where oscillatory tails are small
  double scale = 1.0;
  for (const auto& p : poles) scale = std::max(scale, std::abs(p));
  for (double k : {1e2, 1e4}) {
    breaks.push_back(-k * scale);
    breaks.push_back(k * scale);
  }
  return integrate_pointwise([&](double w) { return fd(w); }, breaks, opt);
}

}  // namespace ccsn
