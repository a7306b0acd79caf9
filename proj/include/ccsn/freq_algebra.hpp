// Rational functions of frequency times delay exponentials e^{iωa}.
//
// Fourier convention F(ω) = ∫ e^{iωt} f(t) dt, so causal responses have their
// poles in the lower half plane and e^{iωa}F(ω) is f shifted to t − a.
#pragma once

#include "ccsn/numeric.hpp"

#include <algorithm>
#include <map>
#include <vector>

namespace ccsn {

struct AlgebraError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Two poles closer than the clustering tolerance when multiple poles are disallowed,
/// or a pole on the real axis.
struct DegenerateDenominator : AlgebraError {
  using AlgebraError::AlgebraError;
};
/// A term with a polynomial part handed to the causal-part operator.
struct NonProperTerm : AlgebraError {
  using AlgebraError::AlgebraError;
};
/// Integrand that does not decay fast enough for the real-line integral to exist.
struct SlowDecay : AlgebraError {
  using AlgebraError::AlgebraError;
};
struct QuadratureNotConverged : AlgebraError {
  using AlgebraError::AlgebraError;
};

// ---------------------------------------------------------------------------
// Polynomials, ascending coefficients.

template <class R>
using Poly = std::vector<Cplx<R>>;

template <class R>
Poly<R> poly_from_roots(const std::vector<Cplx<R>>& roots, Cplx<R> lead = Cplx<R>(R(1))) {
  Poly<R> p{lead};
  for (const auto& r : roots) {
    Poly<R> q(p.size() + 1, Cplx<R>(R(0)));
    for (std::size_t i = 0; i < p.size(); ++i) {
      q[i + 1] += p[i];
      q[i] -= r * p[i];
    }
    p.swap(q);
  }
  return p;
}

template <class R>
Cplx<R> poly_eval(const Poly<R>& p, const Cplx<R>& x) {
  Cplx<R> v(R(0));
  for (std::size_t i = p.size(); i-- > 0;) v = v * x + p[i];
  return v;
}

template <class R>
Poly<R> poly_derivative(const Poly<R>& p) {
  if (p.size() <= 1) return {};
  Poly<R> d(p.size() - 1);
  for (std::size_t i = 1; i < p.size(); ++i) d[i - 1] = p[i] * R(static_cast<int>(i));
  return d;
}

/// Quotient of long division num / den (remainder discarded).
template <class R>
Poly<R> poly_quotient(Poly<R> num, const Poly<R>& den) {
  if (den.empty()) throw std::invalid_argument("poly_quotient: empty divisor");
  if (num.size() < den.size()) return {};
  const std::size_t nq = num.size() - den.size() + 1;
  Poly<R> q(nq, Cplx<R>(R(0)));
  const Cplx<R> lead = den.back();
  for (std::size_t k = nq; k-- > 0;) {
    const Cplx<R> c = num[k + den.size() - 1] / lead;
    q[k] = c;
    for (std::size_t j = 0; j < den.size(); ++j) num[k + j] -= c * den[j];
  }
  return q;
}

// ---------------------------------------------------------------------------

/// gain · Π(ω − zeros) / Π(ω − poles).
template <class R>
struct RationalFn {
  Cplx<R> gain{R(1)};
  std::vector<Cplx<R>> zeros;
  std::vector<Cplx<R>> poles;

  RationalFn() = default;
  RationalFn(Cplx<R> g, std::vector<Cplx<R>> z = {}, std::vector<Cplx<R>> p = {})
      : gain(g), zeros(std::move(z)), poles(std::move(p)) {}

  /// c ω^k
  static RationalFn monomial(Cplx<R> c, int k) {
    return RationalFn(c, std::vector<Cplx<R>>(static_cast<std::size_t>(k), Cplx<R>(R(0))), {});
  }

  Cplx<R> operator()(const Cplx<R>& w) const {
    Cplx<R> v = gain;
    for (const auto& z : zeros) v *= (w - z);
    for (const auto& p : poles) v /= (w - p);
    return v;
  }
  Cplx<R> operator()(R w) const { return (*this)(Cplx<R>(w)); }

  /// deg(denominator) − deg(numerator).
  int excess() const { return static_cast<int>(poles.size()) - static_cast<int>(zeros.size()); }
  bool is_zero() const { return gain == Cplx<R>(R(0)); }

  /// conj(f(ω)) continued off the real axis.
  RationalFn conj() const {
    using std::conj;
    RationalFn r(conj(gain));
    for (const auto& z : zeros) r.zeros.push_back(conj(z));
    for (const auto& p : poles) r.poles.push_back(conj(p));
    return r;
  }
  RationalFn reciprocal() const { return RationalFn(Cplx<R>(R(1)) / gain, poles, zeros); }
  RationalFn scaled(const Cplx<R>& c) const { return RationalFn(gain * c, zeros, poles); }

  template <class To>
  RationalFn<To> cast() const {
    RationalFn<To> r(cplx_cast<To>(gain));
    for (const auto& z : zeros) r.zeros.push_back(cplx_cast<To>(z));
    for (const auto& p : poles) r.poles.push_back(cplx_cast<To>(p));
    return r;
  }

  friend RationalFn operator*(const RationalFn& a, const RationalFn& b) {
    RationalFn r(a.gain * b.gain, a.zeros, a.poles);
    r.zeros.insert(r.zeros.end(), b.zeros.begin(), b.zeros.end());
    r.poles.insert(r.poles.end(), b.poles.begin(), b.poles.end());
    return r;
  }
};

template <class R>
struct PoleTerm {
  Cplx<R> pole;
  int order = 1;
  Cplx<R> coeff;
};

/// polynomial(ω) + Σ coeff/(ω − pole)^order
template <class R>
struct PartialFractions {
  Poly<R> polynomial;
  std::vector<PoleTerm<R>> terms;

  Cplx<R> operator()(const Cplx<R>& w) const {
    using std::pow;
    Cplx<R> v = poly_eval(polynomial, w);
    for (const auto& t : terms) {
      Cplx<R> d(R(1));
      for (int k = 0; k < t.order; ++k) d *= (w - t.pole);
      v += t.coeff / d;
    }
    return v;
  }
  bool has_polynomial() const {
    return std::any_of(polynomial.begin(), polynomial.end(),
                       [](const Cplx<R>& c) { return c != Cplx<R>(R(0)); });
  }
};

struct PartialFractionOptions {
  double cluster_tol = 1e-9;  ///< relative to pole magnitude
  bool allow_multiple = true;
};

namespace detail {

template <class R>
bool close(const Cplx<R>& a, const Cplx<R>& b, double tol) {
  using std::abs;
  const R scale = std::max(abs(a), abs(b));
  return abs(a - b) <= R(tol) * scale;
}

template <class R>
struct Cluster {
  Cplx<R> center;
  Cplx<R> sum;
  int count = 0;
};

template <class R>
std::vector<Cluster<R>> cluster_points(const std::vector<Cplx<R>>& pts, double tol) {
  std::vector<Cluster<R>> cl;
  for (const auto& p : pts) {
    bool placed = false;
    for (auto& c : cl) {
      if (close(p, c.center, tol)) {
        c.sum += p;
        ++c.count;
        c.center = c.sum / R(c.count);
        placed = true;
        break;
      }
    }
    if (!placed) cl.push_back({p, p, 1});
  }
  return cl;
}

}  // namespace detail

/// Pole expansion of f, merging poles closer than the clustering tolerance.
/// Zeros that coincide with a pole cancel it.
template <class R>
PartialFractions<R> partial_fractions(const RationalFn<R>& f, const PartialFractionOptions& opt = {}) {
  PartialFractions<R> out;
  if (f.is_zero()) return out;
  for (const auto& p : f.poles)
    if (p.imag() == R(0)) throw DegenerateDenominator("pole on the real axis");

  auto cl = detail::cluster_points(f.poles, opt.cluster_tol);
  std::vector<Cplx<R>> zeros;
  for (const auto& z : f.zeros) {
    bool cancelled = false;
    for (auto& c : cl) {
      if (c.count > 0 && detail::close(z, c.center, opt.cluster_tol)) {
        --c.count;
        cancelled = true;
        break;
      }
    }
    if (!cancelled) zeros.push_back(z);
  }
  std::erase_if(cl, [](const auto& c) { return c.count == 0; });
  if (!opt.allow_multiple)
    for (const auto& c : cl)
      if (c.count > 1) throw DegenerateDenominator("coincident poles");

  for (std::size_t i = 0; i < cl.size(); ++i) {
    const Cplx<R> p = cl[i].center;
    const int m = cl[i].count;
    // Taylor coefficients about p of gain·Π(ω−z)/Π_{j≠i}(ω−p_j)^{m_j}.
    std::vector<Cplx<R>> s(static_cast<std::size_t>(m), Cplx<R>(R(0)));
    s[0] = f.gain;
    auto multiply = [&](const std::vector<Cplx<R>>& t) {
      std::vector<Cplx<R>> r(s.size(), Cplx<R>(R(0)));
      for (std::size_t a = 0; a < s.size(); ++a)
        for (std::size_t b = 0; a + b < s.size(); ++b) r[a + b] += s[a] * t[b];
      s.swap(r);
    };
    for (const auto& z : zeros) {
      std::vector<Cplx<R>> t(s.size(), Cplx<R>(R(0)));
      t[0] = p - z;
      if (t.size() > 1) t[1] = Cplx<R>(R(1));
      multiply(t);
    }
    for (std::size_t j = 0; j < cl.size(); ++j) {
      if (j == i) continue;
      const Cplx<R> d = p - cl[j].center;
      const int mj = cl[j].count;
      std::vector<Cplx<R>> t(s.size());
      Cplx<R> dp(R(1));
      for (int k = 0; k < mj; ++k) dp *= d;
      // (ω−q)^{-mj} = Σ_n C(mj+n−1, n) (−1)^n (ω−p)^n / d^{mj+n}
      Cplx<R> dn = dp;
      for (std::size_t n = 0; n < t.size(); ++n) {
        const R sign = (n % 2 == 0) ? R(1) : R(-1);
        t[n] = R(binomial(mj + static_cast<int>(n) - 1, static_cast<int>(n))) * sign / dn;
        dn *= d;
      }
      multiply(t);
    }
    for (int k = 0; k < m; ++k) out.terms.push_back({p, m - k, s[static_cast<std::size_t>(k)]});
  }

  int total_order = 0;
  for (const auto& c : cl) total_order += c.count;
  if (static_cast<int>(zeros.size()) >= total_order) {
    std::vector<Cplx<R>> den_roots;
    for (const auto& c : cl)
      for (int k = 0; k < c.count; ++k) den_roots.push_back(c.center);
    out.polynomial = poly_quotient(poly_from_roots(zeros, f.gain), poly_from_roots(den_roots));
  }
  return out;
}

// ---------------------------------------------------------------------------

template <class R>
struct DelayTerm {
  R delay;  ///< a in e^{iωa}; negative after conjugation
  RationalFn<R> rational;
};

/// Σ e^{iω a_k} r_k(ω).
///
/// Delays may carry either sign: conjugating on the real axis maps a → −a.
template <class R>
class ExpRational {
 public:
  std::vector<DelayTerm<R>> terms;

  ExpRational() = default;
  ExpRational(const RationalFn<R>& f) { add(R(0), f); }  // NOLINT(implicit)
  ExpRational(R delay, const RationalFn<R>& f) { add(delay, f); }

  static ExpRational constant(const Cplx<R>& c) { return ExpRational(RationalFn<R>(c)); }

  void add(R delay, const RationalFn<R>& f) {
    if (!f.is_zero()) terms.push_back({delay, f});
  }

  Cplx<R> operator()(const Cplx<R>& w) const {
    using std::exp;
    Cplx<R> v(R(0));
    for (const auto& t : terms) {
      const Cplx<R> e = t.delay == R(0) ? Cplx<R>(R(1)) : exp(imag_unit<R>() * w * t.delay);
      v += e * t.rational(w);
    }
    return v;
  }
  Cplx<R> operator()(R w) const { return (*this)(Cplx<R>(w)); }

  ExpRational conj() const {
    ExpRational r;
    for (const auto& t : terms) r.add(-t.delay, t.rational.conj());
    return r;
  }

  ExpRational scaled(const Cplx<R>& c) const {
    ExpRational r;
    for (const auto& t : terms) r.add(t.delay, t.rational.scaled(c));
    return r;
  }

  template <class To>
  ExpRational<To> cast() const {
    ExpRational<To> r;
    for (const auto& t : terms) r.add(static_cast<To>(t.delay), t.rational.template cast<To>());
    return r;
  }

  std::size_t size() const { return terms.size(); }
  bool empty() const { return terms.empty(); }

  ExpRational& operator+=(const ExpRational& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }
  friend ExpRational operator+(ExpRational a, const ExpRational& b) { return a += b; }
  friend ExpRational operator-(ExpRational a, const ExpRational& b) {
    return a += b.scaled(Cplx<R>(R(-1)));
  }
  friend ExpRational operator*(const ExpRational& a, const ExpRational& b) {
    ExpRational r;
    r.terms.reserve(a.size() * b.size());
    for (const auto& x : a.terms)
      for (const auto& y : b.terms) r.add(x.delay + y.delay, x.rational * y.rational);
    return r;
  }
  friend ExpRational operator*(const ExpRational& a, const RationalFn<R>& f) {
    ExpRational r;
    for (const auto& x : a.terms) r.add(x.delay, x.rational * f);
    return r;
  }
  friend ExpRational operator*(const RationalFn<R>& f, const ExpRational& a) { return a * f; }
};

/// Rewrites f as monomials and single-pole powers, merging equal delays and
/// coincident poles. Pointwise equal to f.
template <class R>
ExpRational<R> canonical(const ExpRational<R>& f, const PartialFractionOptions& opt = {}) {
  struct Group {
    Poly<R> poly;
    std::vector<PoleTerm<R>> poles;
  };
  std::map<R, Group> groups;
  for (const auto& t : f.terms) {
    auto pf = partial_fractions(t.rational, opt);
    auto& g = groups[t.delay];
    if (g.poly.size() < pf.polynomial.size()) g.poly.resize(pf.polynomial.size(), Cplx<R>(R(0)));
    for (std::size_t i = 0; i < pf.polynomial.size(); ++i) g.poly[i] += pf.polynomial[i];
    for (const auto& pt : pf.terms) {
      bool merged = false;
      for (auto& q : g.poles) {
        if (q.order == pt.order && detail::close(q.pole, pt.pole, opt.cluster_tol)) {
          q.coeff += pt.coeff;
          merged = true;
          break;
        }
      }
      if (!merged) g.poles.push_back(pt);
    }
  }
  ExpRational<R> out;
  for (const auto& [delay, g] : groups) {
    for (std::size_t i = 0; i < g.poly.size(); ++i)
      out.add(delay, RationalFn<R>::monomial(g.poly[i], static_cast<int>(i)));
    for (const auto& q : g.poles)
      out.add(delay, RationalFn<R>(q.coeff, {}, std::vector<Cplx<R>>(static_cast<std::size_t>(q.order), q.pole)));
  }
  return out;
}

/// [f]_τ: Fourier transform of the part of f(t) supported on t ≥ τ.
template <class R>
ExpRational<R> causal_part(const ExpRational<R>& f, R tau, const PartialFractionOptions& opt = {}) {
  using std::exp;
  ExpRational<R> out;
  const Cplx<R> i = imag_unit<R>();
  for (const auto& t : f.terms) {
    const auto pf = partial_fractions(t.rational, opt);
    if (pf.has_polynomial()) throw NonProperTerm("causal_part: term with polynomial part");
    const R a = t.delay;
    const R s = tau - a;
    for (const auto& pt : pf.terms) {
      const std::vector<Cplx<R>> base(static_cast<std::size_t>(pt.order), pt.pole);
      // Σ_j (−is)^{n−j}/(n−j)! e^{−izs} e^{iωτ}/(ω−z)^{j+1}, n = order − 1
      auto add_moved = [&](R sign) {
        const int n = pt.order - 1;
        const Cplx<R> e = exp(-i * pt.pole * s);
        for (int j = 0; j <= n; ++j) {
          Cplx<R> c = pt.coeff * e * sign;
          for (int k = 1; k <= n - j; ++k) c *= (-i * s) / R(k);
          out.add(tau, RationalFn<R>(c, {}, std::vector<Cplx<R>>(static_cast<std::size_t>(j + 1), pt.pole)));
        }
      };
      if (pt.pole.imag() < R(0)) {
        if (tau <= a)
          out.add(a, RationalFn<R>(pt.coeff, {}, base));
        else
          add_moved(R(1));
      } else {
        if (tau < a) {
          out.add(a, RationalFn<R>(pt.coeff, {}, base));
          add_moved(R(-1));
        }
      }
    }
  }
  return canonical(out, opt);
}

/// Complement of causal_part at the same threshold: support t < τ.
template <class R>
ExpRational<R> anticausal_part(const ExpRational<R>& f, R tau, const PartialFractionOptions& opt = {}) {
  return canonical(f - causal_part(f, tau, opt), opt);
}

template <class R>
struct IntegralResult {
  Cplx<R> value;
  R abs_error;
};

/// ∫dω/2π f(ω) over the real line, closed by residues.
///
/// A term e^{iωa}/(ω−z)^k picks up the upper-half-plane poles for a > 0 and the
/// lower-half-plane poles for a < 0 (Jordan's lemma); a = 0 simple poles
/// contribute their symmetric principal value.
template <class R>
IntegralResult<R> integrate_real_line(const ExpRational<R>& f, const PartialFractionOptions& opt = {}) {
  using std::abs;
  using std::exp;
  const Cplx<R> i = imag_unit<R>();
  Cplx<R> total(R(0));
  R magnitude(0);
  Cplx<R> tail(R(0));
  R tail_scale(0);
  for (const auto& t : f.terms) {
    const auto pf = partial_fractions(t.rational, opt);
    if (pf.has_polynomial()) throw SlowDecay("integrand term with polynomial part");
    const R a = t.delay;
    for (const auto& pt : pf.terms) {
      Cplx<R> v(R(0));
      const bool upper = pt.pole.imag() > R(0);
      if (a == R(0)) {
        if (pt.order == 1) {
          v = i * pt.coeff * (upper ? R(0.5) : R(-0.5));
          tail += pt.coeff;
          tail_scale += abs(pt.coeff);
        }
      } else if ((a > R(0)) == upper) {
        // ∫dω/2π e^{iωa}(ω−z)^{-k} = ±i (ia)^{k−1} e^{iza}/(k−1)!
        Cplx<R> c = pt.coeff * exp(i * pt.pole * a) * (a > R(0) ? i : -i);
        for (int k = 1; k < pt.order; ++k) c *= (i * a) / R(k);
        v = c;
      }
      total += v;
      magnitude += abs(v);
    }
  }
  const R eps = std::numeric_limits<R>::epsilon();
  using std::sqrt;
  if (tail_scale > R(0) && abs(tail) > sqrt(eps) * tail_scale)
    throw SlowDecay("integrand decays like 1/ω");
  return {total, R(64) * eps * magnitude};
}

}  // namespace ccsn
