#include "ccsn/mc_oracle.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <sodium.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace ccsn {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
constexpr double kPi = 3.14159265358979323846;

// ChaCha20 keystream; key from the seed, nonce from the trajectory index.
class Stream {
 public:
  using result_type = std::uint64_t;
  Stream(std::uint64_t seed, std::uint64_t index) {
    if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
    for (int b = 0; b < 8; ++b) {
      key_[static_cast<std::size_t>(b)] = static_cast<unsigned char>(seed >> (8 * b));
      nonce_[static_cast<std::size_t>(b)] = static_cast<unsigned char>(index >> (8 * b));
    }
    key_[8] = 'c';
    key_[9] = 'c';
    key_[10] = 's';
    key_[11] = 'n';
  }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }
  result_type operator()() {
    if (pos_ == kWords) refill();
    return buf_[pos_++];
  }

 private:
  static constexpr std::size_t kWords = 128;
  void refill() {
    std::array<unsigned char, kWords * 8> bytes{};
    crypto_stream_chacha20_xor_ic(bytes.data(), bytes.data(), bytes.size(), nonce_.data(), block_, key_.data());
    block_ += bytes.size() / 64;
    for (std::size_t i = 0; i < kWords; ++i) {
      std::uint64_t v = 0;
      for (std::size_t b = 0; b < 8; ++b) v |= std::uint64_t(bytes[8 * i + b]) << (8 * b);
      buf_[i] = v;
    }
    pos_ = 0;
  }
  std::array<unsigned char, crypto_stream_chacha20_KEYBYTES> key_{};
  std::array<unsigned char, crypto_stream_chacha20_NONCEBYTES> nonce_{};
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, kWords> buf_{};
  std::size_t pos_ = kWords;
};

class Gauss {
 public:
  Gauss(std::uint64_t seed, std::uint64_t index) : s_(seed, index) {}
  double operator()() { return n_(s_); }
  Vec vec(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = n_(s_);
    return v;
  }

 private:
  Stream s_;
  std::normal_distribution<double> n_;
};

struct Discrete {
  Mat Phi, Q;
};

// exp of the drift and the integrated noise covariance over dt
Discrete van_loan(const Mat& F, const Mat& GGt, double dt) {
  const Eigen::Index n = F.rows();
  Mat M = Mat::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = -F * dt;
  M.topRightCorner(n, n) = GGt * dt;
  M.bottomRightCorner(n, n) = F.transpose() * dt;
  const Mat E = M.exp();
  Discrete d;
  d.Phi = E.bottomRightCorner(n, n).transpose();
  d.Q = d.Phi * E.topRightCorner(n, n);
  d.Q = 0.5 * (d.Q + d.Q.transpose()).eval();
  return d;
}

// L with L Lᵀ = Q, dropping null directions
Mat psd_sqrt(const Mat& Q) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Q);
  const Vec& l = es.eigenvalues();
  const double top = std::max(l.maxCoeff(), 0.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < l.size(); ++i)
    if (l[i] > 1e-14 * top && l[i] > 0) keep.push_back(i);
  Mat L(Q.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    L.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]) * std::sqrt(l[keep[j]]);
  return L;
}

// Σ = A Σ Aᵀ + Q by doubling
Mat discrete_lyapunov(Mat A, Mat Q) {
  for (int it = 0; it < 80; ++it) {
    Q += A * Q * A.transpose();
    A = (A * A).eval();
    Q = 0.5 * (Q + Q.transpose()).eval();
    if (!A.allFinite()) throw UnstableLoop("closed loop is unstable (stationary covariance diverges)");
    if (A.norm() < 1e-17) return Q;
  }
  throw UnstableLoop("closed loop is not contracting (stationary covariance did not converge)");
}

// Box-averaged record of one monitored oscillator, as a discrete model with
// correlated process and record noise.
struct QuantumModel {
  Eigen::Matrix2d Phi, Qw;
  Eigen::RowVector2d H;
  Eigen::Vector2d S;
  double R = 0;
};

QuantumModel quantum_model(double wq2, double g, double L, double s, double c, double dt) {
  // [x, p, ∫x, W₁, W₂]
  Mat F = Mat::Zero(5, 5);
  F(0, 1) = 1;
  F(1, 0) = -wq2;
  F(1, 1) = -2 * g;
  F(2, 0) = 1;
  Mat G = Mat::Zero(5, 2);
  G(1, 0) = L;
  G(3, 0) = 1;
  G(4, 1) = 1;
  const auto d = van_loan(F, G * G.transpose(), dt);
  QuantumModel m;
  m.Phi = d.Phi.topLeftCorner(2, 2);
  m.H = s * L / dt * d.Phi.block(2, 0, 1, 2);
  Vec e = Vec::Zero(5);
  e[2] = s * L / dt;
  e[3] = c / dt;
  e[4] = s / dt;
  m.Qw = d.Q.topLeftCorner(2, 2);
  m.S = d.Q.topRows(2) * e;
  m.R = e.dot(d.Q * e);
  return m;
}

struct Gain {
  Eigen::Vector2d K;
  double sigma = 0;  ///< innovation standard deviation
};

// predicted-error covariance at the discrete Riccati fixed point
Eigen::Matrix2d riccati_fixed_point(const QuantumModel& m) {
  Eigen::Matrix2d P = m.Qw;
  double best = std::numeric_limits<double>::infinity();
  long since = 0;
  for (long it = 0; it < 50000000; ++it) {
    const double Sig = m.H * P * m.H.transpose() + m.R;
    const Eigen::Vector2d K = (m.Phi * P * m.H.transpose() + m.S) / Sig;
    Eigen::Matrix2d Pn = m.Phi * P * m.Phi.transpose() + m.Qw - K * Sig * K.transpose();
    Pn = 0.5 * (Pn + Pn.transpose()).eval();
    const double nrm = Pn.norm();
    if (nrm == 0 && P.norm() == 0) return Pn;
    const double diff = (Pn - P).norm() / nrm;
    P = Pn;
    if (!P.allFinite()) break;
    if (diff <= 1e-15) return P;
    // stalled at rounding level
    if (diff < best) {
      best = diff;
      since = 0;
    } else if (++since > 10000 && best < 1e-12) {
      return P;
    }
  }
  throw UnstableLoop("discrete Riccati iteration did not converge");
}

Gain riccati_gain(const QuantumModel& m) {
  const Eigen::Matrix2d P = riccati_fixed_point(m);
  const double S2 = m.H * P * m.H.transpose() + m.R;
  return {(m.Phi * P * m.H.transpose() + m.S) / S2, std::sqrt(S2)};
}

// ---------------------------------------------------------------------------
// Welch accumulation over deterministic trajectory groups.

struct Band {
  std::size_t k0 = 0, n_raw = 0, n_out = 0, avg = 1;
};

Band band_of(const MCConfig& c) {
  const double dw = 2 * kPi / (static_cast<double>(c.segment) * c.dt);
  Band b;
  b.avg = std::max<std::size_t>(1, c.bin_average);
  b.k0 = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(c.w_lo / dw - 1e-9)));
  const std::size_t k1 = std::min(c.segment / 2, static_cast<std::size_t>(std::floor(c.w_hi / dw + 1e-9)));
  if (k1 < b.k0) throw ParameterError("MC band contains no frequency bins");
  b.n_out = (k1 - b.k0 + 1) / b.avg;
  if (b.n_out == 0) throw ParameterError("MC band narrower than bin_average");
  b.n_raw = b.n_out * b.avg;
  return b;
}

std::vector<double> band_omega(const MCConfig& c, const Band& b) {
  const double dw = 2 * kPi / (static_cast<double>(c.segment) * c.dt);
  std::vector<double> w(b.n_out);
  for (std::size_t j = 0; j < b.n_out; ++j)
    w[j] = dw * (static_cast<double>(b.k0 + j * b.avg) + 0.5 * static_cast<double>(b.avg - 1));
  return w;
}

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = 0.5 - 0.5 * std::cos(2 * kPi * static_cast<double>(j) / static_cast<double>(n));
  return w;
}

// Sums of raw periodograms (all record pairs, upper triangle) per group.
struct Accum {
  std::size_t n_rec = 1, n_pairs = 1, n_raw = 0;
  std::vector<std::vector<std::complex<double>>> sum;  ///< [pair][raw bin]
  double count = 0;
  void init(std::size_t rec, std::size_t raw) {
    n_rec = rec;
    n_pairs = rec * (rec + 1) / 2;
    n_raw = raw;
    sum.assign(n_pairs, std::vector<std::complex<double>>(raw, {0, 0}));
  }
};

std::size_t pair_index(std::size_t a, std::size_t b, std::size_t n) {
  // a ≤ b
  return a * n - a * (a - 1) / 2 + (b - a);
}

// One trajectory: step(out) writes n_rec record samples.
template <class Traj>
struct Runner {
  const MCConfig& cfg;
  Band band;
  std::size_t n_rec;
  std::vector<double> window;
  double U = 0;  ///< Σ w² / dt̂

  Runner(const MCConfig& c, std::size_t nrec, double dt_hat)
      : cfg(c), band(band_of(c)), n_rec(nrec), window(hann(c.segment)) {
    for (double w : window) U += w * w;
    U /= dt_hat;
  }

  template <class Make>
  std::vector<Accum> run(Make&& make, std::vector<std::vector<double>>* keep) {
    const std::size_t segs = cfg.segments();
    const bool per_segment = cfg.n_trajectories == 1;
    const std::size_t G = per_segment ? std::min<std::size_t>(segs, 32) : std::min<std::size_t>(cfg.n_trajectories, 32);
    std::vector<Accum> acc(G);
    for (auto& a : acc) a.init(n_rec, band.n_raw);
    const std::size_t workers = per_segment ? 1 : G;
    auto errs = for_each_index(workers, cfg.exec, [&](std::size_t wk) {
      Eigen::FFT<double> fft;
      std::vector<std::vector<double>> buf(n_rec, std::vector<double>(cfg.segment));
      std::vector<std::vector<std::complex<double>>> spec(n_rec);
      std::vector<double> out(n_rec);
      for (std::size_t t = wk; t < cfg.n_trajectories; t += workers) {
        Traj tr = make(t);
        for (std::size_t sg = 0; sg < segs; ++sg) {
          for (std::size_t k = 0; k < cfg.segment; ++k) {
            tr.step(out.data());
            for (std::size_t r = 0; r < n_rec; ++r) buf[r][k] = out[r];
            if (keep && t == 0) {
              const std::size_t idx = sg * cfg.segment + k;
              if (idx < cfg.keep_record) tr.keep(*keep, out.data());
            }
          }
          for (std::size_t r = 0; r < n_rec; ++r) {
            for (std::size_t k = 0; k < cfg.segment; ++k) {
              if (!std::isfinite(buf[r][k]))
                throw UnstableLoop("trajectory " + std::to_string(t) + " segment " + std::to_string(sg) +
                                   ": non-finite record");
              buf[r][k] *= window[k];
            }
            fft.fwd(spec[r], buf[r]);
          }
          Accum& a = acc[per_segment ? sg % G : wk];
          for (std::size_t r1 = 0; r1 < n_rec; ++r1)
            for (std::size_t r2 = r1; r2 < n_rec; ++r2) {
              auto& s = a.sum[pair_index(r1, r2, n_rec)];
              // e^{+iωt} transform of a real series is the conjugate FFT
              for (std::size_t j = 0; j < band.n_raw; ++j) {
                const std::size_t k = band.k0 + j;
                s[j] += std::conj(spec[r1][k]) * spec[r2][k] / U;
              }
            }
          a.count += 1;
        }
      }
    });
    if (!errs.empty()) throw UnstableLoop(errs.front().message);
    return acc;
  }
};

// Leave-one-group-out estimates of f(totals) on each output bin.
struct Jackknife {
  std::vector<double> value, std_err, corrected;
};

template <class F>
Jackknife jackknife(const std::vector<Accum>& acc, const Band& band, F&& f) {
  const std::size_t G = acc.size(), P = acc.front().n_pairs;
  Jackknife out;
  out.value.assign(band.n_out, 0);
  out.std_err.assign(band.n_out, std::numeric_limits<double>::quiet_NaN());
  out.corrected.assign(band.n_out, 0);
  double total_count = 0;
  for (const auto& a : acc) total_count += a.count;
  std::vector<std::complex<double>> tot(P), grp(P), loo(P);
  for (std::size_t j = 0; j < band.n_out; ++j) {
    std::vector<std::vector<std::complex<double>>> gsum(G, std::vector<std::complex<double>>(P));
    std::fill(tot.begin(), tot.end(), std::complex<double>(0));
    for (std::size_t g = 0; g < G; ++g)
      for (std::size_t p = 0; p < P; ++p) {
        std::complex<double> s = 0;
        for (std::size_t q = 0; q < band.avg; ++q) s += acc[g].sum[p][j * band.avg + q];
        gsum[g][p] = s;
        tot[p] += s;
      }
    const double norm = total_count * static_cast<double>(band.avg);
    for (std::size_t p = 0; p < P; ++p) grp[p] = tot[p] / norm;
    const double full = f(grp);
    out.value[j] = full;
    if (G < 2) {
      out.corrected[j] = full;
      continue;
    }
    std::vector<double> th(G);
    double mean = 0;
    for (std::size_t g = 0; g < G; ++g) {
      const double n = (total_count - acc[g].count) * static_cast<double>(band.avg);
      for (std::size_t p = 0; p < P; ++p) loo[p] = (tot[p] - gsum[g][p]) / n;
      th[g] = f(loo);
      mean += th[g];
    }
    mean /= static_cast<double>(G);
    double ss = 0;
    for (double t : th) ss += (t - mean) * (t - mean);
    out.std_err[j] = std::sqrt(static_cast<double>(G - 1) / static_cast<double>(G) * ss);
    out.corrected[j] = static_cast<double>(G) * full - static_cast<double>(G - 1) * mean;
  }
  return out;
}

SpectrumEstimate auto_estimate(const std::vector<Accum>& acc, const Band& band, const MCConfig& c, std::size_t r) {
  const std::size_t n = acc.front().n_rec;
  const std::size_t p = pair_index(r, r, n);
  const auto jk = jackknife(acc, band, [p](const std::vector<std::complex<double>>& v) { return v[p].real(); });
  return {band_omega(c, band), jk.value, jk.std_err};
}

// ---------------------------------------------------------------------------
// Innovations-form loop: quantum sides as Kalman predictors, a classical block
// driven by thermal noise and by the delayed predicted quantum estimates.

struct Side {
  Eigen::Matrix2d Phi, Pd;  ///< one step, and d steps of the quantum drift
  Eigen::RowVector2d H;
  Eigen::Vector2d K;
  Eigen::Vector2d h;  ///< ½Φ⁻¹Kσ: half the step's innovation, referred to the step start
  double sigma = 0;
  std::size_t d = 0;
};

Side make_side(double wq2, double g, double L, double s, double c, double dt, std::size_t d) {
  const auto m = quantum_model(wq2, g, L, s, c, dt);
  const auto k = riccati_gain(m);
  Side sd;
  sd.Phi = m.Phi;
  sd.H = m.H;
  sd.K = k.K;
  sd.sigma = k.sigma;
  sd.h = 0.5 * m.Phi.inverse() * k.K * k.sigma;
  sd.d = d;
  sd.Pd = Eigen::Matrix2d::Identity();
  for (std::size_t i = 0; i < d; ++i) sd.Pd = (sd.Pd * m.Phi).eval();
  return sd;
}

// Gravity during step k uses the midpoint estimate m_k = x̂_k + h·n_k (n_k the
// standardized innovation), so the information lag averages to d·dt.
//
// Classical block state: [c (nc), Y₁ (2), …, Y_q (2), I₁, …, I_q]; record i is
// z_i + rec_coef[i]·I_i/dt.
struct LoopModel {
  std::vector<Side> sides;
  std::size_t nc = 0;
  Mat Phic, Lc;
  std::vector<double> rec_coef;
  double dt = 0;
  Mat init_sqrt;  ///< stationary law of [x̂ᵢ(k), mᵢ(k−1), …, mᵢ(k−dᵢ) per side, c]
  std::size_t y_index = 0;  ///< classical coordinate added to the estimate for x_c (single mass)

  std::size_t nq() const { return sides.size(); }
  std::size_t dim() const { return nc + 3 * nq(); }
  std::size_t y_off(std::size_t i) const { return nc + 2 * i; }
  std::size_t i_off(std::size_t i) const { return nc + 2 * nq() + i; }

  void prepare() {
    using I = Eigen::Index;
    std::vector<I> off;
    I n = 0;
    for (const auto& s : sides) {
      off.push_back(n);
      n += 2 * static_cast<I>(s.d + 1);
    }
    const I c = n, m = static_cast<I>(nc);
    n += m;
    const I nz = static_cast<I>(nq()) + Lc.cols();
    Mat A = Mat::Zero(n, n), B = Mat::Zero(n, nz);
    for (std::size_t i = 0; i < nq(); ++i) {
      const auto& s = sides[i];
      const I o = off[i], col = static_cast<I>(i), d = static_cast<I>(s.d);
      A.block(o, o, 2, 2) = s.Phi;
      B.block(o, col, 2, 1) = s.K * s.sigma;
      if (d > 0) {
        A.block(o + 2, o, 2, 2).setIdentity();
        B.block(o + 2, col, 2, 1) = s.h;
        for (I j = 2; j <= d; ++j) A.block(o + 2 * j, o + 2 * (j - 1), 2, 2).setIdentity();
      }
      const Mat G = Phic.block(0, static_cast<I>(y_off(i)), m, 2) * s.Pd;
      A.block(c, o + 2 * d, m, 2) = G;
      if (d == 0) B.block(c, col, m, 1) = G * s.h;
    }
    A.block(c, c, m, m) = Phic.topLeftCorner(m, m);
    B.block(c, static_cast<I>(nq()), m, Lc.cols()) = Lc.topRows(m);
    init_sqrt = psd_sqrt(discrete_lyapunov(A, B * B.transpose()));
  }
};

class LoopTraj {
 public:
  LoopTraj(const LoopModel& m, std::uint64_t seed, std::uint64_t index) : m_(m), g_(seed, index) {
    const Vec s0 = m.init_sqrt * g_.vec(m.init_sqrt.cols());
    std::size_t o = 0;
    for (const auto& sd : m.sides) {
      xh_.push_back(s0.segment(static_cast<Eigen::Index>(o), 2));
      // ring of midpoint estimates; slot head holds m(k) once written
      std::vector<Eigen::Vector2d> b(sd.d + 1, Eigen::Vector2d::Zero());
      for (std::size_t j = 1; j <= sd.d; ++j) b[j] = s0.segment(static_cast<Eigen::Index>(o + 2 * j), 2);
      buf_.push_back(b);
      o += 2 * (sd.d + 1);
    }
    head_.assign(m.nq(), 0);
    c_ = s0.segment(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(m.nc));
    st_ = Vec::Zero(static_cast<Eigen::Index>(m.dim()));
    z_.assign(m.nq(), 0);
    n_.assign(m.nq(), 0);
  }

  void step(double* out) {
    const std::size_t q = m_.nq();
    st_.setZero();
    st_.head(static_cast<Eigen::Index>(m_.nc)) = c_;
    for (std::size_t i = 0; i < q; ++i) {
      const auto& sd = m_.sides[i];
      auto& b = buf_[i];
      const std::size_t len = sd.d + 1;
      n_[i] = g_();
      b[head_[i]] = xh_[i] + sd.h * n_[i];
      const Eigen::Vector2d Y = sd.Pd * b[(head_[i] + sd.d) % len];
      st_.segment(static_cast<Eigen::Index>(m_.y_off(i)), 2) = Y;
      z_[i] = sd.H * xh_[i] + sd.sigma * n_[i];
      if (i == 0) xc_ = Y[0] + (m_.nc > 0 ? c_[static_cast<Eigen::Index>(m_.y_index)] : 0.0);
    }
    Vec next = m_.Phic * st_;
    if (m_.Lc.cols() > 0) next += m_.Lc * g_.vec(m_.Lc.cols());
    for (std::size_t i = 0; i < q; ++i)
      out[i] = z_[i] + m_.rec_coef[i] * next[static_cast<Eigen::Index>(m_.i_off(i))] / m_.dt;
    c_ = next.head(static_cast<Eigen::Index>(m_.nc));
    for (std::size_t i = 0; i < q; ++i) {
      const auto& sd = m_.sides[i];
      xh_[i] = sd.Phi * xh_[i] + sd.K * (sd.sigma * n_[i]);
      head_[i] = (head_[i] + sd.d) % (sd.d + 1);
    }
    if (!(c_.allFinite()) || c_.cwiseAbs().maxCoeff() > 1e150) throw UnstableLoop("classical state diverged");
  }

  void keep(std::vector<std::vector<double>>& k, const double* out) const {
    k[0].push_back(out[0]);
    k[1].push_back(xc_);
  }

 private:
  const LoopModel& m_;
  Gauss g_;
  std::vector<Eigen::Vector2d> xh_;
  std::vector<std::vector<Eigen::Vector2d>> buf_;
  std::vector<std::size_t> head_;
  Vec c_, st_;
  std::vector<double> z_, n_;
  double xc_ = 0;
};

// ---------------------------------------------------------------------------
// Plain linear plant with box-averaged records (QG mutual, full-state mode).

struct PlantModel {
  std::size_t n = 0;   ///< physical state size
  Mat Phi, Lq;         ///< augmented step and noise factor
  Mat E;               ///< records = E · Z(k+1)
  Mat init_sqrt;
};

class PlantTraj {
 public:
  PlantTraj(const PlantModel& m, std::uint64_t seed, std::uint64_t index) : m_(m), g_(seed, index) {
    X_ = m.init_sqrt * g_.vec(m.init_sqrt.cols());
  }
  void step(double* out) {
    const auto n = static_cast<Eigen::Index>(m_.n);
    Z_ = m_.Phi.leftCols(n) * X_ + m_.Lq * g_.vec(m_.Lq.cols());
    const Vec r = m_.E * Z_;
    for (Eigen::Index i = 0; i < r.size(); ++i) out[i] = r[i];
    Xprev_ = X_;
    X_ = Z_.head(n);
    if (!X_.allFinite()) throw UnstableLoop("plant state diverged");
  }
  const Vec& state() const { return Xprev_; }  ///< state at the start of the last step
  void keep(std::vector<std::vector<double>>& k, const double* out) const { k[0].push_back(out[0]); }

 private:
  const PlantModel& m_;
  Gauss g_;
  Vec X_, Z_, Xprev_;
};

double fast_single(const SingleMassParams& p) { return std::max(p.omega_q(), p.omega_m); }

double fast_mutual(const MutualParams& p) { return std::max(p.A.omega_m, p.B.omega_m); }

double kT_hat(double T, double sc) { return constants::k_B * T / (constants::hbar * sc); }

}  // namespace

// ---------------------------------------------------------------------------

std::size_t MCConfig::delay_steps(double tau) const {
  if (!(dt > 0)) throw ParameterError("MC dt must be positive");
  return static_cast<std::size_t>(std::llround(tau / dt));
}

std::size_t MCConfig::segments() const {
  if (!(dt > 0) || segment == 0) return 0;
  return static_cast<std::size_t>(std::floor(duration / (dt * static_cast<double>(segment)) + 1e-9));
}

void MCConfig::validate(double omega_fast) const {
  if (!(dt > 0)) throw ParameterError("MC dt must be positive");
  if (!(dt < 2 * kPi / omega_fast / 50)) throw ParameterError("MC dt must be below (2 pi/omega_Q)/50");
  if (segment < 16 || segment % 2) throw ParameterError("MC segment must be even and at least 16 samples");
  if (segments() == 0) throw ParameterError("MC duration shorter than one segment");
  if (n_trajectories == 0) throw ParameterError("MC needs at least one trajectory");
}

MCConfig MCConfig::resolved(double omega_fast) const {
  validate(omega_fast);
  MCConfig c = *this;
  const double dw = 2 * kPi / (static_cast<double>(segment) * dt);
  if (c.w_lo <= 0) c.w_lo = dw;
  if (c.w_hi <= 0) c.w_hi = std::min(4 * omega_fast, kPi / dt);
  return c;
}

MCSingleResult simulate_single(const SingleMassParams& p, const MCConfig& cfg_in) {
  p.validate();
  if (p.thermal != ThermalModel::markov) throw ParameterError("MC simulates the white thermal force only");
  const auto cfg = cfg_in.resolved(fast_single(p));
  const auto m = SingleMassModel<double>::from(p);
  const double sc = p.omega_m, dt = cfg.dt * sc;
  const std::size_t d = cfg.delay_steps(p.tau);

  LoopModel lm;
  lm.dt = dt;
  lm.sides.push_back(make_side(m.wq * m.wq, m.g, m.L, m.s, m.c, dt, d));
  // [y, v, Y(2), ∫y]: D_c y = f + ω_SN² Ŷ_x
  lm.nc = 2;
  Mat F = Mat::Zero(5, 5);
  F(0, 1) = 1;
  F(1, 0) = -m.wm * m.wm;
  F(1, 1) = -2 * m.g;
  F(1, 2) = m.wsn * m.wsn;
  F(2, 3) = 1;
  F(3, 2) = -m.wq * m.wq;
  F(3, 3) = -2 * m.g;
  F(4, 0) = 1;
  Mat GGt = Mat::Zero(5, 5);
  GGt(1, 1) = m.s_th_markov();
  const auto dc = van_loan(F, GGt, dt);
  lm.Phic = dc.Phi;
  lm.Lc = psd_sqrt(dc.Q);
  lm.rec_coef = {m.s * m.L};
  lm.y_index = 0;
  lm.prepare();

  Runner<LoopTraj> run(cfg, 1, dt);
  std::vector<std::vector<double>> keep(2);
  const auto acc = run.run([&](std::size_t t) { return LoopTraj(lm, cfg.seed, t); }, &keep);

  MCSingleResult r;
  r.xi = auto_estimate(acc, run.band, cfg, 0);
  r.record = std::move(keep[0]);
  r.x_cond = std::move(keep[1]);
  r.delay_steps = d;
  r.lag_bias = static_cast<double>(d) * cfg.dt - p.tau;
  r.segments = cfg.segments() * cfg.n_trajectories;
  r.config = cfg;
  return r;
}

MCMutualResult simulate_mutual(const MutualParams& p, const MCConfig& cfg_in, MutualModel model) {
  p.validate();
  if (model == MutualModel::naive_sn) throw ParameterError("naive SN is not simulated");
  const auto cfg = cfg_in.resolved(fast_mutual(p));
  const double sc = p.A.omega_m, dt = cfg.dt * sc;
  const double kT = kT_hat(p.T, sc);
  const double wg = p.omega_g_resolved() / sc, k = wg * wg;
  struct S {
    double wq2, g, L, s, c, sth;
  };
  auto side = [&](const MutualSystem& m, double shift) {
    S x;
    const double wm = m.omega_m / sc;
    x.wq2 = wm * wm - shift / (sc * sc);
    x.g = m.gamma / sc;
    x.L = m.Lambda / sc;
    x.s = std::sin(m.zeta);
    x.c = std::cos(m.zeta);
    if (m.zeta == constants::two_pi / 4) x.c = 0;
    if (m.zeta == 0) x.s = 0;
    x.sth = 8 * x.g * kT;
    return x;
  };
  const S a = side(p.A, p.omega_AB2()), b = side(p.B, p.omega_BA2());

  MCMutualResult r;
  r.model = model;
  r.config = cfg;
  r.segments = cfg.segments() * cfg.n_trajectories;
  std::vector<Accum> acc;
  Band band;

  if (model == MutualModel::qg) {
    // [xA, pA, xB, pB, ∫xA, ∫xB, W₁A, W₂A, W₁B, W₂B]; noises W₁A W₂A W₁B W₂B fA fB
    Mat F = Mat::Zero(10, 10);
    F(0, 1) = 1;
    F(1, 0) = -a.wq2;
    F(1, 1) = -2 * a.g;
    F(1, 2) = -k;
    F(2, 3) = 1;
    F(3, 2) = -b.wq2;
    F(3, 3) = -2 * b.g;
    F(3, 0) = -k;
    F(4, 0) = 1;
    F(5, 2) = 1;
    Mat G = Mat::Zero(10, 6);
    G(1, 0) = a.L;
    G(3, 2) = b.L;
    G(6, 0) = 1;
    G(7, 1) = 1;
    G(8, 2) = 1;
    G(9, 3) = 1;
    G(1, 4) = std::sqrt(a.sth);
    G(3, 5) = std::sqrt(b.sth);
    const auto d = van_loan(F, G * G.transpose(), dt);
    PlantModel pm;
    pm.n = 4;
    pm.Phi = d.Phi;
    pm.Lq = psd_sqrt(d.Q);
    pm.E = Mat::Zero(2, 10);
    pm.E(0, 4) = a.s * a.L / dt;
    pm.E(0, 6) = a.c / dt;
    pm.E(0, 7) = a.s / dt;
    pm.E(1, 5) = b.s * b.L / dt;
    pm.E(1, 8) = b.c / dt;
    pm.E(1, 9) = b.s / dt;
    pm.init_sqrt = psd_sqrt(discrete_lyapunov(d.Phi.topLeftCorner(4, 4), d.Q.topLeftCorner(4, 4)));
    Runner<PlantTraj> run(cfg, 2, dt);
    band = run.band;
    acc = run.run([&](std::size_t t) { return PlantTraj(pm, cfg.seed, t); }, nullptr);
  } else {
    const std::size_t dA = cfg.delay_steps(p.A.tau), dB = cfg.delay_steps(p.B.tau);
    r.delay_steps_A = dA;
    r.delay_steps_B = dB;
    r.lag_bias = static_cast<double>(dA) * cfg.dt - p.A.tau;
    LoopModel lm;
    lm.dt = dt;
    lm.sides.push_back(make_side(a.wq2, a.g, a.L, a.s, a.c, dt, dA));
    lm.sides.push_back(make_side(b.wq2, b.g, b.L, b.s, b.c, dt, dB));
    // [yA, vA, yB, vB, YA(2), YB(2), ∫yA, ∫yB]: D_A y_A + k y_B = f_A − k Ŷ_B
    lm.nc = 4;
    Mat F = Mat::Zero(10, 10);
    F(0, 1) = 1;
    F(1, 0) = -a.wq2;
    F(1, 1) = -2 * a.g;
    F(1, 2) = -k;
    F(1, 6) = -k;
    F(2, 3) = 1;
    F(3, 2) = -b.wq2;
    F(3, 3) = -2 * b.g;
    F(3, 0) = -k;
    F(3, 4) = -k;
    F(4, 5) = 1;
    F(5, 4) = -a.wq2;
    F(5, 5) = -2 * a.g;
    F(6, 7) = 1;
    F(7, 6) = -b.wq2;
    F(7, 7) = -2 * b.g;
    F(8, 0) = 1;
    F(9, 2) = 1;
    Mat GGt = Mat::Zero(10, 10);
    GGt(1, 1) = a.sth;
    GGt(3, 3) = b.sth;
    const auto dc = van_loan(F, GGt, dt);
    lm.Phic = dc.Phi;
    lm.Lc = psd_sqrt(dc.Q);
    lm.rec_coef = {a.s * a.L, b.s * b.L};
    lm.prepare();
    Runner<LoopTraj> run(cfg, 2, dt);
    band = run.band;
    acc = run.run([&](std::size_t t) { return LoopTraj(lm, cfg.seed, t); }, nullptr);
  }

  r.S_AA = auto_estimate(acc, band, cfg, 0);
  r.S_BB = auto_estimate(acc, band, cfg, 1);
  const std::size_t pab = pair_index(0, 1, 2), paa = pair_index(0, 0, 2), pbb = pair_index(1, 1, 2);
  const auto re = jackknife(acc, band, [&](const std::vector<std::complex<double>>& v) { return v[pab].real(); });
  const auto im = jackknife(acc, band, [&](const std::vector<std::complex<double>>& v) { return v[pab].imag(); });
  const auto cab = jackknife(acc, band, [&](const std::vector<std::complex<double>>& v) {
    return std::norm(v[pab]) / (v[paa].real() * v[pbb].real());
  });
  r.S_AB.omega = r.S_AA.omega;
  r.S_AB.mean.resize(band.n_out);
  for (std::size_t j = 0; j < band.n_out; ++j) r.S_AB.mean[j] = {re.value[j], im.value[j]};
  r.S_AB.std_err_re = re.std_err;
  r.S_AB.std_err_im = im.std_err;
  r.C_AB = {r.S_AA.omega, cab.corrected, cab.std_err};
  r.C_lo.assign(band.n_out, std::numeric_limits<double>::quiet_NaN());
  r.C_hi = r.C_lo;
  if (acc.size() >= 3) {
    const double G = static_cast<double>(acc.size());
    const boost::math::fisher_f_distribution<double> fd(2, G - 2);
    const double t2 = 2 * (G - 1) / (G - 2) * boost::math::quantile(fd, 0.95);
    for (std::size_t j = 0; j < band.n_out; ++j) {
      const double v = 0.5 * (re.std_err[j] * re.std_err[j] + im.std_err[j] * im.std_err[j]);
      const double rad = std::sqrt(t2 * v), a = std::abs(r.S_AB.mean[j]);
      const double den = r.S_AA.mean[j] * r.S_BB.mean[j];
      r.C_lo[j] = std::pow(std::max(0.0, a - rad), 2) / den;
      r.C_hi[j] = std::pow(a + rad, 2) / den;
    }
  }
  return r;
}

MCVarianceResult simulate_conditional_variance(const SingleMassParams& p, const MCConfig& cfg_in,
                                               const std::vector<double>& times) {
  p.validate();
  if (p.omega_sn != 0) throw ParameterError("MC conditional variance is implemented for omega_sn = 0");
  if (p.zeta != constants::two_pi / 4) throw ParameterError("MC conditional variance needs zeta = pi/2");
  const auto cfg = cfg_in.resolved(fast_single(p));
  const auto m = SingleMassModel<double>::from(p);
  const double sc = p.omega_m, dt = cfg.dt * sc;

  // true oscillator with thermal force; [x, p, ∫x, W₁, W₂], noises W₁ W₂ f
  Mat F = Mat::Zero(5, 5);
  F(0, 1) = 1;
  F(1, 0) = -m.wm * m.wm;
  F(1, 1) = -2 * m.g;
  F(2, 0) = 1;
  Mat G = Mat::Zero(5, 3);
  G(1, 0) = m.L;
  G(3, 0) = 1;
  G(4, 1) = 1;
  G(1, 2) = std::sqrt(m.s_th_markov());
  const auto d = van_loan(F, G * G.transpose(), dt);
  PlantModel pm;
  pm.n = 2;
  pm.Phi = d.Phi;
  pm.Lq = psd_sqrt(d.Q);
  pm.E = Mat::Zero(1, 5);
  pm.E(0, 2) = m.L / dt;
  pm.E(0, 4) = 1 / dt;
  pm.init_sqrt = psd_sqrt(discrete_lyapunov(d.Phi.topLeftCorner(2, 2), d.Q.topLeftCorner(2, 2)));

  // same model seen by the observer
  QuantumModel qm;
  qm.Phi = d.Phi.topLeftCorner(2, 2);
  qm.H = m.L / dt * d.Phi.block(2, 0, 1, 2);
  Vec e = Vec::Zero(5);
  e[2] = m.L / dt;
  e[4] = 1 / dt;
  qm.Qw = d.Q.topLeftCorner(2, 2);
  qm.S = d.Q.topRows(2) * e;
  qm.R = e.dot(d.Q * e);
  const auto gain = riccati_gain(qm);
  const Mat Ls = psd_sqrt(riccati_fixed_point(qm));

  std::vector<std::size_t> lag;
  std::size_t dmax = 0;
  for (double t : times) {
    lag.push_back(cfg.delay_steps(t));
    dmax = std::max(dmax, lag.back());
  }
  // after switch-off: free drift, thermal force only
  Mat Ff = Mat::Zero(2, 2);
  Ff(0, 1) = 1;
  Ff(1, 0) = -m.wm * m.wm;
  Ff(1, 1) = -2 * m.g;
  Mat Gf = Mat::Zero(2, 2);
  Gf(1, 1) = m.s_th_markov();
  const auto fr = van_loan(Ff, Gf, dt);
  const Eigen::Matrix2d Pf = fr.Phi;
  const Mat Lf = psd_sqrt(fr.Q);
  std::vector<Eigen::Matrix2d> pw(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    pw[i].setIdentity();
    for (std::size_t j = 0; j < lag[i]; ++j) pw[i] = (pw[i] * Pf).eval();
  }

  const std::size_t steps = cfg.segments() * cfg.segment;
  const std::size_t G_ = std::min<std::size_t>(cfg.n_trajectories, 32);
  const std::size_t nt = times.size();
  const std::size_t stride = std::max<std::size_t>(dmax, 1);
  std::vector<std::vector<double>> sum(G_, std::vector<double>(nt, 0)), cnt(G_, std::vector<double>(nt, 0));
  std::vector<double> innov;
  auto errs = for_each_index(G_, cfg.exec, [&](std::size_t g) {
    for (std::size_t t = g; t < cfg.n_trajectories; t += G_) {
      PlantTraj tr(pm, cfg.seed, t);
      // the error process is autonomous: start it at its stationary law
      Gauss ge(cfg.seed ^ 0x9e3779b97f4a7c15ull, t);
      double out = 0;
      tr.step(&out);
      Eigen::Vector2d x = tr.state();
      Eigen::Vector2d xh = x - Eigen::Vector2d(Ls * ge.vec(Ls.cols()));
      for (std::size_t k = 0; k < steps; ++k) {
        if (k % stride == 0) {
          // branch: measurement off at this step, compare with the free drift of x̂
          Eigen::Vector2d xb = x;
          for (std::size_t n = 0; n <= dmax; ++n) {
            for (std::size_t j = 0; j < nt; ++j) {
              if (lag[j] != n) continue;
              const double err = xb[0] - (pw[j] * xh)[0];
              sum[g][j] += err * err;
              cnt[g][j] += 1;
            }
            if (n < dmax) xb = Pf * xb + Eigen::Vector2d(Lf * ge.vec(Lf.cols()));
          }
        }
        const double nu = out - qm.H * xh;
        if (t == 0 && innov.size() < cfg.keep_record) innov.push_back(nu);
        xh = qm.Phi * xh + gain.K * nu;
        tr.step(&out);
        x = tr.state();
      }
    }
  });
  if (!errs.empty()) throw UnstableLoop(errs.front().message);

  MCVarianceResult r;
  r.times = times;
  r.innovations = std::move(innov);
  const double x2 = constants::hbar / (2 * p.M * p.omega_m);
  for (std::size_t i = 0; i < nt; ++i) {
    double S = 0, C = 0;
    for (std::size_t g = 0; g < G_; ++g) {
      S += sum[g][i];
      C += cnt[g][i];
    }
    const double mean = S / C;
    double ss = 0, mbar = 0;
    std::vector<double> th(G_);
    for (std::size_t g = 0; g < G_; ++g) {
      th[g] = (S - sum[g][i]) / (C - cnt[g][i]);
      mbar += th[g];
    }
    mbar /= static_cast<double>(G_);
    for (double v : th) ss += (v - mbar) * (v - mbar);
    const double se = G_ > 1 ? std::sqrt(static_cast<double>(G_ - 1) / static_cast<double>(G_) * ss)
                             : std::numeric_limits<double>::quiet_NaN();
    r.variance.push_back(mean * x2);
    r.std_err.push_back(se * x2);
  }
  return r;
}

// ---------------------------------------------------------------------------

std::vector<double> omega_grid(const MCConfig& c) {
  const std::size_t L = 4 * c.segment;
  std::vector<double> w(L / 2 + 1);
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = 2 * kPi * static_cast<double>(j) / (static_cast<double>(L) * c.dt);
  return w;
}

std::vector<std::complex<double>> expected_periodogram(const std::vector<std::complex<double>>& S_on_grid,
                                                       double white, const MCConfig& c) {
  const std::size_t N = c.segment, L = 4 * N;
  if (S_on_grid.size() != L / 2 + 1) throw ParameterError("expected_periodogram: spectrum not on omega_grid");
  const auto band = band_of(c);
  const auto grid = omega_grid(c);
  // discrete-time spectrum of the box-averaged record on the full circle
  std::vector<std::complex<double>> Sd(L);
  for (std::size_t j = 0; j <= L / 2; ++j) {
    const double x = grid[j] * c.dt / 2;
    const double s2 = j == 0 ? 1.0 : std::pow(std::sin(x) / x, 2);
    const std::complex<double> v = white + (S_on_grid[j] - white) * s2;
    Sd[j] = v;
    if (j > 0 && j < L / 2) Sd[L - j] = std::conj(v);
  }
  Eigen::FFT<double> fft;
  // R(m) ∝ Σ_j S_j e^{−2πi jm/L}
  std::vector<std::complex<double>> R;
  fft.fwd(R, Sd);
  const auto w = hann(N);
  double U = 0;
  for (double x : w) U += x * x;
  // window autocorrelation c_m through |W|²
  std::vector<std::complex<double>> wp(L, {0, 0}), W, cw;
  for (std::size_t j = 0; j < N; ++j) wp[j] = w[j];
  fft.fwd(W, wp);
  for (auto& v : W) v = std::norm(v);
  fft.inv(cw, W);
  std::vector<std::complex<double>> cr(L, {0, 0});
  for (std::size_t m = 0; m < N; ++m) {
    const double cm = cw[m].real();
    cr[m] = cm * R[m];
    if (m > 0) cr[L - m] = cm * R[L - m];
  }
  // E(ω_j) = Σ_m c_m R(m) e^{+2πi jm/L}/(L U)
  std::vector<std::complex<double>> E;
  fft.inv(E, cr);  // includes 1/L
  std::vector<std::complex<double>> out(band.n_out, {0, 0});
  for (std::size_t j = 0; j < band.n_out; ++j) {
    for (std::size_t q = 0; q < band.avg; ++q) out[j] += E[4 * (band.k0 + j * band.avg + q)];
    out[j] /= static_cast<double>(band.avg) * U;
  }
  return out;
}

BinComparison compare_bins(const std::vector<double>& mean, const std::vector<double>& std_err,
                           const std::vector<double>& expected, double n_sigma) {
  BinComparison b;
  double chi2 = 0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (!(std_err[i] > 0)) continue;
    const double z = (mean[i] - expected[i]) / std_err[i];
    ++b.n_bins;
    if (std::abs(z) <= n_sigma) ++b.within;
    chi2 += z * z;
    b.max_abs_z = std::max(b.max_abs_z, std::abs(z));
  }
  if (b.n_bins) {
    b.fraction = static_cast<double>(b.within) / static_cast<double>(b.n_bins);
    b.chi2_per_bin = chi2 / static_cast<double>(b.n_bins);
  }
  return b;
}

LjungBox ljung_box(const std::vector<double>& x, std::size_t lags) {
  const std::size_t n = x.size();
  if (lags == 0 || n <= lags + 1) throw ParameterError("ljung_box needs more samples than lags");
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  double Q = 0;
  for (std::size_t h = 1; h <= lags; ++h) {
    double ch = 0;
    for (std::size_t t = h; t < n; ++t) ch += (x[t] - mean) * (x[t - h] - mean);
    const double r = ch / c0;
    Q += r * r / static_cast<double>(n - h);
  }
  Q *= static_cast<double>(n) * static_cast<double>(n + 2);
  const boost::math::chi_squared chi(static_cast<double>(lags));
  return {Q, boost::math::cdf(boost::math::complement(chi, Q))};
}

}  // namespace ccsn
