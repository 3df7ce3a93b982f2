#pragma once
// Semiclassical spectral predictions: the harmonic ladder over surface minima,
// the interior-minimum ground-state energy, the truncated limit oscillator
// D = omega^2 Lx^2 + Ly^2, its eigenvector coefficients, decay bounds, and the
// exact-vs-predicted ground-state overlap check.

#include <optional>
#include <string>

#include "classical_opt.hpp"
#include "core.hpp"
#include "eigensolve.hpp"
#include "model.hpp"
#include "spinblocks.hpp"

namespace mfspin {

// ---------------------------------------------------------------------------
// Ladder prediction over surface minima:
//   E(l,k,m) = N h(m_l) + kappa + (2k-1)|grad h(m_l)| + (2m+1) sqrt(det D^perp_l),
// with kappa fixed to 0 for polynomial symbols.
// ---------------------------------------------------------------------------

struct MinimumLadderInfo {
  int l = 0;           // index into the report's minima
  double n_h = 0.0;    // N * h(m_l)
  double grad_norm = 0.0;
  double sqrt_det = 0.0;
  double omega = 1.0;  // sqrt(omega_x^perp / omega_y^perp) >= 1
};

struct LadderLevel {
  int l = 0, k = 0, m = 0;
  double energy = 0.0;
};

struct LadderPrediction {
  std::vector<MinimumLadderInfo> per_minimum;
  std::vector<LadderLevel> levels;  // sorted by (energy, l, k, m)
  double predicted_e0 = 0.0;
  double predicted_gap = 0.0;  // 0 when minimal ladder points coincide (L > 1)
  double gap_to_next = 0.0;    // distance from e0 to the next distinct point
  double kappa_offset = 0.0;
};

inline LadderPrediction predict(const NcPolynomial& p, const MinimumReport& report,
                                int n, int kmax, int mmax) {
  (void)p;
  if (n < 1) throw BadConfig("predict: N must be >= 1");
  if (kmax < 1 || mmax < 1) throw BadConfig("predict: kmax and mmax must be >= 1");
  if (report.minima.empty()) throw OutsideTheorem("predict: no minima in report");
  LadderPrediction pred;
  for (std::size_t l = 0; l < report.minima.size(); ++l) {
    const MinimumRecord& rec = report.minima[l];
    if (rec.location != MinimumLocation::surface)
      throw OutsideTheorem("predict: minimum " + std::to_string(l) +
                           " lies in the open ball; use predict_interior");
    if (rec.grad_norm <= 1e-8)
      throw OutsideTheorem("predict: minimum " + std::to_string(l) +
                           " has vanishing gradient |grad| = " + fmt_float(rec.grad_norm));
    if (rec.det_perp <= 0.0)
      throw OutsideTheorem("predict: minimum " + std::to_string(l) +
                           " has non-positive projected-Hessian determinant " +
                           fmt_float(rec.det_perp));
    MinimumLadderInfo info;
    info.l = static_cast<int>(l);
    info.n_h = n * rec.value;
    info.grad_norm = rec.grad_norm;
    info.sqrt_det = std::sqrt(rec.det_perp);
    info.omega = std::sqrt(rec.omega_perp_hi / rec.omega_perp_lo);
    pred.per_minimum.push_back(info);
    for (int k = 0; k <= kmax; ++k)
      for (int m = 0; m <= mmax; ++m)
        pred.levels.push_back(LadderLevel{
            info.l, k, m,
            info.n_h + pred.kappa_offset + (2 * k - 1) * info.grad_norm +
                (2 * m + 1) * info.sqrt_det});
  }
  std::stable_sort(pred.levels.begin(), pred.levels.end(),
                   [](const LadderLevel& a, const LadderLevel& b) {
                     if (a.energy != b.energy) return a.energy < b.energy;
                     if (a.l != b.l) return a.l < b.l;
                     if (a.k != b.k) return a.k < b.k;
                     return a.m < b.m;
                   });
  pred.predicted_e0 = pred.levels.front().energy;
  const double tol = 1e-9 * (1.0 + std::abs(pred.predicted_e0));
  double next = pred.predicted_e0;
  for (const LadderLevel& lv : pred.levels)
    if (lv.energy > pred.predicted_e0 + tol) {
      next = lv.energy;
      break;
    }
  pred.gap_to_next = next - pred.predicted_e0;
  const bool ground_coincides =
      pred.levels.size() >= 2 && pred.levels[1].energy <= pred.predicted_e0 + tol;
  pred.predicted_gap = ground_coincides ? 0.0 : pred.gap_to_next;
  return pred;
}

// ---------------------------------------------------------------------------
// Interior minimum: E0 = N h(m0) + |m0| sqrt(det of the tangent restriction of
// D_P), and a vanishing gap to leading order (neighboring-J blocks share E0).
// ---------------------------------------------------------------------------

struct InteriorPrediction {
  double e0 = 0.0;
  double gap = 0.0;  // zero to leading order
};

inline InteriorPrediction predict_interior(const NcPolynomial& p, const Vec3& m0,
                                           int n) {
  if (n < 1) throw BadConfig("predict_interior: N must be >= 1");
  const double r = m0.norm();
  if (r <= 1e-10 || r >= 1.0 - 1e-6)
    throw NotInterior("predict_interior: |m0| = " + fmt_float(r) +
                      " is not inside the open ball");
  const double scale = detail::poly_scale(p);
  if (p.grad(m0).norm() > 1e-6 * scale)
    throw NotInterior("predict_interior: gradient does not vanish at m0 (norm " +
                      fmt_float(p.grad(m0).norm()) + ")");
  Mat3 d = p.hessian(m0);
  std::array<double, 3> full = sym3_eigenvalues(d);
  if (full[0] <= 0.0)
    throw NotInterior("predict_interior: Hessian not positive definite (min eig " +
                      fmt_float(full[0]) + ")");
  Vec3 e = m0.normalized();
  auto [t1, t2] = tangent_frame(e);
  double a = dot(t1, d.apply(t1));
  double b = dot(t1, d.apply(t2));
  double c = dot(t2, d.apply(t2));
  auto [lo, hi] = sym2_eigenvalues(a, b, c);
  return InteriorPrediction{n * p.eval(m0) + r * std::sqrt(lo * hi), 0.0};
}

// ---------------------------------------------------------------------------
// Truncated limit oscillator D = omega^2 Lx^2 + Ly^2 on span{|0>,...,|K>}.
// Pentadiagonal: diag (omega^2+1)(2n+1)/2, second band (omega^2-1)/2 *
// sqrt((n+1)(n+2)).
// ---------------------------------------------------------------------------

struct OscillatorTruncation {
  double omega = 1.0;
  int K = 0;
  BandedHermitian matrix;
};

inline OscillatorTruncation oscillator(double omega, int K) {
  if (omega < 1.0) throw BadConfig("oscillator: omega must be >= 1");
  if (K < 2) throw BadConfig("oscillator: K must be >= 2");
  BandedMatrix g(K + 1, 2, 2);
  const double w2 = omega * omega;
  for (int nn = 0; nn <= K; ++nn) {
    g.at(nn, nn) = 0.5 * (w2 + 1.0) * (2 * nn + 1);
    if (nn + 2 <= K) {
      double off = 0.5 * (w2 - 1.0) * std::sqrt(double(nn + 1) * double(nn + 2));
      g.at(nn, nn + 2) = off;
      g.at(nn + 2, nn) = off;
    }
  }
  return OscillatorTruncation{omega, K, BandedHermitian::from_general(g)};
}

inline std::vector<double> oscillator_spectrum(const OscillatorTruncation& trunc,
                                               int count) {
  std::vector<EigenPair> pairs = lowest_eigenpairs(trunc.matrix, count, 1e-12, false);
  std::vector<double> vals(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) vals[i] = pairs[i].value;
  return vals;
}

// ---------------------------------------------------------------------------
// Oscillator eigenvector coefficients.
// Ground state: c_n = omega^{1/4} sqrt(2/((omega+1) n!)) q^{n/2} H_n(0) with
// q = sqrt((omega-1)/(2(omega+1))) squared inside, H_n(0) = (-1)^{n/2} n!/(n/2)!
// for even n and 0 otherwise; all factorials in signed log space.
// ---------------------------------------------------------------------------

inline std::vector<double> ground_state_coefficients(double omega, int nmax) {
  if (omega < 1.0) throw BadConfig("ground_state_coefficients: omega must be >= 1");
  if (nmax < 0) throw BadConfig("ground_state_coefficients: nmax must be >= 0");
  const double q = (omega - 1.0) / (2.0 * (omega + 1.0));
  const SignedLog qs = SignedLog::from(q);
  const double pref_lg = 0.25 * std::log(omega) + 0.5 * (std::log(2.0) - std::log(omega + 1.0));
  std::vector<double> c(nmax + 1, 0.0);
  for (int nn = 0; nn <= nmax; nn += 2) {
    SignedLog t = qs.pow_int(nn / 2);
    if (t.sign == 0) continue;
    double lg = pref_lg + t.lg + 0.5 * log_factorial(nn) - log_factorial(nn / 2);
    int sign = ((nn / 2) % 2 == 0 ? 1 : -1) * t.sign;
    c[nn] = sign * std::exp(lg);
  }
  return c;
}

// Closed-form overlap <n|psi_k>: zero unless n-k is even, otherwise
//   omega^{1/4} sqrt(2 n! k!/(omega+1)) *
//   sum_l (-1)^l [l+(k-n)/2 in 0..floor(k/2)] / ((n-2l)! l! (l+(k-n)/2)!) *
//         (2 sqrt(omega)/(omega+1))^{n-2l} * ((omega-1)/(2(omega+1)))^{2l+(k-n)/2}.
inline double oscillator_overlap(int n, int k, double omega) {
  if (n < 0 || k < 0) throw BadConfig("oscillator_overlap: n,k must be >= 0");
  if (omega < 1.0) throw BadConfig("oscillator_overlap: omega must be >= 1");
  if ((n - k) % 2 != 0) return 0.0;
  const SignedLog rs = SignedLog::from(2.0 * std::sqrt(omega) / (omega + 1.0));
  const SignedLog qs = SignedLog::from((omega - 1.0) / (2.0 * (omega + 1.0)));
  std::vector<SignedLog> terms;
  for (int l = std::max(0, (n - k) / 2); 2 * l <= n; ++l) {
    const int j = l + (k - n) / 2;
    if (j < 0 || 2 * j > k) continue;
    SignedLog t = rs.pow_int(n - 2 * l).times(qs.pow_int(2 * l + (k - n) / 2));
    if (t.sign == 0) continue;
    t.lg -= log_factorial(n - 2 * l) + log_factorial(l) + log_factorial(j);
    if (l % 2 != 0) t.sign = -t.sign;
    terms.push_back(t);
  }
  SignedLog sum = signed_log_sum(terms);
  if (sum.sign == 0) return 0.0;
  const double pref_lg = 0.25 * std::log(omega) +
                         0.5 * (std::log(2.0) + log_factorial(n) + log_factorial(k) -
                                std::log(omega + 1.0));
  return sum.sign * std::exp(pref_lg + sum.lg);
}

// Excited states built numerically: psi_k = (a^dagger)^k psi_0 / sqrt(k!) with
// the (real) raising operator a^dagger = sqrt(omega/2) (Lx - (i/omega) Ly).
inline std::vector<double> excited_state(int k, double omega, int nmax) {
  if (k < 0) throw BadConfig("excited_state: k must be >= 0");
  std::vector<double> psi = ground_state_coefficients(omega, nmax);
  const double up = 1.0 + 1.0 / omega, down = 1.0 - 1.0 / omega;
  const double pref = std::sqrt(omega / 2.0);
  std::vector<double> next(nmax + 1, 0.0);
  for (int j = 0; j < k; ++j) {
    const double inv = 1.0 / std::sqrt(double(j + 1));
    for (int nn = 0; nn <= nmax; ++nn) {
      double acc = 0.0;
      if (nn >= 1) acc += up * std::sqrt(0.5 * nn) * psi[nn - 1];
      if (nn + 1 <= nmax) acc += down * std::sqrt(0.5 * (nn + 1)) * psi[nn + 1];
      next[nn] = pref * inv * acc;
    }
    std::swap(psi, next);
  }
  return psi;
}

// Decay bounds on |<n|psi_k>|^2 (returned as printed; the first is stated for
// n >= 2k, the second for k >= 2n).
inline double expdecay_bound(int n, int k, double omega) {
  const double lg = 0.5 * std::log(omega / kPi) + (2 * k + 1) * std::log(2.0) -
                    std::log(omega + 1.0) - log_factorial(k);
  const double nfac =
      n > 0 ? std::exp(lg + (k - 0.5) * std::log(double(n)))
            : (k == 0 ? std::numeric_limits<double>::infinity() : 0.0);
  return nfac * std::pow((omega - 1.0) / (omega + 1.0), double(n - k));
}

inline double expdecay2_bound(int n, int k, double omega) {
  const double lg = 0.5 * std::log(omega / kPi) + (2 * n + 1) * std::log(2.0) -
                    std::log(omega + 1.0) - log_factorial(n);
  const double kfac =
      k > 0 ? std::exp(lg + (n - 0.5) * std::log(double(k)))
            : (n == 0 ? std::numeric_limits<double>::infinity() : 0.0);
  return kfac * std::pow((omega - 1.0) / (omega + 1.0), double(n - k));
}

// ---------------------------------------------------------------------------
// Exact-vs-predicted ground-state overlap for a unique surface minimum.
// Coordinates are rotated so the minimum sits at z-hat and the stiff tangent
// direction (larger omega_perp) lies along x-hat; then the block J = N/2 is
// diagonalized and its ground state compared with eq-of-motion coefficients.
// ---------------------------------------------------------------------------

inline double ground_state_overlap_check(const NcPolynomial& p, int n,
                                         const MinimumReport& report,
                                         const BlockBuildOptions& build = {}) {
  if (!report.is_unique || report.minima.size() != 1 ||
      report.minima[0].location != MinimumLocation::surface)
    throw BadConfig("ground_state_overlap_check needs a unique surface minimum");
  const MinimumRecord& rec = report.minima[0];
  Mat3 r1 = rotation_to_z(rec.m0);
  NcPolynomial p1 = p.rotated(r1);
  // Identify the stiff tangent direction of the rotated symbol at z-hat.
  const Vec3 zhat{0.0, 0.0, 1.0};
  Mat3 rot = r1;
  PerpHessian ph = projected_hessian(p1, zhat);
  if (ph.omega_hi - ph.omega_lo > 1e-12 * (1.0 + std::abs(ph.omega_hi))) {
    auto [t1, t2] = tangent_frame(zhat);
    Mat3 d = p1.hessian(zhat);
    double gn = p1.grad(zhat).norm();
    double a = dot(t1, d.apply(t1)) + gn;
    double b = dot(t1, d.apply(t2));
    double c = dot(t2, d.apply(t2)) + gn;
    std::array<double, 2> v = sym2_eigenvector(a, b, c, ph.omega_hi);
    Vec3 stiff = v[0] * t1 + v[1] * t2;
    double phi = std::atan2(stiff.y, stiff.x);
    rot = rotation_about_axis(zhat, -phi).mul(r1);
  }
  NcPolynomial p2 = p.rotated(rot);
  BandedHermitian block = build_block(p2, n, n, build);
  std::vector<EigenPair> ground = lowest_eigenpairs(block, 1, 1e-11, true);
  const std::vector<cplx>& exact = *ground[0].vector;
  std::vector<double> predicted = ground_state_coefficients(rec.omega_perp_hi > 0
                                                                ? std::sqrt(rec.omega_perp_hi /
                                                                            rec.omega_perp_lo)
                                                                : 1.0,
                                                            n);
  cplx acc(0.0, 0.0);
  for (int i = 0; i <= n; ++i) acc += std::conj(exact[i]) * predicted[i];
  return std::abs(acc);
}

// ---------------------------------------------------------------------------
// JSON serialization; an exact spectrum can be supplied for a side-by-side
// exact-vs-predicted table (paired in ascending order).
// ---------------------------------------------------------------------------

inline std::string to_json(const LadderPrediction& pred,
                           const SpectrumResult* exact = nullptr) {
  std::string s = "{\"per_minimum\": [";
  for (std::size_t i = 0; i < pred.per_minimum.size(); ++i) {
    const MinimumLadderInfo& m = pred.per_minimum[i];
    if (i) s += ", ";
    s += "{\"l\": " + std::to_string(m.l) + ", \"n_h\": " + fmt_float(m.n_h) +
         ", \"grad_norm\": " + fmt_float(m.grad_norm) +
         ", \"sqrt_det\": " + fmt_float(m.sqrt_det) +
         ", \"omega\": " + fmt_float(m.omega) + "}";
  }
  s += "], \"levels\": [";
  for (std::size_t i = 0; i < pred.levels.size(); ++i) {
    const LadderLevel& lv = pred.levels[i];
    if (i) s += ", ";
    s += "{\"l\": " + std::to_string(lv.l) + ", \"k\": " + std::to_string(lv.k) +
         ", \"m\": " + std::to_string(lv.m) + ", \"energy\": " + fmt_float(lv.energy) + "}";
  }
  s += "], \"predicted_e0\": " + fmt_float(pred.predicted_e0) +
       ", \"predicted_gap\": " + fmt_float(pred.predicted_gap) +
       ", \"gap_to_next\": " + fmt_float(pred.gap_to_next) +
       ", \"kappa_offset\": " + fmt_float(pred.kappa_offset);
  if (exact) {
    s += ", \"exact_vs_predicted\": [";
    std::size_t pairs = std::min(exact->levels.size(), pred.levels.size());
    for (std::size_t i = 0; i < pairs; ++i) {
      if (i) s += ", ";
      s += "{\"e_exact\": " + json_number(exact->levels[i].e) +
           ", \"e_predicted\": " + json_number(pred.levels[i].energy) + "}";
    }
    s += "]";
  }
  s += "}";
  return s;
}

}  // namespace mfspin
