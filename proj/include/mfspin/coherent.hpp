#pragma once
// Spin-coherent-state toolkit: coefficients in the S_z ladder basis, overlaps,
// rotated-basis overlaps with their binomial bound, Gram matrices of coherent
// ladders, Chernoff tail sums, lower symbols, and quadrature-based upper-symbol
// quantization (with resolution-of-identity precision certified by the
// quadrature's exact degree).

#include <functional>

#include "core.hpp"
#include "eigensolve.hpp"
#include "model.hpp"
#include "spinblocks.hpp"

namespace mfspin {

// ---------------------------------------------------------------------------
// Sphere parametrization.
// ---------------------------------------------------------------------------

struct SphereAngle {
  double theta = 0.0;  // [0, pi]
  double phi = 0.0;    // [0, 2 pi)
};

inline Vec3 unit_vector(const SphereAngle& a) {
  return Vec3{std::sin(a.theta) * std::cos(a.phi), std::sin(a.theta) * std::sin(a.phi),
              std::cos(a.theta)};
}

inline SphereAngle sphere_angle(const Vec3& v) {
  const double r = v.norm();
  if (std::abs(r - 1.0) > 1e-8)
    throw NotOnSphere("sphere_angle: |v| = " + fmt_float(r));
  double ct = std::clamp(v.z / r, -1.0, 1.0);
  double phi = std::atan2(v.y, v.x);
  if (phi < 0.0) phi += 2.0 * kPi;
  if (phi >= 2.0 * kPi) phi = 0.0;
  return SphereAngle{std::acos(ct), phi};
}

// ---------------------------------------------------------------------------
// Product quadrature on S^2: Gauss-Legendre in cos(theta) x uniform trapezoid
// (periodic rectangle) in phi. Integrates every spherical polynomial of degree
// <= exact_degree = min(2 n_theta - 1, n_phi - 1) exactly; weights sum to 4 pi.
// ---------------------------------------------------------------------------

struct QuadratureNode {
  SphereAngle angle;
  double weight = 0.0;
};

struct SphericalQuadrature {
  std::vector<QuadratureNode> nodes;
  int exact_degree = 0;
};

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace detail

inline SphericalQuadrature spherical_quadrature(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1)
    throw BadConfig("spherical_quadrature: node counts must be >= 1");
  std::vector<double> x, w;
  detail::gauss_legendre(n_theta, x, w);
  SphericalQuadrature q;
  q.exact_degree = std::min(2 * n_theta - 1, n_phi - 1);
  q.nodes.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  const double wphi = 2.0 * kPi / n_phi;
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_phi; ++j)
      q.nodes.push_back(QuadratureNode{
          SphereAngle{std::acos(std::clamp(x[i], -1.0, 1.0)), wphi * j}, w[i] * wphi});
  return q;
}

// Smallest product quadrature whose exact degree reaches `degree`.
inline SphericalQuadrature spherical_quadrature_for_degree(int degree) {
  if (degree < 0) throw BadConfig("spherical_quadrature_for_degree: degree < 0");
  return spherical_quadrature(degree / 2 + 1, degree + 1);
}

// ---------------------------------------------------------------------------
// Coherent coefficients <J-k|Omega,J> = binom(2J,k)^{1/2} cos(theta/2)^{2J-k}
// sin(theta/2)^k e^{i k phi}, evaluated in log space.
// ---------------------------------------------------------------------------

inline std::vector<cplx> coherent_coefficients(int twice_j, const SphereAngle& om) {
  if (twice_j < 0) throw BadConfig("coherent_coefficients: twice_j < 0");
  const double ch = std::cos(0.5 * om.theta), sh = std::sin(0.5 * om.theta);
  const SignedLog chs = SignedLog::from(ch), shs = SignedLog::from(sh);
  std::vector<cplx> c(twice_j + 1, cplx(0.0, 0.0));
  for (int k = 0; k <= twice_j; ++k) {
    SignedLog t = chs.pow_int(twice_j - k).times(shs.pow_int(k));
    if (t.sign == 0) continue;
    double mag = t.sign * std::exp(t.lg + 0.5 * log_binom(twice_j, k));
    c[k] = mag * cplx(std::cos(k * om.phi), std::sin(k * om.phi));
  }
  return c;
}

// <Omega', J | Omega, J> = [cos(t/2)cos(t'/2) + e^{i(phi-phi')} sin(t/2)sin(t'/2)]^{2J}.
inline cplx overlap(const SphereAngle& om_prime, const SphereAngle& om, int twice_j) {
  if (twice_j < 0) throw BadConfig("overlap: twice_j < 0");
  const cplx z = std::cos(0.5 * om.theta) * std::cos(0.5 * om_prime.theta) +
                 std::exp(cplx(0.0, om.phi - om_prime.phi)) * std::sin(0.5 * om.theta) *
                     std::sin(0.5 * om_prime.theta);
  const double r = std::abs(z);
  if (r == 0.0) return twice_j == 0 ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
  return std::exp(twice_j * std::log(r)) *
         std::exp(cplx(0.0, twice_j * std::arg(z)));
}

// ---------------------------------------------------------------------------
// Rotated-basis overlaps <J-k' | U(Omega) | J-k> for the rotation taking z-hat
// to e(Omega); the k = 0 column reproduces coherent_coefficients. Two exact
// symmetries keep the alternating sum conditioned:
//   * theta > pi/2 is routed through U(theta,phi) = U(pi,phi) U(pi-theta,phi+pi)
//     with U(pi,phi)|J-k> = (-1)^k e^{i(2J-2k)phi} |J-(2J-k)>, so powers of
//     sin(theta/2) never dominate;
//   * k + k' > 2J is folded by the index reflection (k,k') -> (2J-k', 2J-k),
//     which shares the phase factor and keeps all cosine powers non-negative.
// Residual accuracy still degrades when min(k, k', 2J-k, 2J-k') is large (that
// many alternating terms cancel); the semiclassical consumers only use small
// ladder indices.
// ---------------------------------------------------------------------------

inline cplx rotated_overlap(int twice_j, int k, int kp, const SphereAngle& om) {
  if (k < 0 || k > twice_j || kp < 0 || kp > twice_j)
    throw BadConfig("rotated_overlap: k, k' must lie in [0, 2J]");
  double theta = om.theta;
  int a = k, b = kp;
  cplx pref(1.0, 0.0);
  if (theta > 0.5 * kPi) {
    theta = kPi - theta;
    b = twice_j - kp;
    double sgn = ((twice_j - kp) % 2 == 0) ? 1.0 : -1.0;
    pref = sgn * std::exp(cplx(0.0, (2.0 * kp - twice_j) * om.phi));
  }
  const double ch = std::cos(0.5 * theta), sh = std::sin(0.5 * theta);
  const cplx phase = pref * std::exp(cplx(0.0, (b - a) * om.phi +
                                               (theta != om.theta ? (b - a) * kPi : 0.0)));
  if (sh == 0.0) return a == b ? phase : cplx(0.0, 0.0);
  if (a + b > twice_j) {
    int na = twice_j - b, nb = twice_j - a;
    a = na;
    b = nb;
  }
  const SignedLog chs = SignedLog::from(ch), shs = SignedLog::from(sh);
  std::vector<SignedLog> terms;
  for (int m = std::max(0, a - b); m <= a; ++m) {
    SignedLog t = chs.pow_int(twice_j - a - b).times(shs.pow_int(2 * m + b - a));
    if (t.sign == 0) continue;
    t.lg += 0.5 * (log_binom(twice_j + m - a, m) + log_binom(twice_j + m - a, b - a + m) +
                   log_binom(a, m) + log_binom(b, b - a + m));
    if (m % 2 != 0) t.sign = -t.sign;
    terms.push_back(t);
  }
  SignedLog s = signed_log_sum(terms);
  if (s.sign == 0) return cplx(0.0, 0.0);
  return s.sign * std::exp(s.lg) * phase;
}

// Binomial bound on |rotated_overlap| for k <= k':
//   [binom(2J,k) binom(2J,k')]^{1/2} (k')^k cos(theta/2)^{2J-k-k'}
//   sin(theta/2)^{k'-k} (1 + sin^2(theta/2))^k,  with 0^0 = 1.
inline double rotated_overlap_bound(int twice_j, int k, int kp, const SphereAngle& om) {
  if (k < 0 || kp > twice_j || k > kp)
    throw BadConfig("rotated_overlap_bound: need 0 <= k <= k' <= 2J");
  const double ch = std::cos(0.5 * om.theta), sh = std::sin(0.5 * om.theta);
  SignedLog t = SignedLog::from(std::abs(ch))
                    .pow_int(twice_j - k - kp)
                    .times(SignedLog::from(std::abs(sh)).pow_int(kp - k));
  if (t.sign == 0) return 0.0;
  double lg = t.lg + 0.5 * (log_binom(twice_j, k) + log_binom(twice_j, kp)) +
              k * std::log1p(sh * sh);
  if (k > 0) lg += k * std::log(double(kp));  // 0^0 = 1 when k = k' = 0
  return std::exp(lg);
}

// ---------------------------------------------------------------------------
// Dense Hermitian matrices (verification-scale; eigenproblems go through the
// banded solver at full bandwidth).
// ---------------------------------------------------------------------------

class DenseHermitian {
 public:
  DenseHermitian() = default;
  explicit DenseHermitian(int dim) : dim_(dim), a_(std::size_t(dim) * dim, cplx(0.0, 0.0)) {
    if (dim < 1) throw BadConfig("DenseHermitian: dim must be >= 1");
  }
  int dim() const { return dim_; }
  cplx& at(int i, int j) { return a_[std::size_t(i) * dim_ + j]; }
  const cplx& at(int i, int j) const { return a_[std::size_t(i) * dim_ + j]; }

  // Mirror the upper triangle into the lower and zero diagonal imaginaries.
  void hermitize() {
    for (int i = 0; i < dim_; ++i) {
      at(i, i) = cplx(at(i, i).real(), 0.0);
      for (int j = i + 1; j < dim_; ++j) at(j, i) = std::conj(at(i, j));
    }
  }

  void matvec(const cplx* x, cplx* y) const {
    for (int i = 0; i < dim_; ++i) {
      cplx acc(0.0, 0.0);
      const cplx* row = a_.data() + std::size_t(i) * dim_;
      for (int j = 0; j < dim_; ++j) acc += row[j] * x[j];
      y[i] = acc;
    }
  }

  BandedHermitian to_banded() const {
    BandedMatrix g(dim_, dim_ - 1, dim_ - 1);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) g.at(i, j) = at(i, j);
    return BandedHermitian::from_general(g);
  }

  std::vector<double> eigenvalues() const { return banded_eigenvalues(to_banded()); }

  double operator_norm() const {
    std::vector<double> e = eigenvalues();
    return std::max(std::abs(e.front()), std::abs(e.back()));
  }

 private:
  int dim_ = 0;
  std::vector<cplx> a_;
};

// ---------------------------------------------------------------------------
// Gram matrix of the coherent ladder {U(Omega_l)|J-k> : l < L, k <= K} and the
// Gershgorin-style radius R_J^K = (L-1)(K+1)(4KJ)^K exp(-(J-2K) gamma) with
// gamma = min_{l != l'} -ln cos(angle/2); the spectrum lies in [1-R, 1+R].
// ---------------------------------------------------------------------------

struct GramResult {
  DenseHermitian matrix;
  double radius = 0.0;
};

inline GramResult gram(int twice_j, int kmax, const std::vector<Vec3>& directions) {
  if (twice_j < 0 || kmax < 0 || kmax > twice_j)
    throw BadConfig("gram: need 0 <= K <= 2J");
  if (directions.empty()) throw BadConfig("gram: no directions");
  const int L = static_cast<int>(directions.size());
  std::vector<SphereAngle> angles(L);
  std::vector<Vec3> units(L);
  for (int l = 0; l < L; ++l) {
    angles[l] = sphere_angle(directions[l]);
    units[l] = directions[l].normalized();
  }
  double gamma = std::numeric_limits<double>::infinity();
  for (int l = 0; l < L; ++l)
    for (int lp = l + 1; lp < L; ++lp) {
      if ((units[l] - units[lp]).norm() < 1e-10)
        throw DegenerateDirections("gram: directions " + std::to_string(l) + " and " +
                                   std::to_string(lp) + " coincide");
      double chalf = std::sqrt(std::max(0.0, 0.5 * (1.0 + dot(units[l], units[lp]))));
      gamma = std::min(gamma, -std::log(std::max(chalf, 1e-300)));
    }

  // Columns of U(Omega_l) for k <= K, combined through the z-basis.
  const int dim = L * (kmax + 1);
  std::vector<std::vector<cplx>> cols(dim);
  for (int l = 0; l < L; ++l)
    for (int k = 0; k <= kmax; ++k) {
      std::vector<cplx>& c = cols[l * (kmax + 1) + k];
      c.resize(twice_j + 1);
      for (int n = 0; n <= twice_j; ++n) c[n] = rotated_overlap(twice_j, k, n, angles[l]);
    }
  GramResult res;
  res.matrix = DenseHermitian(dim);
  for (int a = 0; a < dim; ++a)
    for (int b = a; b < dim; ++b) {
      cplx acc(0.0, 0.0);
      for (int n = 0; n <= twice_j; ++n) acc += std::conj(cols[a][n]) * cols[b][n];
      res.matrix.at(a, b) = acc;
    }
  res.matrix.hermitize();

  if (L > 1) {
    const double j = 0.5 * twice_j;
    double lg = std::log(double(L - 1)) + std::log(double(kmax + 1)) - (j - 2 * kmax) * gamma;
    if (kmax > 0) lg += kmax * std::log(4.0 * kmax * j);
    res.radius = std::exp(lg);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Chernoff tail of the coherent weight distribution: the coefficients
// |<J-k|Omega>|^2 are Binomial(2J, sin^2(theta/2)); lhs sums all weight
// strictly above the threshold 2(1+delta) J sin^2(theta/2).
// ---------------------------------------------------------------------------

struct ChernoffTail {
  double lhs = 0.0;
  double rhs = 0.0;
};

inline ChernoffTail chernoff_tail(int twice_j, double theta, double delta) {
  if (twice_j < 0) throw BadConfig("chernoff_tail: twice_j < 0");
  if (!(delta > 0.0)) throw BadConfig("chernoff_tail: delta must be > 0");
  const double s2 = std::sin(0.5 * theta) * std::sin(0.5 * theta);
  const double mu = twice_j * s2;
  ChernoffTail out;
  out.rhs = std::exp(-(delta * delta / (2.0 + delta)) * mu);
  const int kmin = static_cast<int>(std::floor((1.0 + delta) * mu)) + 1;
  if (s2 == 0.0 || kmin > twice_j) return out;
  const double c2 = 1.0 - s2;
  std::vector<double> terms;
  terms.reserve(twice_j - kmin + 1);
  for (int k = kmin; k <= twice_j; ++k) {
    double lg = log_binom(twice_j, k) + k * std::log(s2);
    if (twice_j - k > 0) {
      if (c2 == 0.0) continue;
      lg += (twice_j - k) * std::log(c2);
    }
    terms.push_back(std::exp(lg));
  }
  out.lhs = pairwise_sum(terms);
  return out;
}

// ---------------------------------------------------------------------------
// Lower symbols and quadrature quantization.
// ---------------------------------------------------------------------------

inline double lower_symbol(const BandedHermitian& a, const SphereAngle& om) {
  std::vector<cplx> v = coherent_coefficients(a.dim() - 1, om);
  std::vector<cplx> av(a.dim());
  a.matvec(v.data(), av.data());
  cplx q(0.0, 0.0);
  for (int i = 0; i < a.dim(); ++i) q += std::conj(v[i]) * av[i];
  return q.real();
}

inline double lower_symbol(const DenseHermitian& a, const SphereAngle& om) {
  std::vector<cplx> v = coherent_coefficients(a.dim() - 1, om);
  std::vector<cplx> av(a.dim());
  a.matvec(v.data(), av.data());
  cplx q(0.0, 0.0);
  for (int i = 0; i < a.dim(); ++i) q += std::conj(v[i]) * av[i];
  return q.real();
}

constexpr int kQuantizeDimLimit = 512;

// (2J+1)/(4 pi) * sum_q w_q * N f((2J/N) e(Omega_q)) |Omega_q><Omega_q|.
// The quadrature must integrate degree 2(2J) + deg_f exactly so that the
// discrete node family still resolves the identity.
inline DenseHermitian quantize(const std::function<double(const Vec3&)>& f, int deg_f,
                               int twice_j, int n_sites,
                               const SphericalQuadrature& quad) {
  if (twice_j < 0 || n_sites < 1) throw BadConfig("quantize: need 2J >= 0, N >= 1");
  if (deg_f < 0) throw BadConfig("quantize: deg_f < 0");
  const int dim = twice_j + 1;
  if (dim > kQuantizeDimLimit)
    throw DimensionOverflow("quantize: dim " + std::to_string(dim) + " exceeds " +
                            std::to_string(kQuantizeDimLimit));
  if (quad.exact_degree < 2 * twice_j + deg_f)
    throw QuadratureTooCoarse("quantize: exact_degree " +
                              std::to_string(quad.exact_degree) + " < required " +
                              std::to_string(2 * twice_j + deg_f));
  DenseHermitian out(dim);
  const double scale = double(twice_j) / n_sites;
  const double pref = (twice_j + 1.0) / (4.0 * kPi);
  for (const QuadratureNode& node : quad.nodes) {
    const double val = pref * node.weight * n_sites * f(scale * unit_vector(node.angle));
    if (val == 0.0) continue;
    std::vector<cplx> v = coherent_coefficients(twice_j, node.angle);
    for (int i = 0; i < dim; ++i) {
      const cplx vi = val * v[i];
      for (int j = i; j < dim; ++j) out.at(i, j) += vi * std::conj(v[j]);
    }
  }
  out.hermitize();
  return out;
}

inline DenseHermitian quantize(const NcPolynomial& p, int twice_j, int n_sites,
                               const SphericalQuadrature& quad) {
  return quantize([&p](const Vec3& m) { return p.eval(m); }, p.degree(), twice_j,
                  n_sites, quad);
}

// Operator-norm distance between the block Hamiltonian H_J and the upper-symbol
// quantization of its own classical symbol.
inline double duffield_gap(const NcPolynomial& p, int n_sites, int twice_j,
                           const SphericalQuadrature& quad) {
  BandedHermitian h = build_block(p, n_sites, twice_j);
  DenseHermitian q = quantize(p, twice_j, n_sites, quad);
  DenseHermitian diff(twice_j + 1);
  for (int i = 0; i <= twice_j; ++i)
    for (int j = 0; j <= twice_j; ++j) diff.at(i, j) = h.get(i, j) - q.at(i, j);
  diff.hermitize();
  return diff.operator_norm();
}

}  // namespace mfspin
