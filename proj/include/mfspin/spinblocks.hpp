#pragma once
// Total-spin sector machinery: spin matrices in the |J-k> basis, sector
// multiplicities, and block Hamiltonians H_J = N * WeylP(2S/N) built by a
// dynamic program over multiset orderings.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <utility>

#include "core.hpp"
#include "model.hpp"

namespace mfspin {

// ---------------------------------------------------------------------------
// Banded complex matrices.  BandedMatrix is a general (not necessarily
// Hermitian) band used for Weyl-product intermediates; BandedHermitian is the
// public self-adjoint type storing only the lower band.
// ---------------------------------------------------------------------------

class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(int dim, int lo, int hi)
      : dim_(dim), lo_(lo), hi_(hi),
        a_(static_cast<std::size_t>(dim) * (lo + hi + 1), cplx(0.0, 0.0)) {}

  static BandedMatrix identity(int dim) {
    BandedMatrix m(dim, 0, 0);
    for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
    return m;
  }

  int dim() const { return dim_; }
  int lower_bw() const { return lo_; }
  int upper_bw() const { return hi_; }

  bool in_band(int i, int j) const {
    int d = j - i;
    return d >= -lo_ && d <= hi_;
  }
  cplx get(int i, int j) const {
    if (i < 0 || j < 0 || i >= dim_ || j >= dim_ || !in_band(i, j)) return 0.0;
    return a_[static_cast<std::size_t>(i) * (lo_ + hi_ + 1) + (j - i + lo_)];
  }
  cplx& at(int i, int j) {
    return a_[static_cast<std::size_t>(i) * (lo_ + hi_ + 1) + (j - i + lo_)];
  }

  BandedMatrix operator*(const BandedMatrix& o) const {
    BandedMatrix r(dim_, std::min(dim_ - 1, lo_ + o.lo_), std::min(dim_ - 1, hi_ + o.hi_));
    for (int i = 0; i < dim_; ++i) {
      int kmin = std::max(0, i - lo_), kmax = std::min(dim_ - 1, i + hi_);
      for (int k = kmin; k <= kmax; ++k) {
        cplx aik = get(i, k);
        if (aik == cplx(0.0, 0.0)) continue;
        int jmin = std::max(0, k - o.lo_), jmax = std::min(dim_ - 1, k + o.hi_);
        for (int j = jmin; j <= jmax; ++j) r.at(i, j) += aik * o.get(k, j);
      }
    }
    return r;
  }

  void axpy(cplx alpha, const BandedMatrix& o) {
    // *this += alpha * o; requires bands of o to fit inside ours.
    for (int i = 0; i < dim_; ++i) {
      int jmin = std::max(0, i - o.lo_), jmax = std::min(dim_ - 1, i + o.hi_);
      for (int j = jmin; j <= jmax; ++j) at(i, j) += alpha * o.get(i, j);
    }
  }

  void scale(cplx alpha) {
    for (auto& v : a_) v *= alpha;
  }

 private:
  int dim_ = 0, lo_ = 0, hi_ = 0;
  std::vector<cplx> a_;
};

class BandedHermitian {
 public:
  BandedHermitian() = default;
  BandedHermitian(int dim, int bandwidth)
      : dim_(dim), bw_(bandwidth),
        lower_(static_cast<std::size_t>(dim) * (bandwidth + 1), cplx(0.0, 0.0)) {}

  // Hermitize a general banded matrix; dev = max anti-Hermitian deviation.
  static BandedHermitian from_general(const BandedMatrix& g, double* dev_out = nullptr) {
    int bw = std::max(g.lower_bw(), g.upper_bw());
    BandedHermitian h(g.dim(), bw);
    double dev = 0.0;
    for (int i = 0; i < g.dim(); ++i)
      for (int d = 0; d <= bw && i - d >= 0; ++d) {
        cplx lo = g.get(i, i - d), up = std::conj(g.get(i - d, i));
        dev = std::max(dev, std::abs(lo - up));
        h.entry(i, d) = 0.5 * (lo + up);
      }
    if (dev_out) *dev_out = dev;
    h.probe_realness();
    h.trim();
    return h;
  }

  int dim() const { return dim_; }
  int bandwidth() const { return bw_; }
  bool real_entries() const { return real_; }

  // Lower-band accessor: entry(i, d) = A(i, i-d), 0 <= d <= bandwidth.
  cplx& entry(int i, int d) { return lower_[static_cast<std::size_t>(i) * (bw_ + 1) + d]; }
  cplx entry(int i, int d) const { return lower_[static_cast<std::size_t>(i) * (bw_ + 1) + d]; }

  cplx get(int i, int j) const {
    if (i < 0 || j < 0 || i >= dim_ || j >= dim_) return 0.0;
    if (i >= j) {
      int d = i - j;
      return d > bw_ ? cplx(0.0, 0.0) : entry(i, d);
    }
    int d = j - i;
    return d > bw_ ? cplx(0.0, 0.0) : std::conj(entry(j, d));
  }

  void matvec(const cplx* x, cplx* y) const {
    for (int i = 0; i < dim_; ++i) y[i] = cplx(0.0, 0.0);
    for (int i = 0; i < dim_; ++i) {
      y[i] += entry(i, 0) * x[i];
      for (int d = 1; d <= bw_ && i - d >= 0; ++d) {
        cplx a = entry(i, d);
        y[i] += a * x[i - d];
        y[i - d] += std::conj(a) * x[i];
      }
    }
  }

  // Crude but rigorous scale estimate: max absolute row sum (inf-norm bound).
  double norm_bound() const {
    std::vector<double> row(dim_, 0.0);
    for (int i = 0; i < dim_; ++i) {
      row[i] += std::abs(entry(i, 0));
      for (int d = 1; d <= bw_ && i - d >= 0; ++d) {
        double a = std::abs(entry(i, d));
        row[i] += a;
        row[i - d] += a;
      }
    }
    double m = 0.0;
    for (double r : row) m = std::max(m, r);
    return m;
  }

  // probe per the realness design decision: downgrade to a real flag when all
  // imaginary parts are below 1e-14 of the matrix scale.
  void probe_realness() {
    double scale = 0.0, im = 0.0;
    for (const cplx& v : lower_) {
      scale = std::max(scale, std::abs(v));
      im = std::max(im, std::abs(v.imag()));
    }
    real_ = im <= 1e-14 * std::max(1.0, scale);
    if (real_)
      for (cplx& v : lower_) v = cplx(v.real(), 0.0);
  }

  // CSV dump of the stored lower band (row, col, re, im).
  void write_csv(std::ostream& os) const {
    os << "# banded Hermitian matrix, lower band entries\n";
    os << "# dim=" << dim_ << " bandwidth=" << bw_ << "\n";
    os << "row,col,re,im\n";
    for (int i = 0; i < dim_; ++i)
      for (int d = 0; d <= bw_ && i - d >= 0; ++d) {
        cplx v = entry(i, d);
        os << i << "," << (i - d) << "," << fmt_float(v.real()) << ","
           << fmt_float(v.imag()) << "\n";
      }
  }

 private:
  // Drop trailing all-zero diagonals so bandwidth reflects actual structure.
  void trim() {
    int need = 0;
    for (int i = 0; i < dim_; ++i)
      for (int d = 1; d <= bw_ && i - d >= 0; ++d)
        if (entry(i, d) != cplx(0.0, 0.0)) need = std::max(need, d);
    if (need == bw_) return;
    BandedHermitian t(dim_, need);
    for (int i = 0; i < dim_; ++i)
      for (int d = 0; d <= need && i - d >= 0; ++d) t.entry(i, d) = entry(i, d);
    t.real_ = real_;
    *this = t;
  }

  int dim_ = 0, bw_ = 0;
  bool real_ = true;
  std::vector<cplx> lower_;
};

// ---------------------------------------------------------------------------
// Sectors and multiplicities.
// ---------------------------------------------------------------------------

struct BlockIndex {
  int n_sites = 0;
  int twice_j = 0;
  int dimension() const { return twice_j + 1; }
};

struct Multiplicity {
  double log_value = 0.0;
  std::optional<unsigned long long> exact;  // populated when n_sites <= 64
};

inline void validate_block(int n, int twice_j) {
  if (n < 1 || twice_j < 0 || twice_j > n || (n - twice_j) % 2 != 0)
    throw BadConfig("invalid sector: need 0 <= 2J <= N with 2J = N mod 2");
}

// M_{N,J} = (2J+1)/(N+1) * binom(N+1, N/2+J+1), evaluated in the equivalent
// difference form binom(N, k) - binom(N, k-1) with k = (N - 2J)/2 so the
// exact value stays inside 64 bits for N <= 64.
inline Multiplicity multiplicity(int n, int twice_j) {
  validate_block(n, twice_j);
  int k = (n - twice_j) / 2;
  Multiplicity m;
  double l1 = log_binom(n, k);
  if (k == 0) {
    m.log_value = l1;  // binom(N,0) - binom(N,-1) = 1
  } else {
    double l2 = log_binom(n, k - 1);
    // log(e^l1 - e^l2) with l1 > l2 guaranteed for k <= N/2.
    m.log_value = l1 + std::log1p(-std::exp(l2 - l1));
  }
  if (n <= 64) {
    unsigned long long v = binom_u64(n, k) - (k > 0 ? binom_u64(n, k - 1) : 0ULL);
    m.exact = v;
    m.log_value = std::log(static_cast<double>(v));
  }
  return m;
}

inline std::vector<std::pair<BlockIndex, Multiplicity>> blocks(int n) {
  if (n < 1) throw BadConfig("need at least one site");
  std::vector<std::pair<BlockIndex, Multiplicity>> out;
  for (int tj = n; tj >= 0; tj -= 2)
    out.push_back({BlockIndex{n, tj}, multiplicity(n, tj)});
  return out;
}

// ---------------------------------------------------------------------------
// Spin matrices in the basis |J-k>, k = 0..2J:
//   <J-k|S_x|J-k'> = sqrt((2J*max{k,k'} - k k')/4)           for |k-k'| = 1,
//   <J-k|S_y|J-k'> = i^{k'-k} * <J-k|S_x|J-k'>,
//   <J-k|S_z|J-k>  = J - k.
// ---------------------------------------------------------------------------

struct SpinMatrices {
  BandedMatrix sx, sy, sz;
};

inline SpinMatrices spin_matrices_general(int twice_j) {
  if (twice_j < 0) throw BadConfig("2J must be non-negative");
  int dim = twice_j + 1;
  double jj = 0.5 * twice_j;
  SpinMatrices s{BandedMatrix(dim, 1, 1), BandedMatrix(dim, 1, 1), BandedMatrix(dim, 0, 0)};
  for (int k = 0; k < dim; ++k) {
    s.sz.at(k, k) = jj - k;
    if (k + 1 < dim) {
      double mag = std::sqrt((static_cast<double>(twice_j) * (k + 1) - static_cast<double>(k) * (k + 1)) / 4.0);
      s.sx.at(k, k + 1) = mag;        // <J-k|S_x|J-(k+1)>
      s.sx.at(k + 1, k) = mag;
      s.sy.at(k, k + 1) = cplx(0.0, -mag);  // i^{(k+1)-k} on the conjugate side
      s.sy.at(k + 1, k) = cplx(0.0, mag);
    }
  }
  return s;
}

inline std::array<BandedHermitian, 3> spin_matrices(int twice_j) {
  SpinMatrices s = spin_matrices_general(twice_j);
  return {BandedHermitian::from_general(s.sx), BandedHermitian::from_general(s.sy),
          BandedHermitian::from_general(s.sz)};
}

// ---------------------------------------------------------------------------
// Weyl-symmetrized monomial of the block spin matrices.
//
// The average over all distinct orderings of the multiset {X^a, Y^b, Z^c}
// obeys W(a,b,c) = [a W(a-1,b,c) X + b W(a,b-1,c) Y + c W(a,b,c-1) Z]/(a+b+c),
// because a fraction a/(a+b+c) of the orderings end in X and the prefix of
// each is uniformly an ordering of the reduced multiset.  We walk the
// multidegree lattice level by level, keeping only the previous level.
// ---------------------------------------------------------------------------

inline BandedMatrix weyl_average(const BandedMatrix& x, const BandedMatrix& y,
                                 const BandedMatrix& z, int a, int b, int c) {
  const int dim = x.dim();
  std::map<std::array<int, 3>, BandedMatrix> prev;
  prev[{0, 0, 0}] = BandedMatrix::identity(dim);
  int total = a + b + c;
  for (int level = 1; level <= total; ++level) {
    std::map<std::array<int, 3>, BandedMatrix> cur;
    for (int i = std::max(0, level - b - c); i <= std::min(a, level); ++i)
      for (int j = std::max(0, level - i - c); j <= std::min(b, level - i); ++j) {
        int k = level - i - j;
        if (k < 0 || k > c) continue;
        BandedMatrix w(dim, std::min(dim - 1, level), std::min(dim - 1, level));
        double inv = 1.0 / level;
        if (i > 0) w.axpy(i * inv, prev.at({i - 1, j, k}) * x);
        if (j > 0) w.axpy(j * inv, prev.at({i, j - 1, k}) * y);
        if (k > 0) w.axpy(k * inv, prev.at({i, j, k - 1}) * z);
        cur.emplace(std::array<int, 3>{i, j, k}, std::move(w));
      }
    prev = std::move(cur);
  }
  return prev.at({a, b, c});
}

// ---------------------------------------------------------------------------
// Block Hamiltonian H_J = N * WeylP(2S/N) restricted to C^{2J+1}: a monomial
// (a,b,c) contributes coeff * N^{1-d} * 2^d * W(a,b,c) with d = a+b+c.
// ---------------------------------------------------------------------------

struct BlockBuildOptions {
  int dim_limit = 200001;
};

inline BandedHermitian build_block(const NcPolynomial& p, int n, int twice_j,
                                   const BlockBuildOptions& opt = {}) {
  validate_block(n, twice_j);
  int dim = twice_j + 1;
  if (dim > opt.dim_limit)
    throw DimensionOverflow("block dimension " + std::to_string(dim) +
                            " exceeds configured limit " + std::to_string(opt.dim_limit));
  SpinMatrices s = spin_matrices_general(twice_j);
  int deg = std::max(1, p.degree());
  int band = std::min(dim - 1, deg);
  BandedMatrix h(dim, band, band);
  for (const Term& t : p.terms()) {
    int d = t.mono.degree();
    double pref = t.coeff * std::pow(static_cast<double>(n), 1.0 - d) * std::pow(2.0, d);
    BandedMatrix w = weyl_average(s.sx, s.sy, s.sz, t.mono.a, t.mono.b, t.mono.c);
    h.axpy(pref, w);
  }
  return BandedHermitian::from_general(h);
}

// ---------------------------------------------------------------------------
// Quadratic approximants about a direction m0:
//   full:      Q  = N h(m0) 1 + (2S - N m0).grad + (2/N)(S - N m0/2).D.(S - N m0/2)
//   projected: Qh = N h(m0) 1 + (2S - N m0).grad + (2/N)(Qperp S).D.(Qperp S)
// with Qperp = 1 - e e^T the projector off the m0 axis.
// ---------------------------------------------------------------------------

enum class QuadraticVariant { full, projected };

inline BandedHermitian quadratic_block(const NcPolynomial& p, int n, int twice_j,
                                       const Vec3& m0, QuadraticVariant variant) {
  validate_block(n, twice_j);
  if (m0.norm() < 1e-14) throw ZeroDirection("quadratic expansion needs m0 != 0");
  int dim = twice_j + 1;
  double h0 = p.eval(m0);
  Vec3 g = p.grad(m0);
  Mat3 d = p.hessian(m0);

  SpinMatrices s = spin_matrices_general(twice_j);
  const BandedMatrix* spin[3] = {&s.sx, &s.sy, &s.sz};
  BandedMatrix q(dim, std::min(dim - 1, 2), std::min(dim - 1, 2));

  // N h(m0) 1 + sum_i g_i (2 S_i - N m0_i).
  BandedMatrix id = BandedMatrix::identity(dim);
  q.axpy(n * h0, id);
  for (int i = 0; i < 3; ++i) {
    if (g[i] == 0.0) continue;
    q.axpy(2.0 * g[i], *spin[i]);
    q.axpy(-n * m0[i] * g[i], id);
  }

  // Quadratic part: build the three shifted (or projected) components A_i as
  // dim x dim tridiagonal matrices, then accumulate (2/N) A_i D_ij A_j.
  Vec3 e = m0.normalized();
  std::array<BandedMatrix, 3> comp;
  for (int i = 0; i < 3; ++i) {
    BandedMatrix a(dim, 1, 1);
    if (variant == QuadraticVariant::full) {
      a.axpy(1.0, *spin[i]);
      a.axpy(-0.5 * n * m0[i], id);
    } else {
      for (int j = 0; j < 3; ++j) {
        double qperp = (i == j ? 1.0 : 0.0) - e[i] * e[j];
        if (qperp != 0.0) a.axpy(qperp, *spin[j]);
      }
    }
    comp[i] = std::move(a);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (d(i, j) == 0.0) continue;
      q.axpy(2.0 * d(i, j) / n, comp[i] * comp[j]);
    }
  return BandedHermitian::from_general(q);
}

}  // namespace mfspin
