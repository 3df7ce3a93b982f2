#pragma once
// Eigensolvers for banded Hermitian blocks and the multiplicity-weighted
// low-energy spectrum of the full Hamiltonian.
//
// Strategy: rotation-based band-to-tridiagonal reduction + implicit-shift QL
// for full blocks up to dim 4096 (eigenvalues), inverse iteration with a
// banded LU for eigenvectors, and thick-restart Lanczos with full
// reorthogonalization for the low edge of larger blocks.  Complex Hermitian
// bands are reduced through the standard real doubling [[A,-B],[B,A]].

#include <cstdint>
#include <optional>
#include <string>

#include "core.hpp"
#include "model.hpp"
#include "spinblocks.hpp"

namespace mfspin {

inline constexpr int kDenseCutoff = 4096;

// ---------------------------------------------------------------------------
// Small vector helpers (complex).
// ---------------------------------------------------------------------------

inline cplx cdot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s(0.0, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline double cnorm(const std::vector<cplx>& a) {
  double s = 0.0;
  for (const cplx& v : a) s += std::norm(v);
  return std::sqrt(s);
}

// Deterministic start vectors (splitmix-style) so repeated runs are
// byte-identical; never uses a nondeterministic source.
inline std::vector<cplx> deterministic_unit_vector(int n, std::uint64_t seed) {
  std::vector<cplx> v(n);
  std::uint64_t x = seed * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL;
  auto next = [&x]() {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
  };
  for (int i = 0; i < n; ++i) v[i] = cplx(next(), next());
  double nn = cnorm(v);
  for (cplx& c : v) c /= nn;
  return v;
}

// ---------------------------------------------------------------------------
// Stage 1: symmetric band -> tridiagonal, by plane rotations that peel the
// outermost diagonal and chase the bulge down the band.  Lower storage
// band[i*(bw+1)+d] = A(i, i-d); eigenvalues only, rotations not accumulated.
// ---------------------------------------------------------------------------

inline void reduce_band_to_tridiagonal(int n, int bw, std::vector<double>& band) {
  auto E = [&band, bw](int i, int d) -> double& {
    return band[static_cast<std::size_t>(i) * (bw + 1) + d];
  };
  for (int m = std::min(bw, n - 1); m >= 2; --m) {
    for (int j = 0; j + m < n; ++j) {
      double g = E(j + m, m);  // entry (then bulge) being eliminated
      for (int r = j + m; r < n; r += m) {
        if (g == 0.0) break;
        const bool first = (r == j + m);
        const int q = r, p = r - 1;
        const int col = first ? r - m : r - m - 1;
        const double a = E(p, p - col);
        const double h = std::hypot(a, g);
        const double c = a / h, s = g / h;
        E(p, p - col) = h;
        if (first) E(q, m) = 0.0;
        // rows p,q against earlier columns still inside the working band
        for (int t = std::max(0, q - m); t <= p - 1; ++t) {
          if (t == col) continue;
          double ap = E(p, p - t), aq = E(q, q - t);
          E(p, p - t) = c * ap + s * aq;
          E(q, q - t) = -s * ap + c * aq;
        }
        // the 2x2 pivot block
        {
          double app = E(p, 0), aqq = E(q, 0), apq = E(q, 1);
          E(p, 0) = c * c * app + 2.0 * c * s * apq + s * s * aqq;
          E(q, 0) = s * s * app - 2.0 * c * s * apq + c * c * aqq;
          E(q, 1) = c * s * (aqq - app) + (c * c - s * s) * apq;
        }
        // columns p,q against later rows inside the band
        for (int u = q + 1; u <= std::min(n - 1, p + m); ++u) {
          double up = E(u, u - p), uq = E(u, u - q);
          E(u, u - p) = c * up + s * uq;
          E(u, u - q) = -s * up + c * uq;
        }
        // new bulge at (q+m, q-1), one slot past the working band
        if (q + m <= n - 1) {
          g = s * E(q + m, m);
          E(q + m, m) *= c;
        } else {
          g = 0.0;
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Stage 2: implicit-shift QL for a symmetric tridiagonal matrix; d = diagonal,
// e[i] = A(i+1, i).  Classic eigenvalues-only sweep, sorted ascending.
// ---------------------------------------------------------------------------

inline std::vector<double> tridiagonal_eigenvalues(std::vector<double> d,
                                                   std::vector<double> e) {
  const int n = static_cast<int>(d.size());
  if (n == 0) return {};
  e.resize(n, 0.0);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 80)
          throw NoConvergence("implicit QL stalled at row " + std::to_string(l) +
                              " after 80 iterations (dim " + std::to_string(n) + ")");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i = m - 1;
        for (; i >= l; --i) {
          double f = s * e[i], b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  std::sort(d.begin(), d.end());
  return d;
}

// ---------------------------------------------------------------------------
// All eigenvalues of a banded Hermitian matrix, ascending.  Real storage goes
// straight through the band reduction; complex storage is embedded into the
// interleaved real doubling (bandwidth 2b+1, eigenvalues in exact pairs).
// ---------------------------------------------------------------------------

inline std::vector<double> banded_eigenvalues(const BandedHermitian& a) {
  const int n = a.dim(), bw = a.bandwidth();
  if (n == 0) return {};
  if (a.real_entries()) {
    std::vector<double> band(static_cast<std::size_t>(n) * (bw + 1), 0.0);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d <= bw && i - d >= 0; ++d)
        band[static_cast<std::size_t>(i) * (bw + 1) + d] = a.entry(i, d).real();
    reduce_band_to_tridiagonal(n, bw, band);
    std::vector<double> diag(n), off(n > 1 ? n - 1 : 0);
    for (int i = 0; i < n; ++i) diag[i] = band[static_cast<std::size_t>(i) * (bw + 1)];
    if (bw >= 1)
      for (int i = 0; i + 1 < n; ++i)
        off[i] = band[static_cast<std::size_t>(i + 1) * (bw + 1) + 1];
    return tridiagonal_eigenvalues(std::move(diag), std::move(off));
  }
  // interleaved doubling: rows (2i, 2i+1) carry (Re x_i, Im x_i)
  const int n2 = 2 * n;
  const int bw2 = std::min(2 * bw + 1, n2 - 1);
  std::vector<double> band(static_cast<std::size_t>(n2) * (bw2 + 1), 0.0);
  auto put = [&band, bw2, n2](int i, int j, double v) {
    if (i < j) return;  // lower triangle only; mirror arrives symmetrically
    if (i >= n2 || i - j > bw2) return;
    band[static_cast<std::size_t>(i) * (bw2 + 1) + (i - j)] = v;
  };
  for (int i = 0; i < n; ++i)
    for (int d = 0; d <= bw && i - d >= 0; ++d) {
      cplx v = a.entry(i, d);
      int j = i - d;
      put(2 * i, 2 * j, v.real());
      put(2 * i + 1, 2 * j + 1, v.real());
      put(2 * i + 1, 2 * j, v.imag());
      if (d > 0) put(2 * i, 2 * j + 1, -v.imag());
    }
  reduce_band_to_tridiagonal(n2, bw2, band);
  std::vector<double> diag(n2), off(n2 - 1);
  for (int i = 0; i < n2; ++i) diag[i] = band[static_cast<std::size_t>(i) * (bw2 + 1)];
  for (int i = 0; i + 1 < n2; ++i)
    off[i] = band[static_cast<std::size_t>(i + 1) * (bw2 + 1) + 1];
  std::vector<double> doubled = tridiagonal_eigenvalues(std::move(diag), std::move(off));
  std::vector<double> vals(n);
  for (int i = 0; i < n; ++i) vals[i] = 0.5 * (doubled[2 * i] + doubled[2 * i + 1]);
  return vals;
}

// ---------------------------------------------------------------------------
// Banded LU with partial pivoting for (A - shift), used by inverse iteration.
// Row-aligned storage with window [i - b, i + 2b] (fill from pivoting).
// ---------------------------------------------------------------------------

class BandedLU {
 public:
  BandedLU(const BandedHermitian& a, cplx shift) : n_(a.dim()), kl_(a.bandwidth()) {
    w_ = 3 * kl_ + 1;
    m_.assign(static_cast<std::size_t>(n_) * w_, cplx(0.0, 0.0));
    piv_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      for (int j = std::max(0, i - kl_); j <= std::min(n_ - 1, i + kl_); ++j)
        at(i, j) = a.get(i, j);
      at(i, i) -= shift;
    }
    const double tiny = std::max(a.norm_bound() + std::abs(shift), 1e-290) *
                        std::numeric_limits<double>::epsilon();
    for (int j = 0; j < n_; ++j) {
      int p = j;
      double best = std::abs(at(j, j));
      for (int i = j + 1; i <= std::min(n_ - 1, j + kl_); ++i)
        if (std::abs(at(i, j)) > best) {
          best = std::abs(at(i, j));
          p = i;
        }
      piv_[j] = p;
      if (p != j)
        for (int c = j; c <= std::min(n_ - 1, j + 2 * kl_); ++c)
          std::swap(at(j, c), at(p, c));
      cplx d = at(j, j);
      if (std::abs(d) < tiny) {
        d = (std::abs(d) == 0.0) ? cplx(tiny, 0.0) : d * (tiny / std::abs(d));
        at(j, j) = d;
      }
      for (int i = j + 1; i <= std::min(n_ - 1, j + kl_); ++i) {
        cplx l = at(i, j) / d;
        at(i, j) = l;
        if (l == cplx(0.0, 0.0)) continue;
        for (int c = j + 1; c <= std::min(n_ - 1, j + 2 * kl_); ++c)
          at(i, c) -= l * at(j, c);
      }
    }
  }

  void solve(std::vector<cplx>& b) const {
    for (int j = 0; j < n_; ++j) {
      if (piv_[j] != j) std::swap(b[j], b[piv_[j]]);
      for (int i = j + 1; i <= std::min(n_ - 1, j + kl_); ++i) b[i] -= at(i, j) * b[j];
    }
    for (int i = n_ - 1; i >= 0; --i) {
      cplx acc = b[i];
      for (int c = i + 1; c <= std::min(n_ - 1, i + 2 * kl_); ++c) acc -= at(i, c) * b[c];
      b[i] = acc / at(i, i);
    }
  }

 private:
  cplx& at(int i, int j) { return m_[static_cast<std::size_t>(i) * w_ + (j - i + kl_)]; }
  cplx at(int i, int j) const { return m_[static_cast<std::size_t>(i) * w_ + (j - i + kl_)]; }

  int n_, kl_, w_;
  std::vector<cplx> m_;
  std::vector<int> piv_;
};

// ---------------------------------------------------------------------------
// Eigenvectors by inverse iteration, with orthogonalization inside clusters of
// nearly coincident eigenvalues (the eigenvalues are assumed ascending).
// ---------------------------------------------------------------------------

inline std::vector<std::vector<cplx>> inverse_iteration_vectors(
    const BandedHermitian& a, const std::vector<double>& lams, double tol) {
  const int n = a.dim();
  const double scale = std::max(a.norm_bound(), 1e-290);
  const double cluster_tol = 1e-10 * scale;
  std::vector<std::vector<cplx>> vecs;
  vecs.reserve(lams.size());
  std::vector<cplx> ax(n);
  int cluster_start = 0;
  for (std::size_t i = 0; i < lams.size(); ++i) {
    if (i > 0 && lams[i] - lams[i - 1] > cluster_tol) cluster_start = static_cast<int>(i);
    const int pos = static_cast<int>(i) - cluster_start;
    const double shift = lams[i] + pos * 256.0 * std::numeric_limits<double>::epsilon() * scale;
    BandedLU lu(a, shift);
    std::vector<cplx> x = deterministic_unit_vector(n, 0xB5E1C0DEULL + 131 * i);
    auto project_out_mates = [&]() {
      for (int rep = 0; rep < 2; ++rep)
        for (int j = cluster_start; j < static_cast<int>(i); ++j) {
          cplx c = cdot(vecs[j], x);
          for (int t = 0; t < n; ++t) x[t] -= c * vecs[j][t];
        }
      double nn = cnorm(x);
      if (nn < 1e-200) x = deterministic_unit_vector(n, 0xFEEDULL + 977 * i);
      nn = cnorm(x);
      for (cplx& v : x) v /= nn;
    };
    double resid = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 8; ++iter) {
      project_out_mates();
      lu.solve(x);
      project_out_mates();
      a.matvec(x.data(), ax.data());
      double r2 = 0.0;
      for (int t = 0; t < n; ++t) r2 += std::norm(ax[t] - lams[i] * x[t]);
      resid = std::sqrt(r2);
      if (resid <= tol * scale) break;
    }
    if (resid > tol * scale)
      throw NoConvergence("inverse iteration: eigenvalue index " + std::to_string(i) +
                          " residual " + fmt_float(resid) + " exceeds " +
                          fmt_float(tol * scale) + " after 8 iterations");
    vecs.push_back(std::move(x));
  }
  return vecs;
}

// ---------------------------------------------------------------------------
// lowest_eigenpairs: front door.  Dense path (reduction + QL + inverse
// iteration) for dim <= 4096; thick-restart Lanczos above that.
// ---------------------------------------------------------------------------

struct EigenPair {
  double value = 0.0;
  std::optional<std::vector<cplx>> vector;
};

std::vector<EigenPair> lowest_eigenpairs(const BandedHermitian& a, int count,
                                         double tol, bool want_vectors);

namespace detail {

// Thick-restart Lanczos with full reorthogonalization.  The projected matrix
// is accumulated explicitly (V^H A V), which costs the same order as the full
// reorthogonalization it rides on and sidesteps restart bookkeeping.
inline std::vector<EigenPair> lanczos_lowest(const BandedHermitian& a, int count,
                                             double tol, bool want_vectors) {
  const int n = a.dim();
  const double scale = std::max(a.norm_bound(), 1e-290);
  const int basis = std::min({n, kDenseCutoff, std::max(2 * count + 40, 64)});
  if (count > basis - 8)
    throw BadConfig("lowest_eigenpairs: count " + std::to_string(count) +
                    " too large for the iterative path (max " +
                    std::to_string(basis - 8) + " at dim " + std::to_string(n) + ")");
  const int keep = std::min(count + 16, basis - 4);
  std::vector<std::vector<cplx>> v_basis, w_image;  // w_image[k] = A v_basis[k]
  std::vector<cplx> tmat(static_cast<std::size_t>(basis) * basis, cplx(0.0, 0.0));
  auto t_at = [&tmat, basis](int i, int j) -> cplx& {
    return tmat[static_cast<std::size_t>(i) * basis + j];
  };

  std::vector<cplx> v = deterministic_unit_vector(n, 0xACC01ADEULL);
  double worst = std::numeric_limits<double>::infinity();
  const int max_restarts = 300;
  for (int restart = 0; restart < max_restarts; ++restart) {
    while (static_cast<int>(v_basis.size()) < basis) {
      int k = static_cast<int>(v_basis.size());
      for (int rep = 0; rep < 2; ++rep)
        for (int j = 0; j < k; ++j) {
          cplx c = cdot(v_basis[j], v);
          for (int t = 0; t < n; ++t) v[t] -= c * v_basis[j][t];
        }
      double nn = cnorm(v);
      if (nn < 1e-12) {
        v = deterministic_unit_vector(n, 0xACC01ADEULL + 7919 * (k + 1) + restart);
        continue;
      }
      for (cplx& c : v) c /= nn;
      std::vector<cplx> w(n);
      a.matvec(v.data(), w.data());
      v_basis.push_back(v);
      w_image.push_back(w);
      for (int j = 0; j <= k; ++j) {
        cplx tij = cdot(v_basis[j], w_image[k]);
        t_at(j, k) = tij;
        t_at(k, j) = std::conj(tij);
      }
      v = w;  // Krylov expansion direction
    }
    // Rayleigh-Ritz on the projected matrix.
    const int k = static_cast<int>(v_basis.size());
    BandedMatrix small(k, k - 1, k - 1);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) small.at(i, j) = t_at(i, j);
    BandedHermitian proj = BandedHermitian::from_general(small);
    const int ritz_count = std::min(k, std::max(count, keep));
    std::vector<EigenPair> small_pairs = lowest_eigenpairs(proj, ritz_count, 1e-12, true);
    // Assemble Ritz vectors and their images.
    std::vector<std::vector<cplx>> y(ritz_count, std::vector<cplx>(n, cplx(0.0, 0.0)));
    std::vector<std::vector<cplx>> ay(ritz_count, std::vector<cplx>(n, cplx(0.0, 0.0)));
    for (int r = 0; r < ritz_count; ++r) {
      const std::vector<cplx>& s = *small_pairs[r].vector;
      for (int j = 0; j < k; ++j) {
        if (s[j] == cplx(0.0, 0.0)) continue;
        for (int t = 0; t < n; ++t) {
          y[r][t] += s[j] * v_basis[j][t];
          ay[r][t] += s[j] * w_image[j][t];
        }
      }
    }
    worst = 0.0;
    int worst_idx = 0;
    for (int r = 0; r < count; ++r) {
      double r2 = 0.0;
      for (int t = 0; t < n; ++t) r2 += std::norm(ay[r][t] - small_pairs[r].value * y[r][t]);
      double res = std::sqrt(r2);
      if (res > worst) {
        worst = res;
        worst_idx = r;
      }
    }
    if (worst <= tol * scale) {
      std::vector<EigenPair> out(count);
      for (int r = 0; r < count; ++r) {
        out[r].value = small_pairs[r].value;
        if (want_vectors) {
          double nn = cnorm(y[r]);
          for (cplx& c : y[r]) c /= nn;
          out[r].vector = std::move(y[r]);
        }
      }
      return out;
    }
    // Thick restart: keep the lowest Ritz vectors, expand from the residual
    // of the worst unconverged pair (computed before the kept vectors are
    // moved into the new basis).
    std::vector<cplx> next(n);
    for (int t = 0; t < n; ++t)
      next[t] = ay[worst_idx][t] - small_pairs[worst_idx].value * y[worst_idx][t];
    std::vector<std::vector<cplx>> new_basis;
    for (int r = 0; r < std::min(ritz_count, keep); ++r) {
      std::vector<cplx>& cand = y[r];
      for (int rep = 0; rep < 2; ++rep)
        for (const std::vector<cplx>& prev : new_basis) {
          cplx c = cdot(prev, cand);
          for (int t = 0; t < n; ++t) cand[t] -= c * prev[t];
        }
      double nn = cnorm(cand);
      if (nn < 1e-12) continue;
      for (cplx& c : cand) c /= nn;
      new_basis.push_back(std::move(cand));
    }
    v_basis = std::move(new_basis);
    w_image.clear();
    for (const std::vector<cplx>& b : v_basis) {
      std::vector<cplx> w(n);
      a.matvec(b.data(), w.data());
      w_image.push_back(std::move(w));
    }
    std::fill(tmat.begin(), tmat.end(), cplx(0.0, 0.0));
    for (int i = 0; i < static_cast<int>(v_basis.size()); ++i)
      for (int j = 0; j <= i; ++j) {
        cplx tij = cdot(v_basis[j], w_image[i]);
        t_at(j, i) = tij;
        t_at(i, j) = std::conj(tij);
      }
    v = (cnorm(next) > 1e-12 * scale)
            ? next
            : deterministic_unit_vector(n, 0x5EEDULL + 31 * restart);
  }
  throw NoConvergence("Lanczos: residual " + fmt_float(worst) + " above target " +
                      fmt_float(tol * scale) + " after " + std::to_string(max_restarts) +
                      " restarts (dim " + std::to_string(n) + ", count " +
                      std::to_string(count) + ")");
}

// Fix the arbitrary overall phase so that the largest-magnitude component is
// real and positive; real symmetric inputs then yield (numerically) real
// vectors with a deterministic sign.
inline void normalize_phase(std::vector<cplx>& v) {
  std::size_t arg = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  if (best == 0.0) return;
  cplx rot = std::conj(v[arg]) / best;
  for (cplx& x : v) x *= rot;
}

}  // namespace detail

inline std::vector<EigenPair> lowest_eigenpairs(const BandedHermitian& a, int count,
                                                double tol, bool want_vectors = false) {
  if (count < 0 || count > a.dim())
    throw BadConfig("lowest_eigenpairs: count must lie in [0, dim]");
  if (!(tol > 0.0)) throw BadConfig("lowest_eigenpairs: tol must be positive");
  if (count == 0) return {};
  std::vector<EigenPair> out;
  if (a.dim() > kDenseCutoff) {
    out = detail::lanczos_lowest(a, count, tol, want_vectors);
  } else {
    std::vector<double> all = banded_eigenvalues(a);
    std::vector<double> lams(all.begin(), all.begin() + count);
    out.resize(count);
    for (int i = 0; i < count; ++i) out[i].value = lams[i];
    if (want_vectors) {
      std::vector<std::vector<cplx>> vecs = inverse_iteration_vectors(a, lams, tol);
      for (int i = 0; i < count; ++i) out[i].vector = std::move(vecs[i]);
    }
  }
  if (want_vectors)
    for (EigenPair& p : out)
      if (p.vector) detail::normalize_phase(*p.vector);
  return out;
}

// ---------------------------------------------------------------------------
// assemble_spectrum: merge per-block eigenvalues below e0 + delta over the
// total-spin sectors, scanning J downward adaptively (or a fixed number of
// top-J blocks when j_window is given).
// ---------------------------------------------------------------------------

struct SpectrumLevel {
  double e = 0.0;
  int twice_j = 0;
  Multiplicity mult;
  int idx = 0;  // index within the block's ascending spectrum
};

struct SpectrumResult {
  int n = 0;
  std::string model;  // label only; filled by callers that know it
  std::vector<SpectrumLevel> levels;
  double e0 = 0.0;
  double gap = 0.0;
  double window = 0.0;
};

struct SpectrumOptions {
  int threads = 0;      // 0 = hardware default
  int max_blocks = -1;  // adaptive-mode floor; -1 = all sectors
  int patience = 2;     // consecutive non-contributing blocks before stopping
  double eig_tol = 1e-11;
  BlockBuildOptions build{};
};

namespace detail {

// All eigenvalues of one block that lie within `delta` of its own minimum
// (a superset of its contribution to any final window anchored at e0 <= min).
inline std::vector<double> block_eigenvalues_within(const BandedHermitian& a,
                                                    double delta, double tol) {
  if (a.dim() <= kDenseCutoff) {
    std::vector<double> all = banded_eigenvalues(a);
    double bound = all.front() + delta;
    std::size_t cut = all.size();
    for (std::size_t i = 0; i < all.size(); ++i)
      if (all[i] > bound) {
        cut = i;
        break;
      }
    all.resize(cut);
    return all;
  }
  int count = 8;
  for (;;) {
    count = std::min(count, a.dim());
    std::vector<EigenPair> pairs = lowest_eigenpairs(a, count, tol, false);
    double bound = pairs.front().value + delta;
    if (pairs.back().value > bound || count == a.dim()) {
      std::vector<double> vals;
      for (const EigenPair& p : pairs)
        if (p.value <= bound) vals.push_back(p.value);
      return vals;
    }
    count *= 2;
  }
}

}  // namespace detail

inline SpectrumResult assemble_spectrum(const NcPolynomial& p, int n, double delta,
                                        std::optional<int> j_window = std::nullopt,
                                        const SpectrumOptions& opt = {}) {
  if (!(delta > 0.0)) throw BadConfig("assemble_spectrum: delta must be positive");
  if (j_window && *j_window < 1) throw BadConfig("assemble_spectrum: j_window must be >= 1");
  const auto sectors = blocks(n);
  const int total = static_cast<int>(sectors.size());
  const bool adaptive = !j_window.has_value();
  const int floor_blocks =
      adaptive ? (opt.max_blocks < 0 ? total : std::min(opt.max_blocks, total))
               : std::min(*j_window, total);

  std::vector<std::vector<double>> per(floor_blocks);
  const int wave = std::max(1, opt.threads > 0 ? opt.threads : default_thread_count());

  double e0 = std::numeric_limits<double>::infinity();
  int scanned = 0, misses = 0;
  bool stopped = false;
  while (scanned < floor_blocks && !stopped) {
    const int batch = std::min(wave, floor_blocks - scanned);
    parallel_for(
        batch,
        [&](std::size_t b) {
          const int idx = scanned + static_cast<int>(b);
          BandedHermitian blk =
              build_block(p, n, sectors[idx].first.twice_j, opt.build);
          per[idx] = detail::block_eigenvalues_within(blk, delta, opt.eig_tol);
        },
        opt.threads);
    for (int b = 0; b < batch; ++b) {
      const int idx = scanned + b;
      const double blk_min = per[idx].front();
      const bool contributes = blk_min <= e0 + delta;
      e0 = std::min(e0, blk_min);
      if (adaptive) {
        if (contributes) {
          misses = 0;
        } else if (++misses >= opt.patience) {
          scanned = idx + 1;
          stopped = true;
          break;
        }
      }
    }
    if (!stopped) scanned += batch;
  }

  const double bound = e0 + delta;
  SpectrumResult res;
  res.n = n;
  res.window = delta;
  bool last_contributes = false;
  for (int b = 0; b < scanned; ++b) {
    bool any = false;
    for (std::size_t i = 0; i < per[b].size(); ++i) {
      if (per[b][i] > bound) break;
      res.levels.push_back(SpectrumLevel{per[b][i], sectors[b].first.twice_j,
                                         sectors[b].second, static_cast<int>(i)});
      any = true;
    }
    if (b == scanned - 1) last_contributes = any;
  }
  if (!stopped && scanned < total && last_contributes)
    throw WindowTooNarrow("scanned " + std::to_string(scanned) + " of " +
                          std::to_string(total) + " sectors, and the last one still "
                          "holds levels within e0 + delta; widen j_window");

  std::stable_sort(res.levels.begin(), res.levels.end(),
                   [](const SpectrumLevel& a, const SpectrumLevel& b) {
                     if (a.e != b.e) return a.e < b.e;
                     if (a.twice_j != b.twice_j) return a.twice_j > b.twice_j;
                     return a.idx < b.idx;
                   });
  res.e0 = e0;
  const SpectrumLevel& ground = res.levels.front();
  const bool ground_repeats =
      ground.mult.exact ? *ground.mult.exact > 1 : ground.mult.log_value > 0.1;
  if (ground_repeats)
    res.gap = 0.0;
  else if (res.levels.size() >= 2)
    res.gap = res.levels[1].e - res.levels[0].e;
  else
    res.gap = std::numeric_limits<double>::quiet_NaN();
  return res;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

inline std::string json_number(double v) {
  return std::isfinite(v) ? fmt_float(v) : std::string("null");
}

inline std::string to_json(const SpectrumResult& r) {
  std::string s = "{\"n\": " + std::to_string(r.n) + ", \"model\": \"" +
                  json_escape(r.model) + "\", \"levels\": [";
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    const SpectrumLevel& l = r.levels[i];
    if (i) s += ", ";
    s += "{\"e\": " + json_number(l.e) + ", \"twoJ\": " + std::to_string(l.twice_j) +
         ", \"lnMult\": " + json_number(l.mult.log_value) +
         ", \"idx\": " + std::to_string(l.idx) + "}";
  }
  s += "], \"e0\": " + json_number(r.e0) + ", \"gap\": " + json_number(r.gap) +
       ", \"window\": " + json_number(r.window) + "}";
  return s;
}

}  // namespace mfspin
