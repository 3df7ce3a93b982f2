#pragma once
// Minimization of the classical symbol P over the closed unit ball, with the
// surface/interior dichotomy kept crisp: a multi-start Riemannian Newton on
// the sphere plus a grid-started Newton on grad P = 0 in the open ball.
// Surface minima carry the spherical projected Hessian
//   D_P^perp(m0) = Qperp D_P(m0) Qperp + |grad P(m0)| Qperp,  Qperp = 1 - m0 m0^T.

#include <optional>

#include "core.hpp"
#include "model.hpp"

namespace mfspin {

enum class MinimumLocation { surface, interior };

struct MinimumRecord {
  Vec3 m0{};
  double value = 0.0;
  double grad_norm = 0.0;
  MinimumLocation location = MinimumLocation::surface;
  // surface only
  double omega_perp_lo = 0.0;  // smaller tangent eigenvalue (omega_y^perp)
  double omega_perp_hi = 0.0;  // larger tangent eigenvalue (omega_x^perp)
  double det_perp = 0.0;       // == omega_perp_lo * omega_perp_hi as stored
  bool outside_theorem = false;  // surface minimum with |grad| < 1e-8
  // interior only
  std::array<double, 3> hessian_eigs{0.0, 0.0, 0.0};
};

struct MinimumReport {
  std::vector<MinimumRecord> minima;  // global minima, sorted (value, lex m0)
  double global_value = 0.0;
  bool is_unique = true;
};

struct OptimizeConfig {
  int sphere_starts = 256;  // deterministic Fibonacci grid, contract wants >= 128
  int interior_grid = 7;    // interior-phase Newton starts per axis
  int max_iter = 120;
  double merge_tol = 1e-6;
  double tie_rel = 1e-9;
  int threads = 0;
};

// Orthonormal tangent pair at a unit vector, seeded from the least-aligned
// coordinate axis so the frame is well conditioned everywhere.
inline std::pair<Vec3, Vec3> tangent_frame(const Vec3& m) {
  int axis = 0;
  double best = std::abs(m[0]);
  for (int i = 1; i < 3; ++i)
    if (std::abs(m[i]) < best) {
      best = std::abs(m[i]);
      axis = i;
    }
  Vec3 e{0.0, 0.0, 0.0};
  e[axis] = 1.0;
  Vec3 t1 = cross(e, m).normalized();
  Vec3 t2 = cross(m, t1).normalized();
  return {t1, t2};
}

struct PerpHessian {
  double omega_lo = 0.0;
  double omega_hi = 0.0;
  double det = 0.0;
};

inline PerpHessian projected_hessian(const NcPolynomial& p, const Vec3& m0) {
  if (std::abs(m0.norm() - 1.0) > 1e-8)
    throw NotOnSphere("projected_hessian needs |m0| = 1 (got " +
                      fmt_float(m0.norm()) + ")");
  Vec3 m = m0.normalized();
  Vec3 g = p.grad(m);
  double gn = g.norm();
  Mat3 d = p.hessian(m);
  auto [t1, t2] = tangent_frame(m);
  double a = dot(t1, d.apply(t1)) + gn;
  double b = dot(t1, d.apply(t2));
  double c = dot(t2, d.apply(t2)) + gn;
  auto [lo, hi] = sym2_eigenvalues(a, b, c);
  return PerpHessian{lo, hi, lo * hi};
}

namespace detail {

inline double poly_scale(const NcPolynomial& p) {
  double s = 0.0;
  for (const Term& t : p.terms()) s += std::abs(t.coeff);
  return std::max(1.0, s);
}

struct SpherePoint {
  Vec3 m{};
  double value = 0.0;
  double tangent_grad = 0.0;
  double radial_grad = 0.0;   // grad P . m
  double tangent_min_eig = 0.0;  // of the Riemannian Hessian
};

// Riemannian Newton with Levenberg damping and a normalization retraction.
inline std::optional<SpherePoint> refine_on_sphere(const NcPolynomial& p, Vec3 m,
                                                   int max_iter) {
  const double scale = poly_scale(p);
  const double gtol = 1e-12 * scale;
  double lambda = 0.0;
  double f = p.eval(m);
  for (int it = 0; it < max_iter; ++it) {
    auto [t1, t2] = tangent_frame(m);
    Vec3 g = p.grad(m);
    double g1 = dot(t1, g), g2 = dot(t2, g);
    double gt = std::hypot(g1, g2);
    if (gt <= gtol) break;
    Mat3 d = p.hessian(m);
    double mg = dot(m, g);
    double h11 = dot(t1, d.apply(t1)) - mg;
    double h12 = dot(t1, d.apply(t2));
    double h22 = dot(t2, d.apply(t2)) - mg;
    const double hscale = std::abs(h11) + std::abs(h22) + std::abs(h12) + scale;
    bool accepted = false;
    double lam = lambda;
    for (int damp = 0; damp < 40; ++damp) {
      double a = h11 + lam, c = h22 + lam;
      double det = a * c - h12 * h12;
      if (a <= 1e-14 * hscale || det <= 1e-14 * hscale * hscale) {
        lam = std::max(4.0 * lam, 1e-8 * hscale);
        continue;
      }
      double s1 = -(g1 * c - g2 * h12) / det;
      double s2 = -(g2 * a - g1 * h12) / det;
      Vec3 trial{m[0] + s1 * t1[0] + s2 * t2[0], m[1] + s1 * t1[1] + s2 * t2[1],
                 m[2] + s1 * t1[2] + s2 * t2[2]};
      trial = trial.normalized();
      double ftrial = p.eval(trial);
      if (ftrial <= f + 1e-14 * scale) {
        m = trial;
        f = ftrial;
        lambda = lam * 0.25;
        accepted = true;
        break;
      }
      lam = std::max(4.0 * lam, 1e-8 * hscale);
    }
    if (!accepted) break;
  }
  // Classify the refined point.
  auto [t1, t2] = tangent_frame(m);
  Vec3 g = p.grad(m);
  double g1 = dot(t1, g), g2 = dot(t2, g);
  double gt = std::hypot(g1, g2);
  if (gt > 1e-8 * scale) return std::nullopt;  // not stationary on the sphere
  Mat3 d = p.hessian(m);
  double mg = dot(m, g);
  double h11 = dot(t1, d.apply(t1)) - mg;
  double h12 = dot(t1, d.apply(t2));
  double h22 = dot(t2, d.apply(t2)) - mg;
  auto [lo, hi] = sym2_eigenvalues(h11, h12, h22);
  (void)hi;
  if (lo < -1e-8 * scale) return std::nullopt;  // saddle or maximum: discard
  return SpherePoint{m, p.eval(m), gt, mg, lo};
}

// Newton iteration on grad P = 0 with Levenberg damping; 3x3 solves by
// Gaussian elimination with partial pivoting.
inline bool solve3(const Mat3& a, const Vec3& rhs, Vec3& out) {
  double m[3][4];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = a(i, j);
    m[i][3] = rhs[i];
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (std::abs(m[piv][col]) < 1e-300) return false;
    if (piv != col)
      for (int j = col; j < 4; ++j) std::swap(m[col][j], m[piv][j]);
    for (int r = col + 1; r < 3; ++r) {
      double f = m[r][col] / m[col][col];
      for (int j = col; j < 4; ++j) m[r][j] -= f * m[col][j];
    }
  }
  for (int i = 2; i >= 0; --i) {
    double acc = m[i][3];
    for (int j = i + 1; j < 3; ++j) acc -= m[i][j] * out[j];
    out[i] = acc / m[i][i];
  }
  return true;
}

struct InteriorPoint {
  Vec3 m{};
  double value = 0.0;
  double grad_norm = 0.0;
  std::array<double, 3> hess_eigs{};
};

inline std::optional<InteriorPoint> refine_interior(const NcPolynomial& p, Vec3 x,
                                                    int max_iter) {
  const double scale = poly_scale(p);
  for (int it = 0; it < max_iter; ++it) {
    Vec3 g = p.grad(x);
    if (g.norm() <= 1e-13 * scale) break;
    Mat3 d = p.hessian(x);
    Vec3 step{};
    double lam = 0.0;
    bool ok = false;
    for (int damp = 0; damp < 30; ++damp) {
      Mat3 dl = d;
      for (int i = 0; i < 3; ++i) dl(i, i) += lam;
      Vec3 rhs{-g[0], -g[1], -g[2]};
      if (solve3(dl, rhs, step) && step.norm() < 0.75) {
        ok = true;
        break;
      }
      lam = std::max(4.0 * lam, 1e-6 * scale);
    }
    if (!ok) return std::nullopt;
    x = x + step;
    if (x.norm() > 1.5) return std::nullopt;  // escaped the region of interest
  }
  Vec3 g = p.grad(x);
  if (g.norm() > 1e-9 * scale) return std::nullopt;
  if (x.norm() >= 1.0 - 1e-6) return std::nullopt;  // not safely interior
  Mat3 d = p.hessian(x);
  std::array<double, 3> eig = sym3_eigenvalues(d);
  if (eig[0] < -1e-9 * scale) return std::nullopt;  // not a minimum
  return InteriorPoint{x, p.eval(x), g.norm(), eig};
}

}  // namespace detail

inline MinimumReport minimize_on_ball(const NcPolynomial& p,
                                      const OptimizeConfig& cfg = {}) {
  if (p.degree() < 1) throw BadConfig("minimize_on_ball: degree(P) must be >= 1");
  const double scale = detail::poly_scale(p);
  const int nstarts = std::max(cfg.sphere_starts, 128);

  // Sphere phase.
  std::vector<Vec3> starts = fibonacci_sphere(nstarts);
  std::vector<std::optional<detail::SpherePoint>> sphere_hits(starts.size());
  parallel_for(
      starts.size(),
      [&](std::size_t i) {
        sphere_hits[i] = detail::refine_on_sphere(p, starts[i], cfg.max_iter);
      },
      cfg.threads);

  // Interior phase.
  std::vector<Vec3> grid;
  const int gpts = std::max(cfg.interior_grid, 3);
  for (int i = 0; i < gpts; ++i)
    for (int j = 0; j < gpts; ++j)
      for (int k = 0; k < gpts; ++k) {
        auto coord = [gpts](int t) { return -0.9 + 1.8 * t / (gpts - 1.0); };
        grid.push_back(Vec3{coord(i), coord(j), coord(k)});
      }
  std::vector<std::optional<detail::InteriorPoint>> interior_hits(grid.size());
  parallel_for(
      grid.size(),
      [&](std::size_t i) {
        interior_hits[i] = detail::refine_interior(p, grid[i], cfg.max_iter);
      },
      cfg.threads);

  // Collect, filter for ball-minimum admissibility, merge duplicates.
  std::vector<MinimumRecord> cands;
  for (const auto& h : sphere_hits) {
    if (!h) continue;
    // at a surface minimum of the ball the gradient points inward (or vanishes)
    if (h->radial_grad > 1e-7 * scale) continue;
    MinimumRecord r;
    r.m0 = h->m;
    r.value = h->value;
    r.location = MinimumLocation::surface;
    r.grad_norm = p.grad(h->m).norm();
    PerpHessian ph = projected_hessian(p, h->m);
    r.omega_perp_lo = ph.omega_lo;
    r.omega_perp_hi = ph.omega_hi;
    r.det_perp = ph.det;
    r.outside_theorem = r.grad_norm < 1e-8;
    cands.push_back(r);
  }
  for (const auto& h : interior_hits) {
    if (!h) continue;
    MinimumRecord r;
    r.m0 = h->m;
    r.value = h->value;
    r.location = MinimumLocation::interior;
    r.grad_norm = h->grad_norm;
    r.hessian_eigs = h->hess_eigs;
    cands.push_back(r);
  }
  if (cands.empty())
    throw NoMinimumFound("no admissible minimum found on the ball; optimizer "
                         "misconfiguration (starts=" + std::to_string(nstarts) + ")");

  std::sort(cands.begin(), cands.end(), [](const MinimumRecord& a, const MinimumRecord& b) {
    if (a.value != b.value) return a.value < b.value;
    for (int i = 0; i < 3; ++i)
      if (a.m0[i] != b.m0[i]) return a.m0[i] < b.m0[i];
    return false;
  });
  std::vector<MinimumRecord> merged;
  for (const MinimumRecord& c : cands) {
    bool dup = false;
    for (const MinimumRecord& m : merged)
      if ((c.m0 - m.m0).norm() <= cfg.merge_tol) {
        dup = true;
        break;
      }
    if (!dup) merged.push_back(c);
  }

  MinimumReport rep;
  rep.global_value = merged.front().value;
  const double tie = cfg.tie_rel * (1.0 + std::abs(rep.global_value));
  for (const MinimumRecord& m : merged)
    if (m.value <= rep.global_value + tie) rep.minima.push_back(m);
  rep.is_unique = rep.minima.size() == 1;
  return rep;
}

// Constrained minimum of P over the sphere of radius r (thermo's inner loop).
struct SphereMinimum {
  double value = 0.0;
  Vec3 direction{0.0, 0.0, 1.0};  // unit vector; the minimizer is r * direction
};

inline SphereMinimum minimize_on_sphere(const NcPolynomial& p, double r,
                                        const OptimizeConfig& cfg = {}) {
  if (r < 0.0) throw BadConfig("minimize_on_sphere: radius must be >= 0");
  if (r == 0.0 || p.degree() < 1)
    return SphereMinimum{p.eval(Vec3{0.0, 0.0, 0.0}), Vec3{0.0, 0.0, 1.0}};
  NcPolynomial pr = p.scaled_argument(r);
  const int nstarts = std::max(cfg.sphere_starts, 128);
  std::vector<Vec3> starts = fibonacci_sphere(nstarts);
  std::vector<std::optional<detail::SpherePoint>> hits(starts.size());
  parallel_for(
      starts.size(),
      [&](std::size_t i) { hits[i] = detail::refine_on_sphere(pr, starts[i], cfg.max_iter); },
      cfg.threads);
  SphereMinimum best;
  bool have = false;
  for (const auto& h : hits)
    if (h && (!have || h->value < best.value)) {
      best.value = h->value;
      best.direction = h->m;
      have = true;
    }
  // Fall back to the best raw sample; the refiner drops saddles, and on
  // degenerate symbols (e.g. constants on the sphere) everything is a saddle.
  for (const Vec3& s : starts) {
    double v = pr.eval(s);
    if (!have || v < best.value) {
      best.value = v;
      best.direction = s;
      have = true;
    }
  }
  return best;
}

inline std::string to_json(const MinimumReport& r) {
  auto vec = [](const Vec3& v) {
    return "[" + fmt_float(v[0]) + ", " + fmt_float(v[1]) + ", " + fmt_float(v[2]) + "]";
  };
  std::string s = "{\"global_value\": " + fmt_float(r.global_value) +
                  ", \"is_unique\": " + (r.is_unique ? "true" : "false") +
                  ", \"minima\": [";
  for (std::size_t i = 0; i < r.minima.size(); ++i) {
    const MinimumRecord& m = r.minima[i];
    if (i) s += ", ";
    s += "{\"m0\": " + vec(m.m0) + ", \"value\": " + fmt_float(m.value) +
         ", \"grad_norm\": " + fmt_float(m.grad_norm) + ", \"location\": \"" +
         (m.location == MinimumLocation::surface ? "surface" : "interior") + "\"";
    if (m.location == MinimumLocation::surface) {
      s += ", \"omega_perp\": [" + fmt_float(m.omega_perp_lo) + ", " +
           fmt_float(m.omega_perp_hi) + "], \"det_perp\": " + fmt_float(m.det_perp) +
           ", \"outside_theorem\": " + (m.outside_theorem ? "true" : "false");
    } else {
      s += ", \"hessian_eigs\": [" + fmt_float(m.hessian_eigs[0]) + ", " +
           fmt_float(m.hessian_eigs[1]) + ", " + fmt_float(m.hessian_eigs[2]) + "]";
    }
    s += "}";
  }
  s += "]}";
  return s;
}

}  // namespace mfspin
