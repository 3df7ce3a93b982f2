#pragma once
// Pressure (free-energy density): exact block-trace evaluation, the
// variational entropy-energy formula, and Berezin-Lieb sandwich integrals.

#include <optional>

#include "classical_opt.hpp"
#include "coherent.hpp"
#include "core.hpp"
#include "eigensolve.hpp"
#include "model.hpp"
#include "spinblocks.hpp"

namespace mfspin {

// Shifted binary entropy: I(0) = ln 2, I(1) = 0, otherwise
// I(r) = -((1+r)/2) ln((1+r)/2) - ((1-r)/2) ln((1-r)/2).
inline double binary_entropy(double r) {
  if (!(r >= 0.0 && r <= 1.0))
    throw OutOfRange("binary_entropy: r = " + fmt_float(r) + " outside [0, 1]");
  if (r == 0.0) return std::log(2.0);
  if (r == 1.0) return 0.0;
  const double p = 0.5 * (1.0 + r), q = 0.5 * (1.0 - r);
  return -(p * std::log(p) + (q > 0.0 ? q * std::log(q) : 0.0));
}

struct PressureResult {
  double beta = 0.0;
  std::optional<double> exact;
  double variational = 0.0;
  double maximizer_r = 0.0;
  Vec3 inner_minimizer{0.0, 0.0, 1.0};
};

struct ThermoOptions {
  int max_n = 2000;    // exact_pressure cap: every block is fully diagonalized
  int r_grid = 1024;   // variational outer grid before golden-section refinement
  int threads = 0;     // 0 = hardware concurrency
  OptimizeConfig inner;  // sphere multi-start configuration for the inner min
};

// p_N(beta) = N^{-1} ln Tr e^{-beta H} over all total-spin blocks:
// log-sum-exp of ln M_{N,J} + ln sum_i e^{-beta E_i(H_J)}.
inline double exact_pressure(const NcPolynomial& p, int n, double beta,
                             const ThermoOptions& opt = {}) {
  if (n < 1) throw BadConfig("exact_pressure: N must be >= 1");
  if (!(beta > 0.0)) throw BadConfig("exact_pressure: beta must be > 0");
  if (n > opt.max_n)
    throw DimensionOverflow("exact_pressure: N = " + std::to_string(n) +
                            " exceeds the configured cap " + std::to_string(opt.max_n));
  std::vector<std::pair<BlockIndex, Multiplicity>> blks = blocks(n);
  std::vector<double> terms(blks.size());
  parallel_for(
      blks.size(),
      [&](std::size_t i) {
        BandedHermitian h = build_block(p, n, blks[i].first.twice_j);
        std::vector<double> e = banded_eigenvalues(h);
        for (double& x : e) x *= -beta;
        terms[i] = blks[i].second.log_value + logsumexp(e);
      },
      opt.threads);
  return logsumexp(terms) / n;
}

// Variational pressure max_{r in [0,1]} { I(r) - beta min_{|m|=r} P(m) }:
// dense r-grid (ties resolved toward larger r) followed by golden-section
// refinement of the winning bracket.
inline PressureResult variational_pressure(const NcPolynomial& p, double beta,
                                           const ThermoOptions& opt = {}) {
  if (!(beta > 0.0)) throw BadConfig("variational_pressure: beta must be > 0");
  if (opt.r_grid < 3) throw BadConfig("variational_pressure: r_grid must be >= 3");
  const int g = opt.r_grid;
  OptimizeConfig inner_cfg = opt.inner;
  inner_cfg.threads = 1;  // the r-grid is already parallel; keep the inner solve serial
  auto objective = [&](double r) {
    return binary_entropy(r) - beta * minimize_on_sphere(p, r, inner_cfg).value;
  };
  std::vector<double> val(g);
  parallel_for(
      g, [&](std::size_t i) { val[i] = objective(double(i) / (g - 1)); }, opt.threads);
  std::size_t best = 0;
  for (std::size_t i = 1; i < std::size_t(g); ++i)
    if (val[i] >= val[best]) best = i;  // >= : prefer the larger r on ties
  double lo = best == 0 ? 0.0 : double(best - 1) / (g - 1);
  double hi = best + 1 >= std::size_t(g) ? 1.0 : double(best + 1) / (g - 1);

  // Golden-section maximization on [lo, hi].
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = objective(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = objective(x1);
    }
  }
  double r_star = 0.5 * (lo + hi);
  // Keep exact endpoints exact (the bracket cannot move past a grid edge).
  if (best == 0 && f1 <= val[0] && f2 <= val[0]) r_star = 0.0;
  if (best + 1 >= std::size_t(g) && f1 <= val[g - 1] && f2 <= val[g - 1]) r_star = 1.0;

  PressureResult out;
  out.beta = beta;
  SphereMinimum inner = minimize_on_sphere(p, r_star, opt.inner);
  out.variational = binary_entropy(r_star) - beta * inner.value;
  out.maximizer_r = r_star;
  out.inner_minimizer = r_star * inner.direction;
  return out;
}

// ---------------------------------------------------------------------------
// Berezin-Lieb sandwich for A_J = quantize(f, ...) built with the same
// quadrature: discrete Jensen gives
//   (2J+1)/(4pi) sum w e^{-beta <Omega|A|Omega>}  <=  Tr e^{-beta A}
//     <=  (2J+1)/(4pi) sum w e^{-beta N f((2J/N) e(Omega))}
// exactly (to rounding) whenever the quadrature resolves the identity.
// ---------------------------------------------------------------------------

struct BerezinLiebResult {
  double lower_int = 0.0;
  double trace = 0.0;
  double upper_int = 0.0;
};

inline BerezinLiebResult berezin_lieb(const DenseHermitian& a_j,
                                      const std::function<double(const Vec3&)>& f,
                                      int n_sites, double beta,
                                      const SphericalQuadrature& quad,
                                      int threads = 0) {
  if (!(beta > 0.0)) throw BadConfig("berezin_lieb: beta must be > 0");
  if (n_sites < 1) throw BadConfig("berezin_lieb: N must be >= 1");
  const int twice_j = a_j.dim() - 1;
  const double pref = (twice_j + 1.0) / (4.0 * kPi);
  const double scale = double(twice_j) / n_sites;
  std::vector<double> lower_terms(quad.nodes.size()), upper_terms(quad.nodes.size());
  parallel_for(
      quad.nodes.size(),
      [&](std::size_t q) {
        const QuadratureNode& node = quad.nodes[q];
        lower_terms[q] =
            node.weight * std::exp(-beta * lower_symbol(a_j, node.angle));
        upper_terms[q] =
            node.weight *
            std::exp(-beta * n_sites * f(scale * unit_vector(node.angle)));
      },
      threads);
  BerezinLiebResult out;
  out.lower_int = pref * pairwise_sum(lower_terms);
  out.upper_int = pref * pairwise_sum(upper_terms);
  std::vector<double> e = a_j.eigenvalues();
  std::vector<double> boltz(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) boltz[i] = std::exp(-beta * e[i]);
  out.trace = pairwise_sum(boltz);
  return out;
}

inline BerezinLiebResult berezin_lieb(const DenseHermitian& a_j, const NcPolynomial& p,
                                      int n_sites, double beta,
                                      const SphericalQuadrature& quad,
                                      int threads = 0) {
  return berezin_lieb(
      a_j, [&p](const Vec3& m) { return p.eval(m); }, n_sites, beta, quad, threads);
}

// CSV emitter: one row per result, fixed column order and float format.
inline std::string pressure_csv(const std::vector<PressureResult>& rows) {
  std::string s = "beta,variational,exact,maximizer_r\n";
  for (const PressureResult& r : rows) {
    s += fmt_float(r.beta) + "," + fmt_float(r.variational) + ",";
    if (r.exact) s += fmt_float(*r.exact);
    s += "," + fmt_float(r.maximizer_r) + "\n";
  }
  return s;
}

}  // namespace mfspin
