// Semiclassical ladder predictions, the truncated limit oscillator, overlap
// decay bounds, and the exact-vs-predicted ground-state overlap.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mfspin/eigensolve.hpp"
#include "mfspin/semiclassic.hpp"
#include "json.hpp"

using namespace mfspin;

namespace {
const double kSqrt3 = std::sqrt(3.0);

NcPolynomial cw(double gamma) {
  ModelParams prm;
  prm.gamma = gamma;
  return builtin_model("curie_weiss", prm);
}
}  // namespace

TEST_CASE("ladder prediction for a unique tilted-free minimum",
          "[semiclassic]") {
  const NcPolynomial p = cw(3.0);
  const MinimumReport rep = minimize_on_ball(p);
  const int n = 400;
  const LadderPrediction pred = predict(p, rep, n, 4, 4);

  REQUIRE(pred.per_minimum.size() == 1);
  const MinimumLadderInfo& info = pred.per_minimum[0];
  REQUIRE(std::abs(info.n_h + 3.0 * n) < 1e-7);
  REQUIRE(std::abs(info.grad_norm - 3.0) < 1e-8);
  REQUIRE(std::abs(info.sqrt_det - kSqrt3) < 1e-8);
  REQUIRE(std::abs(info.omega - kSqrt3) < 1e-8);

  // E(k, m) = N h + (2k - 1) |grad h| + (2m + 1) sqrt(det_perp).
  REQUIRE(std::abs(pred.predicted_e0 - (-3.0 * n - 3.0 + kSqrt3)) < 1e-7);
  REQUIRE(std::abs(pred.predicted_gap - 2.0 * kSqrt3) < 1e-8);
  REQUIRE(pred.gap_to_next == pred.predicted_gap);
  REQUIRE(pred.kappa_offset == 0.0);
  REQUIRE(pred.levels.size() == 25);
  for (const LadderLevel& lv : pred.levels) {
    const double want =
        info.n_h + (2 * lv.k - 1) * info.grad_norm + (2 * lv.m + 1) * info.sqrt_det;
    REQUIRE(std::abs(lv.energy - want) < 1e-9 * n);
  }
  for (std::size_t i = 1; i < pred.levels.size(); ++i)
    REQUIRE(pred.levels[i - 1].energy <= pred.levels[i].energy + 1e-12);

  const nlohmann::json j = nlohmann::json::parse(to_json(pred));
  REQUIRE(j.at("per_minimum").size() == 1);
  REQUIRE(j.at("levels").size() == 25);
  REQUIRE(j.at("predicted_gap").get<double>() ==
          Catch::Approx(2.0 * kSqrt3).epsilon(1e-12));
}

TEST_CASE("coinciding ladders of a symmetry-broken pair give a closing gap",
          "[semiclassic]") {
  const NcPolynomial p = cw(1.0);
  const MinimumReport rep = minimize_on_ball(p);
  REQUIRE(rep.minima.size() == 2);
  const LadderPrediction pred = predict(p, rep, 300, 3, 3);
  REQUIRE(pred.per_minimum.size() == 2);
  for (const MinimumLadderInfo& info : pred.per_minimum) {
    REQUIRE(std::abs(info.grad_norm - 2.0) < 1e-8);
    REQUIRE(std::abs(info.sqrt_det - kSqrt3) < 1e-8);
  }
  REQUIRE(std::abs(pred.predicted_e0 - (-1.25 * 300 - 2.0 + kSqrt3)) < 1e-6);
  // The two lobes produce identical ladder points: gap collapses to zero but
  // the next distinct point sits min(2 |grad|, 2 sqrt(det)) above.
  REQUIRE(pred.predicted_gap == 0.0);
  REQUIRE(std::abs(pred.gap_to_next - 2.0 * kSqrt3) < 1e-8);
}

TEST_CASE("ladder matches the exact low spectrum with improving accuracy",
          "[semiclassic]") {
  const NcPolynomial p = cw(3.0);
  const MinimumReport rep = minimize_on_ball(p);
  double prev_err = std::numeric_limits<double>::infinity();
  for (int n : {250, 500}) {
    const SpectrumResult ex = assemble_spectrum(p, n, 8.0);
    const LadderPrediction pred = predict(p, rep, n, 3, 3);
    const double err_e0 = std::abs(ex.e0 - pred.predicted_e0);
    const double err_gap = std::abs(ex.gap - pred.predicted_gap);
    REQUIRE(err_e0 < 0.2);
    REQUIRE(err_gap < 0.2);
    REQUIRE(err_e0 + err_gap < prev_err);
    prev_err = err_e0 + err_gap;
  }
}

TEST_CASE("prediction rejects configurations outside its hypotheses",
          "[semiclassic]") {
  const NcPolynomial p = cw(3.0);
  const MinimumReport rep = minimize_on_ball(p);
  REQUIRE_THROWS_AS(predict(p, rep, 0, 3, 3), BadConfig);
  REQUIRE_THROWS_AS(predict(p, rep, 100, 0, 3), BadConfig);
  REQUIRE_THROWS_AS(predict(p, MinimumReport{}, 100, 3, 3), OutsideTheorem);

  // Interior minimum: caller must switch to predict_interior.
  const NcPolynomial interior = NcPolynomial::from_terms({{1.0, {0, 0, 2}},
                                                          {-1.0, {0, 0, 1}},
                                                          {0.25, {0, 0, 0}},
                                                          {1.0, {2, 0, 0}},
                                                          {1.0, {0, 2, 0}}});
  REQUIRE_THROWS_AS(predict(interior, minimize_on_ball(interior), 100, 3, 3),
                    OutsideTheorem);

  // Flat valley (m_z - 1/2)^2: the surface minimum has a vanishing gradient.
  const NcPolynomial valley = NcPolynomial::from_terms(
      {{1.0, {0, 0, 2}}, {-1.0, {0, 0, 1}}, {0.25, {0, 0, 0}}});
  REQUIRE_THROWS_AS(predict(valley, minimize_on_ball(valley), 100, 3, 3),
                    OutsideTheorem);
}

TEST_CASE("interior prediction reproduces the radial-frequency formula",
          "[semiclassic]") {
  const NcPolynomial interior = NcPolynomial::from_terms({{1.0, {0, 0, 2}},
                                                          {-1.0, {0, 0, 1}},
                                                          {0.25, {0, 0, 0}},
                                                          {1.0, {2, 0, 0}},
                                                          {1.0, {0, 2, 0}}});
  // h(m0) = 0, |m0| = 1/2, tangent Hessian = diag(2, 2): E0 = 1/2 * 2 = 1.
  const InteriorPrediction ip = predict_interior(interior, Vec3{0, 0, 0.5}, 600);
  REQUIRE(std::abs(ip.e0 - 1.0) < 1e-10);
  REQUIRE(ip.gap == 0.0);

  REQUIRE_THROWS_AS(predict_interior(interior, Vec3{0, 0, 1.0}, 600), NotInterior);
  REQUIRE_THROWS_AS(predict_interior(interior, Vec3{0, 0, 1e-12}, 600), NotInterior);
  REQUIRE_THROWS_AS(predict_interior(interior, Vec3{0.3, 0, 0.5}, 600), NotInterior);
  const NcPolynomial saddle = NcPolynomial::from_terms(
      {{1.0, {2, 0, 0}}, {-1.0, {0, 2, 0}}, {1.0, {0, 0, 2}}, {-1.0, {0, 0, 1}}});
  REQUIRE_THROWS_AS(predict_interior(saddle, Vec3{0, 0, 0.5}, 600), NotInterior);
  REQUIRE_THROWS_AS(predict_interior(interior, Vec3{0, 0, 0.5}, 0), BadConfig);
}

TEST_CASE("truncated oscillator has the (2k+1) omega spectrum",
          "[semiclassic]") {
  for (double om : {1.0, 1.5, 3.0}) {
    const OscillatorTruncation trunc = oscillator(om, 200);
    REQUIRE(trunc.K == 200);
    REQUIRE(trunc.matrix.dim() == 201);
    const std::vector<double> vals = oscillator_spectrum(trunc, 11);
    for (int k = 0; k <= 10; ++k)
      REQUIRE(std::abs(vals[k] - (2 * k + 1) * om) < 1e-6);
  }
  REQUIRE_THROWS_AS(oscillator(0.5, 100), BadConfig);
  REQUIRE_THROWS_AS(oscillator(2.0, 1), BadConfig);
}

TEST_CASE("truncation error decays rapidly in the cutoff", "[semiclassic]") {
  for (double om : {1.5, 3.0}) {
    double err50 = 0.0, err200 = 0.0;
    for (int K : {50, 200}) {
      const std::vector<double> vals = oscillator_spectrum(oscillator(om, K), 6);
      double worst = 0.0;
      for (int k = 0; k <= 5; ++k)
        worst = std::max(worst, std::abs(vals[k] - (2 * k + 1) * om));
      (K == 50 ? err50 : err200) = worst;
    }
    if (err50 < 1e-12) continue;  // already at round-off; nothing to compare
    REQUIRE(err200 < err50);
  }
}

TEST_CASE("ground-state coefficients: special values and normalization",
          "[semiclassic]") {
  // omega = 1 is the fixed point: psi_0 = |0>.
  const std::vector<double> flat = ground_state_coefficients(1.0, 12);
  REQUIRE(flat[0] == 1.0);
  for (int nn = 1; nn <= 12; ++nn) REQUIRE(flat[nn] == 0.0);

  for (double om : {1.5, 2.0, 6.0}) {
    const std::vector<double> c = ground_state_coefficients(om, 400);
    double norm = 0.0;
    for (double v : c) norm += v * v;
    REQUIRE(std::abs(norm - 1.0) < 1e-12);
    // Odd coefficients vanish; even ones alternate in sign.
    for (int nn = 1; nn <= 400; nn += 2) REQUIRE(c[nn] == 0.0);
    for (int nn = 0; nn <= 400; nn += 2)
      REQUIRE(c[nn] * ((nn / 2) % 2 == 0 ? 1.0 : -1.0) > 0.0);
    // Matches the closed-form overlap with k = 0.
    for (int nn = 0; nn <= 40; ++nn)
      REQUIRE(std::abs(c[nn] - oscillator_overlap(nn, 0, om)) < 1e-13);
  }
  REQUIRE_THROWS_AS(ground_state_coefficients(0.9, 10), BadConfig);
  REQUIRE_THROWS_AS(ground_state_coefficients(2.0, -1), BadConfig);
}

TEST_CASE("closed-form overlaps agree with the numerically raised states",
          "[semiclassic]") {
  const int nmax = 300;
  for (double om : {1.5, 3.0}) {
    std::vector<std::vector<double>> states;
    for (int k = 0; k <= 6; ++k) states.push_back(excited_state(k, om, nmax));
    for (int k = 0; k <= 6; ++k) {
      for (int nn = 0; nn <= 60; ++nn)
        REQUIRE(std::abs(states[k][nn] - oscillator_overlap(nn, k, om)) < 1e-8);
      // Orthonormal family.
      for (int j = 0; j <= k; ++j) {
        double acc = 0.0;
        for (int nn = 0; nn <= nmax; ++nn) acc += states[j][nn] * states[k][nn];
        REQUIRE(std::abs(acc - (j == k ? 1.0 : 0.0)) < 1e-8);
      }
    }
    // Eigenvectors of the truncated matrix reproduce the same coefficients.
    const OscillatorTruncation trunc = oscillator(om, nmax);
    const std::vector<EigenPair> pairs =
        lowest_eigenpairs(trunc.matrix, 4, 1e-12, true);
    for (int k = 0; k <= 3; ++k) {
      const std::vector<cplx>& v = *pairs[k].vector;
      // Phase convention: largest-|entry| coefficient is real positive, which
      // may flip the analytic sign globally.
      double sign = 0.0;
      for (int nn = 0; nn <= nmax && sign == 0.0; ++nn)
        if (std::abs(states[k][nn]) > 1e-6)
          sign = states[k][nn] * v[nn].real() > 0 ? 1.0 : -1.0;
      for (int nn = 0; nn <= 80; ++nn)
        REQUIRE(std::abs(sign * v[nn].real() - states[k][nn]) < 1e-8);
    }
  }
}

TEST_CASE("overlap decay bound holds for every excited level",
          "[semiclassic][expdecay]") {
  for (double om : {1.5, 3.0, 10.0}) {
    for (int k = 1; k <= 8; ++k) {
      for (int nn = 2 * k; nn <= 120; ++nn) {
        const double lhs = oscillator_overlap(nn, k, om);
        REQUIRE(lhs * lhs <= expdecay_bound(nn, k, om) * (1.0 + 1e-12));
      }
    }
  }
}

TEST_CASE("overlap decay bound fails for the ground level as printed",
          "[semiclassic][expdecay]") {
  // For k = 0 the n^{k - 1/2} prefactor undercuts the true coefficients: every
  // even n >= 2 violates the bound once omega > 1, with the violation ratio
  // approaching sqrt(2) from below as n grows.
  for (double om : {1.5, 3.0}) {
    int violations = 0;
    double worst_ratio = 0.0;
    for (int nn = 1; nn <= 120; ++nn) {
      const double lhs = oscillator_overlap(nn, 0, om);
      const double bound = expdecay_bound(nn, 0, om);
      if (lhs * lhs > bound * (1.0 + 1e-12)) {
        ++violations;
        REQUIRE(nn % 2 == 0);
        worst_ratio = std::max(worst_ratio, lhs * lhs / bound);
      }
    }
    REQUIRE(violations == 60);  // every even n in [2, 120]
    REQUIRE(worst_ratio > 1.0);
    REQUIRE(worst_ratio < std::sqrt(2.0) + 1e-6);
  }
  // omega = 1 is exact (psi_0 = |0>), so no finite-n violation arises.
  for (int nn = 1; nn <= 40; ++nn) {
    const double lhs = oscillator_overlap(nn, 0, 1.0);
    REQUIRE(lhs * lhs <= expdecay_bound(nn, 0, 1.0) * (1.0 + 1e-12));
  }
}

TEST_CASE("transposed decay bound holds in its stated regime",
          "[semiclassic][expdecay]") {
  for (double om : {1.5, 3.0, 10.0}) {
    for (int nn = 1; nn <= 5; ++nn) {
      for (int k = 2 * nn; k <= 120; ++k) {
        const double lhs = oscillator_overlap(nn, k, om);
        REQUIRE(lhs * lhs <= expdecay2_bound(nn, k, om) * (1.0 + 1e-12));
      }
    }
  }
}

TEST_CASE("exact ground state localizes on the predicted oscillator state",
          "[semiclassic][slow]") {
  const NcPolynomial p = cw(3.0);
  const MinimumReport rep = minimize_on_ball(p);
  const double overlap = ground_state_overlap_check(p, 500, rep);
  REQUIRE(overlap >= 0.97);
  REQUIRE(overlap <= 1.0 + 1e-9);

  const NcPolynomial two = cw(1.0);
  REQUIRE_THROWS_AS(ground_state_overlap_check(two, 100, minimize_on_ball(two)),
                    BadConfig);
}
