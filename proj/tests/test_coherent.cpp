// Spin coherent states: quadrature exactness, overlap identities, the rotated
// ladder, Gram containment, Chernoff tails, lower symbols, and quantization.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mfspin/coherent.hpp"
#include "oracles.hpp"

using namespace mfspin;

namespace {

double dfact(int n) {  // n!! with (-1)!! = 0!! = 1
  double r = 1.0;
  for (int k = n; k >= 2; k -= 2) r *= k;
  return r;
}

struct AngleGen {
  std::mt19937_64 rng{42};
  std::uniform_real_distribution<double> uth{0.05, kPi - 0.05};
  std::uniform_real_distribution<double> uph{0.0, 2.0 * kPi};
  SphereAngle operator()() { return SphereAngle{uth(rng), uph(rng)}; }
};

}  // namespace

TEST_CASE("spherical quadrature integrates its promised degree", "[coherent]") {
  for (auto [nt, np] :
       {std::pair{8, 16}, std::pair{21, 41}, std::pair{3, 200}}) {
    const SphericalQuadrature q = spherical_quadrature(nt, np);
    double s = 0.0;
    for (const QuadratureNode& n : q.nodes) s += n.weight;
    REQUIRE(std::abs(s - 4.0 * kPi) < 1e-12 * 4.0 * kPi);
    REQUIRE(q.exact_degree == std::min(2 * nt - 1, np - 1));
  }

  // Every monomial moment up to the requested degree, against the closed form
  // int e_x^a e_y^b e_z^c dOmega = 4 pi (a-1)!!(b-1)!!(c-1)!!/(a+b+c+1)!!.
  const SphericalQuadrature q = spherical_quadrature_for_degree(11);
  for (int a = 0; a <= 11; ++a)
    for (int b = 0; a + b <= 11; ++b)
      for (int c = 0; a + b + c <= 11; ++c) {
        double acc = 0.0;
        for (const QuadratureNode& n : q.nodes) {
          const Vec3 e = unit_vector(n.angle);
          acc += n.weight * std::pow(e.x, a) * std::pow(e.y, b) * std::pow(e.z, c);
        }
        double expect = 0.0;
        if (a % 2 == 0 && b % 2 == 0 && c % 2 == 0)
          expect = 4.0 * kPi * dfact(a - 1) * dfact(b - 1) * dfact(c - 1) /
                   dfact(a + b + c + 1);
        REQUIRE(std::abs(acc - expect) < 1e-10);
      }
}

TEST_CASE("coherent coefficients: poles, equator, normalization", "[coherent]") {
  const std::vector<cplx> c0 = coherent_coefficients(14, SphereAngle{0.0, 1.3});
  REQUIRE(std::abs(c0[0] - 1.0) < 1e-15);
  for (int k = 1; k <= 14; ++k) REQUIRE(std::abs(c0[k]) == 0.0);

  const std::vector<cplx> cpi = coherent_coefficients(14, SphereAngle{kPi, 0.4});
  REQUIRE(std::abs(std::abs(cpi[14]) - 1.0) < 1e-15);

  const std::vector<cplx> ceq = coherent_coefficients(1, SphereAngle{0.5 * kPi, 0.0});
  REQUIRE(std::abs(ceq[0] - 1.0 / std::sqrt(2.0)) < 1e-15);
  REQUIRE(std::abs(ceq[1] - 1.0 / std::sqrt(2.0)) < 1e-15);

  AngleGen gen;
  for (int t = 0; t < 100; ++t) {
    const int twice_j = 1 + int(gen.rng() % 400);
    const std::vector<cplx> c = coherent_coefficients(twice_j, gen());
    double s = 0.0;
    for (const cplx& z : c) s += std::norm(z);
    REQUIRE(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("overlaps: reproducing identity and localization", "[coherent]") {
  const SphereAngle a{1.1, 2.2};
  REQUIRE(std::abs(overlap(a, a, 37) - 1.0) < 1e-13);
  const SphereAngle anti{kPi - 1.1, 2.2 + kPi};
  REQUIRE(std::abs(overlap(anti, a, 37)) < 1e-13);

  AngleGen gen;
  for (int t = 0; t < 50; ++t) {
    const int twice_j = 1 + int(gen.rng() % 100);
    const SphereAngle o1 = gen(), o2 = gen();
    const std::vector<cplx> v1 = coherent_coefficients(twice_j, o1);
    const std::vector<cplx> v2 = coherent_coefficients(twice_j, o2);
    cplx ip(0.0, 0.0);
    for (int k = 0; k <= twice_j; ++k) ip += std::conj(v1[k]) * v2[k];
    REQUIRE(std::abs(ip - overlap(o1, o2, twice_j)) < 1e-10);

    // |<Omega'|Omega>|^2 = cos^{4J}(angle/2), checked in log form.
    const double ca = dot(unit_vector(o1), unit_vector(o2));
    const double expect2 = twice_j * std::log(0.5 * (1.0 + ca));
    const double got2 = 2.0 * std::log(std::abs(overlap(o1, o2, twice_j)));
    REQUIRE(std::abs(got2 - expect2) <= 1e-10 * (1.0 + std::abs(expect2)));
  }
}

TEST_CASE("rotated overlaps match a matrix-exponential oracle", "[coherent]") {
  AngleGen gen;
  for (int twice_j : {1, 2, 3, 7, 16}) {
    for (int t = 0; t < 4; ++t) {
      const SphereAngle om = gen();
      const oracle::DMat u = oracle::rotation_oracle(twice_j, om);
      for (int k = 0; k <= twice_j; ++k)
        for (int kp = 0; kp <= twice_j; ++kp)
          REQUIRE(std::abs(rotated_overlap(twice_j, k, kp, om) - u(kp, k)) < 1e-11);
    }
  }

  // At larger J only the ladder region (small index from either end) is
  // required; mid-range entries hit heavy cancellation in the oracle too.
  for (int twice_j : {24, 40}) {
    const SphereAngle om = gen();
    const oracle::DMat u = oracle::rotation_oracle(twice_j, om);
    for (int k = 0; k <= twice_j; ++k)
      for (int kp = 0; kp <= twice_j; ++kp) {
        const int mins =
            std::min(std::min(k, kp), std::min(twice_j - k, twice_j - kp));
        if (mins > 8) continue;
        REQUIRE(std::abs(rotated_overlap(twice_j, k, kp, om) - u(kp, k)) < 5e-9);
      }
  }

  // Endpoints theta = 0 (identity) and theta = pi.
  for (int k = 0; k <= 6; ++k)
    for (int kp = 0; kp <= 6; ++kp) {
      const cplx v = rotated_overlap(6, k, kp, SphereAngle{0.0, 0.9});
      REQUIRE(std::abs(v - (k == kp ? 1.0 : 0.0)) < 1e-15);
    }
  const oracle::DMat upi = oracle::rotation_oracle(8, SphereAngle{kPi, 0.7});
  for (int k = 0; k <= 8; ++k)
    for (int kp = 0; kp <= 8; ++kp)
      REQUIRE(std::abs(rotated_overlap(8, k, kp, {kPi, 0.7}) - upi(kp, k)) < 1e-11);
}

TEST_CASE("rotated ladder: k = 0 column and orthonormality", "[coherent]") {
  AngleGen gen;
  for (int t = 0; t < 20; ++t) {
    const int twice_j = 1 + int(gen.rng() % 60);
    const SphereAngle om = gen();
    const std::vector<cplx> c = coherent_coefficients(twice_j, om);
    for (int kp = 0; kp <= twice_j; ++kp)
      REQUIRE(std::abs(rotated_overlap(twice_j, 0, kp, om) - c[kp]) < 1e-12);
  }

  const int twice_j = 40;
  const SphereAngle om = gen();
  std::vector<std::vector<cplx>> cols(9);
  for (int k = 0; k <= 8; ++k) {
    cols[k].resize(twice_j + 1);
    for (int n = 0; n <= twice_j; ++n)
      cols[k][n] = rotated_overlap(twice_j, k, n, om);
  }
  for (int k = 0; k <= 8; ++k)
    for (int kp = k; kp <= 8; ++kp) {
      cplx ip(0.0, 0.0);
      for (int n = 0; n <= twice_j; ++n) ip += std::conj(cols[k][n]) * cols[kp][n];
      REQUIRE(std::abs(ip - (k == kp ? 1.0 : 0.0)) < 1e-9);
    }
}

TEST_CASE("binomial estimate dominates the rotated overlaps", "[coherent]") {
  for (int twice_j : {16, 30, 50, 80})
    for (int kp = 0; kp <= 8; ++kp)
      for (int k = 0; k <= kp; ++k)
        for (double th = 0.15; th < kPi; th += 0.15) {
          const double ov = std::abs(rotated_overlap(twice_j, k, kp, {th, 0.3}));
          const double bd = rotated_overlap_bound(twice_j, k, kp, {th, 0.3});
          REQUIRE(ov <= bd * (1.0 + 1e-12));
        }
}

TEST_CASE("Gram matrix of a coherent ladder family", "[coherent]") {
  const GramResult g1 = gram(20, 3, {Vec3{0.0, 0.0, 1.0}});
  REQUIRE(g1.radius == 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      REQUIRE(std::abs(g1.matrix.at(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);

  const GramResult g2 = gram(400, 5, {Vec3{0.0, 0.0, 1.0}, Vec3{0.0, 0.0, -1.0}});
  REQUIRE(g2.radius < 1e-30);
  const std::vector<double> ev2 = g2.matrix.eigenvalues();
  REQUIRE(std::abs(ev2.front() - 1.0) < 1e-8);
  REQUIRE(std::abs(ev2.back() - 1.0) < 1e-8);

  const double th = 1.52;
  const GramResult g3 =
      gram(40, 1, {Vec3{0.0, 0.0, 1.0}, Vec3{std::sin(th), 0.0, std::cos(th)}});
  REQUIRE(std::abs(g3.radius - 0.488018) < 1e-5);
  REQUIRE(g3.radius < 1.0);
  const std::vector<double> ev3 = g3.matrix.eigenvalues();
  REQUIRE(ev3.front() >= 1.0 - g3.radius - 1e-12);
  REQUIRE(ev3.back() <= 1.0 + g3.radius + 1e-12);

  REQUIRE_THROWS_AS(gram(10, 1, {Vec3{0.0, 0.0, 1.0}, Vec3{0.0, 1e-12, 1.0}}),
                    DegenerateDirections);
  REQUIRE_THROWS_AS(gram(10, 11, {Vec3{0.0, 0.0, 1.0}}), BadConfig);
  REQUIRE_THROWS_AS(gram(10, 1, {}), BadConfig);
}

TEST_CASE("Chernoff tail bound across the J, theta, delta grid", "[coherent]") {
  const ChernoffTail t0 = chernoff_tail(80, 0.0, 0.5);
  REQUIRE(t0.lhs == 0.0);
  REQUIRE(t0.rhs == 1.0);

  for (int ji = 1; ji <= 20; ++ji)
    for (int ti = 1; ti <= 20; ++ti)
      for (double delta : {0.1, 0.5, 1.0, 2.0, 5.0}) {
        const ChernoffTail t = chernoff_tail(ji * 15, ti * (kPi / 21.0), delta);
        REQUIRE(t.lhs <= t.rhs);
      }
  REQUIRE_THROWS_AS(chernoff_tail(10, 0.5, 0.0), BadConfig);
  REQUIRE_THROWS_AS(chernoff_tail(-1, 0.5, 0.5), BadConfig);
}

TEST_CASE("lower symbols: closed form for S_z and block sup bound",
          "[coherent]") {
  const int twice_j = 41;
  const auto sm = spin_matrices(twice_j);
  AngleGen gen;
  for (int t = 0; t < 10; ++t) {
    const SphereAngle om = gen();
    const double ls = lower_symbol(sm[2], om);
    REQUIRE(std::abs(ls - 0.5 * twice_j * std::cos(om.theta)) < 1e-11);
  }

  // sup over a fixed angular grid of |<H>_Omega - N h(2J/N e(Omega))| grows
  // like the linear symbol-error term; frozen values for CW gamma=3, N=100.
  ModelParams prm;
  prm.gamma = 3.0;
  const NcPolynomial cw = builtin_model("curie_weiss", prm);
  const int n = 100;
  const double frozen[3] = {0.6, 0.8, 1.0};
  int idx = 0;
  for (int twj : {60, 80, 100}) {
    const BandedHermitian h = build_block(cw, n, twj);
    double sup = 0.0;
    for (double th = 0.0; th <= kPi + 1e-9; th += kPi / 40.0)
      for (double ph = 0.0; ph < 2.0 * kPi; ph += kPi / 4.0) {
        const SphereAngle om{std::min(th, kPi), ph};
        const double sym = n * cw.eval((double(twj) / n) * unit_vector(om));
        sup = std::max(sup, std::abs(lower_symbol(h, om) - sym));
      }
    REQUIRE(std::abs(sup - frozen[idx++]) < 1e-9);
  }
}

TEST_CASE("quantization: resolution of unity and spin reproduction",
          "[coherent]") {
  for (int twice_j : {1, 7, 20, 40}) {
    const SphericalQuadrature q = spherical_quadrature_for_degree(2 * twice_j);
    const DenseHermitian one =
        quantize([](const Vec3&) { return 1.0; }, 0, twice_j, 1, q);
    for (int i = 0; i <= twice_j; ++i)
      for (int j = 0; j <= twice_j; ++j)
        REQUIRE(std::abs(one.at(i, j) - (i == j ? 1.0 : 0.0)) < 1e-10);
  }

  // S_z arises from the upper symbol (J+1) e_z and S_z^2 from the quadratic
  // (J+1)(J+3/2) e_z^2 - (J+1)/2 (both written in the 2J/N scaling).
  const int twice_j = 24;
  const double jj = 0.5 * twice_j;
  const SphericalQuadrature q = spherical_quadrature_for_degree(2 * twice_j + 2);
  const NcPolynomial fz =
      NcPolynomial::from_terms({{(jj + 1.0) / twice_j, {0, 0, 1}}});
  const DenseHermitian qz = quantize(fz, twice_j, 1, q);
  const auto sm = spin_matrices(twice_j);
  for (int i = 0; i <= twice_j; ++i)
    for (int j = 0; j <= twice_j; ++j)
      REQUIRE(std::abs(qz.at(i, j) - sm[2].get(i, j)) < 1e-10);

  const NcPolynomial fz2 = NcPolynomial::from_terms(
      {{(jj + 1.0) * (jj + 1.5) / (twice_j * double(twice_j)), {0, 0, 2}},
       {-(jj + 1.0) / 2.0, {0, 0, 0}}});
  const DenseHermitian qz2 = quantize(fz2, twice_j, 1, q);
  for (int i = 0; i <= twice_j; ++i)
    for (int j = 0; j <= twice_j; ++j) {
      const double mi = jj - i;
      const cplx want = (i == j) ? cplx(mi * mi, 0.0) : cplx(0.0, 0.0);
      REQUIRE(std::abs(qz2.at(i, j) - want) < 1e-10);
    }

  REQUIRE_THROWS_AS(quantize(fz, twice_j, 1, spherical_quadrature(4, 4)),
                    QuadratureTooCoarse);
  REQUIRE_THROWS_AS(quantize(fz, 600, 1, q), DimensionOverflow);
}

TEST_CASE("upper-symbol quantization error of a block Hamiltonian",
          "[coherent][slow]") {
  ModelParams prm;
  prm.gamma = 3.0;
  const NcPolynomial cw = builtin_model("curie_weiss", prm);
  const int n = 40;
  const double frozen[3] = {5.798994, 6.217051, 6.556928};
  double base = 0.0;
  int idx = 0;
  for (int twj : {20, 30, 40}) {
    const SphericalQuadrature q = spherical_quadrature_for_degree(2 * twj + 2);
    const double d = duffield_gap(cw, n, twj, q);
    REQUIRE(std::abs(d - frozen[idx++]) < 1e-5);
    if (twj == 20) base = d;
    REQUIRE(d <= 1.5 * base + 1e-12);  // grows slowly with the sector, not N
  }

  // Linear symbols: the gap is exactly 2J/(J+1) * lambda/2 ... frozen value.
  ModelParams pf;
  pf.lambda = 1.0;
  const NcPolynomial fld = builtin_model("field", pf);
  const SphericalQuadrature q = spherical_quadrature_for_degree(2 * 30 + 1);
  const double d = duffield_gap(fld, 30, 30, q);
  REQUIRE(std::abs(d - 1.875) < 1e-10);  // = 2J/(J+1) with J = 15
}
