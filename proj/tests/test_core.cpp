// Numeric and geometric primitives: deterministic sums, log-domain
// arithmetic, rotations, sphere grids, float formatting, parallel loops.
#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <random>

#include "mfspin/core.hpp"

using namespace mfspin;

namespace {

double frand(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

TEST_CASE("pairwise_sum is exact on integers and stable on noise", "[core]") {
  std::vector<double> ones(1024, 1.0);
  REQUIRE(pairwise_sum(ones) == 1024.0);

  // Against long-double accumulation on rough data.
  std::mt19937_64 rng(11);
  std::vector<double> v(10001);
  long double acc = 0.0L;
  for (double& x : v) {
    x = frand(rng, -1.0, 1.0) * std::pow(10.0, frand(rng, -8.0, 8.0));
    acc += static_cast<long double>(x);
  }
  const double got = pairwise_sum(v);
  REQUIRE(std::abs(got - static_cast<double>(acc)) <=
          1e-12 * std::max(1.0, std::abs(static_cast<double>(acc))) + 1e-8);

  REQUIRE(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("logsumexp: shift invariance, singletons, empty input", "[core]") {
  std::vector<double> v{0.1, -2.0, 3.5, 1.25, -40.0};
  std::vector<double> w = v;
  for (double& x : w) x += 123.0;
  REQUIRE(std::abs(logsumexp(w) - logsumexp(v) - 123.0) < 1e-12);
  REQUIRE(logsumexp({7.25}) == 7.25);
  REQUIRE(logsumexp({}) == -std::numeric_limits<double>::infinity());
  // Huge shifts must not overflow.
  REQUIRE(std::abs(logsumexp({1000.0, 1000.0}) - (1000.0 + std::log(2.0))) <
          1e-12);
}

TEST_CASE("SignedLog round-trips signs and powers", "[core]") {
  REQUIRE(SignedLog::from(0.0).sign == 0);
  REQUIRE(SignedLog::from(0.0).value() == 0.0);
  REQUIRE(std::abs(SignedLog::from(-3.0).pow_int(3).value() + 27.0) < 1e-12);
  REQUIRE(std::abs(SignedLog::from(-3.0).pow_int(2).value() - 9.0) < 1e-12);
  REQUIRE(SignedLog::from(-3.0).pow_int(0).value() == 1.0);
  REQUIRE(SignedLog::zero().pow_int(0).value() == 1.0);  // empty product
  REQUIRE(SignedLog::zero().pow_int(5).value() == 0.0);
  const double got = SignedLog::from(-2.5).times(SignedLog::from(-4.0)).value();
  REQUIRE(std::abs(got - 10.0) < 1e-12);
  REQUIRE(SignedLog::from(3.0).times(SignedLog::zero()).sign == 0);

  // Cancellation-aware sums.  Equal magnitudes cancel exactly; mixed ones to
  // rounding error.
  REQUIRE(signed_log_sum({SignedLog::from(2.0), SignedLog::from(-2.0)}).sign ==
          0);
  std::vector<SignedLog> terms{SignedLog::from(5.0), SignedLog::from(-3.0),
                               SignedLog::from(-2.0)};
  REQUIRE(std::abs(signed_log_sum(terms).value()) < 1e-14);
  terms.push_back(SignedLog::from(0.125));
  REQUIRE(std::abs(signed_log_sum(terms).value() - 0.125) < 1e-12);
}

TEST_CASE("binomials: exact 64-bit values match the log form", "[core]") {
  REQUIRE(binom_u64(0, 0) == 1ULL);
  REQUIRE(binom_u64(20, 7) == 77520ULL);
  REQUIRE(binom_u64(64, 32) == 1832624140942590534ULL);
  REQUIRE(binom_u64(5, 7) == 0ULL);
  for (int n = 0; n <= 64; ++n)
    for (int k = 0; k <= n; k += std::max(1, n / 7)) {
      const double lg = log_binom(n, k);
      const double exact = std::log(double(binom_u64(n, k)));
      REQUIRE(std::abs(lg - exact) <= 1e-11 * std::max(1.0, exact));
    }
  REQUIRE(log_binom(10, -1) == -std::numeric_limits<double>::infinity());
  REQUIRE(std::abs(log_factorial(10) - std::log(3628800.0)) < 1e-12);
}

TEST_CASE("rotations are orthogonal and compose as expected", "[core]") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const Vec3 axis{frand(rng, -1, 1), frand(rng, -1, 1), frand(rng, -1, 1)};
    if (axis.norm() < 1e-3) continue;
    const double ang = frand(rng, -6.0, 6.0);
    const Mat3 r = rotation_about_axis(axis, ang);
    REQUIRE(is_orthogonal(r, 1e-12));
    // The axis is fixed.
    const Vec3 fixed = r.apply(axis.normalized());
    REQUIRE((fixed - axis.normalized()).norm() < 1e-12);
    // Inverse = transpose.
    const Vec3 v{frand(rng, -1, 1), frand(rng, -1, 1), frand(rng, -1, 1)};
    REQUIRE((r.transpose().apply(r.apply(v)) - v).norm() < 1e-12);
    // Norm preservation.
    REQUIRE(std::abs(r.apply(v).norm() - v.norm()) < 1e-12);
  }

  // A quarter turn about z maps x to y.
  const Mat3 qz = rotation_about_axis(Vec3{0, 0, 1}, 0.5 * kPi);
  REQUIRE((qz.apply(Vec3{1, 0, 0}) - Vec3{0, 1, 0}).norm() < 1e-15);

  for (int t = 0; t < 50; ++t) {
    const Vec3 v{frand(rng, -2, 2), frand(rng, -2, 2), frand(rng, -2, 2)};
    if (v.norm() < 1e-3) continue;
    const Mat3 r = rotation_to_z(v);
    REQUIRE(is_orthogonal(r, 1e-12));
    REQUIRE((r.apply(v.normalized()) - Vec3{0, 0, 1}).norm() < 1e-12);
  }

  Mat3 bad = Mat3::identity();
  bad(0, 1) = 0.5;
  REQUIRE_FALSE(is_orthogonal(bad, 1e-12));
  REQUIRE_THROWS_AS(Vec3{}.normalized(), ZeroDirection);
}

TEST_CASE("symmetric 2x2 / 3x3 eigenvalues match closed forms", "[core]") {
  // [[3, 1], [1, 3]] has eigenvalues {2, 4}.
  auto ev2 = sym2_eigenvalues(3.0, 1.0, 3.0);
  REQUIRE(std::abs(ev2[0] - 2.0) < 1e-14);
  REQUIRE(std::abs(ev2[1] - 4.0) < 1e-14);
  auto v = sym2_eigenvector(3.0, 1.0, 3.0, 2.0);
  REQUIRE(std::abs(3.0 * v[0] + 1.0 * v[1] - 2.0 * v[0]) < 1e-12);

  std::mt19937_64 rng(13);
  for (int t = 0; t < 40; ++t) {
    Mat3 m = Mat3::identity();
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) m(i, j) = m(j, i) = frand(rng, -2, 2);
    auto ev = sym3_eigenvalues(m);
    REQUIRE(ev[0] <= ev[1]);
    REQUIRE(ev[1] <= ev[2]);
    // Trace and Frobenius norm are spectral invariants.
    const double tr = m(0, 0) + m(1, 1) + m(2, 2);
    REQUIRE(std::abs(ev[0] + ev[1] + ev[2] - tr) < 1e-10);
    double fro = 0.0, ssq = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) fro += m(i, j) * m(i, j);
    for (double e : ev) ssq += e * e;
    REQUIRE(std::abs(fro - ssq) < 1e-9);
  }
}

TEST_CASE("fibonacci_sphere covers the sphere deterministically", "[core]") {
  const auto pts = fibonacci_sphere(1000);
  REQUIRE(pts.size() == 1000);
  Vec3 mean{};
  for (const Vec3& m : pts) {
    REQUIRE(std::abs(m.norm() - 1.0) < 1e-12);
    mean = mean + m;
  }
  REQUIRE(mean.norm() / 1000.0 < 5e-3);  // near-balanced
  REQUIRE((fibonacci_sphere(1000)[317] - pts[317]).norm() == 0.0);
}

TEST_CASE("fmt_float prints 17 significant digits, lowercase e", "[core]") {
  REQUIRE(fmt_float(1.0 / 3.0) == "3.3333333333333331e-01");
  REQUIRE(fmt_float(0.0) == "0.0000000000000000e+00");
  REQUIRE(fmt_float(-2.0) == "-2.0000000000000000e+00");
  REQUIRE(fmt_float(1e100) == "1.0000000000000000e+100");
  // Round-trip through parsing restores the exact double.
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const double x = frand(rng, -1, 1) * std::pow(10.0, frand(rng, -30, 30));
    REQUIRE(std::stod(fmt_float(x)) == x);
  }
}

TEST_CASE("parallel_for runs every index once and propagates errors",
          "[core]") {
  for (int threads : {0, 1, 3, 8}) {
    std::vector<int> hits(997, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, threads);
    for (int h : hits) REQUIRE(h == 1);
  }
  REQUIRE_THROWS_AS(
      parallel_for(16,
                   [](std::size_t i) {
                     if (i == 7) throw OutOfRange("boom");
                   },
                   4),
      OutOfRange);
  REQUIRE(default_thread_count() >= 1);
}

TEST_CASE("error hierarchy reports machine-readable kinds", "[core]") {
  try {
    throw WindowTooNarrow("window 2 misses the gap");
  } catch (const Error& e) {
    REQUIRE(e.kind() == std::string("WindowTooNarrow"));
    REQUIRE(std::string(e.what()).find("window 2") != std::string::npos);
  }
  try {
    throw BadConfig("n must be positive");
  } catch (const std::runtime_error&) {
    SUCCEED("Error derives from std::runtime_error");
  }
}
