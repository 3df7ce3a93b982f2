#pragma once
// Core utilities shared across the library: small linear algebra (Vec3/Mat3),
// error types, signed log-space arithmetic, deterministic parallel loops,
// pairwise summation, sphere grids, and fixed-format float printing.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mfspin {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// ---------------------------------------------------------------------------
// Errors.  Each carries a stable kind string so callers (and the CLI) can map
// failures to exit codes without parsing prose.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

#define MFSPIN_DEFINE_ERROR(NAME)                                  \
  class NAME : public Error {                                      \
   public:                                                         \
    explicit NAME(const std::string& msg) : Error(#NAME, msg) {}   \
  }

MFSPIN_DEFINE_ERROR(NonOrthogonal);
MFSPIN_DEFINE_ERROR(UnknownModel);
MFSPIN_DEFINE_ERROR(DimensionOverflow);
MFSPIN_DEFINE_ERROR(ZeroDirection);
MFSPIN_DEFINE_ERROR(NoConvergence);
MFSPIN_DEFINE_ERROR(WindowTooNarrow);
MFSPIN_DEFINE_ERROR(NoMinimumFound);
MFSPIN_DEFINE_ERROR(NotOnSphere);
MFSPIN_DEFINE_ERROR(OutsideTheorem);
MFSPIN_DEFINE_ERROR(NotInterior);
MFSPIN_DEFINE_ERROR(DegenerateDirections);
MFSPIN_DEFINE_ERROR(QuadratureTooCoarse);
MFSPIN_DEFINE_ERROR(OutOfRange);
MFSPIN_DEFINE_ERROR(BadConfig);

#undef MFSPIN_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Vec3 / Mat3
// ---------------------------------------------------------------------------

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    double n = norm();
    if (n == 0.0) throw ZeroDirection("cannot normalize the zero vector");
    return {x / n, y / n, z / n};
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.dot(b); }
inline Vec3 cross(const Vec3& a, const Vec3& b) { return a.cross(b); }

struct Mat3 {
  // Row-major 3x3.
  std::array<std::array<double, 3>, 3> a{};

  static Mat3 identity() {
    Mat3 m;
    m.a[0][0] = m.a[1][1] = m.a[2][2] = 1.0;
    return m;
  }
  double& operator()(int i, int j) { return a[i][j]; }
  double operator()(int i, int j) const { return a[i][j]; }

  Vec3 apply(const Vec3& v) const {
    return {a[0][0] * v.x + a[0][1] * v.y + a[0][2] * v.z,
            a[1][0] * v.x + a[1][1] * v.y + a[1][2] * v.z,
            a[2][0] * v.x + a[2][1] * v.y + a[2][2] * v.z};
  }
  Mat3 transpose() const {
    Mat3 t;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.a[i][j] = a[j][i];
    return t;
  }
  Mat3 mul(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += a[i][k] * o.a[k][j];
        r.a[i][j] = s;
      }
    return r;
  }
};

inline bool is_orthogonal(const Mat3& r, double tol) {
  Mat3 g = r.transpose().mul(r);
  double dev = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      dev = std::max(dev, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return dev <= tol;
}

// Rotation by `angle` about a unit axis (Rodrigues form).
inline Mat3 rotation_about_axis(const Vec3& axis_in, double angle) {
  Vec3 u = axis_in.normalized();
  double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  Mat3 r;
  r(0, 0) = c + u.x * u.x * t;
  r(0, 1) = u.x * u.y * t - u.z * s;
  r(0, 2) = u.x * u.z * t + u.y * s;
  r(1, 0) = u.y * u.x * t + u.z * s;
  r(1, 1) = c + u.y * u.y * t;
  r(1, 2) = u.y * u.z * t - u.x * s;
  r(2, 0) = u.z * u.x * t - u.y * s;
  r(2, 1) = u.z * u.y * t + u.x * s;
  r(2, 2) = c + u.z * u.z * t;
  return r;
}

// Proper rotation R with R*v = |v| * zhat.
inline Mat3 rotation_to_z(const Vec3& v_in) {
  Vec3 v = v_in.normalized();
  Vec3 zhat{0.0, 0.0, 1.0};
  double c = v.dot(zhat);
  if (c > 1.0 - 1e-14) return Mat3::identity();
  if (c < -1.0 + 1e-14) return rotation_about_axis({1.0, 0.0, 0.0}, kPi);
  Vec3 axis = v.cross(zhat);
  return rotation_about_axis(axis, std::acos(std::clamp(c, -1.0, 1.0)));
}

// Eigenvalues (ascending) of a symmetric 2x2 [[a,b],[b,d]].
inline std::array<double, 2> sym2_eigenvalues(double a, double b, double d) {
  double tr = a + d;
  double disc = std::sqrt(std::max(0.0, (a - d) * (a - d) + 4.0 * b * b));
  return {0.5 * (tr - disc), 0.5 * (tr + disc)};
}

// Unit eigenvector of [[a,b],[b,d]] for eigenvalue lam (2D).
inline std::array<double, 2> sym2_eigenvector(double a, double b, double d,
                                              double lam) {
  // (a - lam) vx + b vy = 0; pick the better-conditioned row.
  double r1 = std::hypot(a - lam, b), r2 = std::hypot(b, d - lam);
  double vx, vy;
  if (r1 >= r2) {
    vx = -b;
    vy = a - lam;
  } else {
    vx = -(d - lam);
    vy = b;
  }
  double n = std::hypot(vx, vy);
  if (n == 0.0) return {1.0, 0.0};  // degenerate: any direction works
  return {vx / n, vy / n};
}

// Eigenvalues (ascending) of a symmetric 3x3 via cyclic Jacobi sweeps.
inline std::array<double, 3> sym3_eigenvalues(Mat3 m) {
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = std::abs(m(0, 1)) + std::abs(m(0, 2)) + std::abs(m(1, 2));
    if (off < 1e-300) break;
    double scale = std::abs(m(0, 0)) + std::abs(m(1, 1)) + std::abs(m(2, 2)) + off;
    if (off <= 1e-16 * scale) break;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(m(p, q)) < 1e-300) continue;
        double theta = 0.5 * std::atan2(2.0 * m(p, q), m(q, q) - m(p, p));
        double c = std::cos(theta), s = std::sin(theta);
        Mat3 r = Mat3::identity();
        r(p, p) = c;
        r(q, q) = c;
        r(p, q) = s;
        r(q, p) = -s;
        m = r.transpose().mul(m).mul(r);
      }
  }
  std::array<double, 3> ev{m(0, 0), m(1, 1), m(2, 2)};
  std::sort(ev.begin(), ev.end());
  return ev;
}

// ---------------------------------------------------------------------------
// Signed log-space arithmetic.  Magnitudes as natural logs, signs tracked
// separately; sums use a max-shift so binomials up to n ~ several thousand
// never overflow.
// ---------------------------------------------------------------------------

struct SignedLog {
  double lg = -std::numeric_limits<double>::infinity();  // ln |value|
  int sign = 0;                                          // -1, 0, +1

  static SignedLog zero() { return {}; }
  static SignedLog from(double v) {
    if (v == 0.0) return {};
    return {std::log(std::abs(v)), v > 0.0 ? 1 : -1};
  }
  SignedLog times(const SignedLog& o) const {
    if (sign == 0 || o.sign == 0) return {};
    return {lg + o.lg, sign * o.sign};
  }
  SignedLog pow_int(long long e) const {
    if (e == 0) return {0.0, 1};  // empty product, also when base is 0
    if (sign == 0) return {};
    return {lg * static_cast<double>(e), (e % 2 == 0) ? 1 : sign};
  }
  double value() const { return sign == 0 ? 0.0 : sign * std::exp(lg); }
};

inline SignedLog signed_log_sum(const std::vector<SignedLog>& terms) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms)
    if (t.sign != 0) m = std::max(m, t.lg);
  if (!std::isfinite(m)) return SignedLog::zero();
  double acc = 0.0;
  for (const auto& t : terms)
    if (t.sign != 0) acc += t.sign * std::exp(t.lg - m);
  if (acc == 0.0) return SignedLog::zero();
  return {m + std::log(std::abs(acc)), acc > 0.0 ? 1 : -1};
}

inline double log_factorial(long long n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline double log_binom(long long n, long long k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

// Exact binomial coefficient; safe for n <= 64 (fits in unsigned 64-bit).
inline unsigned long long binom_u64(int n, int k) {
  if (k < 0 || k > n) return 0ULL;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
  }
  return static_cast<unsigned long long>(r);
}

// log(sum exp(v_i)) with max-shift; empty input -> -inf.
inline double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

// ---------------------------------------------------------------------------
// Deterministic reductions and parallel loops.
// ---------------------------------------------------------------------------

// Pairwise (cascade) summation: deterministic and far more accurate than a
// running sum for long node lists.
template <typename T>
T pairwise_sum(const std::vector<T>& v, std::size_t lo, std::size_t hi) {
  std::size_t n = hi - lo;
  if (n == 0) return T{};
  if (n <= 8) {
    T acc{};
    for (std::size_t i = lo; i < hi; ++i) acc += v[i];
    return acc;
  }
  std::size_t mid = lo + n / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

template <typename T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(v, 0, v.size());
}

inline int default_thread_count() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(i) for i in [0, n).  Each index writes only its own outputs, so the
// result is independent of the scheduling order.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         int threads = 0) {
  if (threads <= 0) threads = default_thread_count();
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error = nullptr;
  std::atomic<bool> failed{false};
  std::mutex err_mutex;
  int use = static_cast<int>(std::min<std::size_t>(threads, n));
  pool.reserve(use);
  for (int t = 0; t < use; ++t) {
    pool.emplace_back([&]() {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          break;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Sphere grids.
// ---------------------------------------------------------------------------

// Deterministic Fibonacci (golden-angle) grid of n points on the unit sphere.
inline std::vector<Vec3> fibonacci_sphere(int n) {
  std::vector<Vec3> pts;
  pts.reserve(n);
  const double ga = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double z = 1.0 - (2.0 * i + 1.0) / n;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = ga * i;
    pts.push_back({r * std::cos(phi), r * std::sin(phi), z});
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Fixed float formatting: 17 significant digits, lowercase e-notation.
// ---------------------------------------------------------------------------

inline std::string fmt_float(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.16e", x);
  return std::string(buf);
}

}  // namespace mfspin
