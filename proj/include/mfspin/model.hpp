#pragma once
// Model polynomials P(m) in the three magnetization components.  A term
// (coeff, a, b, c) stands for the Weyl-symmetrized monomial m_x^a m_y^b m_z^c;
// classically the ordering is irrelevant and evaluation is plain commutative
// arithmetic.  The operator content of a term lives in spinblocks.hpp.

#include <map>
#include <string>
#include <vector>

#include "core.hpp"

namespace mfspin {

struct Monomial {
  int a = 0, b = 0, c = 0;  // powers of m_x, m_y, m_z
  int degree() const { return a + b + c; }
  friend auto operator<=>(const Monomial&, const Monomial&) = default;
};

struct Term {
  double coeff = 0.0;
  Monomial mono;
};

class NcPolynomial {
 public:
  NcPolynomial() = default;

  static NcPolynomial from_terms(const std::vector<Term>& raw) {
    std::map<Monomial, double> acc;
    for (const Term& t : raw) {
      if (t.mono.a < 0 || t.mono.b < 0 || t.mono.c < 0)
        throw BadConfig("monomial powers must be non-negative");
      acc[t.mono] += t.coeff;
    }
    NcPolynomial p;
    for (const auto& [mono, coeff] : acc)
      if (coeff != 0.0) p.terms_.push_back({coeff, mono});
    return p;
  }

  const std::vector<Term>& terms() const { return terms_; }

  int degree() const {
    int d = 0;
    for (const Term& t : terms_) d = std::max(d, t.mono.degree());
    return d;
  }

  // Commutative classical evaluation.
  double eval(const Vec3& m) const {
    double s = 0.0;
    for (const Term& t : terms_)
      s += t.coeff * ipow(m.x, t.mono.a) * ipow(m.y, t.mono.b) * ipow(m.z, t.mono.c);
    return s;
  }

  Vec3 grad(const Vec3& m) const {
    Vec3 g;
    for (const Term& t : terms_) {
      double px = ipow(m.x, t.mono.a), py = ipow(m.y, t.mono.b), pz = ipow(m.z, t.mono.c);
      if (t.mono.a > 0) g.x += t.coeff * t.mono.a * ipow(m.x, t.mono.a - 1) * py * pz;
      if (t.mono.b > 0) g.y += t.coeff * t.mono.b * px * ipow(m.y, t.mono.b - 1) * pz;
      if (t.mono.c > 0) g.z += t.coeff * t.mono.c * px * py * ipow(m.z, t.mono.c - 1);
    }
    return g;
  }

  Mat3 hessian(const Vec3& m) const {
    Mat3 h;
    for (const Term& t : terms_) {
      const int a = t.mono.a, b = t.mono.b, c = t.mono.c;
      double px = ipow(m.x, a), py = ipow(m.y, b), pz = ipow(m.z, c);
      if (a >= 2) h(0, 0) += t.coeff * a * (a - 1) * ipow(m.x, a - 2) * py * pz;
      if (b >= 2) h(1, 1) += t.coeff * b * (b - 1) * px * ipow(m.y, b - 2) * pz;
      if (c >= 2) h(2, 2) += t.coeff * c * (c - 1) * px * py * ipow(m.z, c - 2);
      if (a >= 1 && b >= 1) {
        double v = t.coeff * a * b * ipow(m.x, a - 1) * ipow(m.y, b - 1) * pz;
        h(0, 1) += v;
        h(1, 0) += v;
      }
      if (a >= 1 && c >= 1) {
        double v = t.coeff * a * c * ipow(m.x, a - 1) * py * ipow(m.z, c - 1);
        h(0, 2) += v;
        h(2, 0) += v;
      }
      if (b >= 1 && c >= 1) {
        double v = t.coeff * b * c * px * ipow(m.y, b - 1) * ipow(m.z, c - 1);
        h(1, 2) += v;
        h(2, 1) += v;
      }
    }
    return h;
  }

  // Weyl polynomial of m -> P(R^T m), so that eval(rotated(R), R*m) = eval(P, m):
  // the classical symbol transported by the rotation R.
  NcPolynomial rotated(const Mat3& r) const {
    if (!is_orthogonal(r, 1e-12))
      throw NonOrthogonal("rotation matrix fails R^T R = 1 within 1e-12");
    std::map<std::array<int, 3>, double> acc;
    for (const Term& t : terms_) {
      // (R^T m)_i = sum_j R(j,i) m_j: expand the product of the three linear
      // forms raised to the monomial powers.
      std::map<std::array<int, 3>, double> poly{{{0, 0, 0}, t.coeff}};
      for (int axis = 0; axis < 3; ++axis) {
        int power = axis == 0 ? t.mono.a : (axis == 1 ? t.mono.b : t.mono.c);
        std::array<double, 3> lin{r(0, axis), r(1, axis), r(2, axis)};
        for (int rep = 0; rep < power; ++rep) poly = mul_linear(poly, lin);
      }
      for (const auto& [mono, coeff] : poly) acc[mono] += coeff;
    }
    std::vector<Term> out;
    for (const auto& [mono, coeff] : acc)
      out.push_back({coeff, {mono[0], mono[1], mono[2]}});
    return from_terms(out);
  }

  // P(s*m): every degree-d term scaled by s^d.  Used for sphere-of-radius-r
  // minimization and symbol rescaling.
  NcPolynomial scaled_argument(double s) const {
    std::vector<Term> out;
    for (const Term& t : terms_)
      out.push_back({t.coeff * ipow(s, t.mono.degree()), t.mono});
    return from_terms(out);
  }

 private:
  static double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  }

  static std::map<std::array<int, 3>, double> mul_linear(
      const std::map<std::array<int, 3>, double>& poly,
      const std::array<double, 3>& lin) {
    std::map<std::array<int, 3>, double> out;
    for (const auto& [mono, coeff] : poly)
      for (int j = 0; j < 3; ++j) {
        if (lin[j] == 0.0) continue;
        std::array<int, 3> m = mono;
        ++m[j];
        out[m] += coeff * lin[j];
      }
    return out;
  }

  std::vector<Term> terms_;
};

// ---------------------------------------------------------------------------
// Built-in models.
// ---------------------------------------------------------------------------

struct ModelParams {
  double gamma = 0.0;   // transverse/longitudinal field strength
  double alpha = 0.0;   // lmg m_y^2 coefficient
  double beta_c = 0.0;  // lmg/pspin m_z coupling
  double lambda = 0.0;  // field model strength
  int p = 2;            // pspin exponent
};

inline NcPolynomial builtin_model(const std::string& name, const ModelParams& prm) {
  if (name == "curie_weiss") {
    return NcPolynomial::from_terms({{-1.0, {2, 0, 0}}, {-prm.gamma, {0, 0, 1}}});
  }
  if (name == "lmg") {
    return NcPolynomial::from_terms({{-prm.alpha, {0, 2, 0}},
                                     {-prm.beta_c, {0, 0, 2}},
                                     {-prm.gamma, {1, 0, 0}}});
  }
  if (name == "pspin") {
    if (prm.p < 1) throw UnknownModel("pspin requires integer p >= 1");
    return NcPolynomial::from_terms({{-prm.beta_c, {0, 0, prm.p}},
                                     {-prm.gamma, {1, 0, 0}}});
  }
  if (name == "field") {
    return NcPolynomial::from_terms({{-prm.lambda, {0, 0, 1}}});
  }
  throw UnknownModel("no builtin model named '" + name + "'");
}

}  // namespace mfspin
