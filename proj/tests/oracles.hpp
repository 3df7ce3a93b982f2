// Brute-force reference constructions used only by the test suite.  Everything
// here is deliberately naive: dense 2^N tensor products, explicit enumeration
// of operator orderings, and dense eigensolves via Eigen.  The library under
// test never links against Eigen; these oracles exist so block construction,
// spectra and pressures can be checked against an independent code path.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "mfspin/coherent.hpp"
#include "mfspin/model.hpp"

namespace oracle {

using DMat = Eigen::MatrixXcd;

// Total-spin component (axis 0,1,2 for x,y,z) on (C^2)^{tensor N}, built from
// single-site Pauli/2 matrices addressed by bit operations.
inline DMat total_spin(int n, int axis) {
  const mfspin::cplx I(0.0, 1.0);
  DMat pauli(2, 2);
  if (axis == 0) pauli << 0, 0.5, 0.5, 0;
  if (axis == 1) pauli << 0, -0.5 * I, 0.5 * I, 0;
  if (axis == 2) pauli << 0.5, 0, 0, -0.5;
  const std::size_t dim = 1ULL << n;
  DMat s = DMat::Zero(dim, dim);
  for (int site = 0; site < n; ++site) {
    const std::size_t lo = 1ULL << site;
    for (std::size_t base = 0; base < dim; ++base) {
      const int bit = (base >> site) & 1;
      for (int bit2 = 0; bit2 < 2; ++bit2) {
        const mfspin::cplx v = pauli(bit2, bit);
        if (v != mfspin::cplx(0, 0)) s(base ^ ((bit ^ bit2) * lo), base) += v;
      }
    }
  }
  return s;
}

// Symmetrized (Weyl) average of S_x^a S_y^b S_z^c over all distinct letter
// orderings, computed by literally enumerating the permutations.
inline DMat weyl_dense(const DMat& x, const DMat& y, const DMat& z, int a,
                       int b, int c) {
  std::vector<int> word;
  for (int i = 0; i < a; ++i) word.push_back(0);
  for (int i = 0; i < b; ++i) word.push_back(1);
  for (int i = 0; i < c; ++i) word.push_back(2);
  std::sort(word.begin(), word.end());
  const std::size_t dim = x.rows();
  if (word.empty()) return DMat::Identity(dim, dim);
  DMat acc = DMat::Zero(dim, dim);
  long count = 0;
  do {
    DMat prod = DMat::Identity(dim, dim);
    for (int w : word) prod = prod * (w == 0 ? x : (w == 1 ? y : z));
    acc += prod;
    ++count;
  } while (std::next_permutation(word.begin(), word.end()));
  return acc / static_cast<double>(count);
}

// Dense H = N * Weyl(P)(2 S / N) on the full 2^N-dimensional product space.
inline DMat dense_hamiltonian(const mfspin::NcPolynomial& p, int n) {
  const DMat x = total_spin(n, 0), y = total_spin(n, 1), z = total_spin(n, 2);
  const std::size_t dim = 1ULL << n;
  DMat h = DMat::Zero(dim, dim);
  for (const mfspin::Term& t : p.terms()) {
    const int d = t.mono.degree();
    const double pref =
        t.coeff * std::pow(double(n), 1.0 - d) * std::pow(2.0, d);
    h += pref * weyl_dense(x, y, z, t.mono.a, t.mono.b, t.mono.c);
  }
  return h;
}

inline std::vector<double> dense_eigenvalues(const DMat& h) {
  Eigen::SelfAdjointEigenSolver<DMat> es(h, Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(),
                         es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end());
  return ev;
}

// (1/N) ln Tr exp(-beta H) from the dense spectrum.
inline double dense_pressure(const mfspin::NcPolynomial& p, int n,
                             double beta) {
  std::vector<double> le;
  for (double e : dense_eigenvalues(dense_hamiltonian(p, n)))
    le.push_back(-beta * e);
  return mfspin::logsumexp(le) / n;
}

// Dense unitary exp(i theta (sin(phi) S_x - cos(phi) S_y)) within a single
// spin-J block, via an exact eigendecomposition of the Hermitian generator.
// Columns/rows are indexed like the library blocks: k = 0 is the top-weight
// state m = J.
inline DMat rotation_oracle(int twice_j, const mfspin::SphereAngle& om) {
  const int dim = twice_j + 1;
  DMat h = DMat::Zero(dim, dim);
  for (int k = 0; k + 1 < dim; ++k) {
    const double mag = 0.5 * std::sqrt((k + 1.0) * (twice_j - k));
    const mfspin::cplx sx = mag, sy = mfspin::cplx(0.0, -mag);
    h(k, k + 1) = om.theta * (std::sin(om.phi) * sx - std::cos(om.phi) * sy);
    h(k + 1, k) = std::conj(h(k, k + 1));
  }
  Eigen::SelfAdjointEigenSolver<DMat> es(h);
  Eigen::VectorXcd ph =
      (mfspin::cplx(0.0, 1.0) * es.eigenvalues().array()).exp();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace oracle
