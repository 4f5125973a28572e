#pragma once

// Random instances and independent reference computations shared by the tests.

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "ossync/oss_synth.hpp"

namespace ossync::testing {

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

// Hurwitz with spectral abscissa <= -0.3.
inline Matrix random_stable(std::mt19937_64& rng, Eigen::Index n) {
  Matrix a = random_matrix(rng, n, n);
  const Eigen::EigenSolver<Matrix> es(a);
  const double shift = es.eigenvalues().real().maxCoeff() + 0.3 + std::uniform_real_distribution<>(0, 1)(rng);
  return a - shift * Matrix::Identity(n, n);
}

inline AgentModel random_agent(std::mt19937_64& rng, Eigen::Index outputs) {
  std::uniform_int_distribution<int> nd(2, 5), md(1, 3);
  const Eigen::Index n = nd(rng);
  const Eigen::Index m = md(rng);
  return AgentModel(random_stable(rng, n), random_matrix(rng, n, m), random_matrix(rng, outputs, n));
}

// At most three distinct frequencies; harmonic ones from a commensurate set.
inline Exosystem random_exosystem(std::mt19937_64& rng, Eigen::Index outputs) {
  const double pool[] = {0.5, 1.0, 1.5, 2.0, 3.0};
  std::uniform_int_distribution<int> pick(0, 4), count(1, 3), mult(1, 2), coin(0, 1);
  std::vector<FrequencySpec> fs;
  const int distinct = count(rng);
  if (coin(rng)) fs.push_back({0.0, mult(rng)});
  while (static_cast<int>(fs.size()) < distinct) {
    const double w = pool[pick(rng)];
    bool dup = false;
    for (const auto& f : fs) dup = dup || f.omega == w;
    if (!dup) fs.push_back({w, 1});
  }
  int nb = 0, amps = 0;
  for (const auto& f : fs) {
    nb += f.omega == 0.0 ? f.multiplicity : 2 * f.multiplicity;
    amps += f.multiplicity;
  }
  std::uniform_real_distribution<double> ad(0.5, 2.0);
  std::vector<double> a(static_cast<std::size_t>(amps));
  for (auto& v : a) v = ad(rng);
  // build_exosystem expects the frequencies ascending.
  std::sort(fs.begin(), fs.end(), [](const auto& x, const auto& y) { return x.omega < y.omega; });
  return build_exosystem(fs, random_matrix(rng, outputs, nb), a);
}

inline Vector random_unit_state(std::mt19937_64& rng, const Exosystem& exo) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector x(exo.order());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
  return x;
}

// Adaptive Simpson on a scalar function.
template <class F>
double simpson(F&& f, double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-12) {
  // Split first so periodic integrands cannot fool the initial estimate.
  const int pieces = 64;
  double total = 0.0;
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + (b - a) * k / pieces, hi = a + (b - a) * (k + 1) / pieces;
    const double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
    total += simpson(f, lo, hi, fa, fm, fb, (hi - lo) / 6.0 * (fa + 4.0 * fm + fb), tol / pieces, 40);
  }
  return total;
}

// e^{M t} by Taylor series with scaling and squaring.
inline Matrix taylor_expm(const Matrix& m, double t) {
  Matrix a = m * t;
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.5) {
    a /= 2.0;
    norm /= 2.0;
    ++squarings;
  }
  Matrix term = Matrix::Identity(m.rows(), m.cols());
  Matrix sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * a / k;
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

// F X - X G = H through eigendecompositions of F and G (both diagonalisable).
inline Matrix eigen_sylvester(const Matrix& f, const Matrix& g, const Matrix& h) {
  const Eigen::EigenSolver<Matrix> ef(f), eg(g);
  const CMatrix vf = ef.eigenvectors(), vg = eg.eigenvectors();
  CMatrix ht = vf.inverse() * h.cast<Complex>() * vg;
  for (Eigen::Index i = 0; i < ht.rows(); ++i)
    for (Eigen::Index j = 0; j < ht.cols(); ++j) ht(i, j) /= ef.eigenvalues()(i) - eg.eigenvalues()(j);
  return (vf * ht * vg.inverse()).real();
}

// A^T X + X A + Q = 0.
inline Matrix eigen_lyapunov(const Matrix& a, const Matrix& q) {
  return eigen_sylvester(a.transpose(), -a, -q);
}

// Newton-Kleinman iteration for the stabilising CARE solution from a stabilising K0.
inline Matrix kleinman_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, Matrix k) {
  const Matrix rinv = r.inverse();
  Matrix p;
  for (int it = 0; it < 100; ++it) {
    const Matrix ak = a - b * k;
    const Matrix next = eigen_lyapunov(ak, q + k.transpose() * r * k);
    const bool done = it > 0 && (next - p).norm() <= 1e-13 * next.norm();
    p = 0.5 * (next + next.transpose());
    k = rinv * b.transpose() * p;
    if (done) break;
  }
  return p;
}

}  // namespace ossync::testing
