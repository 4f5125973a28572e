#include <algorithm>

#include <gtest/gtest.h>

#include "support.hpp"

namespace ossync {
namespace {

using testing::random_matrix;
using testing::random_stable;

TEST(MatkitTest, CompanionRoots) {
  const std::vector<Complex> roots = {{-3, -4}, {-3, 4}, {-1, 0}, {0.5, 0}, {2, 0}};
  // Coefficients of prod (s - r) by repeated multiplication.
  std::vector<Complex> c = {1.0};
  for (const Complex& r : roots) {
    std::vector<Complex> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= r * c[i];
    }
    c = next;
  }
  const int n = static_cast<int>(roots.size());
  Matrix comp = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) comp(0, j) = -c[static_cast<std::size_t>(j + 1)].real();
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  const Spectrum s = eig(comp);
  ASSERT_EQ(s.size(), roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) EXPECT_LT(std::abs(s.values[i] - roots[i]), 1e-9) << i;
  EXPECT_NEAR(s.max_real(), 2.0, 1e-9);
  EXPECT_EQ(s.count_near({-3, 4}, 1e-6), 1);
}

TEST(MatkitTest, SylvesterMatchesEigenOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 4, m = 1 + trial % 3;
    const Matrix f = random_stable(rng, n);
    const Matrix g = -random_stable(rng, m);  // disjoint half planes
    const Matrix h = random_matrix(rng, n, m);
    const Matrix x = solve_sylvester(f, g, h);
    EXPECT_LT((f * x - x * g - h).norm(), 1e-10 * (1 + h.norm()));
    EXPECT_LT((x - testing::eigen_sylvester(f, g, h)).norm(), 1e-8 * (1 + x.norm()));
  }
}

TEST(MatkitTest, SylvesterOverlapThrows) {
  Matrix f(2, 2);
  f << 1, 0, 0, 2;
  Matrix g(1, 1);
  g << 2;
  try {
    solve_sylvester(f, g, Matrix::Ones(2, 1));
    FAIL();
  } catch (const OssError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSpectraOverlap);
  }
}

TEST(MatkitTest, LyapunovMatchesEigenOracle) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 5;
    const Matrix a = random_stable(rng, n);
    const Matrix w = random_matrix(rng, n, n);
    const Matrix q = w * w.transpose();
    const Matrix x = solve_lyapunov(a, q);
    EXPECT_LT((x - testing::eigen_lyapunov(a, q)).norm(), 1e-8 * (1 + x.norm()));
    EXPECT_GE(min_eig_sym(x), -1e-10);
  }
}

TEST(MatkitTest, CareKnownSolution) {
  // Reference values of a textbook double-integrator-like example.
  Matrix a(3, 3);
  a << 0, 1, 0, 0, 0, 0, 0, 0, 1;
  Matrix b(3, 1);
  b << 0, 1, 1;
  const Matrix p = solve_care(a, b, Matrix::Identity(3, 3), Matrix::Identity(1, 1));
  Matrix ref(3, 3);
  ref << 3.8051, 6.7394, -7.7394, 6.7394, 17.9048, -21.7099, -7.7394, -21.7099, 29.4494;
  EXPECT_LT((p - ref).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(MatkitTest, CareMatchesKleinman) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 4, m = 1 + trial % 2;
    const Matrix a = random_stable(rng, n) + 0.1 * random_matrix(rng, n, n);
    const Matrix b = random_matrix(rng, n, m);
    const Matrix w = random_matrix(rng, n, n);
    const Matrix q = w * w.transpose() + Matrix::Identity(n, n);
    const Matrix r = Matrix::Identity(m, m) * (1.0 + trial);
    if (!is_hurwitz(a)) continue;
    const Matrix p = solve_care(a, b, q, r);
    const Matrix oracle = testing::kleinman_care(a, b, q, r, Matrix::Zero(m, n));
    EXPECT_LT((p - oracle).norm(), 1e-8 * (1 + p.norm()));
    EXPECT_TRUE(is_hurwitz(Matrix(a - b * r.inverse() * b.transpose() * p)));
  }
}

TEST(MatkitTest, CareNotStabilizable) {
  Matrix a(2, 2);
  a << 1, 0, 0, -1;
  Matrix b(2, 1);
  b << 0, 1;
  EXPECT_FALSE(is_stabilizable(a, b));
  try {
    solve_care(a, b, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
    FAIL();
  } catch (const OssError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNotStabilizable);
  }
}

TEST(MatkitTest, ExpmMatchesTaylor) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = random_matrix(rng, 4, 4);
    const double t = 0.1 + 0.3 * trial;
    const Matrix e = expm_flow(m, t);
    const Matrix ref = testing::taylor_expm(m, t);
    EXPECT_LT((e - ref).norm(), 1e-9 * (1 + ref.norm()));
  }
}

TEST(MatkitTest, ExpmRotationBlocks) {
  Matrix m = Matrix::Zero(5, 5);
  m(1, 2) = 0.5;
  m(2, 1) = -0.5;
  m(3, 4) = 2.0;
  m(4, 3) = -2.0;
  const double t = 1.7;
  const Matrix e = expm_flow(m, t);
  EXPECT_DOUBLE_EQ(e(0, 0), 1.0);
  EXPECT_NEAR(e(1, 1), std::cos(0.5 * t), 1e-15);
  EXPECT_NEAR(e(1, 2), std::sin(0.5 * t), 1e-15);
  EXPECT_NEAR(e(2, 1), -std::sin(0.5 * t), 1e-15);
  EXPECT_NEAR(e(3, 3), std::cos(2.0 * t), 1e-15);
  EXPECT_NEAR(e(3, 4), std::sin(2.0 * t), 1e-15);
  EXPECT_LT((e - testing::taylor_expm(m, t)).norm(), 1e-12);
}

TEST(MatkitTest, KronVecIdentity) {
  std::mt19937_64 rng(15);
  const Matrix a = random_matrix(rng, 3, 2), x = random_matrix(rng, 2, 4), b = random_matrix(rng, 4, 5);
  const Vector lhs = vec(a * x * b);
  const Vector rhs = kron(b.transpose(), a) * vec(x);
  EXPECT_LT((lhs - rhs).norm(), 1e-12);
  EXPECT_EQ(unvec(vec(x), 2, 4), x);
  const Matrix k = kron(Matrix::Identity(2, 2), a);
  EXPECT_EQ(k.rows(), 6);
  EXPECT_EQ(k.block(3, 2, 3, 2), a);
}

TEST(MatkitTest, RealEmbeddingSpectrum) {
  CMatrix m(1, 1);
  m(0, 0) = Complex(-1.0, 3.0);
  const Spectrum s = eig(real_embedding(m));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.count_near({-1, 3}, 1e-12), 1);
  EXPECT_EQ(s.count_near({-1, -3}, 1e-12), 1);
  EXPECT_TRUE(is_hurwitz(m));
  m(0, 0) = Complex(0.0, 3.0);
  EXPECT_FALSE(is_hurwitz(m));
}

TEST(MatkitTest, SqrtPsd) {
  std::mt19937_64 rng(16);
  const Matrix w = random_matrix(rng, 4, 2);
  const Matrix m = w * w.transpose();  // rank 2
  const Matrix s = sqrt_psd(m);
  EXPECT_LT((s * s - m).norm(), 1e-10);
  EXPECT_TRUE(is_symmetric(s, 1e-10));
}

TEST(MatkitTest, SingularSolveThrows) {
  Matrix m(2, 2);
  m << 1, 2, 2, 4;
  try {
    lu_solve(m, Vector::Ones(2));
    FAIL();
  } catch (const OssError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSingularMatrix);
  }
}

}  // namespace
}  // namespace ossync
