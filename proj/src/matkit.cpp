#include "ossync/matkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace ossync {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kSingularMatrix: return "SingularMatrix";
    case ErrorKind::kSpectraOverlap: return "SpectraOverlap";
    case ErrorKind::kNotStabilizable: return "NotStabilizable";
    case ErrorKind::kNoStabilizingSolution: return "NoStabilizingSolution";
    case ErrorKind::kNoSpanningTree: return "NoSpanningTree";
    case ErrorKind::kInconsistentCheck: return "InconsistentCheck";
    case ErrorKind::kSigmaTooLarge: return "SigmaTooLarge";
    case ErrorKind::kDuplicateFrequency: return "DuplicateFrequency";
    case ErrorKind::kIrrationalRatio: return "IrrationalRatio";
    case ErrorKind::kNoSolution: return "NoSolution";
    case ErrorKind::kImaginaryAxisHamiltonian: return "ImaginaryAxisHamiltonian";
    case ErrorKind::kSingularKkt: return "SingularKkt";
    case ErrorKind::kMaxIter: return "MaxIter";
    case ErrorKind::kNumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::kInfeasibleInitialPoint: return "InfeasibleInitialPoint";
    case ErrorKind::kNoFeasibleQ: return "NoFeasibleQ";
    case ErrorKind::kStalledStep: return "StalledStep";
    case ErrorKind::kNonFiniteState: return "NonFiniteState";
    case ErrorKind::kWindowOutOfRange: return "WindowOutOfRange";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kMissingArtifact: return "MissingArtifact";
  }
  return "Unknown";
}

double Spectrum::max_real() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& z : values) m = std::max(m, z.real());
  return m;
}

double Spectrum::min_abs() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& z : values) m = std::min(m, std::abs(z));
  return m;
}

int Spectrum::count_near(Complex z, double tol) const {
  return static_cast<int>(std::count_if(
      values.begin(), values.end(),
      [&](const Complex& v) { return std::abs(v - z) <= tol; }));
}

Spectrum eig(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw OssError(ErrorKind::kDimensionMismatch, "eig needs a square matrix");
  }
  Spectrum s;
  if (m.rows() == 0) return s;
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw OssError(ErrorKind::kNumericalBreakdown, "eigenvalue iteration failed");
  }
  const auto& ev = solver.eigenvalues();
  s.values.assign(ev.data(), ev.data() + ev.size());
  std::sort(s.values.begin(), s.values.end(), [](const Complex& a, const Complex& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return s;
}

Vector lu_solve(const Matrix& m, const Vector& rhs) {
  if (m.rows() != m.cols() || m.rows() != rhs.size()) {
    throw OssError(ErrorKind::kDimensionMismatch, "lu_solve dimensions");
  }
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) {
    throw OssError(ErrorKind::kSingularMatrix, "matrix is singular");
  }
  return lu.solve(rhs);
}

double norm_inf(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_eig_sym(const Matrix& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix sqrt_psd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return k;
}

Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix solve_sylvester(const Matrix& f, const Matrix& g, const Matrix& h) {
  if (f.rows() != f.cols() || g.rows() != g.cols() || h.rows() != f.rows() ||
      h.cols() != g.rows()) {
    throw OssError(ErrorKind::kDimensionMismatch, "solve_sylvester dimensions");
  }
  const Spectrum sf = eig(f);
  const Spectrum sg = eig(g);
  double best = std::numeric_limits<double>::infinity();
  Complex bf, bg;
  for (const auto& a : sf.values) {
    for (const auto& b : sg.values) {
      const double d = std::abs(a - b);
      if (d < best) {
        best = d;
        bf = a;
        bg = b;
      }
    }
  }
  if (best <= 1e-9) {
    std::ostringstream os;
    os << "eigenvalues " << bf << " and " << bg << " are " << best << " apart";
    throw OssError(ErrorKind::kSpectraOverlap, os.str());
  }
  const auto n = f.rows();
  const auto m = g.rows();
  // vec(F X - X G) = (I_m (x) F - G^T (x) I_n) vec(X)
  const Matrix op = kron(Matrix::Identity(m, m), f) - kron(g.transpose(), Matrix::Identity(n, n));
  Eigen::PartialPivLU<Matrix> lu(op);
  const Vector rhs = vec(h);
  Vector x = lu.solve(rhs);
  // One step of iterative refinement keeps the residual at round-off level
  // for the badly scaled Hamiltonians met with large tracking weights.
  x += lu.solve(rhs - op * x);
  return unvec(x, n, m);
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
  const auto n = a.rows();
  const Matrix op = kron(Matrix::Identity(n, n), a.transpose()) +
                    kron(a.transpose(), Matrix::Identity(n, n));
  Eigen::FullPivLU<Matrix> lu(op);
  if (!lu.isInvertible()) {
    throw OssError(ErrorKind::kSingularMatrix, "Lyapunov operator is singular");
  }
  return symmetrize(unvec(lu.solve(-vec(q)), n, n));
}

bool is_stabilizable(const Matrix& a, const Matrix& b, double tol) {
  const auto n = a.rows();
  const Spectrum s = eig(a);
  for (const auto& lambda : s.values) {
    if (lambda.real() < -tol) continue;
    CMatrix pbh(n, n + b.cols());
    pbh.leftCols(n) = a.cast<Complex>() - lambda * CMatrix::Identity(n, n);
    pbh.rightCols(b.cols()) = b.cast<Complex>();
    Eigen::JacobiSVD<CMatrix> svd(pbh);
    const double smin = svd.singularValues()(n - 1);
    const double scale = std::max(1.0, svd.singularValues()(0));
    if (smin <= 1e-10 * scale) return false;
  }
  return true;
}

Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                  const Matrix& r) {
  const auto n = a.rows();
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n ||
      r.rows() != b.cols() || r.cols() != b.cols()) {
    throw OssError(ErrorKind::kDimensionMismatch, "solve_care dimensions");
  }
  if (!is_stabilizable(a, b)) {
    throw OssError(ErrorKind::kNotStabilizable, "(A, B) fails the PBH test");
  }
  const Matrix rinv = r.inverse();
  const Matrix brb = b * rinv * b.transpose();
  Matrix ham(2 * n, 2 * n);
  ham << a, -brb, -q, -a.transpose();

  Eigen::EigenSolver<Matrix> es(ham);
  if (es.info() != Eigen::Success) {
    throw OssError(ErrorKind::kNumericalBreakdown, "Hamiltonian eigensolver failed");
  }
  const auto& lambda = es.eigenvalues();
  const CMatrix vecs = es.eigenvectors();
  CMatrix basis(2 * n, n);
  int k = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (std::abs(lambda(i).real()) <= 1e-9) {
      throw OssError(ErrorKind::kNoStabilizingSolution,
                     "Hamiltonian has eigenvalues on the imaginary axis");
    }
    if (lambda(i).real() < 0.0 && k < n) basis.col(k++) = vecs.col(i);
  }
  if (k != n) {
    throw OssError(ErrorKind::kNoStabilizingSolution, "stable subspace has wrong dimension");
  }
  const CMatrix u = basis.topRows(n);
  const CMatrix v = basis.bottomRows(n);
  Eigen::FullPivLU<CMatrix> ulu(u);
  if (!ulu.isInvertible()) {
    throw OssError(ErrorKind::kNoStabilizingSolution, "stable subspace basis U is singular");
  }
  Matrix p = symmetrize((v * ulu.inverse()).real());

  // Newton-Kleinman refinement.
  const Matrix k_gain = rinv * b.transpose() * p;
  const Matrix closed = a - b * k_gain;
  if (is_hurwitz(closed)) {
    p = solve_lyapunov(closed, q + k_gain.transpose() * r * k_gain);
  }
  if (!is_hurwitz(Matrix(a - brb * p))) {
    throw OssError(ErrorKind::kNoStabilizingSolution, "closed loop is not Hurwitz");
  }
  return p;
}

bool is_hurwitz(const Matrix& m, double tol) {
  if (m.size() == 0) return true;
  return eig(m).max_real() < -tol;
}

Matrix real_embedding(const CMatrix& m) {
  const auto r = m.rows();
  const auto c = m.cols();
  Matrix e(2 * r, 2 * c);
  e << m.real(), -m.imag(), m.imag(), m.real();
  return e;
}

bool is_hurwitz(const CMatrix& m, double tol) {
  return is_hurwitz(real_embedding(m), tol);
}

namespace {

// Returns true and fills `omegas` (0 for scalar zero blocks) if `m` is a block
// diagonal of 1x1 zeros and 2x2 w*[[0, 1], [-1, 0]] blocks.
bool rotation_blocks(const Matrix& m, std::vector<std::pair<Eigen::Index, double>>& blocks) {
  const auto n = m.rows();
  Eigen::Index i = 0;
  while (i < n) {
    const bool row_zero = m.row(i).isZero(0.0) && m.col(i).isZero(0.0);
    if (row_zero) {
      blocks.emplace_back(i, 0.0);
      ++i;
      continue;
    }
    if (i + 1 >= n) return false;
    const double w = m(i, i + 1);
    if (w == 0.0 || m(i + 1, i) != -w || m(i, i) != 0.0 || m(i + 1, i + 1) != 0.0) return false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i || j == i + 1) continue;
      if (m(i, j) != 0.0 || m(i + 1, j) != 0.0 || m(j, i) != 0.0 || m(j, i + 1) != 0.0) {
        return false;
      }
    }
    blocks.emplace_back(i, w);
    i += 2;
  }
  return true;
}

}  // namespace

Matrix expm_flow(const Matrix& m, double t) {
  if (m.rows() != m.cols()) {
    throw OssError(ErrorKind::kDimensionMismatch, "expm_flow needs a square matrix");
  }
  std::vector<std::pair<Eigen::Index, double>> blocks;
  if (rotation_blocks(m, blocks)) {
    Matrix e = Matrix::Zero(m.rows(), m.cols());
    for (const auto& [start, w] : blocks) {
      if (w == 0.0) {
        e(start, start) = 1.0;
      } else {
        const double c = std::cos(w * t);
        const double s = std::sin(w * t);
        e.block<2, 2>(start, start) << c, s, -s, c;
      }
    }
    return e;
  }
  return (m * t).exp();
}

}  // namespace ossync
