#pragma once

// Dense linear-algebra kernels shared by the synthesis, solver and simulation
// layers. Everything here is a pure function of its arguments.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "ossync/errors.hpp"

namespace ossync {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Eigenvalues of a square matrix, with multiplicity, sorted by (real, imag).
struct Spectrum {
  std::vector<Complex> values;

  std::size_t size() const { return values.size(); }
  double max_real() const;
  double min_abs() const;
  /// Number of eigenvalues within `tol` of `z`.
  int count_near(Complex z, double tol) const;
};

Spectrum eig(const Matrix& m);

/// Solves `m * x = rhs` with full pivoting. Throws kSingularMatrix.
Vector lu_solve(const Matrix& m, const Vector& rhs);

/// Infinity norm (max absolute row sum).
double norm_inf(const Matrix& m);

/// max|M - M^T| <= 1e-12 * max|M|.
bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

Matrix symmetrize(const Matrix& m);

/// Smallest eigenvalue of the symmetric part of `m`.
double min_eig_sym(const Matrix& m);

/// Symmetric positive semidefinite square root, eigenvalues floored at zero.
Matrix sqrt_psd(const Matrix& m);

/// Solves F X - X G = H by Kronecker vectorisation. Requires disjoint spectra
/// (pairwise distance > 1e-9), otherwise throws kSpectraOverlap naming the
/// closest pair.
Matrix solve_sylvester(const Matrix& f, const Matrix& g, const Matrix& h);

/// Solves A^T X + X A + Q = 0 (continuous Lyapunov) by vectorisation.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

/// Stabilising solution of A^T P + P A - P B R^-1 B^T P + Q = 0.
///
/// The stable invariant subspace [U; V] of the Hamiltonian
/// [[A, -B R^-1 B^T], [-Q, -A^T]] gives P = V U^-1, followed by one
/// Newton-Kleinman refinement. Throws kNotStabilizable when the PBH test fails
/// and kNoStabilizingSolution when the Hamiltonian has imaginary-axis
/// eigenvalues or U is singular.
Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                  const Matrix& r);

/// PBH test on the closed right half plane.
bool is_stabilizable(const Matrix& a, const Matrix& b, double tol = 1e-9);

/// All eigenvalues have real part < -tol.
bool is_hurwitz(const Matrix& m, double tol = 1e-9);
/// Complex variant via the real embedding [[Re, -Im], [Im, Re]].
bool is_hurwitz(const CMatrix& m, double tol = 1e-9);

/// [[Re, -Im], [Im, Re]]; its spectrum is sigma(M) united with conj(sigma(M)).
Matrix real_embedding(const CMatrix& m);

/// e^{M t}. Exact blockwise rotation when M is a block diagonal of zeros and
/// w [[0, 1], [-1, 0]] blocks, Pade scaling-and-squaring otherwise.
Matrix expm_flow(const Matrix& m, double t);

/// Kronecker product.
Matrix kron(const Matrix& a, const Matrix& b);

/// Column-major vectorisation and its inverse.
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

}  // namespace ossync
