#pragma once

// Small dense semidefinite programming.
//
// Problems are stated in "LMI form" over a real vector v:
//
//   minimize   c^T v + c0
//   subject to E v = f
//              F_b(v) = F_b0 + sum_k v_k F_bk  >=  delta_b I   for each block b
//
// SdpBuilder assembles them from matrix-valued affine expressions.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ossync/matkit.hpp"

namespace ossync {

/// Matrix-valued affine function of the decision vector:
/// constant + sum_k v_k * coeff_k (only nonzero coefficients are stored).
class AffineMatrix {
 public:
  AffineMatrix() = default;
  AffineMatrix(Eigen::Index rows, Eigen::Index cols);
  explicit AffineMatrix(const Matrix& constant);

  static AffineMatrix zero(Eigen::Index rows, Eigen::Index cols) { return {rows, cols}; }

  Eigen::Index rows() const { return constant_.rows(); }
  Eigen::Index cols() const { return constant_.cols(); }
  const Matrix& constant() const { return constant_; }
  const std::map<int, Matrix>& terms() const { return terms_; }

  /// Adds v_k * coeff.
  void add_term(int k, const Matrix& coeff);

  Matrix eval(const Vector& v) const;
  AffineMatrix transpose() const;
  AffineMatrix block(Eigen::Index r, Eigen::Index c, Eigen::Index nr, Eigen::Index nc) const;
  /// Entry (r, c) as a 1x1 expression.
  AffineMatrix entry(Eigen::Index r, Eigen::Index c) const { return block(r, c, 1, 1); }
  AffineMatrix trace() const;

  AffineMatrix& operator+=(const AffineMatrix& o);
  AffineMatrix& operator-=(const AffineMatrix& o);
  AffineMatrix& operator*=(double s);

  friend AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b) { return a += b; }
  friend AffineMatrix operator-(AffineMatrix a, const AffineMatrix& b) { return a -= b; }
  friend AffineMatrix operator-(AffineMatrix a) { return a *= -1.0; }
  friend AffineMatrix operator*(double s, AffineMatrix a) { return a *= s; }
  /// Matrix product; a 1x1 expression `a` scales `m` instead.
  friend AffineMatrix operator*(const Matrix& m, const AffineMatrix& a);
  friend AffineMatrix operator*(const AffineMatrix& a, const Matrix& m);

  /// [[a, b], [c, d]] from compatible pieces.
  static AffineMatrix blocks2x2(const AffineMatrix& a, const AffineMatrix& b,
                                const AffineMatrix& c, const AffineMatrix& d);
  static AffineMatrix hstack(const AffineMatrix& a, const AffineMatrix& b);
  static AffineMatrix vstack(const AffineMatrix& a, const AffineMatrix& b);
  /// Block diagonal with zero off-diagonal blocks.
  static AffineMatrix diag(const std::vector<AffineMatrix>& parts);

 private:
  Matrix constant_;
  std::map<int, Matrix> terms_;
};

struct LmiBlock {
  std::string name;
  Matrix f0;
  std::map<int, Matrix> terms;  // symmetric coefficients
  double margin = 0.0;

  Eigen::Index size() const { return f0.rows(); }
  Matrix eval(const Vector& v) const;
};

struct SdpProblem {
  int dimension = 0;
  Vector c;
  double c0 = 0.0;
  Matrix e;  // equality rows
  Vector f;
  std::vector<LmiBlock> blocks;
  std::vector<std::string> variable_names;

  double objective(const Vector& v) const { return c.dot(v) + c0; }
  /// Smallest value of lambda_min(F_b(v)) - delta_b over all blocks.
  double lmi_slack(const Vector& v) const;
  double equality_residual(const Vector& v) const;
};

enum class SdpStatus { kOptimal, kInfeasible, kUnbounded, kMaxIter, kNumericalBreakdown };

std::string_view to_string(SdpStatus s);

struct SdpOptions {
  int max_iterations = 200;
  double tolerance = 1e-9;       // relative gap and infeasibilities, scaled problem
  double step_fraction = 0.98;
  bool classify_failures = true; // run phase-I when the main solve does not converge
};

struct SdpSolution {
  SdpStatus status = SdpStatus::kNumericalBreakdown;
  Vector v;
  double objective = 0.0;
  double dual_objective = 0.0;
  std::vector<Matrix> lmi_duals;  // Z_b >= 0, one per block
  Vector equality_duals;
  double gap = 0.0;                  // sum_b <Z_b, F_b(v) - delta_b I>
  double primal_residual = 0.0;      // max(|E v - f|_inf, max_b (delta_b - lambda_min F_b(v))+)
  double dual_residual = 0.0;        // |c - sum <Z_b, F_bk> - E^T lambda|_inf
  int iterations = 0;
  std::vector<double> objective_history;        // c^T v of the dual iterate, per iteration
  std::vector<double> complementarity_history;  // mu = <X, S> / n (scaled problem), per iteration
  std::string message;

  bool optimal() const { return status == SdpStatus::kOptimal; }
};

/// Primal-dual interior point (HKM direction, Mehrotra predictor-corrector,
/// infeasible start). Equalities are removed by a nullspace parametrisation,
/// blocks are normalised to unit max-norm and variables to unit column norm.
/// Deterministic: no randomisation anywhere.
SdpSolution solve(const SdpProblem& p, const SdpOptions& opts = {});

/// Phase-I: minimise s subject to E v = f, F_b(v) + s I >= delta_b I and
/// s >= -1. The returned solution's `objective` is s*; feasible iff s* <= tol.
SdpSolution feasibility(const SdpProblem& p, const SdpOptions& opts = {});

/// True when feasibility(p) ends Optimal with s* <= tol.
bool is_feasible(const SdpProblem& p, double tol = 1e-9, const SdpOptions& opts = {});

/// Plain-text dump: dimension, objective, equalities, then every block with
/// its constant and coefficient matrices row-major.
void write_problem(std::ostream& os, const SdpProblem& p);

class SdpBuilder {
 public:
  AffineMatrix scalar(const std::string& name = "s");
  /// Unstructured rows x cols variable (column-major numbering).
  AffineMatrix matrix(Eigen::Index rows, Eigen::Index cols, const std::string& name = "M");
  /// Symmetric n x n variable with n(n+1)/2 entries.
  AffineMatrix symmetric(Eigen::Index n, const std::string& name = "S");

  /// F >= margin I. Requires a square expression with symmetric coefficients.
  void add_lmi(const AffineMatrix& f, double margin = 0.0, const std::string& name = "");
  /// a == b entrywise.
  void add_equal(const AffineMatrix& a, const AffineMatrix& b);
  /// Scalar a <= b (stored as a 1x1 LMI).
  void add_le(const AffineMatrix& a, const AffineMatrix& b, const std::string& name = "");
  void minimize(const AffineMatrix& objective);

  /// trace(G^T R G) <= trace Z through [[Z, G^T], [G, R^-1]] >= 0.
  /// Returns Z (a fresh symmetric variable).
  AffineMatrix trace_slack(const AffineMatrix& g, const Matrix& r);

  int dimension() const { return static_cast<int>(names_.size()); }
  SdpProblem build() const;

 private:
  int fresh(const std::string& name);

  std::vector<std::string> names_;
  std::vector<LmiBlock> blocks_;
  std::vector<std::pair<std::map<int, double>, double>> equalities_;  // sum a_k v_k = rhs
  AffineMatrix objective_;
};

}  // namespace ossync
