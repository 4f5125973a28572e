#include "ossync/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace ossync {

// ---------------------------------------------------------------------------
// AffineMatrix

AffineMatrix::AffineMatrix(Eigen::Index rows, Eigen::Index cols) : constant_(Matrix::Zero(rows, cols)) {}

AffineMatrix::AffineMatrix(const Matrix& constant) : constant_(constant) {}

void AffineMatrix::add_term(int k, const Matrix& coeff) {
  if (coeff.rows() != rows() || coeff.cols() != cols()) {
    throw OssError(ErrorKind::kDimensionMismatch, "affine term shape");
  }
  auto it = terms_.find(k);
  if (it == terms_.end()) {
    terms_.emplace(k, coeff);
  } else {
    it->second += coeff;
  }
}

Matrix AffineMatrix::eval(const Vector& v) const {
  Matrix out = constant_;
  for (const auto& [k, m] : terms_) {
    if (k >= v.size()) throw OssError(ErrorKind::kDimensionMismatch, "eval: vector too short");
    out += v(k) * m;
  }
  return out;
}

AffineMatrix AffineMatrix::transpose() const {
  AffineMatrix out(Matrix(constant_.transpose()));
  for (const auto& [k, m] : terms_) out.terms_.emplace(k, m.transpose());
  return out;
}

AffineMatrix AffineMatrix::block(Eigen::Index r, Eigen::Index c, Eigen::Index nr, Eigen::Index nc) const {
  if (r < 0 || c < 0 || r + nr > rows() || c + nc > cols()) {
    throw OssError(ErrorKind::kDimensionMismatch, "affine block out of range");
  }
  AffineMatrix out(Matrix(constant_.block(r, c, nr, nc)));
  for (const auto& [k, m] : terms_) {
    Matrix sub = m.block(r, c, nr, nc);
    if (!sub.isZero(0.0)) out.terms_.emplace(k, std::move(sub));
  }
  return out;
}

AffineMatrix AffineMatrix::trace() const {
  if (rows() != cols()) throw OssError(ErrorKind::kDimensionMismatch, "trace of non-square");
  AffineMatrix out(Matrix::Constant(1, 1, constant_.trace()));
  for (const auto& [k, m] : terms_) {
    const double t = m.trace();
    if (t != 0.0) out.terms_.emplace(k, Matrix::Constant(1, 1, t));
  }
  return out;
}

AffineMatrix& AffineMatrix::operator+=(const AffineMatrix& o) {
  if (o.rows() != rows() || o.cols() != cols()) {
    throw OssError(ErrorKind::kDimensionMismatch, "affine sum shape");
  }
  constant_ += o.constant_;
  for (const auto& [k, m] : o.terms_) add_term(k, m);
  return *this;
}

AffineMatrix& AffineMatrix::operator-=(const AffineMatrix& o) {
  if (o.rows() != rows() || o.cols() != cols()) {
    throw OssError(ErrorKind::kDimensionMismatch, "affine difference shape");
  }
  constant_ -= o.constant_;
  for (const auto& [k, m] : o.terms_) add_term(k, -m);
  return *this;
}

AffineMatrix& AffineMatrix::operator*=(double s) {
  constant_ *= s;
  for (auto& [k, m] : terms_) m *= s;
  return *this;
}

AffineMatrix operator*(const Matrix& m, const AffineMatrix& a) {
  if (a.rows() == 1 && a.cols() == 1 && m.cols() != 1) {
    // scalar expression times a constant matrix
    AffineMatrix out(Matrix(m * a.constant_(0, 0)));
    for (const auto& [k, c] : a.terms_) out.terms_.emplace(k, m * c(0, 0));
    return out;
  }
  if (m.cols() != a.rows()) throw OssError(ErrorKind::kDimensionMismatch, "matrix * affine");
  AffineMatrix out(Matrix(m * a.constant_));
  for (const auto& [k, c] : a.terms_) out.terms_.emplace(k, m * c);
  return out;
}

AffineMatrix operator*(const AffineMatrix& a, const Matrix& m) {
  if (a.cols() != m.rows()) throw OssError(ErrorKind::kDimensionMismatch, "affine * matrix");
  AffineMatrix out(Matrix(a.constant_ * m));
  for (const auto& [k, c] : a.terms_) out.terms_.emplace(k, c * m);
  return out;
}

namespace {

void place(std::map<int, Matrix>& dst_terms, Matrix& dst_const, const AffineMatrix& src,
           Eigen::Index r0, Eigen::Index c0) {
  dst_const.block(r0, c0, src.rows(), src.cols()) = src.constant();
  for (const auto& [k, m] : src.terms()) {
    auto it = dst_terms.find(k);
    if (it == dst_terms.end()) {
      it = dst_terms.emplace(k, Matrix::Zero(dst_const.rows(), dst_const.cols())).first;
    }
    it->second.block(r0, c0, m.rows(), m.cols()) += m;
  }
}

}  // namespace

AffineMatrix AffineMatrix::blocks2x2(const AffineMatrix& a, const AffineMatrix& b,
                                     const AffineMatrix& c, const AffineMatrix& d) {
  if (a.rows() != b.rows() || c.rows() != d.rows() || a.cols() != c.cols() || b.cols() != d.cols()) {
    throw OssError(ErrorKind::kDimensionMismatch, "2x2 block assembly");
  }
  AffineMatrix out(a.rows() + c.rows(), a.cols() + b.cols());
  place(out.terms_, out.constant_, a, 0, 0);
  place(out.terms_, out.constant_, b, 0, a.cols());
  place(out.terms_, out.constant_, c, a.rows(), 0);
  place(out.terms_, out.constant_, d, a.rows(), a.cols());
  return out;
}

AffineMatrix AffineMatrix::hstack(const AffineMatrix& a, const AffineMatrix& b) {
  if (a.rows() != b.rows()) throw OssError(ErrorKind::kDimensionMismatch, "hstack");
  AffineMatrix out(a.rows(), a.cols() + b.cols());
  place(out.terms_, out.constant_, a, 0, 0);
  place(out.terms_, out.constant_, b, 0, a.cols());
  return out;
}

AffineMatrix AffineMatrix::vstack(const AffineMatrix& a, const AffineMatrix& b) {
  if (a.cols() != b.cols()) throw OssError(ErrorKind::kDimensionMismatch, "vstack");
  AffineMatrix out(a.rows() + b.rows(), a.cols());
  place(out.terms_, out.constant_, a, 0, 0);
  place(out.terms_, out.constant_, b, a.rows(), 0);
  return out;
}

AffineMatrix AffineMatrix::diag(const std::vector<AffineMatrix>& parts) {
  Eigen::Index r = 0, c = 0;
  for (const auto& p : parts) { r += p.rows(); c += p.cols(); }
  AffineMatrix out(r, c);
  r = c = 0;
  for (const auto& p : parts) {
    place(out.terms_, out.constant_, p, r, c);
    r += p.rows();
    c += p.cols();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Problem helpers

Matrix LmiBlock::eval(const Vector& v) const {
  Matrix out = f0;
  for (const auto& [k, m] : terms) out += v(k) * m;
  return out;
}

double SdpProblem::lmi_slack(const Vector& v) const {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) worst = std::min(worst, min_eig_sym(b.eval(v)) - b.margin);
  return worst;
}

double SdpProblem::equality_residual(const Vector& v) const {
  if (e.rows() == 0) return 0.0;
  return (e * v - f).cwiseAbs().maxCoeff();
}

std::string_view to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::kOptimal: return "Optimal";
    case SdpStatus::kInfeasible: return "Infeasible";
    case SdpStatus::kUnbounded: return "Unbounded";
    case SdpStatus::kMaxIter: return "MaxIter";
    case SdpStatus::kNumericalBreakdown: return "NumericalBreakdown";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Interior point core on   max b^T y  s.t.  S = C - sum_i y_i A_i >= 0,
// with the primal   min <C, X>  s.t.  <A_i, X> = b_i,  X >= 0.

namespace {

using Blocks = std::vector<Matrix>;

struct CoreProblem {
  Blocks c;                  // per block
  std::vector<Blocks> a;     // a[i][b]
  Vector b;
  std::vector<std::vector<int>> active;  // active[b] = indices i with A_ib != 0
};

struct CoreResult {
  bool converged = false;
  bool diverged = false;
  bool breakdown = false;
  int iterations = 0;
  Vector y;
  Blocks x;
  Blocks s;
  std::vector<double> dual_objective_history;  // b^T y per iteration
  std::vector<double> mu_history;              // <X, S> / n per iteration
  std::string message;
};

double inner(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

double blocks_inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += inner(a[k], b[k]);
  return s;
}

double blocks_norm(const Blocks& a) {
  double s = 0.0;
  for (const auto& m : a) s += m.squaredNorm();
  return std::sqrt(s);
}

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Largest alpha <= cap with X + alpha dX >= 0 (X = L L^T).
double max_step(const Blocks& chol_l, const Blocks& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < dx.size(); ++k) {
    const auto& l = chol_l[k];
    Matrix t = l.triangularView<Eigen::Lower>().solve(dx[k]);
    t = l.triangularView<Eigen::Lower>().solve(Matrix(t.transpose()));
    const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(sym(t), Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .minCoeff();
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

bool cholesky_blocks(const Blocks& m, Blocks& l) {
  l.resize(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    Eigen::LLT<Matrix> llt(sym(m[k]));
    if (llt.info() != Eigen::Success) return false;
    l[k] = llt.matrixL();
  }
  return true;
}

CoreResult run_ipm(const CoreProblem& p, const SdpOptions& opts) {
  const std::size_t nb = p.c.size();
  const int m = static_cast<int>(p.b.size());
  CoreResult res;

  int total_n = 0;
  for (const auto& c : p.c) total_n += static_cast<int>(c.rows());

  // Infeasible starting point.
  res.x.resize(nb);
  res.s.resize(nb);
  res.y = Vector::Zero(m);
  for (std::size_t k = 0; k < nb; ++k) {
    const double n = static_cast<double>(p.c[k].rows());
    double xi = std::max(10.0, std::sqrt(n));
    double eta = std::max({10.0, std::sqrt(n), p.c[k].norm()});
    for (int i = 0; i < m; ++i) {
      const double an = p.a[i][k].norm();
      xi = std::max(xi, n * (1.0 + std::abs(p.b(i))) / (1.0 + an));
      eta = std::max(eta, an);
    }
    res.x[k] = xi * Matrix::Identity(p.c[k].rows(), p.c[k].rows());
    res.s[k] = eta * Matrix::Identity(p.c[k].rows(), p.c[k].rows());
  }

  const double norm_b = p.b.norm();
  const double norm_c = blocks_norm(p.c);
  const double x0_scale = blocks_norm(res.x);

  Blocks rd(nb), sinv(nb), lx, ls;
  Matrix schur(m, m);
  int stall = 0;

  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it;
    // Residuals.
    Vector rp = p.b;
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < nb; ++k) s += inner(p.a[i][k], res.x[k]);
      rp(i) -= s;
    }
    for (std::size_t k = 0; k < nb; ++k) {
      rd[k] = p.c[k] - res.s[k];
      for (int i = 0; i < m; ++i) rd[k] -= res.y(i) * p.a[i][k];
    }
    const double xs = blocks_inner(res.x, res.s);
    const double mu = xs / total_n;
    const double pobj = blocks_inner(p.c, res.x);
    const double dobj = p.b.dot(res.y);
    res.dual_objective_history.push_back(dobj);
    res.mu_history.push_back(mu);

    const double pinf = rp.norm() / (1.0 + norm_b);
    const double dinf = blocks_norm(rd) / (1.0 + norm_c);
    const double gap = std::max(std::abs(pobj - dobj), xs) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (pinf <= opts.tolerance && dinf <= opts.tolerance && gap <= opts.tolerance) {
      res.converged = true;
      return res;
    }
    if (res.y.cwiseAbs().maxCoeff() > 1e10 || blocks_norm(res.x) > 1e12 * x0_scale) {
      res.diverged = true;
      res.message = "iterates diverged";
      return res;
    }

    if (!cholesky_blocks(res.x, lx) || !cholesky_blocks(res.s, ls)) {
      res.breakdown = true;
      res.message = "iterate lost positive definiteness";
      return res;
    }
    for (std::size_t k = 0; k < nb; ++k) {
      Eigen::LLT<Matrix> llt(sym(res.s[k]));
      sinv[k] = llt.solve(Matrix::Identity(res.s[k].rows(), res.s[k].cols()));
      sinv[k] = sym(sinv[k]);
    }

    // Schur complement M_ij = sum_b <A_ib, X_b A_jb S_b^-1>.
    schur.setZero();
    std::vector<Blocks> w(m, Blocks(nb));
    for (std::size_t k = 0; k < nb; ++k) {
      for (int j : p.active[k]) {
        w[j][k] = res.x[k] * p.a[j][k] * sinv[k];
      }
      for (int i : p.active[k]) {
        for (int j : p.active[k]) {
          if (j < i) continue;
          schur(i, j) += inner(p.a[i][k], w[j][k]);
        }
      }
    }
    schur = schur.selfadjointView<Eigen::Upper>();
    Eigen::LLT<Matrix> schur_llt(schur);
    Eigen::LDLT<Matrix> schur_ldlt;
    bool use_ldlt = false;
    // Near the optimum M can lose definiteness to rounding; a small diagonal
    // shift is tried before the indefinite fallback.
    const double dscale = std::max(schur.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    for (double shift = 1e-14; schur_llt.info() != Eigen::Success && shift <= 1e-8; shift *= 100.0) {
      schur_llt.compute(schur + shift * dscale * Matrix::Identity(m, m));
    }
    if (schur_llt.info() != Eigen::Success) {
      schur_ldlt.compute(schur);
      if (schur_ldlt.info() != Eigen::Success || !schur.allFinite()) {
        res.breakdown = true;
        res.message = "Schur complement factorisation failed";
        return res;
      }
      use_ldlt = true;
    }

    // X Rd S^-1 term is shared by predictor and corrector.
    Blocks xrds(nb);
    for (std::size_t k = 0; k < nb; ++k) xrds[k] = res.x[k] * rd[k] * sinv[k];

    auto direction = [&](const Blocks& rc, Vector& dy, Blocks& dx, Blocks& ds) {
      Vector rhs = rp;
      for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < nb; ++k) s += inner(p.a[i][k], rc[k] - xrds[k]);
        rhs(i) -= s;
      }
      dy = use_ldlt ? Vector(schur_ldlt.solve(rhs)) : Vector(schur_llt.solve(rhs));
      // One step of iterative refinement.
      const Vector r2 = rhs - schur * dy;
      dy += use_ldlt ? Vector(schur_ldlt.solve(r2)) : Vector(schur_llt.solve(r2));
      ds.resize(nb);
      dx.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        ds[k] = rd[k];
        for (int i = 0; i < m; ++i) {
          if (dy(i) != 0.0) ds[k] -= dy(i) * p.a[i][k];
        }
        dx[k] = rc[k] - sym(res.x[k] * ds[k] * sinv[k]);
      }
    };

    // Predictor.
    Blocks rc(nb);
    for (std::size_t k = 0; k < nb; ++k) rc[k] = -res.x[k];
    Vector dy_a;
    Blocks dx_a, ds_a;
    direction(rc, dy_a, dx_a, ds_a);
    const double ap_a = std::min(1.0, max_step(lx, dx_a));
    const double ad_a = std::min(1.0, max_step(ls, ds_a));
    double xs_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      xs_aff += inner(res.x[k] + ap_a * dx_a[k], res.s[k] + ad_a * ds_a[k]);
    }
    const double mu_aff = xs_aff / total_n;
    double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3.0);
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector.
    for (std::size_t k = 0; k < nb; ++k) {
      rc[k] = sigma * mu * sinv[k] - res.x[k] - sym(dx_a[k] * ds_a[k] * sinv[k]);
    }
    Vector dy;
    Blocks dx, ds;
    direction(rc, dy, dx, ds);
    const double tau = std::max(opts.step_fraction, 0.9 + 0.09 * std::min(ap_a, ad_a));
    const double ap = std::min(1.0, tau * max_step(lx, dx));
    const double ad = std::min(1.0, tau * max_step(ls, ds));

    for (std::size_t k = 0; k < nb; ++k) {
      res.x[k] = sym(res.x[k] + ap * dx[k]);
      res.s[k] = sym(res.s[k] + ad * ds[k]);
    }
    res.y += ad * dy;

    if (!res.y.allFinite()) {
      res.breakdown = true;
      res.message = "non-finite iterate";
      return res;
    }
    stall = (ap < 1e-8 && ad < 1e-8) ? stall + 1 : 0;
    if (stall >= 5) {
      res.breakdown = true;
      res.message = "step lengths collapsed";
      return res;
    }
  }
  res.iterations = opts.max_iterations;
  res.message = "iteration cap reached";
  return res;
}

// Reduction of an SdpProblem to CoreProblem form, and the map back.
struct Reduction {
  Vector v0;          // particular solution of E v = f
  Matrix t;           // v = v0 + t * u
  Vector col_scale;   // u_j = u~_j / col_scale_j
  std::vector<double> block_scale;
  double obj_scale = 1.0;
  double obj_offset = 0.0;
  bool equalities_inconsistent = false;
  bool objective_unbounded_direction = false;
  CoreProblem core;
};

Reduction reduce(const SdpProblem& p) {
  Reduction red;
  const int d = p.dimension;
  if (p.c.size() != d) throw OssError(ErrorKind::kDimensionMismatch, "objective length");
  if (p.e.rows() > 0 && (p.e.cols() != d || p.f.size() != p.e.rows())) {
    throw OssError(ErrorKind::kDimensionMismatch, "equality dimensions");
  }

  Matrix nullspace;
  if (p.e.rows() > 0) {
    Eigen::JacobiSVD<Matrix> svd(p.e, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    svd.setThreshold(1e-11 * std::max(1.0, static_cast<double>(std::max(p.e.rows(), p.e.cols()))));
    const auto rank = smax > 0.0 ? svd.rank() : 0;
    red.v0 = rank > 0 ? Vector(svd.solve(p.f)) : Vector(Vector::Zero(d));
    const double resid = (p.e * red.v0 - p.f).norm();
    if (resid > 1e-9 * (1.0 + p.f.norm())) red.equalities_inconsistent = true;
    nullspace = svd.matrixV().rightCols(d - rank);
  } else {
    red.v0 = Vector::Zero(d);
    nullspace = Matrix::Identity(d, d);
  }
  const auto dn = nullspace.cols();

  // Blocks in the nullspace coordinates: G_b(w) = G_b0 + sum_j w_j G_bj.
  const std::size_t nb = p.blocks.size();
  Blocks g0(nb);
  std::vector<Blocks> gj(dn, Blocks(nb));
  Eigen::Index entries = 0;
  for (std::size_t k = 0; k < nb; ++k) {
    const auto& blk = p.blocks[k];
    const auto n = blk.size();
    g0[k] = blk.eval(red.v0) - blk.margin * Matrix::Identity(n, n);
    for (Eigen::Index j = 0; j < dn; ++j) gj[j][k] = Matrix::Zero(n, n);
    for (const auto& [var, coeff] : blk.terms) {
      for (Eigen::Index j = 0; j < dn; ++j) {
        const double w = nullspace(var, j);
        if (w != 0.0) gj[j][k] += w * coeff;
      }
    }
    entries += n * n;
  }

  // Directions that leave every block unchanged are dropped.
  Matrix stacked(entries, dn);
  for (Eigen::Index j = 0; j < dn; ++j) {
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < nb; ++k) {
      const auto sz = gj[j][k].size();
      stacked.col(j).segment(row, sz) = Eigen::Map<const Vector>(gj[j][k].data(), sz);
      row += sz;
    }
  }
  const Vector cn = nullspace.transpose() * p.c;
  Matrix range_basis;
  if (dn > 0 && entries > 0) {
    Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
    svd.setThreshold(1e-11 * std::max(1.0, static_cast<double>(std::max(entries, dn))));
    const auto rank = svd.singularValues()(0) > 0.0 ? svd.rank() : 0;
    range_basis = svd.matrixV().leftCols(rank);
  } else {
    range_basis = Matrix::Zero(dn, 0);
  }
  const Vector c_out = cn - range_basis * (range_basis.transpose() * cn);
  if (c_out.norm() > 1e-9 * (1.0 + cn.norm())) red.objective_unbounded_direction = true;

  red.t = nullspace * range_basis;
  const auto r = range_basis.cols();
  Vector cr = range_basis.transpose() * cn;
  std::vector<Blocks> gr(r, Blocks(nb));
  for (Eigen::Index i = 0; i < r; ++i) {
    for (std::size_t k = 0; k < nb; ++k) {
      Matrix acc = Matrix::Zero(g0[k].rows(), g0[k].cols());
      for (Eigen::Index j = 0; j < dn; ++j) {
        const double w = range_basis(j, i);
        if (w != 0.0) acc += w * gj[j][k];
      }
      gr[i][k] = std::move(acc);
    }
  }

  // Block scaling to unit max-norm.
  red.block_scale.assign(nb, 1.0);
  for (std::size_t k = 0; k < nb; ++k) {
    double s = g0[k].cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < r; ++i) s = std::max(s, gr[i][k].cwiseAbs().maxCoeff());
    if (s > 0.0) {
      red.block_scale[k] = s;
      g0[k] /= s;
      for (Eigen::Index i = 0; i < r; ++i) gr[i][k] /= s;
    }
  }
  // Column scaling.
  red.col_scale = Vector::Ones(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < nb; ++k) s += gr[i][k].squaredNorm();
    s = std::sqrt(s);
    if (s > 0.0) {
      red.col_scale(i) = s;
      for (std::size_t k = 0; k < nb; ++k) gr[i][k] /= s;
      cr(i) /= s;
    }
  }
  const double cmax = r > 0 ? cr.cwiseAbs().maxCoeff() : 0.0;
  red.obj_scale = cmax > 0.0 ? cmax : 1.0;
  cr /= red.obj_scale;
  red.obj_offset = p.c0 + p.c.dot(red.v0);

  auto& core = red.core;
  core.c = std::move(g0);
  core.b = -cr;
  core.a.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    core.a[i].resize(nb);
    for (std::size_t k = 0; k < nb; ++k) core.a[i][k] = -gr[i][k];
  }
  core.active.assign(nb, {});
  for (std::size_t k = 0; k < nb; ++k) {
    for (Eigen::Index i = 0; i < r; ++i) {
      if (!core.a[i][k].isZero(0.0)) core.active[k].push_back(static_cast<int>(i));
    }
  }
  return red;
}

// Diagnostics in the units of the original problem.
void finish(const SdpProblem& p, const Reduction& red, const CoreResult& core, SdpSolution& sol) {
  const Vector u = core.y.cwiseQuotient(red.col_scale);
  sol.v = red.v0 + red.t * u;
  sol.objective = p.objective(sol.v);
  sol.iterations = core.iterations;
  sol.objective_history.clear();
  for (double d : core.dual_objective_history) {
    sol.objective_history.push_back(red.obj_offset - red.obj_scale * d);
  }
  sol.complementarity_history = core.mu_history;

  const std::size_t nb = p.blocks.size();
  sol.lmi_duals.resize(nb);
  Vector stationarity = p.c;
  sol.gap = 0.0;
  double violation = 0.0;
  double dual_obj = p.c0;
  for (std::size_t k = 0; k < nb; ++k) {
    const auto& blk = p.blocks[k];
    Matrix z = core.x.empty() ? Matrix::Zero(blk.size(), blk.size())
                              : Matrix(core.x[k] * (red.obj_scale / red.block_scale[k]));
    sol.lmi_duals[k] = z;
    const Matrix fv = blk.eval(sol.v) - blk.margin * Matrix::Identity(blk.size(), blk.size());
    sol.gap += inner(z, fv);
    violation = std::max(violation, -min_eig_sym(fv) / (1.0 + red.block_scale[k]));
    for (const auto& [var, coeff] : blk.terms) stationarity(var) -= inner(z, coeff);
    dual_obj -= inner(z, blk.f0 - blk.margin * Matrix::Identity(blk.size(), blk.size()));
  }
  if (p.e.rows() > 0) {
    sol.equality_duals = p.e.transpose().completeOrthogonalDecomposition().solve(stationarity);
    stationarity -= p.e.transpose() * sol.equality_duals;
    dual_obj += sol.equality_duals.dot(p.f);
    violation = std::max(violation, (p.e * sol.v - p.f).cwiseAbs().maxCoeff() / (1.0 + p.f.cwiseAbs().maxCoeff()));
  } else {
    sol.equality_duals.resize(0);
  }
  sol.dual_objective = dual_obj;
  sol.primal_residual = violation;
  sol.dual_residual = stationarity.size() ? stationarity.cwiseAbs().maxCoeff() / (1.0 + p.c.cwiseAbs().maxCoeff()) : 0.0;
}

SdpProblem phase_one_problem(const SdpProblem& p) {
  SdpProblem q;
  q.dimension = p.dimension + 1;
  const int s = p.dimension;
  q.c = Vector::Zero(q.dimension);
  q.c(s) = 1.0;
  if (p.e.rows() > 0) {
    q.e = Matrix::Zero(p.e.rows(), q.dimension);
    q.e.leftCols(p.dimension) = p.e;
    q.f = p.f;
  }
  q.blocks = p.blocks;
  for (auto& b : q.blocks) b.terms[s] = Matrix::Identity(b.size(), b.size());
  LmiBlock floor;
  floor.name = "phase_one_floor";
  floor.f0 = Matrix::Constant(1, 1, 1.0);
  floor.terms[s] = Matrix::Constant(1, 1, 1.0);
  q.blocks.push_back(floor);
  q.variable_names = p.variable_names;
  q.variable_names.push_back("phase_one_s");
  return q;
}

void validate(const SdpProblem& p) {
  for (const auto& b : p.blocks) {
    if (b.f0.rows() != b.f0.cols() || b.f0.rows() == 0) {
      throw OssError(ErrorKind::kDimensionMismatch, "LMI block must be square and nonempty");
    }
    for (const auto& [k, m] : b.terms) {
      if (k < 0 || k >= p.dimension) throw OssError(ErrorKind::kDimensionMismatch, "LMI variable index");
      if (m.rows() != b.f0.rows() || m.cols() != b.f0.cols()) {
        throw OssError(ErrorKind::kDimensionMismatch, "LMI coefficient shape");
      }
    }
  }
}

}  // namespace

SdpSolution feasibility(const SdpProblem& p, const SdpOptions& opts) {
  validate(p);
  SdpOptions o = opts;
  o.classify_failures = false;
  SdpSolution sol = solve(phase_one_problem(p), o);
  if (sol.v.size() == p.dimension + 1) {
    sol.v.conservativeResize(p.dimension);
  }
  return sol;
}

bool is_feasible(const SdpProblem& p, double tol, const SdpOptions& opts) {
  const SdpSolution s = feasibility(p, opts);
  if (s.status == SdpStatus::kInfeasible) return false;
  return s.optimal() && s.objective <= tol;
}

SdpSolution solve(const SdpProblem& p, const SdpOptions& opts) {
  validate(p);
  SdpSolution sol;
  const Reduction red = reduce(p);
  if (red.equalities_inconsistent) {
    sol.status = SdpStatus::kInfeasible;
    sol.v = red.v0;
    sol.objective = p.objective(red.v0);
    sol.message = "equality constraints are inconsistent";
    return sol;
  }

  auto classify = [&](SdpStatus fallback, const std::string& why, bool diverged = false) {
    if (!opts.classify_failures) {
      sol.status = fallback;
      sol.message = why;
      return;
    }
    const SdpSolution ph = feasibility(p, opts);
    if (ph.optimal() && ph.objective > 1e-9) {
      sol.status = SdpStatus::kInfeasible;
      std::ostringstream os;
      os << "phase-I minimum slack " << ph.objective << " > 0";
      sol.message = os.str();
    } else if (ph.optimal() && red.objective_unbounded_direction) {
      sol.status = SdpStatus::kUnbounded;
      sol.message = "objective decreases along a direction free of constraints";
    } else if (ph.optimal() && diverged) {
      sol.status = SdpStatus::kUnbounded;
      sol.message = why + "; problem is feasible, objective presumed unbounded";
    } else {
      sol.status = fallback;
      sol.message = why;
    }
  };

  if (red.objective_unbounded_direction || red.core.b.size() == 0 || p.blocks.empty()) {
    // No usable LMI directions: v = v0 is the only candidate.
    sol.v = red.v0;
    sol.objective = p.objective(sol.v);
    sol.lmi_duals.assign(p.blocks.size(), Matrix());
    if (red.objective_unbounded_direction) {
      classify(SdpStatus::kUnbounded, "unbounded direction");
      return sol;
    }
    bool ok = true;
    for (std::size_t k = 0; k < p.blocks.size(); ++k) {
      ok = ok && min_eig_sym(red.core.c[k]) >= -1e-12;
      sol.lmi_duals[k] = Matrix::Zero(p.blocks[k].size(), p.blocks[k].size());
    }
    sol.status = ok ? SdpStatus::kOptimal : SdpStatus::kInfeasible;
    sol.primal_residual = ok ? 0.0 : 1.0;
    return sol;
  }

  const CoreResult core = run_ipm(red.core, opts);
  finish(p, red, core, sol);
  if (core.converged) {
    sol.status = SdpStatus::kOptimal;
    return sol;
  }
  if (core.diverged) {
    classify(SdpStatus::kNumericalBreakdown, core.message, true);
  } else if (core.breakdown) {
    classify(SdpStatus::kNumericalBreakdown, core.message);
  } else {
    classify(SdpStatus::kMaxIter, core.message);
  }
  return sol;
}

// ---------------------------------------------------------------------------

void write_problem(std::ostream& os, const SdpProblem& p) {
  const auto old = os.precision(17);
  auto put = [&os](const Matrix& m) {
    os << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
      os << '\n';
    }
  };
  os << "dimension " << p.dimension << '\n';
  os << "objective " << p.c0 << '\n';
  put(Matrix(p.c.transpose()));
  os << "equalities " << p.e.rows() << '\n';
  if (p.e.rows() > 0) {
    put(p.e);
    put(Matrix(p.f.transpose()));
  }
  os << "blocks " << p.blocks.size() << '\n';
  for (const auto& b : p.blocks) {
    os << "block " << (b.name.empty() ? "-" : b.name) << " size " << b.size() << " margin " << b.margin
       << " terms " << b.terms.size() << '\n';
    put(b.f0);
    for (const auto& [k, m] : b.terms) {
      os << "term " << k << '\n';
      put(m);
    }
  }
  os.precision(old);
}

// ---------------------------------------------------------------------------
// Builder

int SdpBuilder::fresh(const std::string& name) {
  names_.push_back(name);
  return static_cast<int>(names_.size()) - 1;
}

AffineMatrix SdpBuilder::scalar(const std::string& name) {
  AffineMatrix out(1, 1);
  out.add_term(fresh(name), Matrix::Ones(1, 1));
  return out;
}

AffineMatrix SdpBuilder::matrix(Eigen::Index rows, Eigen::Index cols, const std::string& name) {
  AffineMatrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      Matrix e = Matrix::Zero(rows, cols);
      e(i, j) = 1.0;
      out.add_term(fresh(name + "[" + std::to_string(i) + "," + std::to_string(j) + "]"), e);
    }
  }
  return out;
}

AffineMatrix SdpBuilder::symmetric(Eigen::Index n, const std::string& name) {
  AffineMatrix out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      Matrix e = Matrix::Zero(n, n);
      e(i, j) = e(j, i) = 1.0;
      out.add_term(fresh(name + "[" + std::to_string(i) + "," + std::to_string(j) + "]"), e);
    }
  }
  return out;
}

void SdpBuilder::add_lmi(const AffineMatrix& f, double margin, const std::string& name) {
  if (f.rows() != f.cols() || f.rows() == 0) {
    throw OssError(ErrorKind::kDimensionMismatch, "LMI expression must be square");
  }
  auto check = [](const Matrix& m) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
      throw OssError(ErrorKind::kInvalidArgument, "LMI expression is not symmetric");
    }
  };
  LmiBlock b;
  b.name = name;
  b.margin = margin;
  check(f.constant());
  b.f0 = sym(f.constant());
  for (const auto& [k, m] : f.terms()) {
    check(m);
    if (!m.isZero(0.0)) b.terms.emplace(k, sym(m));
  }
  blocks_.push_back(std::move(b));
}

void SdpBuilder::add_equal(const AffineMatrix& a, const AffineMatrix& b) {
  const AffineMatrix d = a - b;
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      std::map<int, double> row;
      for (const auto& [k, m] : d.terms()) {
        if (m(i, j) != 0.0) row.emplace(k, m(i, j));
      }
      const double rhs = -d.constant()(i, j);
      if (row.empty() && rhs == 0.0) continue;
      equalities_.emplace_back(std::move(row), rhs);
    }
  }
}

void SdpBuilder::add_le(const AffineMatrix& a, const AffineMatrix& b, const std::string& name) {
  if (a.rows() != 1 || a.cols() != 1 || b.rows() != 1 || b.cols() != 1) {
    throw OssError(ErrorKind::kDimensionMismatch, "add_le expects scalars");
  }
  add_lmi(b - a, 0.0, name);
}

void SdpBuilder::minimize(const AffineMatrix& objective) {
  if (objective.rows() != 1 || objective.cols() != 1) {
    throw OssError(ErrorKind::kDimensionMismatch, "objective must be scalar");
  }
  objective_ = objective;
}

AffineMatrix SdpBuilder::trace_slack(const AffineMatrix& g, const Matrix& r) {
  if (r.rows() != g.rows() || r.cols() != g.rows()) {
    throw OssError(ErrorKind::kDimensionMismatch, "trace_slack: R must match the rows of G");
  }
  if (!is_symmetric(r, 1e-12) || min_eig_sym(r) <= 0.0) {
    throw OssError(ErrorKind::kInvalidArgument, "trace_slack: R must be positive definite");
  }
  AffineMatrix z = symmetric(g.cols(), "Z");
  const Matrix rinv = symmetrize(Matrix(r.inverse()));
  add_lmi(AffineMatrix::blocks2x2(z, g.transpose(), g, AffineMatrix(rinv)), 0.0, "trace_slack");
  return z;
}

SdpProblem SdpBuilder::build() const {
  SdpProblem p;
  p.dimension = dimension();
  p.variable_names = names_;
  p.c = Vector::Zero(p.dimension);
  if (objective_.rows() == 1) {
    p.c0 = objective_.constant()(0, 0);
    for (const auto& [k, m] : objective_.terms()) p.c(k) += m(0, 0);
  }
  p.e = Matrix::Zero(static_cast<Eigen::Index>(equalities_.size()), p.dimension);
  p.f = Vector::Zero(static_cast<Eigen::Index>(equalities_.size()));
  for (std::size_t r = 0; r < equalities_.size(); ++r) {
    for (const auto& [k, a] : equalities_[r].first) p.e(static_cast<Eigen::Index>(r), k) = a;
    p.f(static_cast<Eigen::Index>(r)) = equalities_[r].second;
  }
  p.blocks = blocks_;
  return p;
}

}  // namespace ossync
