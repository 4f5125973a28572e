#include "ossync/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace ossync {

namespace {
constexpr double kZeroEigTol = 1e-8;
}

DiGraph::DiGraph(int vertices, std::vector<std::pair<int, int>> edges)
    : n_(vertices), edges_(std::move(edges)) {
  if (n_ <= 0) throw OssError(ErrorKind::kInvalidArgument, "graph needs at least one vertex");
  adjacency_.assign(static_cast<std::size_t>(n_) * n_, 0);
  for (const auto& [i, j] : edges_) {
    if (i < 0 || j < 0 || i >= n_ || j >= n_) {
      std::ostringstream os;
      os << "edge (" << i + 1 << ", " << j + 1 << ") references a missing vertex";
      throw OssError(ErrorKind::kInvalidArgument, os.str());
    }
    if (i == j) throw OssError(ErrorKind::kInvalidArgument, "self-loops are not allowed");
    char& a = adjacency_[static_cast<std::size_t>(i) * n_ + j];
    if (a) throw OssError(ErrorKind::kInvalidArgument, "duplicate edge");
    a = 1;
  }
}

bool DiGraph::has_edge(int from, int to) const {
  return adjacency_[static_cast<std::size_t>(from) * n_ + to] != 0;
}

DiGraph DiGraph::ring(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n && n > 1; ++i) e.emplace_back(i, (i + 1) % n);
  return DiGraph(n, std::move(e));
}

Matrix laplacian(const DiGraph& g) {
  const int n = g.size();
  Matrix l = Matrix::Zero(n, n);
  for (const auto& [from, to] : g.edges()) {
    l(to, to) += 1.0;
    l(to, from) -= 1.0;
  }
  return l;
}

bool has_spanning_tree(const DiGraph& g) {
  const int n = g.size();
  bool reachable_root = false;
  for (int root = 0; root < n && !reachable_root; ++root) {
    std::vector<char> seen(n, 0);
    std::deque<int> queue{root};
    seen[root] = 1;
    int count = 1;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int w = 0; w < n; ++w) {
        if (!seen[w] && g.has_edge(v, w)) {
          seen[w] = 1;
          ++count;
          queue.push_back(w);
        }
      }
    }
    reachable_root = count == n;
  }
  const int zeros = eig(laplacian(g)).count_near(Complex(0.0, 0.0), kZeroEigTol);
  const bool simple_zero = zeros == 1;
  if (simple_zero != reachable_root) {
    std::ostringstream os;
    os << "graph search says " << (reachable_root ? "tree" : "no tree")
       << " but the Laplacian has " << zeros << " zero eigenvalue(s)";
    throw OssError(ErrorKind::kInconsistentCheck, os.str());
  }
  return reachable_root;
}

double sigma_bound(const Matrix& l) {
  const Spectrum s = eig(l);
  if (s.count_near(Complex(0.0, 0.0), kZeroEigTol) != 1) {
    throw OssError(ErrorKind::kNoSpanningTree, "Laplacian zero eigenvalue is not simple");
  }
  if (s.size() == 1) {
    throw OssError(ErrorKind::kNoSpanningTree, "a single agent has no coupling eigenvalues");
  }
  double bound = std::numeric_limits<double>::infinity();
  for (const auto& z : s.values) {
    if (std::abs(z) <= kZeroEigTol) continue;
    bound = std::min(bound, z.real());
  }
  return bound;
}

double default_sigma(const Matrix& l) { return 0.95 * sigma_bound(l); }

SyncGain sync_gain(const Matrix& a_bar, const Matrix& b_bar, double sigma, const Matrix& l) {
  const double bound = sigma_bound(l);
  if (!(sigma > 0.0) || sigma > bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "sigma = " << sigma << " outside (0, " << bound << "]";
    throw OssError(ErrorKind::kSigmaTooLarge, os.str());
  }
  const auto n = a_bar.rows();
  const auto m = b_bar.cols();
  SyncGain sg;
  sg.sigma = sigma;
  sg.riccati = solve_care(a_bar, b_bar, Matrix::Identity(n, n), Matrix::Identity(m, m));
  sg.gain = b_bar.transpose() * sg.riccati / sigma;

  const CMatrix ac = a_bar.cast<Complex>();
  const CMatrix bk = (b_bar * sg.gain).cast<Complex>();
  for (const auto& lambda : eig(l).values) {
    if (std::abs(lambda) <= kZeroEigTol) continue;
    if (!is_hurwitz(CMatrix(ac - lambda * bk))) {
      std::ostringstream os;
      os << "A - lambda B K not Hurwitz for lambda = " << lambda;
      throw OssError(ErrorKind::kNumericalBreakdown, os.str());
    }
  }
  return sg;
}

}  // namespace ossync
