#pragma once

#include <utility>
#include <vector>

#include "ossync/matkit.hpp"

namespace ossync {

/// Time-invariant directed communication graph. Vertices are 0-based here;
/// scenario files use 1-based indices. An edge (i, j) means j receives from i.
class DiGraph {
 public:
  DiGraph(int vertices, std::vector<std::pair<int, int>> edges);

  int size() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  /// a_{ij} = 1 iff (i, j) is an edge.
  bool has_edge(int from, int to) const;

  /// Directed ring 0 -> 1 -> ... -> n-1 -> 0.
  static DiGraph ring(int n);

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<char> adjacency_;
};

/// l_ii = sum_k a_ki (in-degree), l_ij = -a_ji.
Matrix laplacian(const DiGraph& g);

/// True iff some vertex reaches every other one (breadth-first search from
/// every vertex). Cross-checked against the multiplicity of the zero
/// eigenvalue of the Laplacian; throws kInconsistentCheck on disagreement.
bool has_spanning_tree(const DiGraph& g);

/// min_{i >= 2} Re lambda_i(L), the admissible upper bound for sigma.
/// Throws kNoSpanningTree unless zero is a simple eigenvalue.
double sigma_bound(const Matrix& l);

struct SyncGain {
  Matrix gain;      // K_bar = sigma^-1 B_bar^T P_bar
  double sigma = 0.0;
  Matrix riccati;   // P_bar
};

/// Exosystem coupling gain from A^T P + P A - P B B^T P + I = 0.
/// Verifies A - lambda_i(L) B K Hurwitz for every nonzero Laplacian
/// eigenvalue. Throws kSigmaTooLarge when sigma is outside (0, sigma_bound].
SyncGain sync_gain(const Matrix& a_bar, const Matrix& b_bar, double sigma, const Matrix& l);

/// sigma = 0.95 * sigma_bound(l).
double default_sigma(const Matrix& l);

}  // namespace ossync
