#pragma once

#include <vector>

#include "ossync/matkit.hpp"

namespace ossync {

/// One distinct frequency of the exosystem spectrum and its multiplicity.
struct FrequencySpec {
  double omega = 0.0;
  int multiplicity = 1;
};

/// A diagonal block of the canonical generator: zeros for omega = 0,
/// omega * (I_m (x) [[0, 1], [-1, 0]]) otherwise.
struct ExoBlock {
  double omega = 0.0;
  int multiplicity = 0;
  Eigen::Index offset = 0;
  Eigen::Index size() const { return omega == 0.0 ? multiplicity : 2 * multiplicity; }
  bool harmonic() const { return omega != 0.0; }
};

/// Canonical, normalised exosystem
///
///   x_bar' = A_bar x_bar,   y_bar = C_bar x_bar
///
/// with A_bar = diag(0, w_1 (I (x) J), w_2 (I (x) J), ...) for ascending
/// distinct w_j > 0. The initial-state set is normalised so every constant
/// state satisfies |x_l| <= 1 and every harmonic pair ||x_h||_2 <= 1; the
/// amplitudes are folded into C_bar.
struct Exosystem {
  Matrix a;
  Matrix c;
  std::vector<ExoBlock> blocks;
  double period = 1.0;
  Vector boundary;  // x_bar_B: ones on constants, (0, 1) per harmonic pair

  Eigen::Index order() const { return a.rows(); }
  Eigen::Index outputs() const { return c.rows(); }
  int constant_states() const;
  int harmonic_pairs() const;
  /// Frequencies with multiplicity (0 repeated per constant state).
  std::vector<double> spectrum() const;
};

/// Builds the canonical exosystem. `raw_output` has one column per state in
/// canonical order; `amplitudes` holds one maximum per constant state followed
/// by one per harmonic pair. Throws kDuplicateFrequency / kDimensionMismatch.
Exosystem build_exosystem(std::vector<FrequencySpec> freq_spec, const Matrix& raw_output,
                          const std::vector<double>& amplitudes);

/// Smallest T > 0 such that T w_j / (2 pi) is an integer for every nonzero
/// frequency. Ratios are rationalised by continued fractions with denominators
/// capped at 1e6 (kIrrationalRatio otherwise). Returns 1 when every frequency
/// is zero.
double period(const std::vector<double>& frequencies);

/// x_bar(t) = e^{A_bar t} x0, evaluated blockwise in closed form.
Vector flow(const Exosystem& exo, const Vector& x0, double t);

/// Symmetric P spanning block-diagonal solutions of P A + A^T P = 0 with the
/// structure used for the invariant ellipsoid: e_l e_l^T per constant state
/// and an embedded I_2 per harmonic pair.
std::vector<Matrix> ellipsoid_basis(const Exosystem& exo);

/// Deterministic points on the boundary of the normalised initial-state set
/// (|x_l| = 1, ||x_h|| = 1). The full grid is sign patterns for constant
/// states times a phase grid per harmonic pair (at least four phases); `count`
/// points are taken at an even stride through it. count = 1 gives x_bar_B.
std::vector<Vector> sample_boundary(const Exosystem& exo, int count);

/// Size of the grid sample_boundary strides through.
long long boundary_grid_size(const Exosystem& exo, int count);

}  // namespace ossync
