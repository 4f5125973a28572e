#include "ossync/exocore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace ossync {

namespace {

constexpr long long kDenominatorCap = 1000000;

// Continued-fraction rationalisation p/q of x > 0 with q <= cap.
std::pair<long long, long long> rationalize(double x) {
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double rem = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(rem);
    const long long ai = static_cast<long long>(a);
    const long long p2 = ai * p1 + p0;
    const long long q2 = ai * q1 + q0;
    if (q2 > kDenominatorCap) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) <= 1e-14 * std::max(1.0, x)) {
      return {p1, q1};
    }
    const double frac = rem - a;
    if (frac <= 0.0) break;
    rem = 1.0 / frac;
  }
  std::ostringstream os;
  os << "frequency ratio " << x << " has no rational form with denominator <= " << kDenominatorCap;
  throw OssError(ErrorKind::kIrrationalRatio, os.str());
}

}  // namespace

int Exosystem::constant_states() const {
  int n = 0;
  for (const auto& b : blocks) if (!b.harmonic()) n += b.multiplicity;
  return n;
}

int Exosystem::harmonic_pairs() const {
  int n = 0;
  for (const auto& b : blocks) if (b.harmonic()) n += b.multiplicity;
  return n;
}

std::vector<double> Exosystem::spectrum() const {
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.multiplicity, b.omega);
  return out;
}

double period(const std::vector<double>& frequencies) {
  std::vector<double> nonzero;
  for (double w : frequencies) {
    if (w < 0.0) throw OssError(ErrorKind::kInvalidArgument, "negative frequency");
    if (w > 0.0) nonzero.push_back(w);
  }
  if (nonzero.empty()) return 1.0;
  const double base = nonzero.front();
  std::vector<std::pair<long long, long long>> ratios;
  long long lcm = 1;
  for (double w : nonzero) {
    const auto r = rationalize(w / base);
    ratios.push_back(r);
    lcm = std::lcm(lcm, r.second);
    if (lcm > kDenominatorCap * kDenominatorCap) {
      throw OssError(ErrorKind::kIrrationalRatio, "common denominator overflow");
    }
  }
  // w_j = (base / lcm) * n_j with integer n_j; the fundamental is gcd(n_j).
  long long g = 0;
  for (const auto& [p, q] : ratios) g = std::gcd(g, p * (lcm / q));
  return 2.0 * std::numbers::pi * static_cast<double>(lcm) / (base * static_cast<double>(g));
}

Exosystem build_exosystem(std::vector<FrequencySpec> freq_spec, const Matrix& raw_output,
                          const std::vector<double>& amplitudes) {
  if (freq_spec.empty()) throw OssError(ErrorKind::kInvalidArgument, "empty frequency list");
  std::sort(freq_spec.begin(), freq_spec.end(),
            [](const FrequencySpec& a, const FrequencySpec& b) { return a.omega < b.omega; });
  for (std::size_t i = 0; i < freq_spec.size(); ++i) {
    const auto& f = freq_spec[i];
    if (!(f.omega >= 0.0) || !std::isfinite(f.omega)) {
      throw OssError(ErrorKind::kInvalidArgument, "frequencies must be finite and nonnegative");
    }
    if (f.multiplicity < 1) throw OssError(ErrorKind::kInvalidArgument, "multiplicity must be >= 1");
    if (i > 0 && freq_spec[i - 1].omega == f.omega) {
      std::ostringstream os;
      os << "frequency " << f.omega << " listed twice";
      throw OssError(ErrorKind::kDuplicateFrequency, os.str());
    }
  }

  Exosystem exo;
  Eigen::Index offset = 0;
  for (const auto& f : freq_spec) {
    ExoBlock b{f.omega, f.multiplicity, offset};
    exo.blocks.push_back(b);
    offset += b.size();
  }
  const Eigen::Index n = offset;
  if (raw_output.cols() != n) {
    std::ostringstream os;
    os << "raw output has " << raw_output.cols() << " columns, exosystem order is " << n;
    throw OssError(ErrorKind::kDimensionMismatch, os.str());
  }
  const std::size_t expected_amps = static_cast<std::size_t>(exo.constant_states() + exo.harmonic_pairs());
  if (amplitudes.size() != expected_amps) {
    std::ostringstream os;
    os << "expected " << expected_amps << " amplitudes, got " << amplitudes.size();
    throw OssError(ErrorKind::kDimensionMismatch, os.str());
  }

  exo.a = Matrix::Zero(n, n);
  exo.boundary = Vector::Zero(n);
  Vector scale(n);
  std::size_t amp = 0;
  for (const auto& b : exo.blocks) {
    for (int k = 0; k < b.multiplicity; ++k) {
      const double a = amplitudes[amp++];
      if (!(a > 0.0)) throw OssError(ErrorKind::kInvalidArgument, "amplitudes must be positive");
      if (!b.harmonic()) {
        const Eigen::Index i = b.offset + k;
        scale(i) = a;
        exo.boundary(i) = 1.0;
      } else {
        const Eigen::Index i = b.offset + 2 * k;
        exo.a(i, i + 1) = b.omega;
        exo.a(i + 1, i) = -b.omega;
        scale(i) = scale(i + 1) = a;
        exo.boundary(i + 1) = 1.0;
      }
    }
  }
  exo.c = raw_output * scale.asDiagonal();
  exo.period = period(exo.spectrum());
  return exo;
}

Vector flow(const Exosystem& exo, const Vector& x0, double t) {
  if (x0.size() != exo.order()) {
    throw OssError(ErrorKind::kDimensionMismatch, "flow: state dimension");
  }
  Vector x = x0;
  for (const auto& b : exo.blocks) {
    if (!b.harmonic()) continue;
    const double c = std::cos(b.omega * t);
    const double s = std::sin(b.omega * t);
    for (int k = 0; k < b.multiplicity; ++k) {
      const Eigen::Index i = b.offset + 2 * k;
      const double u = x0(i), v = x0(i + 1);
      x(i) = c * u + s * v;
      x(i + 1) = -s * u + c * v;
    }
  }
  return x;
}

std::vector<Matrix> ellipsoid_basis(const Exosystem& exo) {
  const Eigen::Index n = exo.order();
  std::vector<Matrix> basis;
  for (const auto& b : exo.blocks) {
    for (int k = 0; k < b.multiplicity; ++k) {
      Matrix e = Matrix::Zero(n, n);
      if (!b.harmonic()) {
        e(b.offset + k, b.offset + k) = 1.0;
      } else {
        const Eigen::Index i = b.offset + 2 * k;
        e(i, i) = e(i + 1, i + 1) = 1.0;
      }
      basis.push_back(std::move(e));
    }
  }
  return basis;
}

namespace {

int phase_resolution(int constants, int pairs, int count) {
  if (pairs == 0) return 1;
  int r = 4;
  const double signs = std::ldexp(1.0, constants);
  while (signs * std::pow(static_cast<double>(r), pairs) < count) ++r;
  return r;
}

}  // namespace

long long boundary_grid_size(const Exosystem& exo, int count) {
  const int m0 = exo.constant_states();
  const int h = exo.harmonic_pairs();
  const int r = phase_resolution(m0, h, count);
  long long total = 1LL << m0;
  for (int i = 0; i < h; ++i) total *= r;
  return total;
}

std::vector<Vector> sample_boundary(const Exosystem& exo, int count) {
  if (count < 1) throw OssError(ErrorKind::kInvalidArgument, "sample count must be >= 1");
  const int m0 = exo.constant_states();
  const int h = exo.harmonic_pairs();
  const int r = phase_resolution(m0, h, count);
  const long long total = boundary_grid_size(exo, count);
  const long long phase_cells = total >> m0;
  const long long take = std::min<long long>(count, total);

  // Constant-state and harmonic-pair offsets in canonical order.
  std::vector<Eigen::Index> constants, pairs;
  for (const auto& b : exo.blocks) {
    for (int k = 0; k < b.multiplicity; ++k) {
      if (b.harmonic()) pairs.push_back(b.offset + 2 * k);
      else constants.push_back(b.offset + k);
    }
  }

  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(take));
  for (long long k = 0; k < take; ++k) {
    long long index = (k * total) / take;
    long long phase_index = index % phase_cells;
    const long long sign_index = index / phase_cells;
    Vector x = Vector::Zero(exo.order());
    for (int l = 0; l < m0; ++l) {
      x(constants[l]) = ((sign_index >> l) & 1LL) ? -1.0 : 1.0;
    }
    for (int p = h - 1; p >= 0; --p) {
      const double phi = 2.0 * std::numbers::pi * static_cast<double>(phase_index % r) / r;
      phase_index /= r;
      x(pairs[p]) = std::sin(phi);
      x(pairs[p] + 1) = std::cos(phi);
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace ossync
