#ifndef SHIFTLAB_LINALG_HPP
#define SHIFTLAB_LINALG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace shiftlab::linalg {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t dim);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
  const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }
  std::span<const double> row(std::size_t i) const { return {row_ptr(i), cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Copy of rows [r0, r1).
  Matrix row_slice(std::size_t r0, std::size_t r1) const;

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T; cheaper than matmul(a, transpose(b)) for row-major storage.
Matrix matmul_bt(const Matrix& a, const Matrix& b);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
// A^T x without materializing the transpose.
std::vector<double> matvec_t(const Matrix& a, std::span<const double> x);
double max_abs(const Matrix& m);

/// Symmetric matrix; entries (i,j) and (j,i) are bitwise equal by construction.
class SymMatrix {
 public:
  /// Validates exact symmetry of `full`; throws InputError otherwise.
  explicit SymMatrix(Matrix full);

  /// Builds from the lower triangle of `m`, mirroring entries exactly.
  static SymMatrix from_lower(Matrix m);
  /// Gram matrix of the rows of x: G = x x^T (exactly symmetric).
  static SymMatrix gram_rows(const Matrix& x);
  static SymMatrix identity(std::size_t dim);

  std::size_t dim() const { return full_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return full_(i, j); }
  const Matrix& full() const { return full_; }

  /// Returns a copy with `value` added to the diagonal.
  SymMatrix shifted(double value) const;

 private:
  struct unchecked_t {};
  SymMatrix(Matrix full, unchecked_t) : full_(std::move(full)) {}
  Matrix full_;
};

/// Eigendecomposition A = V diag(values) V^T, values sorted non-increasing,
/// column i of `vectors` paired with values[i].
struct EigenPair {
  std::vector<double> values;
  Matrix vectors;
};

/// Cyclic Jacobi eigendecomposition for symmetric matrices.
/// Converges when the off-diagonal Frobenius mass drops below 1e-13 * ||A||_F;
/// throws NumericalError after 100 sweeps, InputError on non-finite entries.
EigenPair sym_eigh(const SymMatrix& a);

struct SpdSolveResult {
  Matrix x;
  bool used_pseudo = false;      // eigendecomposition fallback taken
  std::size_t dropped = 0;       // eigenvalues discarded on the pseudo path
};

/// Solves a x = b for PSD a. Positive definite input takes the Cholesky path;
/// semi-definite input falls back to a pseudo-solve that discards eigenvalues
/// below rel_threshold * mu_1. Indefinite input throws DomainError.
SpdSolveResult spd_solve(const SymMatrix& a, const Matrix& b, double rel_threshold = 1e-12);

inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer; used to derive substream seeds.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z += kGolden64;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s);

/// xoshiro256** seeded from a single 64-bit word through SplitMix64.
/// Gaussians come from Box-Muller, consuming exactly two uniforms per pair.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) {
      s += kGolden64;
      std::uint64_t z = s;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      w = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_uniform();  // (0, 1], keeps log finite
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Haar-distributed orthogonal matrix: Gaussian fill, then QR with the
/// R-diagonal sign fixed positive.
Matrix random_orthogonal(std::size_t dim, Rng& rng);

}  // namespace shiftlab::linalg

#endif
