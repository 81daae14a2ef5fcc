#ifndef SHIFTLAB_MODEL_HPP
#define SHIFTLAB_MODEL_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "linalg.hpp"

namespace shiftlab::model {

using linalg::Matrix;
using linalg::Rng;
using linalg::SymMatrix;

/// Source covariance as a non-increasing eigenvalue list with split index k:
/// the first k entries are the major directions, the rest the minor tail.
class Spectrum {
 public:
  Spectrum(std::vector<double> eigenvalues, std::size_t k);

  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  std::size_t dim() const { return eigenvalues_.size(); }
  std::size_t k() const { return k_; }
  double lambda(std::size_t j) const { return eigenvalues_[j]; }

  double tail_sum() const { return tail_sum_; }        // sum_{j>k} lambda_j
  double tail_sum_sq() const { return tail_sum_sq_; }  // sum_{j>k} lambda_j^2
  double total_sum() const { return total_sum_; }

 private:
  std::vector<double> eigenvalues_;
  std::size_t k_;
  double tail_sum_ = 0.0;
  double tail_sum_sq_ = 0.0;
  double total_sum_ = 0.0;
};

/// One rotated-diagonal tail block Q diag(evals) Q^T.
struct TailBlock {
  Matrix rotation;
  std::vector<double> eigenvalues;
};

/// Target second-moment operator: dense top block of size k plus a list of
/// rotated-diagonal tail blocks. The tail never materializes as a dense
/// (d-k) x (d-k) matrix; trace, operator norm and diagonal stay exact.
class TargetCovariance {
 public:
  TargetCovariance(SymMatrix top, std::vector<TailBlock> tail);

  /// Target identical to the source covariance (identity shift).
  static TargetCovariance from_spectrum(const Spectrum& spec, std::size_t block_size);
  /// Identity covariance I_{k + tail_dim}.
  static TargetCovariance identity(std::size_t k, std::size_t tail_dim, std::size_t block_size);

  std::size_t top_dim() const { return top_.dim(); }
  std::size_t tail_dim() const { return tail_dim_; }
  std::size_t dim() const { return top_.dim() + tail_dim_; }

  const SymMatrix& top() const { return top_; }
  const std::vector<TailBlock>& tail() const { return tail_; }

  double trace() const { return top_trace_ + tail_trace_; }
  double top_opnorm() const { return top_opnorm_; }
  double tail_opnorm() const { return tail_opnorm_; }
  double opnorm() const { return top_opnorm_ > tail_opnorm_ ? top_opnorm_ : tail_opnorm_; }

  /// Diagonal of the tail operator, length tail_dim().
  const std::vector<double>& tail_diagonal() const { return tail_diag_; }

  /// out = Sigma_T * in; cost O(k^2 + sum b_i^2).
  void apply(std::span<const double> in, std::span<double> out) const;

 private:
  SymMatrix top_;
  std::vector<TailBlock> tail_;
  std::size_t tail_dim_ = 0;
  double top_trace_ = 0.0;
  double top_opnorm_ = 0.0;
  double tail_trace_ = 0.0;
  double tail_opnorm_ = 0.0;
  std::vector<double> tail_diag_;
};

/// The shift functionals of the risk bounds, evaluated for one (source,
/// target, n, lambda) tuple.
struct ShiftDiagnostics {
  double tr_T = 0.0;
  double norm_T = 0.0;
  double trU_over_trV = 0.0;
  double highdim_factor = 0.0;  // n/r_k * ||Sigma_{T,-k}|| / ||Sigma_{S,-k}||
  double r_k = 0.0;
  double R_k = 0.0;
  double r_full = 0.0;  // sum lambda_j / lambda_1
};

struct EffectiveRanks {
  double r_k = 0.0;
  double R_k = 0.0;
};

/// r_k = (lambda + sum_{j>k} lambda_j) / lambda_{k+1},
/// R_k = (lambda + sum_{j>k} lambda_j)^2 / sum_{j>k} lambda_j^2.
/// Zero denominators report +infinity instead of failing.
EffectiveRanks effective_ranks(const Spectrum& spec, double lambda_reg);

ShiftDiagnostics shift_diagnostics(const Spectrum& spec, const TargetCovariance& target,
                                   std::size_t n, double lambda_reg);

/// Random target covariance scaled so the recomputed ||T|| and tr[U]/tr[V]
/// hit the requested goals. Eigenvalues are uniform on [0.5, 1.5] before
/// scaling; rotations are Haar.
TargetCovariance random_target(const Spectrum& spec, double goal_norm_T, double goal_ratio,
                               std::size_t tail_block_size, Rng& rng);

std::vector<double> target_apply(const TargetCovariance& target, std::span<const double> vec);

/// x^T Sigma_T x.
double quad_form(const TargetCovariance& target, std::span<const double> vec);

/// n x d design with entry (i,j) = sqrt(lambda_j) * g_ij, g iid standard
/// normal, filled row-major.
Matrix sample_design(const Spectrum& spec, std::size_t n, Rng& rng);

/// Y_i = X_i . beta_star + noise_sd * g_i.
std::vector<double> gen_labels(const Matrix& x, std::span<const double> beta_star,
                               double noise_sd, Rng& rng);

/// Draws from N(0, Sigma_T), one point per row.
Matrix sample_target_points(const TargetCovariance& target, std::size_t count, Rng& rng);

struct Dataset {
  Matrix x;
  std::vector<double> y;
  std::vector<double> beta_star;
  double noise_sd = 0.0;
};

Dataset make_dataset(const Spectrum& spec, std::vector<double> beta_star, double noise_sd,
                     std::size_t rows, Rng& rng);

}  // namespace shiftlab::model

#endif
