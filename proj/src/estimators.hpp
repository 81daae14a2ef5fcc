#ifndef SHIFTLAB_ESTIMATORS_HPP
#define SHIFTLAB_ESTIMATORS_HPP

#include <optional>
#include <span>
#include <vector>

#include "linalg.hpp"
#include "model.hpp"

namespace shiftlab::estimators {

using linalg::Matrix;
using linalg::SymMatrix;
using model::TargetCovariance;

enum class Method { Ridge, Minnorm, Pcr };

struct Estimate {
  std::vector<double> beta_hat;
  Method method = Method::Ridge;
  double lambda_used = 0.0;
  std::optional<Matrix> subspace;    // d x k, PCR only; column-orthonormal
  bool used_pseudo_solve = false;
  bool small_spectral_gap = false;   // PCR: hat-lambda_k - hat-lambda_{k+1} < 1e-9
};

/// Exact expected-risk decomposition over the noise, conditioned on the design.
struct RiskSplit {
  double bias = 0.0;
  double variance = 0.0;
  double total = 0.0;
};

/// Kernel-form ridge: beta = X^T (X X^T + lambda I)^{-1} Y. Never forms d x d
/// matrices. A singular Gram at lambda = 0 falls through to the pseudo-solve
/// and sets used_pseudo_solve.
Estimate ridge_fit(const Matrix& x, std::span<const double> y, double lambda);

/// Shares a precomputed Gram matrix G = X X^T with ridge_risk_split.
Estimate ridge_fit_with_gram(const Matrix& x, const SymMatrix& gram,
                             std::span<const double> y, double lambda);

/// Ridge with lambda = 1e-8, the simulation stand-in for the minimum-norm
/// interpolant. use_pseudo = true solves the lambda = 0 system through the
/// eigendecomposition pseudo-inverse instead.
Estimate minnorm_fit(const Matrix& x, std::span<const double> y, bool use_pseudo = false);

inline constexpr double kMinnormLambda = 1e-8;

/// Top-k PCA subspace of the sample covariance X1^T X1 / n.
/// The Gram route eigendecomposes X1 X1^T / n and lifts the eigenvectors by
/// X1^T; the Direct route eigendecomposes the d x d sample covariance. The
/// two span the same subspace; Auto picks whichever matrix is smaller.
enum class SubspaceRoute { Auto, Gram, Direct };

struct PcaSubspace {
  Matrix u;                        // d x k, column-orthonormal, sign-fixed
  std::vector<double> eigenvalues;  // sample-covariance eigenvalues, non-increasing
  bool small_spectral_gap = false;
};
PcaSubspace pca_topk_subspace(const Matrix& x1, std::size_t k,
                              SubspaceRoute route = SubspaceRoute::Auto);

/// Two-step PCR: subspace from x1, regression of y2 on x2 projected onto it.
Estimate pcr_fit(const Matrix& x1, const Matrix& x2, std::span<const double> y2, std::size_t k);

/// ||beta_hat - beta_star||^2_{Sigma_T}, floored at zero.
double excess_risk(const Estimate& est, std::span<const double> beta_star,
                   const TargetCovariance& target);

/// B = risk of the noiseless fit beta(X beta_star);
/// V = v^2 tr[(G+lambda I)^{-1} X Sigma_T X^T (G+lambda I)^{-1}], evaluated as
/// v^2 sum_i h_i^T Sigma_T h_i over the rows of H = (G+lambda I)^{-1} X, which
/// is the same trace without the lambda^{-2} roundoff amplification of the
/// explicit-inverse form on rank-deficient Grams.
RiskSplit ridge_risk_split(const Matrix& x, std::span<const double> beta_star, double lambda,
                           const TargetCovariance& target, double noise_sd);

RiskSplit ridge_risk_split_with_gram(const Matrix& x, const SymMatrix& gram,
                                     std::span<const double> beta_star, double lambda,
                                     const TargetCovariance& target, double noise_sd);

/// B = risk of U (Z^T Z)^{-1} Z^T X2 beta_star;
/// V = v^2 tr[(Z^T Z)^{-1} U^T Sigma_T U] with Z = X2 U.
RiskSplit pcr_risk_split(const Matrix& subspace, const Matrix& x2,
                         std::span<const double> beta_star, const TargetCovariance& target,
                         double noise_sd);

}  // namespace shiftlab::estimators

#endif
