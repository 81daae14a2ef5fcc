#ifndef SHIFTLAB_THEORY_HPP
#define SHIFTLAB_THEORY_HPP

#include <span>

#include "linalg.hpp"
#include "model.hpp"

namespace shiftlab::theory {

using linalg::Matrix;
using model::Spectrum;
using model::TargetCovariance;

/// Condition-number check for A_k = lambda I_n + X_{-k} X_{-k}^T.
struct CondNumReport {
  double mu_1 = 0.0;
  double mu_n = 0.0;
  double ratio = 0.0;  // +infinity when mu_n <= 1e-14 * mu_1
  double lambda_used = 0.0;
};
CondNumReport condnum_check(const Matrix& x, std::size_t k, double lambda);

/// Distance to the leading-coordinate basis: sqrt(mu_1(I_k - T^T T)) with T
/// the first k rows of u_hat; equals ||U U^T - Uhat Uhat^T||.
double subspace_distance(const Matrix& u_hat, std::size_t k);

/// Rate expressions of the risk bounds. The unspecified absolute constants of
/// the statements are deliberately omitted from every field.
struct BoundReport {
  double v_bound_major = 0.0;    // v^2 tr[T] / n
  double v_bound_minor = 0.0;    // v^2 (n / R_k) tr[U]/tr[V]
  double b_id = 0.0;             // ||beta*_k||^2_{Sigma_k^{-1}} (lambda~/n)^2 + ||beta*_{-k}||^2_{Sigma_{-k}}
  double b_bound = 0.0;          // b_id * (||T|| + n/r_k * ||Sigma_{T,-k}|| / ||Sigma_{S,-k}||)
  double pcr_var_term = 0.0;     // v^2 tr[T] / n
  double pcr_bias_term = 0.0;    // ||beta*||^2 (lambda_1/lambda_k)^2 ||Sigma_T|| Delta^2
  double delta_bound = 0.0;
  bool constants_omitted = true;
};

BoundReport ridge_bound_terms(const Spectrum& spec, const TargetCovariance& target,
                              std::span<const double> beta_star, std::size_t n, double lambda,
                              double noise_sd);

BoundReport pcr_bound_terms(const Spectrum& spec, const TargetCovariance& target,
                            std::span<const double> beta_star, std::size_t n, double noise_sd,
                            double delta_value);

/// sigma^4 * lambda_1/(lambda_k - lambda_{k+1}) * sqrt((r + ln(1/delta))/n)
/// with r the effective rank of the whole covariance. Constant omitted.
double delta_bound(const Spectrum& spec, std::size_t n, double delta_prob, double sigma);

/// The slow-rate spectrum: k ones, floor(sqrt(n)/c2) entries of c1/sqrt(n),
/// and one trailing zero.
Spectrum lower_bound_instance(std::size_t n, std::size_t k, double c1, double c2);

}  // namespace shiftlab::theory

#endif
