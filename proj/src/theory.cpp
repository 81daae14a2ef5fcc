#include "theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shiftlab::theory {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

CondNumReport condnum_check(const Matrix& x, std::size_t k, double lambda) {
  if (k >= x.cols()) throw InputError("condnum_check: k must be smaller than the dimension");
  if (lambda < 0.0) throw InputError("condnum_check: lambda must be >= 0");
  const std::size_t n = x.rows();

  // Gram of the tail columns, straight from row slices of X.
  Matrix gram(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto tail_i = x.row(i).subspan(k);
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = linalg::dot(tail_i, x.row(j).subspan(k));
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  for (std::size_t i = 0; i < n; ++i) gram(i, i) += lambda;

  const auto eig = linalg::sym_eigh(linalg::SymMatrix::from_lower(std::move(gram)));
  CondNumReport report;
  report.lambda_used = lambda;
  report.mu_1 = eig.values.front();
  // A_k is PSD, so a negative mu_n is eigensolver roundoff.
  report.mu_n = std::max(eig.values.back(), 0.0);
  report.ratio =
      report.mu_n > 1e-14 * report.mu_1 ? report.mu_1 / report.mu_n : kInf;
  return report;
}

double subspace_distance(const Matrix& u_hat, std::size_t k) {
  if (u_hat.cols() != k) throw StructuralError("subspace_distance: u_hat must have k columns");
  if (u_hat.rows() < k) throw StructuralError("subspace_distance: fewer rows than k");

  const Matrix ut = linalg::transpose(u_hat);
  const Matrix utu = linalg::matmul_bt(ut, ut);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (std::abs(utu(i, j) - (i == j ? 1.0 : 0.0)) > 1e-9)
        throw InputError("subspace_distance: input is not column-orthonormal");

  // T = first k rows of u_hat; I - T^T T mirrored exactly.
  Matrix m(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < k; ++r) acc += u_hat(r, i) * u_hat(r, j);
      const double v = (i == j ? 1.0 : 0.0) - acc;
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  const auto eig = linalg::sym_eigh(linalg::SymMatrix(std::move(m)));
  return std::sqrt(std::max(eig.values.front(), 0.0));
}

BoundReport ridge_bound_terms(const Spectrum& spec, const TargetCovariance& target,
                              std::span<const double> beta_star, std::size_t n, double lambda,
                              double noise_sd) {
  if (noise_sd < 0.0) throw InputError("ridge_bound_terms: noise_sd must be >= 0");
  if (beta_star.size() != spec.dim())
    throw StructuralError("ridge_bound_terms: beta length mismatch");
  const auto diag = model::shift_diagnostics(spec, target, n, lambda);
  const double v2 = noise_sd * noise_sd;
  const std::size_t k = spec.k();

  BoundReport report;
  report.v_bound_major = v2 * diag.tr_T / static_cast<double>(n);
  // A vanishing source tail (tr[V] = 0) removes the minor-direction variance
  // term entirely; the formula otherwise degenerates to 0 * inf.
  report.v_bound_minor = std::isfinite(diag.R_k)
                             ? v2 * (static_cast<double>(n) / diag.R_k) * diag.trU_over_trV
                             : 0.0;

  const double lambda_tilde = lambda + spec.tail_sum();
  double top_weighted = 0.0;
  for (std::size_t j = 0; j < k; ++j) top_weighted += beta_star[j] * beta_star[j] / spec.lambda(j);
  double tail_weighted = 0.0;
  for (std::size_t j = k; j < spec.dim(); ++j)
    tail_weighted += spec.lambda(j) * beta_star[j] * beta_star[j];
  const double ln_ratio = lambda_tilde / static_cast<double>(n);
  report.b_id = top_weighted * ln_ratio * ln_ratio + tail_weighted;
  // Guard 0 * inf when the signal is zero and the high-dimensional factor
  // diverges (zero lambda~): zero signal has zero bias.
  report.b_bound = report.b_id == 0.0 ? 0.0 : report.b_id * (diag.norm_T + diag.highdim_factor);
  return report;
}

BoundReport pcr_bound_terms(const Spectrum& spec, const TargetCovariance& target,
                            std::span<const double> beta_star, std::size_t n, double noise_sd,
                            double delta_value) {
  if (noise_sd < 0.0) throw InputError("pcr_bound_terms: noise_sd must be >= 0");
  if (delta_value < 0.0) throw InputError("pcr_bound_terms: delta_value must be >= 0");
  if (beta_star.size() != spec.dim()) throw StructuralError("pcr_bound_terms: beta length mismatch");
  const auto diag = model::shift_diagnostics(spec, target, n, 0.0);

  BoundReport report;
  report.pcr_var_term = noise_sd * noise_sd * diag.tr_T / static_cast<double>(n);
  double beta_sq = 0.0;
  for (double b : beta_star) beta_sq += b * b;
  const double cond = spec.lambda(0) / spec.lambda(spec.k() - 1);
  report.pcr_bias_term = beta_sq * cond * cond * target.opnorm() * delta_value * delta_value;
  return report;
}

double delta_bound(const Spectrum& spec, std::size_t n, double delta_prob, double sigma) {
  if (!(delta_prob > 0.0) || !(delta_prob < 1.0))
    throw InputError("delta_bound: delta_prob must lie in (0, 1)");
  if (!(sigma > 0.0)) throw InputError("delta_bound: sigma must be positive");
  if (n == 0) throw InputError("delta_bound: n must be >= 1");
  const double gap = spec.lambda(spec.k() - 1) - spec.lambda(spec.k());
  if (!(gap > 0.0)) throw DomainError("delta_bound: no spectral gap at k");
  const double r_full = spec.total_sum() / spec.lambda(0);
  const double sigma4 = sigma * sigma * sigma * sigma;
  return sigma4 * (spec.lambda(0) / gap) *
         std::sqrt((r_full + std::log(1.0 / delta_prob)) / static_cast<double>(n));
}

Spectrum lower_bound_instance(std::size_t n, std::size_t k, double c1, double c2) {
  if (k < 1) throw InputError("lower_bound_instance: k must be >= 1");
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw InputError("lower_bound_instance: c1, c2 must be positive");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const auto tail_count = static_cast<std::size_t>(std::floor(sqrt_n / c2));
  if (tail_count == 0)
    throw InputError("lower_bound_instance: floor(sqrt(n)/c2) is zero; increase n");

  std::vector<double> eigenvalues;
  eigenvalues.reserve(k + tail_count + 1);
  eigenvalues.insert(eigenvalues.end(), k, 1.0);
  eigenvalues.insert(eigenvalues.end(), tail_count, c1 / sqrt_n);
  eigenvalues.push_back(0.0);
  return Spectrum(std::move(eigenvalues), k);
}

}  // namespace shiftlab::theory
