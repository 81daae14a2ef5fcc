#include "estimators.hpp"

#include <algorithm>
#include <cmath>

namespace shiftlab::estimators {

namespace {

Matrix as_column(std::span<const double> v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

double clamp_nonneg(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

Estimate ridge_fit_with_gram(const Matrix& x, const SymMatrix& gram,
                             std::span<const double> y, double lambda) {
  if (lambda < 0.0) throw InputError("ridge_fit: lambda must be >= 0");
  if (x.rows() != y.size()) throw StructuralError("ridge_fit: label length mismatch");
  const SymMatrix a = gram.shifted(lambda);
  const auto sol = linalg::spd_solve(a, as_column(y), 1e-12);
  std::vector<double> alpha(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) alpha[i] = sol.x(i, 0);

  Estimate est;
  est.beta_hat = linalg::matvec_t(x, alpha);
  est.method = Method::Ridge;
  est.lambda_used = lambda;
  est.used_pseudo_solve = sol.used_pseudo;
  return est;
}

Estimate ridge_fit(const Matrix& x, std::span<const double> y, double lambda) {
  return ridge_fit_with_gram(x, SymMatrix::gram_rows(x), y, lambda);
}

Estimate minnorm_fit(const Matrix& x, std::span<const double> y, bool use_pseudo) {
  Estimate est = ridge_fit(x, y, use_pseudo ? 0.0 : kMinnormLambda);
  est.method = Method::Minnorm;
  return est;
}

namespace {

SymMatrix scaled_gram(const Matrix& rows_matrix, double inv_n) {
  Matrix scaled = SymMatrix::gram_rows(rows_matrix).full();
  for (double& v : scaled.data()) v *= inv_n;
  return SymMatrix::from_lower(std::move(scaled));
}

void fix_column_sign(Matrix& u, std::size_t col) {
  std::size_t arg = 0;
  for (std::size_t r = 1; r < u.rows(); ++r)
    if (std::abs(u(r, col)) > std::abs(u(arg, col))) arg = r;
  if (u(arg, col) < 0.0)
    for (std::size_t r = 0; r < u.rows(); ++r) u(r, col) = -u(r, col);
}

}  // namespace

PcaSubspace pca_topk_subspace(const Matrix& x1, std::size_t k, SubspaceRoute route) {
  const std::size_t n = x1.rows();
  const std::size_t d = x1.cols();
  if (k < 1 || k > std::min(n, d))
    throw InputError("pca_topk_subspace: k must satisfy 1 <= k <= min(n, d)");
  if (route == SubspaceRoute::Auto)
    route = n <= d ? SubspaceRoute::Gram : SubspaceRoute::Direct;
  const double inv_n = 1.0 / static_cast<double>(n);

  PcaSubspace out;
  if (route == SubspaceRoute::Direct) {
    const auto eig = linalg::sym_eigh(scaled_gram(linalg::transpose(x1), inv_n));
    const double lam_k = eig.values[k - 1];
    if (lam_k <= 1e-12)
      throw DomainError("pca_topk_subspace: sample covariance is rank deficient at k");
    out.eigenvalues = eig.values;
    out.small_spectral_gap = lam_k - (k < d ? eig.values[k] : 0.0) < 1e-9;
    out.u = Matrix(d, k);
    for (std::size_t col = 0; col < k; ++col) {
      for (std::size_t r = 0; r < d; ++r) out.u(r, col) = eig.vectors(r, col);
      fix_column_sign(out.u, col);
    }
    return out;
  }

  const auto eig = linalg::sym_eigh(scaled_gram(x1, inv_n));
  const double lam_k = eig.values[k - 1];
  if (lam_k <= 1e-12) throw DomainError("pca_topk_subspace: sample covariance is rank deficient at k");
  out.eigenvalues = eig.values;
  out.small_spectral_gap = lam_k - (k < n ? eig.values[k] : 0.0) < 1e-9;

  // Lift u_i -> X1^T u_i, normalize, re-orthonormalize (the lifted vectors are
  // orthogonal in exact arithmetic but drift numerically).
  out.u = Matrix(d, k);
  std::vector<double> u_col(n);
  for (std::size_t col = 0; col < k; ++col) {
    for (std::size_t i = 0; i < n; ++i) u_col[i] = eig.vectors(i, col);
    std::vector<double> lifted = linalg::matvec_t(x1, u_col);
    for (std::size_t prev = 0; prev < col; ++prev) {
      double proj = 0.0;
      for (std::size_t r = 0; r < d; ++r) proj += out.u(r, prev) * lifted[r];
      for (std::size_t r = 0; r < d; ++r) lifted[r] -= proj * out.u(r, prev);
    }
    double norm = std::sqrt(linalg::dot(lifted, lifted));
    if (!(norm > 0.0)) throw NumericalError("pca_topk_subspace: lifted vector collapsed");
    for (std::size_t r = 0; r < d; ++r) out.u(r, col) = lifted[r] / norm;
    fix_column_sign(out.u, col);
  }
  return out;
}

Estimate pcr_fit(const Matrix& x1, const Matrix& x2, std::span<const double> y2, std::size_t k) {
  if (x1.cols() != x2.cols()) throw StructuralError("pcr_fit: sample halves disagree on dimension");
  if (x2.rows() != y2.size()) throw StructuralError("pcr_fit: label length mismatch");
  PcaSubspace sub = pca_topk_subspace(x1, k);

  const Matrix z = linalg::matmul(x2, sub.u);
  const SymMatrix ztz = SymMatrix::gram_rows(linalg::transpose(z));
  const std::vector<double> rhs = linalg::matvec_t(z, y2);
  const auto sol = linalg::spd_solve(ztz, as_column(rhs), 1e-12);
  std::vector<double> alpha(k);
  for (std::size_t i = 0; i < k; ++i) alpha[i] = sol.x(i, 0);

  Estimate est;
  est.beta_hat = linalg::matvec(sub.u, alpha);
  est.method = Method::Pcr;
  est.lambda_used = 0.0;
  est.subspace = std::move(sub.u);
  est.used_pseudo_solve = sol.used_pseudo;
  est.small_spectral_gap = sub.small_spectral_gap;
  return est;
}

double excess_risk(const Estimate& est, std::span<const double> beta_star,
                   const TargetCovariance& target) {
  if (est.beta_hat.size() != beta_star.size())
    throw StructuralError("excess_risk: coefficient length mismatch");
  std::vector<double> diff(beta_star.size());
  for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = est.beta_hat[j] - beta_star[j];
  return clamp_nonneg(model::quad_form(target, diff));
}

RiskSplit ridge_risk_split_with_gram(const Matrix& x, const SymMatrix& gram,
                                     std::span<const double> beta_star, double lambda,
                                     const TargetCovariance& target, double noise_sd) {
  if (lambda < 0.0) throw InputError("ridge_risk_split: lambda must be >= 0");
  if (noise_sd < 0.0) throw InputError("ridge_risk_split: noise_sd must be >= 0");
  if (x.cols() != beta_star.size()) throw StructuralError("ridge_risk_split: beta length mismatch");
  const SymMatrix a = gram.shifted(lambda);

  // Bias: risk of the noiseless fit.
  const std::vector<double> mean_labels = linalg::matvec(x, beta_star);
  const auto gamma = linalg::spd_solve(a, as_column(mean_labels), 1e-12);
  std::vector<double> gvec(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) gvec[i] = gamma.x(i, 0);
  std::vector<double> beta_det = linalg::matvec_t(x, gvec);
  for (std::size_t j = 0; j < beta_det.size(); ++j) beta_det[j] -= beta_star[j];
  const double bias = clamp_nonneg(model::quad_form(target, beta_det));

  // Variance: v^2 sum_i h_i^T Sigma_T h_i with H = (G + lambda I)^{-1} X.
  double variance = 0.0;
  if (noise_sd > 0.0) {
    const auto h = linalg::spd_solve(a, x, 1e-12);
    double acc = 0.0;
    for (std::size_t i = 0; i < h.x.rows(); ++i) acc += model::quad_form(target, h.x.row(i));
    variance = clamp_nonneg(noise_sd * noise_sd * acc);
  }

  return RiskSplit{bias, variance, bias + variance};
}

RiskSplit ridge_risk_split(const Matrix& x, std::span<const double> beta_star, double lambda,
                           const TargetCovariance& target, double noise_sd) {
  return ridge_risk_split_with_gram(x, SymMatrix::gram_rows(x), beta_star, lambda, target,
                                    noise_sd);
}

RiskSplit pcr_risk_split(const Matrix& subspace, const Matrix& x2,
                         std::span<const double> beta_star, const TargetCovariance& target,
                         double noise_sd) {
  const std::size_t d = subspace.rows();
  const std::size_t k = subspace.cols();
  if (x2.cols() != d || beta_star.size() != d)
    throw StructuralError("pcr_risk_split: dimension mismatch");
  if (noise_sd < 0.0) throw InputError("pcr_risk_split: noise_sd must be >= 0");

  // Orthonormality within 1e-9 is part of the Estimate contract.
  const Matrix utu = linalg::matmul_bt(linalg::transpose(subspace), linalg::transpose(subspace));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (std::abs(utu(i, j) - (i == j ? 1.0 : 0.0)) > 1e-9)
        throw InputError("pcr_risk_split: subspace is not column-orthonormal");

  const Matrix z = linalg::matmul(x2, subspace);
  const SymMatrix ztz = SymMatrix::gram_rows(linalg::transpose(z));

  // U^T Sigma_T U via k applications of the target operator.
  Matrix ut_sigma_u(k, k);
  std::vector<double> col(d);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t r = 0; r < d; ++r) col[r] = subspace(r, c);
    const std::vector<double> image = model::target_apply(target, col);
    for (std::size_t r = 0; r <= c; ++r) {
      double acc = 0.0;
      for (std::size_t t = 0; t < d; ++t) acc += subspace(t, r) * image[t];
      ut_sigma_u(r, c) = acc;
      ut_sigma_u(c, r) = acc;
    }
  }

  const auto var_solve = linalg::spd_solve(ztz, ut_sigma_u, 1e-12);
  if (var_solve.used_pseudo) throw DomainError("pcr_risk_split: singular k x k Gram");
  double trace = 0.0;
  for (std::size_t i = 0; i < k; ++i) trace += var_solve.x(i, i);
  const double variance = clamp_nonneg(noise_sd * noise_sd * trace);

  const std::vector<double> mean_labels = linalg::matvec(x2, beta_star);
  const std::vector<double> rhs = linalg::matvec_t(z, mean_labels);
  const auto alpha = linalg::spd_solve(ztz, as_column(rhs), 1e-12);
  if (alpha.used_pseudo) throw DomainError("pcr_risk_split: singular k x k Gram");
  std::vector<double> avec(k);
  for (std::size_t i = 0; i < k; ++i) avec[i] = alpha.x(i, 0);
  std::vector<double> beta_det = linalg::matvec(subspace, avec);
  for (std::size_t j = 0; j < d; ++j) beta_det[j] -= beta_star[j];
  const double bias = clamp_nonneg(model::quad_form(target, beta_det));

  return RiskSplit{bias, variance, bias + variance};
}

}  // namespace shiftlab::estimators
