#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shiftlab::model {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Spectrum::Spectrum(std::vector<double> eigenvalues, std::size_t k)
    : eigenvalues_(std::move(eigenvalues)), k_(k) {
  const std::size_t d = eigenvalues_.size();
  if (d < 2) throw InputError("Spectrum: needs at least two eigenvalues");
  if (k_ < 1 || k_ >= d) throw InputError("Spectrum: split index k must satisfy 1 <= k < d");
  for (std::size_t j = 0; j < d; ++j) {
    const double v = eigenvalues_[j];
    if (!std::isfinite(v) || v < 0.0) throw InputError("Spectrum: eigenvalues must be finite and >= 0");
    if (j > 0 && eigenvalues_[j - 1] < v) throw InputError("Spectrum: eigenvalues must be non-increasing");
  }
  if (!(eigenvalues_[k_ - 1] > 0.0)) throw InputError("Spectrum: lambda_k must be positive");
  for (std::size_t j = k_; j < d; ++j) {
    tail_sum_ += eigenvalues_[j];
    tail_sum_sq_ += eigenvalues_[j] * eigenvalues_[j];
  }
  for (std::size_t j = 0; j < d; ++j) total_sum_ += eigenvalues_[j];
}

TargetCovariance::TargetCovariance(SymMatrix top, std::vector<TailBlock> tail)
    : top_(std::move(top)), tail_(std::move(tail)) {
  const auto top_eig = linalg::sym_eigh(top_);
  top_opnorm_ = std::max(top_eig.values.front(), 0.0);
  if (top_eig.values.back() < -1e-10 * std::max(top_opnorm_, 1e-300))
    throw InputError("TargetCovariance: top block is not positive semi-definite");
  for (std::size_t i = 0; i < top_.dim(); ++i) top_trace_ += top_(i, i);

  for (const TailBlock& block : tail_) {
    const std::size_t b = block.rotation.rows();
    if (b == 0 || block.rotation.cols() != b || block.eigenvalues.size() != b)
      throw StructuralError("TargetCovariance: malformed tail block");
    const Matrix qtq = linalg::matmul(linalg::transpose(block.rotation), block.rotation);
    double ortho_err = 0.0;
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j)
        ortho_err = std::max(ortho_err, std::abs(qtq(i, j) - (i == j ? 1.0 : 0.0)));
    if (ortho_err > 1e-12) throw InputError("TargetCovariance: tail rotation is not orthogonal");
    for (double e : block.eigenvalues) {
      if (!std::isfinite(e) || e < 0.0)
        throw InputError("TargetCovariance: tail eigenvalues must be finite and >= 0");
      tail_trace_ += e;
      tail_opnorm_ = std::max(tail_opnorm_, e);
    }
    // diag(Q diag(e) Q^T)_m = sum_l Q_ml^2 e_l
    for (std::size_t m = 0; m < b; ++m) {
      double acc = 0.0;
      for (std::size_t l = 0; l < b; ++l)
        acc += block.rotation(m, l) * block.rotation(m, l) * block.eigenvalues[l];
      tail_diag_.push_back(acc);
    }
    tail_dim_ += b;
  }
}

TargetCovariance TargetCovariance::from_spectrum(const Spectrum& spec, std::size_t block_size) {
  if (block_size == 0) throw InputError("TargetCovariance: block size must be >= 1");
  const std::size_t k = spec.k();
  Matrix top(k, k, 0.0);
  for (std::size_t i = 0; i < k; ++i) top(i, i) = spec.lambda(i);

  std::vector<TailBlock> tail;
  std::size_t pos = k;
  while (pos < spec.dim()) {
    const std::size_t b = std::min(block_size, spec.dim() - pos);
    TailBlock block;
    block.rotation = Matrix::identity(b);
    block.eigenvalues.assign(spec.eigenvalues().begin() + static_cast<std::ptrdiff_t>(pos),
                             spec.eigenvalues().begin() + static_cast<std::ptrdiff_t>(pos + b));
    tail.push_back(std::move(block));
    pos += b;
  }
  return TargetCovariance(SymMatrix(std::move(top)), std::move(tail));
}

TargetCovariance TargetCovariance::identity(std::size_t k, std::size_t tail_dim,
                                            std::size_t block_size) {
  if (block_size == 0) throw InputError("TargetCovariance: block size must be >= 1");
  std::vector<TailBlock> tail;
  std::size_t pos = 0;
  while (pos < tail_dim) {
    const std::size_t b = std::min(block_size, tail_dim - pos);
    tail.push_back(TailBlock{Matrix::identity(b), std::vector<double>(b, 1.0)});
    pos += b;
  }
  return TargetCovariance(SymMatrix::identity(k), std::move(tail));
}

void TargetCovariance::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != dim() || out.size() != dim())
    throw StructuralError("TargetCovariance::apply: vector length mismatch");
  const std::size_t k = top_.dim();
  for (std::size_t i = 0; i < k; ++i) out[i] = linalg::dot(top_.full().row(i), in.subspan(0, k));

  std::size_t pos = k;
  std::vector<double> scratch;
  for (const TailBlock& block : tail_) {
    const std::size_t b = block.rotation.rows();
    scratch.assign(b, 0.0);
    // t = Q^T x_b, then t *= e, then out_b = Q t
    for (std::size_t r = 0; r < b; ++r) {
      const double xr = in[pos + r];
      if (xr == 0.0) continue;
      const double* qrow = block.rotation.row_ptr(r);
      for (std::size_t c = 0; c < b; ++c) scratch[c] += xr * qrow[c];
    }
    for (std::size_t c = 0; c < b; ++c) scratch[c] *= block.eigenvalues[c];
    for (std::size_t r = 0; r < b; ++r) out[pos + r] = linalg::dot(block.rotation.row(r), scratch);
    pos += b;
  }
}

EffectiveRanks effective_ranks(const Spectrum& spec, double lambda_reg) {
  if (lambda_reg < 0.0) throw InputError("effective_ranks: lambda_reg must be >= 0");
  const double lambda_tilde = lambda_reg + spec.tail_sum();
  const double lam_next = spec.lambda(spec.k());
  EffectiveRanks out;
  out.r_k = lam_next > 0.0 ? lambda_tilde / lam_next : kInf;
  out.R_k = spec.tail_sum_sq() > 0.0 ? lambda_tilde * lambda_tilde / spec.tail_sum_sq() : kInf;
  return out;
}

namespace {

// T = D^{-1/2} Sigma_{T,k} D^{-1/2} with D = diag(lambda_1..lambda_k),
// mirrored exactly so SymMatrix construction holds.
SymMatrix whitened_top(const Spectrum& spec, const SymMatrix& top) {
  const std::size_t k = spec.k();
  std::vector<double> inv_sqrt(k);
  for (std::size_t i = 0; i < k; ++i) inv_sqrt[i] = 1.0 / std::sqrt(spec.lambda(i));
  Matrix t(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = top(i, j) * inv_sqrt[i] * inv_sqrt[j];
      t(i, j) = v;
      t(j, i) = v;
    }
  }
  return SymMatrix(std::move(t));
}

}  // namespace

ShiftDiagnostics shift_diagnostics(const Spectrum& spec, const TargetCovariance& target,
                                   std::size_t n, double lambda_reg) {
  if (lambda_reg < 0.0) throw InputError("shift_diagnostics: lambda_reg must be >= 0");
  if (target.top_dim() != spec.k() || target.tail_dim() != spec.dim() - spec.k())
    throw StructuralError("shift_diagnostics: target dimensions do not match the spectrum");

  ShiftDiagnostics out;
  const auto eig = linalg::sym_eigh(whitened_top(spec, target.top()));
  out.norm_T = std::max(eig.values.front(), 0.0);
  for (double v : eig.values) out.tr_T += v;

  double tr_u = 0.0;
  const std::vector<double>& diag = target.tail_diagonal();
  for (std::size_t t = 0; t < diag.size(); ++t) tr_u += spec.lambda(spec.k() + t) * diag[t];
  const double tr_v = spec.tail_sum_sq();
  out.trU_over_trV = tr_v > 0.0 ? tr_u / tr_v : kInf;

  const EffectiveRanks ranks = effective_ranks(spec, lambda_reg);
  out.r_k = ranks.r_k;
  out.R_k = ranks.R_k;

  const double lambda_tilde = lambda_reg + spec.tail_sum();
  out.highdim_factor =
      lambda_tilde > 0.0 ? static_cast<double>(n) * target.tail_opnorm() / lambda_tilde : kInf;
  out.r_full = spec.total_sum() / spec.lambda(0);
  return out;
}

TargetCovariance random_target(const Spectrum& spec, double goal_norm_T, double goal_ratio,
                               std::size_t tail_block_size, Rng& rng) {
  if (!(goal_norm_T > 0.0) || !(goal_ratio > 0.0))
    throw InputError("random_target: goals must be positive");
  if (tail_block_size == 0) throw InputError("random_target: block size must be >= 1");
  if (!(spec.tail_sum_sq() > 0.0))
    throw DomainError("random_target: source tail is zero, tr[U]/tr[V] goal unreachable");

  const std::size_t k = spec.k();
  const Matrix q = linalg::random_orthogonal(k, rng);
  std::vector<double> evals(k);
  for (double& e : evals) e = 0.5 + rng.next_uniform();

  // top = Q diag(e) Q^T, built on the lower triangle and mirrored.
  Matrix top(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += q(i, l) * evals[l] * q(j, l);
      top(i, j) = acc;
      top(j, i) = acc;
    }
  }
  const auto t_eig = linalg::sym_eigh(whitened_top(spec, SymMatrix(top)));
  const double current_norm = t_eig.values.front();
  if (!(current_norm > 0.0)) throw NumericalError("random_target: degenerate top block");
  const double top_scale = goal_norm_T / current_norm;
  for (double& v : top.data()) v *= top_scale;

  std::vector<TailBlock> tail;
  const std::size_t tail_dim = spec.dim() - k;
  std::size_t pos = 0;
  while (pos < tail_dim) {
    const std::size_t b = std::min(tail_block_size, tail_dim - pos);
    TailBlock block;
    block.rotation = linalg::random_orthogonal(b, rng);
    block.eigenvalues.resize(b);
    for (double& e : block.eigenvalues) e = 0.5 + rng.next_uniform();
    tail.push_back(std::move(block));
    pos += b;
  }

  // tr[U] is linear in the tail eigenvalues; one global factor hits the goal.
  double tr_u = 0.0;
  std::size_t offset = 0;
  for (const TailBlock& block : tail) {
    const std::size_t b = block.rotation.rows();
    for (std::size_t m = 0; m < b; ++m) {
      double diag = 0.0;
      for (std::size_t l = 0; l < b; ++l)
        diag += block.rotation(m, l) * block.rotation(m, l) * block.eigenvalues[l];
      tr_u += spec.lambda(k + offset + m) * diag;
    }
    offset += b;
  }
  if (!(tr_u > 0.0)) throw NumericalError("random_target: tail trace degenerate");
  const double tail_scale = goal_ratio * spec.tail_sum_sq() / tr_u;
  for (TailBlock& block : tail)
    for (double& e : block.eigenvalues) e *= tail_scale;

  return TargetCovariance(SymMatrix(std::move(top)), std::move(tail));
}

std::vector<double> target_apply(const TargetCovariance& target, std::span<const double> vec) {
  std::vector<double> out(vec.size());
  target.apply(vec, out);
  return out;
}

double quad_form(const TargetCovariance& target, std::span<const double> vec) {
  const std::vector<double> image = target_apply(target, vec);
  return linalg::dot(vec, image);
}

Matrix sample_design(const Spectrum& spec, std::size_t n, Rng& rng) {
  if (n == 0) throw InputError("sample_design: n must be >= 1");
  const std::size_t d = spec.dim();
  std::vector<double> scale(d);
  for (std::size_t j = 0; j < d; ++j) scale[j] = std::sqrt(spec.lambda(j));
  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = x.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) row[j] = scale[j] * rng.next_gaussian();
  }
  return x;
}

std::vector<double> gen_labels(const Matrix& x, std::span<const double> beta_star,
                               double noise_sd, Rng& rng) {
  if (x.cols() != beta_star.size()) throw StructuralError("gen_labels: beta length mismatch");
  if (noise_sd < 0.0) throw InputError("gen_labels: noise_sd must be >= 0");
  std::vector<double> y(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    y[i] = linalg::dot(x.row(i), beta_star) + noise_sd * rng.next_gaussian();
  return y;
}

Matrix sample_target_points(const TargetCovariance& target, std::size_t count, Rng& rng) {
  const std::size_t k = target.top_dim();
  const auto top_eig = linalg::sym_eigh(target.top());
  std::vector<double> top_scale(k);
  for (std::size_t i = 0; i < k; ++i) top_scale[i] = std::sqrt(std::max(top_eig.values[i], 0.0));

  Matrix points(count, target.dim());
  std::vector<double> g;
  for (std::size_t p = 0; p < count; ++p) {
    double* row = points.row_ptr(p);
    g.resize(k);
    for (std::size_t i = 0; i < k; ++i) g[i] = top_scale[i] * rng.next_gaussian();
    for (std::size_t r = 0; r < k; ++r) row[r] = linalg::dot(top_eig.vectors.row(r), g);

    std::size_t pos = k;
    for (const TailBlock& block : target.tail()) {
      const std::size_t b = block.rotation.rows();
      g.resize(b);
      for (std::size_t i = 0; i < b; ++i)
        g[i] = std::sqrt(block.eigenvalues[i]) * rng.next_gaussian();
      for (std::size_t r = 0; r < b; ++r) row[pos + r] = linalg::dot(block.rotation.row(r), g);
      pos += b;
    }
  }
  return points;
}

Dataset make_dataset(const Spectrum& spec, std::vector<double> beta_star, double noise_sd,
                     std::size_t rows, Rng& rng) {
  Dataset data;
  data.x = sample_design(spec, rows, rng);
  data.y = gen_labels(data.x, beta_star, noise_sd, rng);
  data.beta_star = std::move(beta_star);
  data.noise_sd = noise_sd;
  return data;
}

}  // namespace shiftlab::model
