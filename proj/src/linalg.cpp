#include "linalg.hpp"

#include <algorithm>
#include <numeric>

namespace shiftlab::linalg {

Matrix Matrix::identity(std::size_t dim) {
  Matrix m(dim, dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_slice(std::size_t r0, std::size_t r1) const {
  if (r0 > r1 || r1 > rows_) throw StructuralError("row_slice: range out of bounds");
  Matrix out(r1 - r0, cols_);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(r0 * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>(r1 * cols_), out.data_.begin());
  return out;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw StructuralError("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out_row = out.row_ptr(i);
    for (std::size_t t = 0; t < a.cols(); ++t) {
      const double aval = a(i, t);
      if (aval == 0.0) continue;
      const double* b_row = b.row_ptr(t);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aval * b_row[j];
    }
  }
  return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw StructuralError("matmul_bt: inner dimensions differ");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw StructuralError("matvec: dimension mismatch");
  std::vector<double> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

std::vector<double> matvec_t(const Matrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) throw StructuralError("matvec_t: dimension mismatch");
  std::vector<double> y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = a.row_ptr(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += xi * row[j];
  }
  return y;
}

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double v : m.data()) best = std::max(best, std::abs(v));
  return best;
}

SymMatrix::SymMatrix(Matrix full) : full_(std::move(full)) {
  if (full_.rows() != full_.cols() || full_.rows() == 0)
    throw StructuralError("SymMatrix: matrix must be square and non-empty");
  for (std::size_t i = 0; i < full_.rows(); ++i)
    for (std::size_t j = i + 1; j < full_.cols(); ++j)
      if (full_(i, j) != full_(j, i)) throw InputError("SymMatrix: entries are not exactly symmetric");
}

SymMatrix SymMatrix::from_lower(Matrix m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw StructuralError("SymMatrix: matrix must be square and non-empty");
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) m(i, j) = m(j, i);
  return SymMatrix(std::move(m), unchecked_t{});
}

SymMatrix SymMatrix::gram_rows(const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = dot(x.row(i), x.row(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return SymMatrix(std::move(g), unchecked_t{});
}

SymMatrix SymMatrix::identity(std::size_t dim) {
  return SymMatrix(Matrix::identity(dim), unchecked_t{});
}

SymMatrix SymMatrix::shifted(double value) const {
  Matrix m = full_;
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += value;
  return SymMatrix(std::move(m), unchecked_t{});
}

namespace {

double frobenius_norm(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.data()) acc += v * v;
  return std::sqrt(acc);
}

double off_diagonal_norm(const Matrix& m) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j) acc += m(i, j) * m(i, j);
  return std::sqrt(acc);
}

}  // namespace

EigenPair sym_eigh(const SymMatrix& input) {
  if (!input.full().all_finite()) throw InputError("sym_eigh: matrix has non-finite entries");
  const std::size_t n = input.dim();
  Matrix a = input.full();
  Matrix v = Matrix::identity(n);

  const double threshold = 1e-13 * frobenius_norm(a);
  constexpr int kMaxSweeps = 100;

  bool converged = off_diagonal_norm(a) <= threshold;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = a(p, p), aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p), arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(p, r) = a(r, p);
          a(r, q) = s * arp + c * arq;
          a(q, r) = a(r, q);
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
    converged = off_diagonal_norm(a) <= threshold;
  }
  if (!converged) throw NumericalError("sym_eigh: Jacobi iteration did not converge in 100 sweeps");

  // Stable sort keeps the post-rotation order among equal eigenvalues.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&a](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  EigenPair out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t col = 0; col < n; ++col) {
    const std::size_t src = order[col];
    out.values[col] = a(src, src);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, col) = v(r, src);
  }
  return out;
}

namespace {

// Lower Cholesky with a relative pivot floor; returns false when the matrix
// is not numerically positive definite.
bool cholesky(const SymMatrix& a, Matrix& l) {
  const std::size_t n = a.dim();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
  const double pivot_floor = static_cast<double>(n) * 2.220446049250313e-16 * max_diag;

  l = Matrix(n, n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j) - dot({l.row_ptr(j), j}, {l.row_ptr(j), j});
    if (!(diag > pivot_floor)) return false;
    diag = std::sqrt(diag);
    l(j, j) = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double off = a(i, j) - dot({l.row_ptr(i), j}, {l.row_ptr(j), j});
      l(i, j) = off / diag;
    }
  }
  return true;
}

// Solves L L^T x = b column by column, in place.
void cholesky_solve(const Matrix& l, Matrix& b) {
  const std::size_t n = l.rows();
  const std::size_t m = b.cols();
  std::vector<double> col(n);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = b(i, j);
    for (std::size_t i = 0; i < n; ++i)
      col[i] = (col[i] - dot({l.row_ptr(i), i}, {col.data(), i})) / l(i, i);
    for (std::size_t ii = n; ii-- > 0;) {
      double acc = col[ii];
      for (std::size_t r = ii + 1; r < n; ++r) acc -= l(r, ii) * col[r];
      col[ii] = acc / l(ii, ii);
    }
    for (std::size_t i = 0; i < n; ++i) b(i, j) = col[i];
  }
}

}  // namespace

SpdSolveResult spd_solve(const SymMatrix& a, const Matrix& b, double rel_threshold) {
  if (rel_threshold < 0.0) throw InputError("spd_solve: rel_threshold must be >= 0");
  if (a.dim() != b.rows()) throw StructuralError("spd_solve: right-hand side has wrong row count");

  SpdSolveResult result;
  Matrix l;
  if (cholesky(a, l)) {
    result.x = b;
    cholesky_solve(l, result.x);
    return result;
  }

  const EigenPair eig = sym_eigh(a);
  const double mu1 = std::max(eig.values.front(), 0.0);
  const double cutoff = rel_threshold * mu1;
  for (double value : eig.values)
    if (value < -cutoff) throw DomainError("spd_solve: matrix is indefinite");

  // x = V diag(1/value) V^T b over the retained spectrum.
  const std::size_t n = a.dim();
  Matrix vt_b = matmul(transpose(eig.vectors), b);
  for (std::size_t i = 0; i < n; ++i) {
    const double value = eig.values[i];
    const bool keep = value > cutoff;
    if (!keep) ++result.dropped;
    const double inv = keep ? 1.0 / value : 0.0;
    for (std::size_t j = 0; j < b.cols(); ++j) vt_b(i, j) *= inv;
  }
  result.x = matmul(eig.vectors, vt_b);
  result.used_pseudo = true;
  return result;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Matrix random_orthogonal(std::size_t dim, Rng& rng) {
  if (dim == 0) throw InputError("random_orthogonal: dim must be >= 1");
  Matrix g(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) g(i, j) = rng.next_gaussian();

  // Modified Gram-Schmidt by columns gives the unique QR with R_jj > 0, so Q
  // is Haar. A second pass restores orthogonality lost to rounding.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < dim; ++j) {
      for (std::size_t prev = 0; prev < j; ++prev) {
        double proj = 0.0;
        for (std::size_t r = 0; r < dim; ++r) proj += g(r, prev) * g(r, j);
        for (std::size_t r = 0; r < dim; ++r) g(r, j) -= proj * g(r, prev);
      }
      double norm = 0.0;
      for (std::size_t r = 0; r < dim; ++r) norm += g(r, j) * g(r, j);
      norm = std::sqrt(norm);
      if (!(norm > 0.0) || !std::isfinite(norm))
        throw NumericalError("random_orthogonal: degenerate Gaussian draw");
      for (std::size_t r = 0; r < dim; ++r) g(r, j) /= norm;
    }
  }
  return g;
}

}  // namespace shiftlab::linalg
