#include <doctest.h>

#include <cmath>
#include <limits>

#include "linalg.hpp"
#include "test_util.hpp"

using namespace shiftlab;
using namespace shiftlab::linalg;
using namespace shiftlab::testutil;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

void check_eigenpair_invariants(const SymMatrix& a, const EigenPair& eig) {
  const std::size_t n = a.dim();
  for (std::size_t i = 0; i + 1 < n; ++i) CHECK(eig.values[i] >= eig.values[i + 1]);

  const Matrix vtv = matmul(transpose(eig.vectors), eig.vectors);
  CHECK(max_abs_diff(vtv, Matrix::identity(n)) <= 1e-10);

  Matrix scaled = eig.vectors;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scaled(i, j) *= eig.values[j];
  const Matrix rebuilt = matmul_bt(scaled, eig.vectors);
  CHECK(max_abs_diff(rebuilt, a.full()) <= 1e-10 * std::max(1.0, max_abs(a.full())));
}

}  // namespace

TEST_CASE("sym_eigh on diag(2,1)") {
  const auto eig = sym_eigh(SymMatrix(from_rows({{2, 0}, {0, 1}})));
  CHECK(eig.values[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(eig.values[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(eig.vectors(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(eig.vectors(1, 1)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(eig.vectors(1, 0)) <= 1e-12);
  CHECK(std::abs(eig.vectors(0, 1)) <= 1e-12);
}

TEST_CASE("sym_eigh on [[0,1],[1,0]]") {
  const auto eig = sym_eigh(SymMatrix(from_rows({{0, 1}, {1, 0}})));
  CHECK(eig.values[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(eig.values[1] == doctest::Approx(-1.0).epsilon(1e-14));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  // Up to sign: first column parallel to (1,1), second to (1,-1).
  CHECK(std::abs(std::abs(eig.vectors(0, 0)) - inv_sqrt2) <= 1e-12);
  CHECK(std::abs(eig.vectors(0, 0) - eig.vectors(1, 0)) <= 1e-12);
  CHECK(std::abs(eig.vectors(0, 1) + eig.vectors(1, 1)) <= 1e-12);
}

TEST_CASE("sym_eigh reconstruction on random symmetric matrices") {
  Rng rng(7);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t dim = 1 + (rng.next_u64() % 8);
    const SymMatrix a = random_symmetric(dim, rng);
    check_eigenpair_invariants(a, sym_eigh(a));
  }
  const SymMatrix a5 = random_symmetric(5, rng);
  const auto eig = sym_eigh(a5);
  Matrix scaled = eig.vectors;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) scaled(i, j) *= eig.values[j];
  CHECK(max_abs_diff(matmul_bt(scaled, eig.vectors), a5.full()) <= 1e-10 * max_abs(a5.full()));
}

TEST_CASE("sym_eigh PSD eigenvalue floor") {
  Rng rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix g = random_matrix(6, 3, rng);  // rank <= 3, so PSD with zeros
    const SymMatrix a = SymMatrix::gram_rows(g);
    const auto eig = sym_eigh(a);
    for (double v : eig.values) CHECK(v >= -1e-10 * eig.values.front());
  }
}

TEST_CASE("sym_eigh rejects non-finite input") {
  Matrix m = from_rows({{1, 0}, {0, 1}});
  // NaN on the diagonal keeps the exact-symmetry check satisfiable.
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sym_eigh(SymMatrix(std::move(m))), InputError);
}

TEST_CASE("SymMatrix rejects asymmetric input") {
  CHECK_THROWS_AS(SymMatrix(from_rows({{1, 2}, {2.0000001, 1}})), InputError);
}

TEST_CASE("spd_solve identity and diagonal") {
  Matrix b(2, 1);
  b(0, 0) = 3.0;
  b(1, 0) = -4.0;
  const auto sol = spd_solve(SymMatrix::identity(2), b);
  CHECK(sol.x(0, 0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(sol.x(1, 0) == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK_FALSE(sol.used_pseudo);

  Matrix rhs(2, 1);
  rhs(0, 0) = 2.0;
  rhs(1, 0) = 4.0;
  const auto sol2 = spd_solve(SymMatrix(from_rows({{2, 0}, {0, 4}})), rhs);
  CHECK(sol2.x(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sol2.x(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("spd_solve matches eigendecomposition inverse on random SPD") {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const SymMatrix a = random_spd(4, rng);
    const Matrix b = random_matrix(4, 2, rng);
    const auto sol = spd_solve(a, b);
    const Matrix oracle = matmul(inverse_via_eigh(a), b);
    CHECK(max_abs_diff(sol.x, oracle) <= 1e-10 * std::max(1.0, max_abs(oracle)));
  }
}

TEST_CASE("spd_solve residual property on positive definite systems") {
  Rng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t dim = 2 + (rng.next_u64() % 6);
    const SymMatrix a = random_spd(dim, rng);
    const Matrix b = random_matrix(dim, 1, rng);
    const auto sol = spd_solve(a, b);
    const Matrix residual = matmul(a.full(), sol.x);
    double worst = 0.0;
    for (std::size_t i = 0; i < dim; ++i) worst = std::max(worst, std::abs(residual(i, 0) - b(i, 0)));
    CHECK(worst <= 1e-9 * std::max(1.0, max_abs(b)));
  }
}

TEST_CASE("spd_solve pseudo path on singular PSD input") {
  // rank-1 PSD: outer product of (1,1)
  const SymMatrix a(from_rows({{1, 1}, {1, 1}}));
  Matrix b(2, 1);
  b(0, 0) = 2.0;
  b(1, 0) = 2.0;
  const auto sol = spd_solve(a, b);
  CHECK(sol.used_pseudo);
  CHECK(sol.dropped == 1);
  CHECK(sol.x(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.x(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spd_solve rejects indefinite matrices") {
  const SymMatrix a(from_rows({{1, 0}, {0, -1}}));
  CHECK_THROWS_AS(spd_solve(a, Matrix(2, 1, 1.0)), DomainError);
}

TEST_CASE("random_orthogonal produces orthogonal matrices") {
  Rng rng(21);
  for (std::size_t dim : {1, 2, 3, 8, 25}) {
    const Matrix q = random_orthogonal(dim, rng);
    const Matrix qtq = matmul(transpose(q), q);
    CHECK(max_abs_diff(qtq, Matrix::identity(dim)) <= 1e-12);
    CHECK(std::abs(std::abs(determinant(q)) - 1.0) <= 1e-9);
  }
}

TEST_CASE("random_orthogonal is deterministic per seed") {
  Rng rng_a(42);
  Rng rng_b(42);
  const Matrix qa = random_orthogonal(3, rng_a);
  const Matrix qb = random_orthogonal(3, rng_b);
  CHECK(qa.data() == qb.data());  // bit-identical
}

TEST_CASE("rng gaussian stream consumes two uniforms per pair") {
  Rng rng(5);
  Rng mirror(5);
  const double g0 = rng.next_gaussian();
  const double g1 = rng.next_gaussian();
  // Reproduce by hand from the mirrored uniform stream.
  const double u1 = 1.0 - mirror.next_uniform();
  const double u2 = mirror.next_uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  CHECK(g0 == radius * std::cos(2.0 * 3.14159265358979323846 * u2));
  CHECK(g1 == radius * std::sin(2.0 * 3.14159265358979323846 * u2));
}
