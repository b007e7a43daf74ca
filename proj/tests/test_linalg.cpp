#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mmse/error.hpp"
#include "mmse/linalg.hpp"
#include "oracles.hpp"

using namespace mmse;

namespace {

const cplx I{0.0, 1.0};

bool near(const ComplexMatrix& a, const ComplexMatrix& b, double tol) {
  return a.rows() == b.rows() && a.cols() == b.cols() && oracle::max_abs(a, b) <= tol;
}

bool near(const CVector& a, const CVector& b, double tol) { return a.size() == b.size() && oracle::max_abs(a, b) <= tol; }

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::invalid_input;
}

}  // namespace

TEST_CASE("matrix container checks its shape and entries") {
  CHECK(code_of([] { ComplexMatrix(2, 2, CVector(3)); }) == Errc::invalid_input);
  CHECK(code_of([] { ComplexMatrix(1, 1, CVector{cplx{NAN, 0}}); }) == Errc::invalid_input);
  CHECK(code_of([] { ComplexMatrix({{1, 2}, {3}}); }) == Errc::invalid_input);
  const ComplexMatrix m{{1, 2}, {3, 4}};
  CHECK(m(1, 0) == cplx{3});
  CHECK(m.column(1) == CVector{2, 4});
}

TEST_CASE("gram_matrix") {
  CHECK(gram_matrix(ComplexMatrix::identity(2)) == ComplexMatrix::identity(2));
  CHECK(near(gram_matrix(ComplexMatrix{{1, 0}, {0, 1}, {1, 1}}), ComplexMatrix{{2, 1}, {1, 2}}, 0));
  CHECK(near(gram_matrix(ComplexMatrix{{1}, {I}}), ComplexMatrix{{2}}, 0));
  CHECK(code_of([] { gram_matrix(ComplexMatrix()); }) == Errc::invalid_input);
}

TEST_CASE("gram_matrix of random channels is Hermitian with a real non-negative diagonal") {
  Philox4x32 rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto h = oracle::gaussian(rng, 32, 6);
    const auto g = gram_matrix(h);
    CHECK(hermitian_defect(g) <= 1e-12);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(g(i, i).imag() == 0.0);
      CHECK(g(i, i).real() >= 0.0);
    }
    CHECK(near(g, oracle::matmul(adjoint(h), h), 1e-10));
  }
}

TEST_CASE("regularized_gram") {
  CHECK(regularized_gram(ComplexMatrix::identity(2), 0.0) == ComplexMatrix::identity(2));
  CHECK(regularized_gram(ComplexMatrix{{2, 1}, {1, 2}}, 1.0) == ComplexMatrix{{3, 1}, {1, 3}});
  CHECK(regularized_gram(ComplexMatrix{{0}}, 0.5) == ComplexMatrix{{0.5}});
  CHECK(code_of([] { regularized_gram(ComplexMatrix{{1}}, -0.1); }) == Errc::invalid_input);
}

TEST_CASE("diag_split") {
  const double d24[] = {2, 4};
  auto s = diag_split(ComplexMatrix::diagonal(d24));
  CHECK(s.d == std::vector<double>{2, 4});
  CHECK(s.e == ComplexMatrix(2, 2));

  s = diag_split(ComplexMatrix{{2, 1}, {1, 2}});
  CHECK(s.d == std::vector<double>{2, 2});
  CHECK(s.e == ComplexMatrix{{0, 1}, {1, 0}});

  const ComplexMatrix a{{3, I}, {-I, 3}};
  s = diag_split(a);
  CHECK(s.d == std::vector<double>{3, 3});
  CHECK(s.e == ComplexMatrix{{0, I}, {-I, 0}});
  CHECK(s.reconstruct() == a);

  CHECK(code_of([] { diag_split(ComplexMatrix{{0, 1}, {1, 2}}); }) == Errc::singular_diagonal);
  CHECK(code_of([] { diag_split(ComplexMatrix{{-1}}); }) == Errc::singular_diagonal);
}

TEST_CASE("neumann_inverse examples") {
  const double d24[] = {2, 4};
  const double q[] = {0.5, 0.25};
  const auto diag = diag_split(ComplexMatrix::diagonal(d24));
  for (int k : {1, 2, 5}) CHECK(near(neumann_inverse(diag, k), ComplexMatrix::diagonal(q), 0));

  const auto s = diag_split(ComplexMatrix{{2, 1}, {1, 2}});
  CHECK(near(neumann_inverse(s, 1), ComplexMatrix{{0.5, 0}, {0, 0.5}}, 0));
  CHECK(near(neumann_inverse(s, 2), ComplexMatrix{{0.5, -0.25}, {-0.25, 0.5}}, 1e-15));
  CHECK(near(neumann_inverse(s, 3), ComplexMatrix{{0.625, -0.25}, {-0.25, 0.625}}, 1e-15));
  CHECK(code_of([&] { neumann_inverse(s, 0); }) == Errc::invalid_input);
}

TEST_CASE("neumann recurrence equals the explicit series sum and is Hermitian") {
  Philox4x32 rng(12);
  for (std::size_t u : {2u, 3u, 4u, 8u}) {
    for (int t = 0; t < 20; ++t) {
      const auto a = oracle::random_hpd(rng, u, 8 * u, 0.1);
      const auto s = diag_split(a);
      for (int k = 1; k <= 6; ++k) {
        const auto x = neumann_inverse(s, k);
        CHECK(near(x, oracle::neumann_sum(a, k), 1e-10));
        CHECK(hermitian_defect(x) <= 1e-12);
      }
    }
  }
}

TEST_CASE("scaled Neumann evaluation matches the direct one") {
  Philox4x32 rng(13);
  for (int t = 0; t < 20; ++t) {
    const auto a = oracle::random_hpd(rng, 4, 64, 0.5);
    const auto s = diag_split(a);
    for (int k = 1; k <= 4; ++k) CHECK(near(neumann_inverse_scaled(s, k, 64.0), neumann_inverse(s, k), 1e-10));
  }
}

TEST_CASE("convergence_norm") {
  const double d24[] = {2, 4};
  CHECK(convergence_norm(diag_split(ComplexMatrix::diagonal(d24))) == 0.0);
  CHECK(convergence_norm(diag_split(ComplexMatrix{{2, 1}, {1, 2}})) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(convergence_norm(diag_split(ComplexMatrix{{1, 1}, {1, 1}})) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("approximation error stays inside the geometric envelope") {
  Philox4x32 rng(14);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    const auto a = oracle::random_hpd(rng, 4, 32, 0.1);
    const auto s = diag_split(a);
    const double r = convergence_norm(s);
    if (r >= 1.0) continue;
    ++checked;
    const auto exact = oracle::gauss_jordan_inverse(a);
    for (int k = 1; k <= 6; ++k) {
      const double err = frobenius_norm(neumann_inverse(s, k) - exact);
      CHECK(err <= std::pow(r, k) * frobenius_norm(exact) * (1 + 1e-12) + 1e-15);
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("cholesky_decompose examples") {
  CHECK(near(cholesky_decompose(ComplexMatrix::identity(3)).matrix(), ComplexMatrix::identity(3), 0));
  CHECK(near(cholesky_decompose(ComplexMatrix{{4, 2}, {2, 3}}).matrix(), ComplexMatrix{{2, 0}, {1, std::sqrt(2.0)}},
             1e-15));
  CHECK(near(cholesky_decompose(ComplexMatrix{{2, 2.0 * I}, {-2.0 * I, 5}}).matrix(),
             ComplexMatrix{{std::sqrt(2.0), 0}, {-std::sqrt(2.0) * I, std::sqrt(3.0)}}, 1e-15));
  CHECK(code_of([] { cholesky_decompose(ComplexMatrix{{1, 2}, {2, 1}}); }) == Errc::not_positive_definite);
  CHECK(code_of([] { cholesky_decompose(ComplexMatrix{{0}}); }) == Errc::not_positive_definite);
  // pivot below 1e-12 of the largest diagonal entry
  CHECK(code_of([] { cholesky_decompose(ComplexMatrix{{1, 1}, {1, 1 + 1e-14}}); }) == Errc::not_positive_definite);
}

TEST_CASE("cholesky factor reproduces A") {
  Philox4x32 rng(15);
  for (int t = 0; t < 30; ++t) {
    const auto a = oracle::random_hpd(rng, 8, 16, 0.1);
    const auto l = cholesky_decompose(a).matrix();
    CHECK(near(oracle::matmul(l, adjoint(l)), a, 1e-10));
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(l(i, i).real() > 0.0);
      CHECK(l(i, i).imag() == 0.0);
      for (std::size_t j = i + 1; j < 8; ++j) CHECK(l(i, j) == cplx{});
    }
  }
}

TEST_CASE("lower-triangular wrapper validates its input") {
  CHECK(code_of([] { LowerTriangular::from_matrix(ComplexMatrix{{1, 1}, {0, 1}}); }) == Errc::invalid_input);
  CHECK(code_of([] { LowerTriangular::from_matrix(ComplexMatrix{{I}}); }) == Errc::invalid_input);
}

TEST_CASE("substitution examples") {
  const auto id = LowerTriangular::from_matrix(ComplexMatrix::identity(2));
  const auto l = LowerTriangular::from_matrix(ComplexMatrix{{2, 0}, {1, std::sqrt(2.0)}});
  const double r2 = std::sqrt(2.0);

  CHECK(near(solve_forward(id, CVector{3, 4.0 * I}), CVector{3, 4.0 * I}, 0));
  CHECK(near(solve_forward(l, CVector{1, 0}), CVector{0.5, -0.5 / r2}, 1e-15));
  CHECK(near(solve_forward(l, CVector{0, r2}), CVector{0, 1}, 1e-15));

  CHECK(near(solve_backward(id, CVector{1, 1}), CVector{1, 1}, 0));
  CHECK(near(solve_backward(l, CVector{1, 0}), CVector{0.5, 0}, 1e-15));
  CHECK(near(solve_backward(l, CVector{0, 1}), CVector{-1.0 / (2 * r2), 1.0 / r2}, 1e-15));

  const auto sing = LowerTriangular::from_matrix(ComplexMatrix{{1, 0}, {1, 0}});
  CHECK(code_of([&] { solve_forward(sing, CVector{1, 1}); }) == Errc::singular);
  CHECK(code_of([&] { solve_backward(sing, CVector{1, 1}); }) == Errc::singular);
  CHECK(code_of([&] { solve_forward(l, CVector{1}); }) == Errc::invalid_input);
}

TEST_CASE("invert_via_cholesky examples") {
  const double d24[] = {2, 4};
  const double q[] = {0.5, 0.25};
  CHECK(near(invert_via_cholesky(ComplexMatrix::diagonal(d24)), ComplexMatrix::diagonal(q), 1e-15));
  CHECK(near(invert_via_cholesky(ComplexMatrix{{2, 1}, {1, 2}}),
             ComplexMatrix{{2.0 / 3, -1.0 / 3}, {-1.0 / 3, 2.0 / 3}}, 1e-15));
  CHECK(near(invert_via_cholesky(ComplexMatrix{{4, 2}, {2, 3}}), (1.0 / 8) * ComplexMatrix{{3, -2}, {-2, 4}}, 1e-15));
  CHECK(near(invert_via_cholesky(ComplexMatrix{{4}}), ComplexMatrix{{0.25}}, 0));
  CHECK(code_of([] { invert_via_cholesky(ComplexMatrix{{-4}}); }) == Errc::not_positive_definite);
}

TEST_CASE("cholesky inverse against Gauss-Jordan and the identity") {
  Philox4x32 rng(16);
  for (std::size_t u : {2u, 4u, 8u, 16u}) {
    for (int t = 0; t < 25; ++t) {
      const auto a = oracle::random_hpd(rng, u, 2 * u, 0.05);
      const auto x = invert_via_cholesky(a);
      CHECK(hermitian_defect(x) == 0.0);
      CHECK(near(oracle::matmul(x, a), ComplexMatrix::identity(u), 1e-9));
      CHECK(near(x, oracle::gauss_jordan_inverse(a), 1e-9));
    }
  }
}

TEST_CASE("unitary_transform examples") {
  CHECK(near(unitary_transform(CVector{1, 0, 0, 0}, TransformDirection::forward), CVector{0.5, 0.5, 0.5, 0.5}, 1e-15));
  CHECK(near(unitary_transform(CVector{1, 1, 1, 1}, TransformDirection::forward), CVector{2, 0, 0, 0}, 1e-15));
  CHECK(unitary_transform(CVector{}, TransformDirection::forward).empty());
}

TEST_CASE("unitary_transform preserves energy, round-trips and matches the DFT matrix") {
  Philox4x32 rng(17);
  for (std::size_t n : {1u, 2u, 5u, 12u, 64u, 65u, 72u, 100u, 128u, 300u, 1200u}) {
    const CVector v = oracle::gaussian_vector(rng, n);
    const CVector f = unitary_transform(v, TransformDirection::forward);
    const CVector back = unitary_transform(f, TransformDirection::inverse);
    CHECK(std::abs(norm2(f) - norm2(v)) <= 1e-12 * std::max(1.0, norm2(v)));
    CHECK(near(back, v, 1e-12));
    if (n <= 300) {
      CHECK(near(f, oracle::dft(v, false), 1e-11));
      CHECK(near(unitary_transform(v, TransformDirection::inverse), oracle::dft(v, true), 1e-11));
    }
    // direct and fast paths agree
    CHECK(near(unitary_transform_direct(v, TransformDirection::forward), f, 1e-9));
  }
}
