#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace mmse {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

/// Dense row-major complex matrix. Holds H_w (B x U), G_w, A_w, inverses.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  /// Throws invalid_input if entries.size() != rows * cols or any entry is
  /// not finite.
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries);
  ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix diagonal(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  cplx& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * cols_ + j];
  }

  std::span<cplx> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const cplx> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  CVector column(std::size_t j) const;

  std::span<cplx> entries() noexcept { return data_; }
  std::span<const cplx> entries() const noexcept { return data_; }

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

ComplexMatrix adjoint(const ComplexMatrix& m);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
CVector operator*(const ComplexMatrix& a, std::span<const cplx> x);
ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(double s, const ComplexMatrix& m);

double frobenius_norm(const ComplexMatrix& m);
double norm2(std::span<const cplx> v);
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);
double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b);
/// max |m(i,j) - conj(m(j,i))|
double hermitian_defect(const ComplexMatrix& m);

/// A = D + E with D = diag(d) real positive and E hollow Hermitian.
struct DiagSplit {
  std::vector<double> d;
  ComplexMatrix e;

  std::size_t size() const noexcept { return d.size(); }
  ComplexMatrix reconstruct() const;
};

/// Lower-triangular factor with a real diagonal. Produced by
/// cholesky_decompose (diagonal strictly positive) or from_matrix.
class LowerTriangular {
 public:
  /// Throws invalid_input unless m is square, exactly zero above the
  /// diagonal and real on it. A zero diagonal is accepted; solves reject it.
  static LowerTriangular from_matrix(ComplexMatrix m);

  std::size_t size() const noexcept { return m_.rows(); }
  const cplx& operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }
  const ComplexMatrix& matrix() const noexcept { return m_; }

 private:
  explicit LowerTriangular(ComplexMatrix m) : m_(std::move(m)) {}
  ComplexMatrix m_;
};

// G = H^H H. Lower triangle accumulated as a sum of row outer products, then
// mirrored.
ComplexMatrix gram_matrix(const ComplexMatrix& h);

// A = G + (N0/Es) I
ComplexMatrix regularized_gram(const ComplexMatrix& g, double n0_over_es);

DiagSplit diag_split(const ComplexMatrix& a);

/// K-term Neumann approximation sum_{n<K} (-D^{-1}E)^n D^{-1}, evaluated by
/// the recurrence X_1 = D^{-1}, X_k = D^{-1} + (-D^{-1}E) X_{k-1}.
ComplexMatrix neumann_inverse(const DiagSplit& split, int terms);

/// Same series evaluated on the normalized matrix A/scale: the recurrence
/// runs on (D^{-1} scale, E / scale) and produces X_K * scale, which is
/// divided out before returning.
ComplexMatrix neumann_inverse_scaled(const DiagSplit& split, int terms, double scale);

/// ||D^{-1} E||_F; below 1 the series converges.
double convergence_norm(const DiagSplit& split);

LowerTriangular cholesky_decompose(const ComplexMatrix& a);
CVector solve_forward(const LowerTriangular& l, std::span<const cplx> b);
CVector solve_backward(const LowerTriangular& l, std::span<const cplx> u);

/// A^{-1} = [v_1 ... v_U] from L u_i = e_i, L^H v_i = u_i, returned as
/// (X + X^H) / 2.
ComplexMatrix invert_via_cholesky(const ComplexMatrix& a);

enum class TransformDirection { forward, inverse };

/// Unitary DFT, F^H F = I. Direct O(L^2) evaluation for L <= 64, FFT above.
CVector unitary_transform(std::span<const cplx> v, TransformDirection dir);
/// The O(L^2) path on its own, for any L.
CVector unitary_transform_direct(std::span<const cplx> v, TransformDirection dir);

inline constexpr std::size_t kDirectTransformMaxLength = 64;

}  // namespace mmse
