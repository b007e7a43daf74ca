#include "mmse/linalg.hpp"

#include <cmath>
#include <string>

#include "mmse/detail/kernels.hpp"
#include "mmse/error.hpp"
#include "mmse/opcount.hpp"

namespace mmse {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_input: return "invalid input";
    case Errc::singular_diagonal: return "singular diagonal";
    case Errc::not_positive_definite: return "not positive definite";
    case Errc::singular: return "singular";
    case Errc::numerical_consistency: return "numerical consistency";
    case Errc::degenerate_user: return "degenerate user";
    case Errc::degenerate_npi: return "degenerate npi";
    case Errc::out_of_domain: return "out of domain";
    case Errc::range: return "range";
  }
  return "unknown";
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::invalid_input, what); }

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void require_square(const ComplexMatrix& m, const char* who) {
  if (m.empty() || !m.square()) invalid(std::string(who) + ": expected a non-empty square matrix");
}

}  // namespace

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols)
    invalid("matrix: " + std::to_string(data_.size()) + " entries for " + std::to_string(rows) +
            "x" + std::to_string(cols));
  for (const cplx& z : data_)
    if (!finite(z)) invalid("matrix: non-finite entry");
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) invalid("matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  for (const cplx& z : data_)
    if (!finite(z)) invalid("matrix: non-finite entry");
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> d) {
  ComplexMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

CVector ComplexMatrix::column(std::size_t j) const {
  CVector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

ComplexMatrix adjoint(const ComplexMatrix& m) {
  ComplexMatrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = std::conj(m(i, j));
  return t;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) invalid("matmul: inner dimensions differ");
  ComplexMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += PlainOps::mul(aik, b(k, j));
    }
  return c;
}

CVector operator*(const ComplexMatrix& a, std::span<const cplx> x) {
  if (a.cols() != x.size()) invalid("matvec: dimension mismatch");
  CVector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    cplx acc{};
    const auto row = a.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) acc += PlainOps::mul(row[j], x[j]);
    y[i] = acc;
  }
  return y;
}

ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) invalid("add: shape mismatch");
  ComplexMatrix c = a;
  for (std::size_t k = 0; k < c.entries().size(); ++k) c.entries()[k] += b.entries()[k];
  return c;
}

ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) invalid("sub: shape mismatch");
  ComplexMatrix c = a;
  for (std::size_t k = 0; k < c.entries().size(); ++k) c.entries()[k] -= b.entries()[k];
  return c;
}

ComplexMatrix operator*(double s, const ComplexMatrix& m) {
  ComplexMatrix c = m;
  for (cplx& z : c.entries()) z *= s;
  return c;
}

double frobenius_norm(const ComplexMatrix& m) { return norm2(m.entries()); }

double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const cplx& z : v) s += std::norm(z);
  return std::sqrt(s);
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) invalid("max_abs_diff: shape mismatch");
  return max_abs_diff(a.entries(), b.entries());
}

double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) invalid("max_abs_diff: length mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

double hermitian_defect(const ComplexMatrix& m) {
  require_square(m, "hermitian_defect");
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j <= i; ++j) worst = std::max(worst, std::abs(m(i, j) - std::conj(m(j, i))));
  return worst;
}

ComplexMatrix DiagSplit::reconstruct() const {
  ComplexMatrix a = e;
  for (std::size_t i = 0; i < d.size(); ++i) a(i, i) = d[i];
  return a;
}

LowerTriangular LowerTriangular::from_matrix(ComplexMatrix m) {
  require_square(m, "lower triangular");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (m(i, i).imag() != 0.0) invalid("lower triangular: complex diagonal at " + std::to_string(i));
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (m(i, j) != cplx{}) invalid("lower triangular: non-zero entry above the diagonal");
  }
  return LowerTriangular(std::move(m));
}

ComplexMatrix gram_matrix(const ComplexMatrix& h) {
  if (h.empty()) invalid("gram_matrix: empty channel");
  PlainOps ops;
  return detail::gram(ops, h);
}

ComplexMatrix regularized_gram(const ComplexMatrix& g, double n0_over_es) {
  require_square(g, "regularized_gram");
  if (!(n0_over_es >= 0.0) || !std::isfinite(n0_over_es))
    invalid("regularized_gram: regularizer must be finite and non-negative");
  PlainOps ops;
  return detail::regularize(ops, g, n0_over_es);
}

DiagSplit diag_split(const ComplexMatrix& a) {
  require_square(a, "diag_split");
  DiagSplit s{std::vector<double>(a.rows()), a};
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double d = a(i, i).real();
    if (!(d > 0.0))
      throw Error(Errc::singular_diagonal, "diag_split: diagonal entry " + std::to_string(i) +
                                               " is " + std::to_string(d));
    s.d[i] = d;
    s.e(i, i) = 0.0;
  }
  return s;
}

namespace {

void check_split(const DiagSplit& s, const char* who) {
  if (s.d.empty() || s.e.rows() != s.d.size() || s.e.cols() != s.d.size())
    invalid(std::string(who) + ": inconsistent split");
  for (std::size_t i = 0; i < s.d.size(); ++i)
    if (!(s.d[i] > 0.0))
      throw Error(Errc::singular_diagonal, std::string(who) + ": diagonal entry " + std::to_string(i) +
                                               " is not positive");
}

}  // namespace

ComplexMatrix neumann_inverse(const DiagSplit& split, int terms) {
  if (terms < 1) invalid("neumann_inverse: need at least one term");
  check_split(split, "neumann_inverse");
  PlainOps ops;
  return detail::neumann(ops, split, terms);
}

ComplexMatrix neumann_inverse_scaled(const DiagSplit& split, int terms, double scale) {
  if (terms < 1) invalid("neumann_inverse: need at least one term");
  if (!(scale > 0.0) || !std::isfinite(scale)) invalid("neumann_inverse: scale must be positive");
  check_split(split, "neumann_inverse");
  DiagSplit normalized{split.d, (1.0 / scale) * split.e};
  for (double& d : normalized.d) d /= scale;
  PlainOps ops;
  return (1.0 / scale) * detail::neumann(ops, normalized, terms);
}

double convergence_norm(const DiagSplit& split) {
  check_split(split, "convergence_norm");
  double s = 0.0;
  for (std::size_t i = 0; i < split.size(); ++i)
    for (std::size_t j = 0; j < split.size(); ++j) s += std::norm(split.e(i, j)) / (split.d[i] * split.d[i]);
  return std::sqrt(s);
}

LowerTriangular cholesky_decompose(const ComplexMatrix& a) {
  require_square(a, "cholesky_decompose");
  PlainOps ops;
  return detail::cholesky(ops, a);
}

CVector solve_forward(const LowerTriangular& l, std::span<const cplx> b) {
  if (b.size() != l.size()) invalid("solve_forward: dimension mismatch");
  PlainOps ops;
  return detail::forward(ops, l, b);
}

CVector solve_backward(const LowerTriangular& l, std::span<const cplx> u) {
  if (u.size() != l.size()) invalid("solve_backward: dimension mismatch");
  PlainOps ops;
  return detail::backward(ops, l, u);
}

ComplexMatrix invert_via_cholesky(const ComplexMatrix& a) {
  require_square(a, "invert_via_cholesky");
  PlainOps ops;
  return detail::cholesky_inverse(ops, a);
}

}  // namespace mmse
