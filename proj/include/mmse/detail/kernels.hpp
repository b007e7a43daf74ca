#pragma once

// Arithmetic kernels shared by the public linalg/detector entry points and the
// instrumented operation counter. Inputs are assumed validated by the caller.

#include <algorithm>
#include <cmath>
#include <string>

#include "mmse/error.hpp"
#include "mmse/linalg.hpp"

namespace mmse::detail {

inline constexpr double kPivotTolerance = 1e-12;

template <class Ops>
ComplexMatrix gram(Ops& ops, const ComplexMatrix& h) {
  const std::size_t b = h.rows();
  const std::size_t u = h.cols();
  ComplexMatrix g(u, u);
  std::vector<double> diag(u, 0.0);
  for (std::size_t r = 0; r < b; ++r) {
    const auto row = h.row(r);
    for (std::size_t i = 0; i < u; ++i) {
      diag[i] = ops.radd(diag[i], ops.abs2(row[i]));
      for (std::size_t j = 0; j < i; ++j) g(i, j) = ops.add(g(i, j), ops.mul_conj(row[i], row[j]));
    }
  }
  for (std::size_t i = 0; i < u; ++i) {
    g(i, i) = diag[i];
    for (std::size_t j = 0; j < i; ++j) g(j, i) = std::conj(g(i, j));
  }
  return g;
}

template <class Ops>
ComplexMatrix regularize(Ops& ops, const ComplexMatrix& g, double r) {
  ComplexMatrix a = g;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) = ops.radd(a(i, i).real(), r);
  return a;
}

template <class Ops>
CVector matched_filter(Ops& ops, const ComplexMatrix& h, std::span<const cplx> y) {
  CVector out(h.cols());
  for (std::size_t r = 0; r < h.rows(); ++r) {
    const auto row = h.row(r);
    for (std::size_t i = 0; i < h.cols(); ++i) out[i] = ops.add(out[i], ops.mul_conj(row[i], y[r]));
  }
  return out;
}

template <class Ops>
ComplexMatrix neumann(Ops& ops, const DiagSplit& s, int terms) {
  const std::size_t u = s.size();
  std::vector<double> dinv(u);
  for (std::size_t i = 0; i < u; ++i) dinv[i] = ops.recip(s.d[i]);

  ComplexMatrix x(u, u);
  for (std::size_t i = 0; i < u; ++i) x(i, i) = dinv[i];
  if (terms == 1) return x;

  // P = -D^{-1} E
  ComplexMatrix p(u, u);
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < u; ++j)
      if (i != j) p(i, j) = ops.scale(-dinv[i], s.e(i, j));

  // X_2 = D^{-1} + P D^{-1}; Hermitian, so only the lower triangle is formed.
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      x(i, j) = ops.scale(dinv[j], p(i, j));
      x(j, i) = std::conj(x(i, j));
    }

  ComplexMatrix next(u, u);
  for (int k = 3; k <= terms; ++k) {
    for (std::size_t i = 0; i < u; ++i) {
      for (std::size_t j = 0; j < u; ++j) {
        cplx acc{};
        for (std::size_t m = 0; m < u; ++m)
          if (m != i) acc = ops.add(acc, ops.mul(p(i, m), x(m, j)));
        next(i, j) = acc;
      }
      next(i, i).real(ops.radd(next(i, i).real(), dinv[i]));
    }
    std::swap(x, next);
  }
  return x;
}

template <class Ops>
LowerTriangular cholesky(Ops& ops, const ComplexMatrix& a) {
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i).real());
  const double tol = kPivotTolerance * max_diag;

  ComplexMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = a(j, j).real();
    for (std::size_t k = 0; k < j; ++k) s = ops.rsub(s, ops.abs2(l(j, k)));
    if (!(s > tol) || max_diag <= 0.0)
      throw Error(Errc::not_positive_definite,
                  "cholesky: pivot " + std::to_string(j) + " is " + std::to_string(s));
    const double ljj = ops.sqrt(s);
    l(j, j) = ljj;
    const double r = ops.recip(ljj);
    for (std::size_t i = j + 1; i < n; ++i) {
      cplx t = a(i, j);
      for (std::size_t k = 0; k < j; ++k) t = ops.sub(t, ops.mul(l(i, k), std::conj(l(j, k))));
      l(i, j) = ops.scale(r, t);
    }
  }
  return LowerTriangular::from_matrix(std::move(l));
}

template <class Ops>
CVector forward(Ops& ops, const LowerTriangular& l, std::span<const cplx> b) {
  const std::size_t n = l.size();
  CVector u(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double lrr = l(r, r).real();
    if (lrr == 0.0) throw Error(Errc::singular, "forward substitution: zero diagonal at " + std::to_string(r));
    cplx t = b[r];
    for (std::size_t k = 0; k < r; ++k) t = ops.sub(t, ops.mul(l(r, k), u[k]));
    u[r] = ops.scale(ops.recip(lrr), t);
  }
  return u;
}

// Solves L^H v = u; (L^H)(r, k) = conj(L(k, r)).
template <class Ops>
CVector backward(Ops& ops, const LowerTriangular& l, std::span<const cplx> u) {
  const std::size_t n = l.size();
  CVector v(n);
  for (std::size_t r = n; r-- > 0;) {
    const double lrr = l(r, r).real();
    if (lrr == 0.0) throw Error(Errc::singular, "backward substitution: zero diagonal at " + std::to_string(r));
    cplx t = u[r];
    for (std::size_t k = r + 1; k < n; ++k) t = ops.sub(t, ops.mul_conj(l(k, r), v[k]));
    v[r] = ops.scale(ops.recip(lrr), t);
  }
  return v;
}

template <class Ops>
ComplexMatrix cholesky_inverse(Ops& ops, const ComplexMatrix& a) {
  const std::size_t n = a.rows();
  if (n == 1) {
    const double a00 = a(0, 0).real();
    if (!(a00 > 0.0)) throw Error(Errc::not_positive_definite, "cholesky: pivot 0 is " + std::to_string(a00));
    ComplexMatrix x(1, 1);
    x(0, 0) = ops.recip(a00);
    return x;
  }
  const LowerTriangular l = cholesky(ops, a);
  ComplexMatrix x(n, n);
  CVector e(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::fill(e.begin(), e.end(), cplx{});
    e[c] = 1.0;
    const CVector v = backward(ops, l, forward(ops, l, e));
    for (std::size_t r = 0; r < n; ++r) x(r, c) = v[r];
  }
  for (std::size_t i = 0; i < n; ++i) {
    x(i, i) = x(i, i).real();
    for (std::size_t j = 0; j < i; ++j) {
      x(i, j) = ops.scale(0.5, ops.add(x(i, j), std::conj(x(j, i))));
      x(j, i) = std::conj(x(i, j));
    }
  }
  return x;
}

}  // namespace mmse::detail
