#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace mmse {

struct OpCountLedger {
  std::uint64_t real_mults = 0;
  std::uint64_t real_adds = 0;
  std::uint64_t real_divs = 0;
  std::uint64_t real_sqrts = 0;

  OpCountLedger& operator+=(const OpCountLedger& o) noexcept {
    real_mults += o.real_mults;
    real_adds += o.real_adds;
    real_divs += o.real_divs;
    real_sqrts += o.real_sqrts;
    return *this;
  }
  friend OpCountLedger operator+(OpCountLedger a, const OpCountLedger& b) noexcept {
    return a += b;
  }
  friend bool operator==(const OpCountLedger&, const OpCountLedger&) = default;
};

// Arithmetic policies for the kernels in detail/kernels.hpp. PlainOps is what
// production code runs; CountingOps does the same arithmetic and tallies it.
// Complex products are spelled out so that GCC does not route them through
// the Annex G helper (__muldc3).

struct PlainOps {
  static std::complex<double> mul(std::complex<double> a, std::complex<double> b) noexcept {
    return {a.real() * b.real() - a.imag() * b.imag(),
            a.real() * b.imag() + a.imag() * b.real()};
  }
  // conj(a) * b
  static std::complex<double> mul_conj(std::complex<double> a, std::complex<double> b) noexcept {
    return {a.real() * b.real() + a.imag() * b.imag(),
            a.real() * b.imag() - a.imag() * b.real()};
  }
  static std::complex<double> add(std::complex<double> a, std::complex<double> b) noexcept {
    return a + b;
  }
  static std::complex<double> sub(std::complex<double> a, std::complex<double> b) noexcept {
    return a - b;
  }
  static std::complex<double> scale(double s, std::complex<double> a) noexcept {
    return {s * a.real(), s * a.imag()};
  }
  static double abs2(std::complex<double> a) noexcept {
    return a.real() * a.real() + a.imag() * a.imag();
  }
  static double radd(double a, double b) noexcept { return a + b; }
  static double rsub(double a, double b) noexcept { return a - b; }
  static double rmul(double a, double b) noexcept { return a * b; }
  static double recip(double a) noexcept { return 1.0 / a; }
  static double sqrt(double a) noexcept { return std::sqrt(a); }
};

struct CountingOps {
  OpCountLedger tally;
  // 3 mults + 5 adds per complex product instead of 4 + 2. Only changes the
  // tally; the arithmetic itself is unchanged.
  bool three_mult = false;

  std::complex<double> mul(std::complex<double> a, std::complex<double> b) noexcept {
    cmul();
    return PlainOps::mul(a, b);
  }
  std::complex<double> mul_conj(std::complex<double> a, std::complex<double> b) noexcept {
    cmul();
    return PlainOps::mul_conj(a, b);
  }
  std::complex<double> add(std::complex<double> a, std::complex<double> b) noexcept {
    tally.real_adds += 2;
    return a + b;
  }
  std::complex<double> sub(std::complex<double> a, std::complex<double> b) noexcept {
    tally.real_adds += 2;
    return a - b;
  }
  std::complex<double> scale(double s, std::complex<double> a) noexcept {
    tally.real_mults += 2;
    return PlainOps::scale(s, a);
  }
  double abs2(std::complex<double> a) noexcept {
    tally.real_mults += 2;
    tally.real_adds += 1;
    return PlainOps::abs2(a);
  }
  double radd(double a, double b) noexcept {
    tally.real_adds += 1;
    return a + b;
  }
  double rsub(double a, double b) noexcept {
    tally.real_adds += 1;
    return a - b;
  }
  double rmul(double a, double b) noexcept {
    tally.real_mults += 1;
    return a * b;
  }
  double recip(double a) noexcept {
    tally.real_divs += 1;
    return 1.0 / a;
  }
  double sqrt(double a) noexcept {
    tally.real_sqrts += 1;
    return std::sqrt(a);
  }

 private:
  void cmul() noexcept {
    if (three_mult) {
      tally.real_mults += 3;
      tally.real_adds += 5;
    } else {
      tally.real_mults += 4;
      tally.real_adds += 2;
    }
  }
};

}  // namespace mmse
