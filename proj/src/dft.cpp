#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include "mmse/linalg.hpp"
#include "mmse/opcount.hpp"

namespace mmse {

namespace {

// FFTW plans are created once per (length, sign) and reused. Planning is not
// thread-safe, execution with the new-array interface is.
fftw_plan plan_for(int n, int sign) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, fftw_plan> cache;
  std::lock_guard lock(mu);
  auto it = cache.find({n, sign});
  if (it != cache.end()) return it->second;
  fftw_complex* in = fftw_alloc_complex(n);
  fftw_complex* out = fftw_alloc_complex(n);
  fftw_plan p = fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(in);
  fftw_free(out);
  cache.emplace(std::pair{n, sign}, p);
  return p;
}

}  // namespace

CVector unitary_transform_direct(std::span<const cplx> v, TransformDirection dir) {
  const std::size_t n = v.size();
  CVector out(n);
  if (n == 0) return out;
  const double sign = dir == TransformDirection::forward ? -1.0 : 1.0;
  // twiddles indexed by (k * t) mod n keep the phase argument small
  CVector w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double phi = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    w[k] = {std::cos(phi), std::sin(phi)};
  }
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc{};
    std::size_t idx = 0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += PlainOps::mul(v[t], w[idx]);
      idx += k;
      if (idx >= n) idx -= n;
    }
    out[k] = acc * norm;
  }
  return out;
}

CVector unitary_transform(std::span<const cplx> v, TransformDirection dir) {
  const std::size_t n = v.size();
  if (n <= kDirectTransformMaxLength) return unitary_transform_direct(v, dir);

  CVector in(v.begin(), v.end());
  CVector out(n);
  const fftw_plan p = plan_for(static_cast<int>(n), dir == TransformDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (cplx& z : out) z *= norm;
  return out;
}

}  // namespace mmse
