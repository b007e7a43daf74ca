#include "mmse/fxp.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <string>

#include "mmse/error.hpp"
#include "mmse/opcount.hpp"

namespace mmse {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::invalid_input, what); }

}  // namespace

void FixedFormat::validate() const {
  if (!is_signed) invalid("fixed format: only signed formats are modelled");
  if (!(1 <= frac_bits && frac_bits < word_bits && word_bits <= 32))
    invalid("fixed format: need 1 <= frac < word <= 32, got (" + std::to_string(word_bits) + ", " +
            std::to_string(frac_bits) + ")");
}

double FixedFormat::lsb() const { return std::ldexp(1.0, -frac_bits); }
double FixedFormat::max_value() const { return std::ldexp(1.0, word_bits - 1 - frac_bits) - lsb(); }
double FixedFormat::min_value() const { return -std::ldexp(1.0, word_bits - 1 - frac_bits); }

double quantize(double v, const FixedFormat& fmt) {
  if (!std::isfinite(v)) invalid("quantize: non-finite input");
  const double hi = std::ldexp(1.0, fmt.word_bits - 1) - 1.0;
  const double lo = -std::ldexp(1.0, fmt.word_bits - 1);
  double k = std::nearbyint(std::ldexp(v, fmt.frac_bits));
  if (k > hi) k = hi;
  if (k < lo) k = lo;
  return std::ldexp(k, -fmt.frac_bits);
}

cplx quantize(cplx v, const FixedFormat& fmt) { return {quantize(v.real(), fmt), quantize(v.imag(), fmt)}; }

FxpPipelineConfig FxpPipelineConfig::fpga() { return {}; }

FxpPipelineConfig FxpPipelineConfig::widened() {
  FxpPipelineConfig c;
  c.input_fmt = {30, 26};
  c.rx_fmt = {30, 25};
  c.mac_fmt = {30, 26};
  c.equalizer_out_fmt = {30, 26};
  c.sinr_fmt = {30, 18};
  c.llr_fmt = {30, 18};
  c.recip_lut_addr_bits = 20;
  c.recip_lut_out_bits = 30;
  return c;
}

void FxpPipelineConfig::validate() const {
  for (const FixedFormat* f : {&input_fmt, &rx_fmt, &mac_fmt, &equalizer_out_fmt, &sinr_fmt, &llr_fmt}) f->validate();
  if (recip_lut_addr_bits < 1 || recip_lut_addr_bits > 24) invalid("reciprocal LUT: address bits out of range");
  if (recip_lut_out_bits < 2 || recip_lut_out_bits > 32) invalid("reciprocal LUT: output bits out of range");
}

ReciprocalLut::ReciprocalLut(int addr_bits, int out_bits) : addr_bits_(addr_bits), out_bits_(out_bits) {
  if (addr_bits < 1 || addr_bits > 24 || out_bits < 2 || out_bits > 32) invalid("reciprocal LUT: bad geometry");
}

// Entries are a pure function of the address, so they are evaluated on
// demand instead of being stored.
double ReciprocalLut::entry(std::size_t address) const {
  if (address >= size()) throw Error(Errc::range, "reciprocal LUT: address " + std::to_string(address));
  const double m = 1.0 + std::ldexp(static_cast<double>(address), -addr_bits_);
  return std::ldexp(std::nearbyint(std::ldexp(1.0 / m, out_bits_ - 1)), -(out_bits_ - 1));
}

double ReciprocalLut::operator()(double d) const {
  if (!(d >= kLow && d < kHigh))
    throw Error(Errc::range, "reciprocal LUT: " + std::to_string(d) + " outside [0.25, 4)");
  int e = 0;
  const double f = std::frexp(d, &e);  // d = f 2^e, f in [0.5, 1)
  int exp = e - 1;
  double k = std::nearbyint(std::ldexp(2.0 * f - 1.0, addr_bits_));
  if (k >= static_cast<double>(size())) {
    k = 0.0;
    exp += 1;
  }
  return std::ldexp(entry(static_cast<std::size_t>(k)), -exp);
}

double reciprocal_lut(double d, const FxpPipelineConfig& cfg) {
  return ReciprocalLut(cfg.recip_lut_addr_bits, cfg.recip_lut_out_bits)(d);
}

namespace {

struct FxpContext {
  const FxpPipelineConfig& cfg;
  ReciprocalLut lut;

  cplx in(cplx v) const { return quantize(v, cfg.input_fmt); }
  double in(double v) const { return quantize(v, cfg.input_fmt); }
  cplx mac(cplx v) const { return quantize(v, cfg.mac_fmt); }
  double mac(double v) const { return quantize(v, cfg.mac_fmt); }
  cplx eq(cplx v) const { return quantize(v, cfg.equalizer_out_fmt); }
  double eq(double v) const { return quantize(v, cfg.equalizer_out_fmt); }

  double recip(double d, const char* stage) const {
    try {
      return lut(d);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(stage) + ": " + e.what());
    }
  }
};

struct FxpSubcarrier {
  SubcarrierTerms terms;
  CVector s_hat;
};

ComplexMatrix fxp_neumann(const FxpContext& c, const ComplexMatrix& a, int terms) {
  const std::size_t u = a.rows();
  std::vector<double> dinv(u);
  for (std::size_t i = 0; i < u; ++i) dinv[i] = c.recip(a(i, i).real(), "neumann D^-1");
  ComplexMatrix x(u, u);
  for (std::size_t i = 0; i < u; ++i) x(i, i) = dinv[i];
  if (terms == 1) return x;

  ComplexMatrix p(u, u);
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < u; ++j)
      if (i != j) p(i, j) = c.in(-dinv[i] * a(i, j));
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      x(i, j) = c.in(dinv[j] * p(i, j));
      x(j, i) = std::conj(x(i, j));
    }
  ComplexMatrix next(u, u);
  for (int k = 3; k <= terms; ++k) {
    for (std::size_t i = 0; i < u; ++i)
      for (std::size_t j = 0; j < u; ++j) {
        cplx acc{};
        for (std::size_t m = 0; m < u; ++m)
          if (m != i) acc = c.mac(acc + c.mac(PlainOps::mul(p(i, m), x(m, j))));
        if (i == j) acc = c.mac(acc + dinv[i]);
        next(i, j) = c.in(acc);
      }
    std::swap(x, next);
  }
  return x;
}

ComplexMatrix fxp_cholesky_inverse(const FxpContext& c, const ComplexMatrix& a) {
  const std::size_t n = a.rows();
  ComplexMatrix l(n, n);
  std::vector<double> r(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = a(j, j).real();
    for (std::size_t k = 0; k < j; ++k) s = c.mac(s - c.mac(std::norm(l(j, k))));
    if (!(s > 0.0)) throw Error(Errc::not_positive_definite, "fixed-point cholesky: pivot " + std::to_string(j));
    l(j, j) = c.in(std::sqrt(s));
    r[j] = c.recip(l(j, j).real(), "cholesky pivot reciprocal");
    for (std::size_t i = j + 1; i < n; ++i) {
      cplx t = a(i, j);
      for (std::size_t k = 0; k < j; ++k) t = c.mac(t - c.mac(PlainOps::mul(l(i, k), std::conj(l(j, k)))));
      l(i, j) = c.in(r[j] * t);
    }
  }
  ComplexMatrix x(n, n);
  CVector u(n), v(n);
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t row = 0; row < n; ++row) {
      cplx t = row == col ? cplx{1.0} : cplx{};
      for (std::size_t k = 0; k < row; ++k) t = c.mac(t - c.mac(PlainOps::mul(l(row, k), u[k])));
      u[row] = c.in(r[row] * t);
    }
    for (std::size_t row = n; row-- > 0;) {
      cplx t = u[row];
      for (std::size_t k = row + 1; k < n; ++k) t = c.mac(t - c.mac(PlainOps::mul_conj(l(k, row), v[k])));
      v[row] = c.in(r[row] * t);
    }
    for (std::size_t row = 0; row < n; ++row) x(row, col) = v[row];
  }
  for (std::size_t i = 0; i < n; ++i) {
    x(i, i) = x(i, i).real();
    for (std::size_t j = 0; j < i; ++j) {
      x(i, j) = c.in(0.5 * (x(i, j) + std::conj(x(j, i))));
      x(j, i) = std::conj(x(i, j));
    }
  }
  return x;
}

FxpSubcarrier fxp_subcarrier(const FxpContext& c, const DetectorConfig& det, const UplinkFrame& f, std::size_t w) {
  const std::size_t b = f.bs_antennas, u = f.users;
  const double inv_b = 1.0 / static_cast<double>(b);

  ComplexMatrix h(b, u);
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t i = 0; i < u; ++i) h(r, i) = c.in(f.channels[w](r, i));
  CVector y(b);
  for (std::size_t r = 0; r < b; ++r) y[r] = quantize(f.y(w, r), c.cfg.rx_fmt);

  // G/B and y_mf/B: every product is scaled by 1/B before it enters the
  // accumulator.
  ComplexMatrix g(u, u);
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      cplx acc{};
      for (std::size_t r = 0; r < b; ++r) acc = c.mac(acc + c.mac(inv_b * PlainOps::mul_conj(h(r, i), h(r, j))));
      g(i, j) = c.in(acc);
      if (i == j) g(i, i) = g(i, i).real();
      else g(j, i) = std::conj(g(i, j));
    }
  for (std::size_t i = 0; i < u; ++i)
    if (g(i, i).real() == 0.0)
      throw Error(Errc::degenerate_user, "user " + std::to_string(i) + " has an all-zero channel column");

  const double reg = c.in(f.n0 / f.es * inv_b);
  ComplexMatrix a = g;
  for (std::size_t i = 0; i < u; ++i) a(i, i) = c.in(g(i, i).real() + reg);

  CVector y_mf(u);
  for (std::size_t i = 0; i < u; ++i) {
    cplx acc{};
    for (std::size_t r = 0; r < b; ++r) acc = c.mac(acc + c.mac(inv_b * PlainOps::mul_conj(h(r, i), y[r])));
    y_mf[i] = c.in(acc);
  }

  const ComplexMatrix x = det.method == Method::cholesky ? fxp_cholesky_inverse(c, a) : fxp_neumann(c, a, det.terms);

  FxpSubcarrier out;
  out.s_hat.resize(u);
  for (std::size_t i = 0; i < u; ++i) {
    cplx acc{};
    for (std::size_t k = 0; k < u; ++k) acc = c.mac(acc + c.mac(PlainOps::mul(x(i, k), y_mf[k])));
    out.s_hat[i] = c.eq(acc);
  }
  // A/B, G/B and (A/B)^-1 give the same gain and NPI terms as A, G, A^-1.
  out.terms = subcarrier_terms(det.npi, g, a, x);
  // The quantized inverse is not exactly Hermitian, so these carry a small
  // imaginary residue. The datapath only ever forms the real part.
  for (cplx& v : out.terms.gain) v = v.real();
  for (cplx& v : out.terms.npi) v = v.real();
  return out;
}

}  // namespace

LlrFrame fxp_detect_frame(const FxpPipelineConfig& cfg, const DetectorConfig& det, const UplinkFrame& f, int threads) {
  cfg.validate();
  det.validate();
  if (det.modulation != f.modulation) invalid("detector and frame disagree on the constellation");
  if (f.channels.size() != f.subcarriers || f.y.rows() != f.subcarriers || f.y.cols() != f.bs_antennas)
    invalid("frame: channel/receive dimensions do not match");
  const FxpContext c{cfg, ReciprocalLut(cfg.recip_lut_addr_bits, cfg.recip_lut_out_bits)};
  const std::size_t u = f.users, l = f.subcarriers, q = f.bits_per_symbol();
  const int nt = threads > 0 ? threads : omp_get_max_threads();

  std::vector<SubcarrierTerms> terms(l);
  ComplexMatrix s_hat(u, l);
  std::vector<std::exception_ptr> errs(l);
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::ptrdiff_t sw = 0; sw < static_cast<std::ptrdiff_t>(l); ++sw) {
    const auto w = static_cast<std::size_t>(sw);
    try {
      FxpSubcarrier r = fxp_subcarrier(c, det, f, w);
      terms[w] = std::move(r.terms);
      for (std::size_t i = 0; i < u; ++i) s_hat(i, w) = r.s_hat[i];
    } catch (const Error& e) {
      errs[w] = std::make_exception_ptr(Error(e.code(), "subcarrier " + std::to_string(w) + ": " + e.what()));
    } catch (...) {
      errs[w] = std::current_exception();
    }
  }
  for (const auto& e : errs)
    if (e) std::rethrow_exception(e);

  const PostEqStats st = reduce_stats(det.npi, f.es, terms);
  const FixedFormat& efmt = cfg.equalizer_out_fmt;

  LlrFrame out;
  out.users = u;
  out.subcarriers = l;
  out.bits_per_symbol = q;
  out.llrs.resize(u * l * q);
  out.hard_bits.resize(u * l * q);
  for (std::size_t i = 0; i < u; ++i) {
    const double mu = c.eq(st.mu[i]);
    if (!(mu > 0.0)) throw Error(Errc::range, "user " + std::to_string(i) + ": effective gain quantizes to zero");
    const double nu = std::max(c.eq(st.npi[i]), efmt.lsb());
    const double rho = quantize(mu * mu / nu, cfg.sinr_fmt);
    CVector x = unitary_transform(s_hat.row(i), TransformDirection::inverse);
    for (std::size_t t = 0; t < l; ++t) {
      const cplx z = c.eq(c.eq(x[t]) / mu);
      const std::vector<double> lam = llr_maxlog(z, 1.0, rho, det.modulation, f.es);
      for (std::size_t bit = 0; bit < q; ++bit) {
        const std::size_t k = f.bit_index(i, t, bit);
        out.llrs[k] = quantize(lam[bit], cfg.llr_fmt);
        out.hard_bits[k] = out.llrs[k] > 0.0 ? 1 : 0;
      }
    }
  }
  return out;
}

}  // namespace mmse
