#include "mmse/detector.hpp"

#include <omp.h>

#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "mmse/detail/kernels.hpp"
#include "mmse/error.hpp"
#include "mmse/opcount.hpp"

namespace mmse {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::invalid_input, what); }

// Theoretically real sums; a relative imaginary residue above 1e-9 means
// something upstream is broken.
double checked_real(cplx v, const char* what, std::size_t user) {
  if (std::abs(v.imag()) > 1e-9 * std::abs(v.real()) && std::abs(v.imag()) > 1e-15)
    throw Error(Errc::numerical_consistency,
                std::string(what) + " of user " + std::to_string(user) + " has imaginary part " +
                    std::to_string(v.imag()));
  return v.real();
}

void check_user_columns(const ComplexMatrix& g) {
  for (std::size_t i = 0; i < g.rows(); ++i)
    if (g(i, i).real() == 0.0)
      throw Error(Errc::degenerate_user, "user " + std::to_string(i) + " has an all-zero channel column");
}

// Piecewise-linear per-axis max-log terms in units of the level spacing; x is
// the coordinate divided by the level scale.
double qam16_sign(double x) {
  if (x > 2.0) return -8.0 * (x - 1.0);
  if (x < -2.0) return -8.0 * (x + 1.0);
  return -4.0 * x;
}

double qam64_sign(double x) {
  const double y = std::abs(x);
  double g;
  if (y <= 2.0) g = 4.0 * y;
  else if (y <= 4.0) g = 8.0 * y - 8.0;
  else if (y <= 6.0) g = 12.0 * y - 24.0;
  else g = 16.0 * y - 48.0;
  return x < 0.0 ? g : -g;
}

double qam64_mid(double y) {
  if (y <= 2.0) return 8.0 * y - 24.0;
  if (y <= 6.0) return 4.0 * y - 16.0;
  return 8.0 * y - 40.0;
}

double qam64_low(double y) { return 4.0 * std::abs(y - 4.0) - 8.0; }

}  // namespace

void DetectorConfig::validate() const {
  bits_per_symbol(modulation);
  if (method == Method::neumann && terms < 1)
    invalid("Neumann detector needs K >= 1, got " + std::to_string(terms));
  if (npi == NpiMode::exact_mmse && method != Method::cholesky)
    invalid("npi mode 'exact' requires the cholesky detector");
}

std::string DetectorConfig::label() const {
  if (method == Method::cholesky) return "cholesky";
  if (terms == 1) return "mf";
  return "neumann:" + std::to_string(terms);
}

std::string_view to_string(NpiMode mode) noexcept {
  switch (mode) {
    case NpiMode::exact_mmse: return "exact";
    case NpiMode::neumann_exact: return "neumann-exact";
    case NpiMode::k1: return "k1";
    case NpiMode::low_complexity: return "low";
  }
  return "?";
}

DetectorConfig DetectorConfig::parse(std::string_view method, std::string_view npi, int modulation) {
  DetectorConfig c;
  c.modulation = modulation;
  if (method == "mf") {
    c.method = Method::neumann;
    c.terms = 1;
  } else if (method == "cholesky") {
    c.method = Method::cholesky;
    c.terms = 0;
  } else if (method.starts_with("neumann:")) {
    const std::string_view k = method.substr(8);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(k.data(), k.data() + k.size(), v);
    if (ec != std::errc{} || ptr != k.data() + k.size() || k.empty())
      invalid("bad Neumann term count '" + std::string(k) + "'");
    c.method = Method::neumann;
    c.terms = v;
  } else {
    invalid("unknown detector '" + std::string(method) + "'");
  }

  if (npi.empty()) c.npi = c.method == Method::cholesky ? NpiMode::exact_mmse : NpiMode::low_complexity;
  else if (npi == "exact") c.npi = NpiMode::exact_mmse;
  else if (npi == "neumann-exact") c.npi = NpiMode::neumann_exact;
  else if (npi == "k1") c.npi = NpiMode::k1;
  else if (npi == "low") c.npi = NpiMode::low_complexity;
  else invalid("unknown npi mode '" + std::string(npi) + "'");

  c.validate();
  return c;
}

CVector matched_filter(const ComplexMatrix& h, std::span<const cplx> y) {
  if (h.empty() || y.size() != h.rows()) invalid("matched_filter: y has length " + std::to_string(y.size()) +
                                                 ", channel has " + std::to_string(h.rows()) + " rows");
  PlainOps ops;
  return detail::matched_filter(ops, h, y);
}

CVector equalize(const ComplexMatrix& a_inv, std::span<const cplx> y_mf) {
  if (a_inv.empty() || !a_inv.square() || a_inv.cols() != y_mf.size()) invalid("equalize: dimension mismatch");
  return a_inv * y_mf;
}

SubcarrierTerms subcarrier_terms(NpiMode mode, const ComplexMatrix& g, const ComplexMatrix& a,
                                 const ComplexMatrix& a_inv) {
  const std::size_t u = g.rows();
  if (!g.square() || a.rows() != u || a.cols() != u || a_inv.rows() != u || a_inv.cols() != u)
    invalid("subcarrier_terms: dimension mismatch");
  check_user_columns(g);

  SubcarrierTerms t;
  t.gain.resize(u);
  for (std::size_t i = 0; i < u; ++i) {
    cplx acc{};
    for (std::size_t k = 0; k < u; ++k) acc += PlainOps::mul(a_inv(i, k), g(k, i));
    t.gain[i] = acc;
  }

  switch (mode) {
    case NpiMode::exact_mmse: break;
    case NpiMode::neumann_exact: {
      const ComplexMatrix r = a_inv * a * g;
      t.npi.resize(u);
      for (std::size_t i = 0; i < u; ++i) {
        cplx acc{};
        for (std::size_t k = 0; k < u; ++k) acc += PlainOps::mul(r(i, k), a_inv(k, i));
        t.npi[i] = acc;
      }
      break;
    }
    case NpiMode::k1:
    case NpiMode::low_complexity: {
      t.npi.resize(u);
      t.mu1.resize(u);
      for (std::size_t i = 0; i < u; ++i) {
        const double d = a(i, i).real();
        const double gii = g(i, i).real();
        t.mu1[i] = gii / d;
        if (mode == NpiMode::low_complexity) {
          t.npi[i] = t.mu1[i];
        } else {
          cplx acc{};
          for (std::size_t k = 0; k < u; ++k) acc += PlainOps::mul(a(i, k), g(k, i));
          t.npi[i] = acc / (d * d);
        }
      }
      break;
    }
  }
  return t;
}

PostEqStats reduce_stats(NpiMode mode, double es, std::span<const SubcarrierTerms> terms) {
  if (terms.empty()) invalid("reduce_stats: no subcarriers");
  const std::size_t u = terms.front().gain.size();
  const double inv_l = 1.0 / static_cast<double>(terms.size());

  PostEqStats st;
  st.mu.resize(u);
  st.npi.resize(u);
  for (std::size_t i = 0; i < u; ++i) {
    cplx gain{}, npi{};
    double mu1 = 0.0;
    for (const SubcarrierTerms& t : terms) {
      gain += t.gain[i];
      if (!t.npi.empty()) npi += t.npi[i];
      if (!t.mu1.empty()) mu1 += t.mu1[i];
    }
    const double mu = checked_real(gain * inv_l, "effective gain", i);
    mu1 *= inv_l;
    double nu = 0.0;
    switch (mode) {
      case NpiMode::exact_mmse: nu = es * mu - es * mu * mu; break;
      case NpiMode::neumann_exact: nu = es * npi.real() * inv_l - es * mu * mu; break;
      case NpiMode::k1: nu = es * npi.real() * inv_l - es * mu1 * mu1; break;
      case NpiMode::low_complexity: nu = es * mu1 - es * mu1 * mu1; break;
    }
    st.mu[i] = mu;
    st.npi[i] = std::max(nu, kNpiFloor * es);
  }
  return post_eq_sinr(std::move(st));
}

std::vector<double> effective_gain(std::span<const ComplexMatrix> a_inv, std::span<const ComplexMatrix> channels) {
  if (a_inv.empty() || a_inv.size() != channels.size()) invalid("effective_gain: need one inverse per channel");
  std::vector<SubcarrierTerms> terms;
  terms.reserve(a_inv.size());
  for (std::size_t w = 0; w < a_inv.size(); ++w) {
    const ComplexMatrix g = gram_matrix(channels[w]);
    terms.push_back(subcarrier_terms(NpiMode::exact_mmse, g, g, a_inv[w]));
  }
  return reduce_stats(NpiMode::exact_mmse, 1.0, terms).mu;
}

std::vector<double> npi_variance(NpiMode mode, double es, std::span<const ComplexMatrix> g,
                                 std::span<const ComplexMatrix> a, std::span<const ComplexMatrix> a_inv) {
  if (g.empty() || g.size() != a.size() || g.size() != a_inv.size())
    invalid("npi_variance: need matching per-subcarrier inputs");
  std::vector<SubcarrierTerms> terms;
  terms.reserve(g.size());
  for (std::size_t w = 0; w < g.size(); ++w) terms.push_back(subcarrier_terms(mode, g[w], a[w], a_inv[w]));
  return reduce_stats(mode, es, terms).npi;
}

PostEqStats post_eq_sinr(PostEqStats stats) {
  if (stats.mu.size() != stats.npi.size()) invalid("post_eq_sinr: mu and npi differ in length");
  stats.sinr.resize(stats.mu.size());
  for (std::size_t i = 0; i < stats.mu.size(); ++i) {
    if (!(stats.npi[i] > 0.0))
      throw Error(Errc::degenerate_npi, "NPI of user " + std::to_string(i) + " is " + std::to_string(stats.npi[i]));
    stats.sinr[i] = stats.mu[i] * stats.mu[i] / stats.npi[i];
  }
  return stats;
}

std::vector<double> llr_maxlog(cplx x_hat, double mu, double sinr, int m, double es) {
  const std::size_t q = bits_per_symbol(m);
  if (!(mu > 0.0)) invalid("llr_maxlog: effective gain must be positive");
  if (!(sinr >= 0.0)) invalid("llr_maxlog: SINR must be non-negative");
  const double c = level_scale(m);
  const cplx z = x_hat / (mu * std::sqrt(es));
  const double x = z.real() / c;
  const double y = z.imag() / c;
  const double k = sinr * es * c * c;

  std::vector<double> out(q);
  switch (m) {
    case 2: out[0] = k * -4.0 * (x + y); break;
    case 4:
      out[0] = k * -4.0 * x;
      out[1] = k * -4.0 * y;
      break;
    case 16:
      out[0] = k * qam16_sign(x);
      out[1] = k * qam16_sign(y);
      out[2] = k * 4.0 * (std::abs(x) - 2.0);
      out[3] = k * 4.0 * (std::abs(y) - 2.0);
      break;
    default:
      out[0] = k * qam64_sign(x);
      out[1] = k * qam64_sign(y);
      out[2] = k * qam64_mid(std::abs(x));
      out[3] = k * qam64_mid(std::abs(y));
      out[4] = k * qam64_low(std::abs(x));
      out[5] = k * qam64_low(std::abs(y));
      break;
  }
  return out;
}

std::vector<double> llr_maxlog_reference(cplx x_hat, double mu, double sinr, int m, double es) {
  const std::size_t q = bits_per_symbol(m);
  if (!(mu > 0.0)) invalid("llr_maxlog: effective gain must be positive");
  if (!(sinr >= 0.0)) invalid("llr_maxlog: SINR must be non-negative");
  const std::vector<cplx> pts = constellation(m);
  const cplx z = x_hat / mu;
  const double amp = std::sqrt(es);
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> min0(q, inf), min1(q, inf);
  for (std::size_t label = 0; label < pts.size(); ++label) {
    const double d = std::norm(z - amp * pts[label]);
    for (std::size_t b = 0; b < q; ++b) {
      double& slot = ((label >> b) & 1u) ? min1[b] : min0[b];
      slot = std::min(slot, d);
    }
  }
  std::vector<double> out(q);
  for (std::size_t b = 0; b < q; ++b) out[b] = sinr * (min0[b] - min1[b]);
  return out;
}

namespace {

void check_frame(const DetectorConfig& cfg, const UplinkFrame& f) {
  cfg.validate();
  if (cfg.modulation != f.modulation) invalid("detector and frame disagree on the constellation");
  if (f.users < 1 || f.subcarriers < 1 || f.bs_antennas < f.users) invalid("frame: bad dimensions");
  if (f.channels.size() != f.subcarriers || f.y.rows() != f.subcarriers || f.y.cols() != f.bs_antennas)
    invalid("frame: channel/receive dimensions do not match");
  for (const ComplexMatrix& h : f.channels)
    if (h.rows() != f.bs_antennas || h.cols() != f.users) invalid("frame: channel matrix has wrong shape");
}

struct SubcarrierOutput {
  SubcarrierTerms terms;
  CVector s_hat;
};

SubcarrierOutput process_subcarrier(const DetectorConfig& cfg, const UplinkFrame& f, std::size_t w) {
  PlainOps ops;
  const ComplexMatrix& h = f.channels[w];
  const ComplexMatrix g = detail::gram(ops, h);
  check_user_columns(g);
  const ComplexMatrix a = detail::regularize(ops, g, f.n0 / f.es);
  const ComplexMatrix a_inv = cfg.method == Method::cholesky ? detail::cholesky_inverse(ops, a)
                                                             : detail::neumann(ops, diag_split(a), cfg.terms);
  const CVector y_mf = detail::matched_filter(ops, h, f.y.row(w));
  return {subcarrier_terms(cfg.npi, g, a, a_inv), a_inv * y_mf};
}

Detection run(const DetectorConfig& cfg, const UplinkFrame& f, bool parallel, int threads) {
  check_frame(cfg, f);
  const std::size_t u = f.users, l = f.subcarriers, q = f.bits_per_symbol();
  const int nt = parallel ? (threads > 0 ? threads : omp_get_max_threads()) : 1;

  std::vector<SubcarrierTerms> terms(l);
  std::vector<std::exception_ptr> errs(l);
  Detection out;
  out.s_hat = ComplexMatrix(u, l);

  const auto body = [&](std::size_t w) {
    try {
      SubcarrierOutput r = process_subcarrier(cfg, f, w);
      terms[w] = std::move(r.terms);
      for (std::size_t i = 0; i < u; ++i) out.s_hat(i, w) = r.s_hat[i];
    } catch (const Error& e) {
      errs[w] = std::make_exception_ptr(Error(e.code(), "subcarrier " + std::to_string(w) + ": " + e.what()));
    } catch (...) {
      errs[w] = std::current_exception();
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::ptrdiff_t w = 0; w < static_cast<std::ptrdiff_t>(l); ++w) body(static_cast<std::size_t>(w));
  } else {
    for (std::size_t w = 0; w < l; ++w) body(w);
  }
  for (const auto& e : errs)
    if (e) std::rethrow_exception(e);

  out.stats = reduce_stats(cfg.npi, f.es, terms);

  out.x_hat = ComplexMatrix(u, l);
  out.llr.users = u;
  out.llr.subcarriers = l;
  out.llr.bits_per_symbol = q;
  out.llr.llrs.resize(u * l * q);
  out.llr.hard_bits.resize(u * l * q);
  for (std::size_t i = 0; i < u; ++i) {
    const CVector xi = unitary_transform(out.s_hat.row(i), TransformDirection::inverse);
    std::copy(xi.begin(), xi.end(), out.x_hat.row(i).begin());
    for (std::size_t t = 0; t < l; ++t) {
      const std::vector<double> lam = llr_maxlog(xi[t], out.stats.mu[i], out.stats.sinr[i], cfg.modulation, f.es);
      for (std::size_t b = 0; b < q; ++b) {
        const std::size_t k = f.bit_index(i, t, b);
        out.llr.llrs[k] = lam[b];
        out.llr.hard_bits[k] = lam[b] > 0.0 ? 1 : 0;
      }
    }
  }
  return out;
}

}  // namespace

Detection detect_frame(const DetectorConfig& cfg, const UplinkFrame& frame, int threads) {
  return run(cfg, frame, true, threads);
}

Detection detect_frame_serial(const DetectorConfig& cfg, const UplinkFrame& frame) {
  return run(cfg, frame, false, 1);
}

}  // namespace mmse
