#include "mmse/txchain.hpp"

#include <cmath>
#include <string>

#include "mmse/error.hpp"
#include "mmse/rng.hpp"

namespace mmse {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::invalid_input, what); }

double axis(int sign_bit, int level) { return (1 - 2 * sign_bit) * static_cast<double>(level); }

}  // namespace

std::size_t bits_per_symbol(int m) {
  switch (m) {
    case 2: return 1;
    case 4: return 2;
    case 16: return 4;
    case 64: return 6;
    default: invalid("unsupported constellation size " + std::to_string(m));
  }
}

double level_scale(int m) {
  switch (m) {
    case 2:
    case 4: return 1.0 / std::sqrt(2.0);
    case 16: return 1.0 / std::sqrt(10.0);
    case 64: return 1.0 / std::sqrt(42.0);
    default: invalid("unsupported constellation size " + std::to_string(m));
  }
}

cplx map_gray_qam(std::span<const std::uint8_t> bits, int m) {
  const std::size_t q = bits_per_symbol(m);
  if (bits.size() != q) invalid("map_gray_qam: expected " + std::to_string(q) + " bits");
  auto b = [&](std::size_t k) { return static_cast<int>(bits[k] & 1u); };
  const double c = level_scale(m);
  switch (m) {
    case 2: return c * cplx{axis(b(0), 1), axis(b(0), 1)};
    case 4: return c * cplx{axis(b(0), 1), axis(b(1), 1)};
    case 16: return c * cplx{axis(b(0), 2 - (1 - 2 * b(2))), axis(b(1), 2 - (1 - 2 * b(3)))};
    default: {
      const int li = 4 - (1 - 2 * b(2)) * (2 - (1 - 2 * b(4)));
      const int lq = 4 - (1 - 2 * b(3)) * (2 - (1 - 2 * b(5)));
      return c * cplx{axis(b(0), li), axis(b(1), lq)};
    }
  }
}

std::vector<cplx> constellation(int m) {
  const std::size_t q = bits_per_symbol(m);
  std::vector<cplx> pts(static_cast<std::size_t>(m));
  std::vector<std::uint8_t> bits(q);
  for (std::size_t label = 0; label < pts.size(); ++label) {
    for (std::size_t k = 0; k < q; ++k) bits[k] = (label >> k) & 1u;
    pts[label] = map_gray_qam(bits, m);
  }
  return pts;
}

double snr_to_n0(double snr_db, std::size_t bs_antennas, double es) {
  if (!(es > 0.0)) invalid("snr_to_n0: Es must be positive");
  return static_cast<double>(bs_antennas) * es / std::pow(10.0, snr_db / 10.0);
}

void SimConfig::validate() const {
  if (users < 1 || users > bs_antennas)
    invalid("need 1 <= users <= bs_antennas, got U=" + std::to_string(users) + " B=" + std::to_string(bs_antennas));
  if (subcarriers < 1) invalid("need at least one subcarrier");
  bits_per_symbol(modulation);
  if (trials < 1) invalid("need at least one trial");
  if (!(es > 0.0) || !std::isfinite(es)) invalid("Es must be positive");
  if (!std::isfinite(snr_db)) invalid("SNR must be finite");
}

std::size_t UplinkFrame::bits_per_symbol() const noexcept {
  switch (modulation) {
    case 2: return 1;
    case 4: return 2;
    case 16: return 4;
    default: return 6;
  }
}

CVector UplinkFrame::subcarrier_symbols(std::size_t w) const {
  CVector sw(users);
  for (std::size_t i = 0; i < users; ++i) sw[i] = s(i, w);
  return sw;
}

UplinkFrame generate_frame(const SimConfig& cfg, std::uint64_t trial) {
  cfg.validate();
  const std::size_t b = cfg.bs_antennas, u = cfg.users, l = cfg.subcarriers;
  const std::size_t q = bits_per_symbol(cfg.modulation);

  UplinkFrame f;
  f.bs_antennas = b;
  f.users = u;
  f.subcarriers = l;
  f.modulation = cfg.modulation;
  f.es = cfg.es;
  f.n0 = cfg.noiseless ? 0.0 : snr_to_n0(cfg.snr_db, b, cfg.es);

  Philox4x32 bit_rng(cfg.seed, substream(StreamTag::bits, trial));
  f.bits.resize(u * l * q);
  for (std::size_t k = 0; k < f.bits.size(); k += 64) {
    const std::uint64_t word = bit_rng();
    for (std::size_t j = 0; j < 64 && k + j < f.bits.size(); ++j) f.bits[k + j] = (word >> j) & 1u;
  }

  const double amp = std::sqrt(cfg.es);
  f.x = ComplexMatrix(u, l);
  f.s = ComplexMatrix(u, l);
  for (std::size_t i = 0; i < u; ++i) {
    for (std::size_t t = 0; t < l; ++t)
      f.x(i, t) = amp * map_gray_qam(std::span(f.bits).subspan(f.bit_index(i, t, 0), q), cfg.modulation);
    const CVector si = unitary_transform(f.x.row(i), TransformDirection::forward);
    std::copy(si.begin(), si.end(), f.s.row(i).begin());
  }

  Philox4x32 ch_rng(cfg.seed, substream(StreamTag::channel, trial));
  f.channels.assign(l, ComplexMatrix(b, u));
  for (std::size_t w = 0; w < l; ++w) {
    ComplexMatrix& h = f.channels[w];
    if (cfg.identity_channel) {
      for (std::size_t i = 0; i < u; ++i) h(i, i) = 1.0;
    } else {
      for (cplx& z : h.entries()) z = complex_normal(ch_rng);
    }
  }

  Philox4x32 noise_rng(cfg.seed, substream(StreamTag::noise, trial));
  const double sigma = std::sqrt(f.n0);
  f.y = ComplexMatrix(l, b);
  for (std::size_t w = 0; w < l; ++w) {
    const CVector yw = f.channels[w] * std::span<const cplx>(f.subcarrier_symbols(w));
    auto row = f.y.row(w);
    for (std::size_t r = 0; r < b; ++r) {
      const cplx n = complex_normal(noise_rng);
      row[r] = yw[r] + sigma * n;
    }
  }
  return f;
}

}  // namespace mmse
