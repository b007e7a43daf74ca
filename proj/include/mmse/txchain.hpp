#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mmse/linalg.hpp"

namespace mmse {

struct SimConfig {
  std::size_t bs_antennas = 64;  // B
  std::size_t users = 4;         // U
  std::size_t subcarriers = 72;  // L
  int modulation = 64;           // M
  double es = 1.0;
  double snr_db = 20.0;          // SNR = B Es / N0
  std::uint64_t seed = 1;
  std::size_t trials = 1;

  // test hooks
  bool identity_channel = false;  // H_w = [I_U; 0]
  bool noiseless = false;         // N0 = 0

  void validate() const;
};

/// One SC-FDMA symbol for all users. Bits of user i, time slot t, bit b live
/// at ((i * L) + t) * Q + b with Q = log2(M).
struct UplinkFrame {
  std::size_t bs_antennas = 0;
  std::size_t users = 0;
  std::size_t subcarriers = 0;
  int modulation = 0;
  double es = 1.0;
  double n0 = 0.0;

  std::vector<std::uint8_t> bits;
  ComplexMatrix x;                     // U x L time-domain symbols
  ComplexMatrix s;                     // U x L, row i = F_L x^(i)
  std::vector<ComplexMatrix> channels; // L matrices, B x U
  ComplexMatrix y;                     // L x B, row w = y_w

  std::size_t bits_per_symbol() const noexcept;
  std::size_t bit_index(std::size_t user, std::size_t t, std::size_t b) const noexcept {
    return ((user * subcarriers) + t) * bits_per_symbol() + b;
  }
  /// s_w, the users' frequency-domain symbols on subcarrier w.
  CVector subcarrier_symbols(std::size_t w) const;
};

/// log2(M); invalid_input unless M is 2, 4, 16 or 64.
std::size_t bits_per_symbol(int m);

/// Gray-mapped point with unit average energy. bits[k] is b_k of the
/// 3GPP tables.
cplx map_gray_qam(std::span<const std::uint8_t> bits, int m);

/// All M points; entry `label` has b_k = (label >> k) & 1.
std::vector<cplx> constellation(int m);

/// Per-axis amplitude unit: 1/sqrt(2), 1/sqrt(2), 1/sqrt(10), 1/sqrt(42).
double level_scale(int m);

double snr_to_n0(double snr_db, std::size_t bs_antennas, double es);

/// Draws trial `trial` of the experiment. Bits, channel and noise come from
/// separate Philox substreams keyed by (cfg.seed, trial); the unit-variance
/// noise draw is scaled by sqrt(N0) afterwards, so for a fixed trial only the
/// noise amplitude depends on the SNR.
UplinkFrame generate_frame(const SimConfig& cfg, std::uint64_t trial);

}  // namespace mmse
