#pragma once

#include <cstddef>

#include "mmse/detector.hpp"
#include "mmse/linalg.hpp"
#include "mmse/txchain.hpp"

namespace mmse {

/// Signed two's-complement format with frac_bits fractional bits.
struct FixedFormat {
  int word_bits = 16;
  int frac_bits = 13;
  bool is_signed = true;

  void validate() const;
  double lsb() const;
  double max_value() const;  // 2^(w-1-f) - 2^-f
  double min_value() const;  // -2^(w-1-f)

  friend bool operator==(const FixedFormat&, const FixedFormat&) = default;
};

/// Round half to even at 2^-frac resolution, saturating. invalid_input on
/// NaN or infinity.
double quantize(double v, const FixedFormat& fmt);
cplx quantize(cplx v, const FixedFormat& fmt);

struct FxpPipelineConfig {
  FixedFormat input_fmt{15, 12};         // H, N0/Es, A/B, MF/B, inverse
  FixedFormat rx_fmt{15, 11};            // y
  FixedFormat mac_fmt{22, 19};           // accumulators
  FixedFormat equalizer_out_fmt{12, 9};  // s_hat, IFFT in/out, z, mu, nu^2
  FixedFormat sinr_fmt{12, 2};
  FixedFormat llr_fmt{8, 2};
  int recip_lut_addr_bits = 10;
  int recip_lut_out_bits = 12;

  /// Word lengths of the FPGA design.
  static FxpPipelineConfig fpga();
  /// Every format widened to 30 bits, LUT to 2^20 x 30 bit.
  static FxpPipelineConfig widened();

  void validate() const;
};

/// Reciprocal table over [0.25, 4). The address is the top addr_bits bits of
/// the mantissa m in [1, 2) (rounded); the entry is 1/m as unsigned fixed
/// point with out_bits - 1 fractional bits, and the exponent is applied by
/// shifting.
class ReciprocalLut {
 public:
  ReciprocalLut(int addr_bits, int out_bits);

  static constexpr double kLow = 0.25;
  static constexpr double kHigh = 4.0;

  /// range error outside [kLow, kHigh).
  double operator()(double d) const;
  double entry(std::size_t address) const;
  std::size_t size() const noexcept { return std::size_t{1} << addr_bits_; }

 private:
  int addr_bits_;
  int out_bits_;
};

double reciprocal_lut(double d, const FxpPipelineConfig& cfg);

/// Fixed-point model of detect_frame on A/B. Returns LLRs in llr_fmt and the
/// hard decisions taken from them.
LlrFrame fxp_detect_frame(const FxpPipelineConfig& cfg, const DetectorConfig& det, const UplinkFrame& frame,
                          int threads = 0);

}  // namespace mmse
