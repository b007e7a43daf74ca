#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmse/linalg.hpp"
#include "mmse/txchain.hpp"

namespace mmse {

enum class Method { neumann, cholesky };
enum class NpiMode { exact_mmse, neumann_exact, k1, low_complexity };

struct DetectorConfig {
  Method method = Method::neumann;
  int terms = 3;  // K; Neumann only. K = 1 is the matched filter.
  NpiMode npi = NpiMode::low_complexity;
  int modulation = 64;

  void validate() const;
  /// "mf", "neumann:K" or "cholesky".
  std::string label() const;

  /// Parses the textual forms used on the command line: method is "mf",
  /// "neumann:K" or "cholesky"; npi is "exact", "neumann-exact", "k1" or
  /// "low". An empty npi picks exact for Cholesky and low otherwise.
  static DetectorConfig parse(std::string_view method, std::string_view npi, int modulation);
};

std::string_view to_string(NpiMode mode) noexcept;

struct PostEqStats {
  std::vector<double> mu;
  std::vector<double> npi;
  std::vector<double> sinr;
};

struct LlrFrame {
  std::size_t users = 0;
  std::size_t subcarriers = 0;
  std::size_t bits_per_symbol = 0;
  std::vector<double> llrs;             // same layout as UplinkFrame::bits
  std::vector<std::uint8_t> hard_bits;  // 1 iff llr > 0
};

struct Detection {
  LlrFrame llr;
  PostEqStats stats;
  ComplexMatrix s_hat;  // U x L equalized frequency-domain symbols
  ComplexMatrix x_hat;  // U x L after despreading
};

CVector matched_filter(const ComplexMatrix& h, std::span<const cplx> y);
CVector equalize(const ComplexMatrix& a_inv, std::span<const cplx> y_mf);

/// Per-user (1/L) sum_w [A_w^{-1} G_w]_ii with G_w = H_w^H H_w.
std::vector<double> effective_gain(std::span<const ComplexMatrix> a_inv,
                                   std::span<const ComplexMatrix> channels);

/// What one subcarrier contributes to mu and to the NPI of each user.
struct SubcarrierTerms {
  std::vector<cplx> gain;    // [A~ G]_ii
  std::vector<cplx> npi;     // mode-specific summand
  std::vector<double> mu1;   // g_ii / d_i (k1 and low-complexity modes)
};

/// a_inv is the inverse the detector applies on this subcarrier (exact or
/// Neumann). Throws degenerate_user if some g_ii is zero.
SubcarrierTerms subcarrier_terms(NpiMode mode, const ComplexMatrix& g, const ComplexMatrix& a,
                                 const ComplexMatrix& a_inv);

/// Sums per-subcarrier terms in index order and forms mu, NPI (clamped at
/// 1e-12 Es) and SINR.
PostEqStats reduce_stats(NpiMode mode, double es, std::span<const SubcarrierTerms> terms);

/// NPI per user from per-subcarrier (G, A, A~^{-1}) triples.
std::vector<double> npi_variance(NpiMode mode, double es, std::span<const ComplexMatrix> g,
                                 std::span<const ComplexMatrix> a,
                                 std::span<const ComplexMatrix> a_inv);

/// rho^2 = mu^2 / nu^2. degenerate_npi if some nu^2 <= 0.
PostEqStats post_eq_sinr(PostEqStats stats);

inline constexpr double kNpiFloor = 1e-12;  // relative to Es

/// Max-log LLRs of one equalized symbol, L(b) = rho^2 (min_{O0} - min_{O1})
/// of |x_hat/mu - a|^2 over the Es-scaled constellation; positive favours 1.
std::vector<double> llr_maxlog(cplx x_hat, double mu, double sinr, int m, double es = 1.0);
/// Exhaustive two-minimum evaluation of the same quantity.
std::vector<double> llr_maxlog_reference(cplx x_hat, double mu, double sinr, int m, double es = 1.0);

/// Full soft-output detection of one frame. Subcarriers are processed in
/// parallel (threads <= 0: OpenMP default); results do not depend on the
/// thread count.
Detection detect_frame(const DetectorConfig& cfg, const UplinkFrame& frame, int threads = 0);
/// Single-threaded reference for detect_frame.
Detection detect_frame_serial(const DetectorConfig& cfg, const UplinkFrame& frame);

}  // namespace mmse
