#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmse/detector.hpp"
#include "mmse/fxp.hpp"
#include "mmse/linalg.hpp"
#include "mmse/opcount.hpp"
#include "mmse/txchain.hpp"

namespace mmse {

struct BoundQuery {
  std::size_t users = 1;
  std::size_t bs_antennas = 5;
  int terms = 1;
  double alpha = 1.0;

  void validate() const;
};

/// Lower bound on Pr{||D^{-1}E||_F^K < alpha} for i.i.d. CN(0,1) channels:
/// 1 - (U^2-U)/alpha^(2/K) * sqrt(2B(B+1) / ((B-1)(B-2)(B-3)(B-4))).
/// Negative values are returned as is (the bound is vacuous there).
double theorem1_bound(const BoundQuery& q);

struct ProbEstimate {
  double value = 0.0;
  double std_error = 0.0;  // binomial, sqrt(p(1-p)/n)
  std::size_t trials = 0;
};

/// Fraction of unregularized Gram matrices with ||D^{-1}E||_F^K < alpha.
ProbEstimate empirical_norm_prob(const BoundQuery& q, std::size_t trials, std::uint64_t seed, int threads = 0);

enum class Lemma { one = 1, two = 2 };

struct MomentEstimate {
  double estimate = 0.0;
  double target = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n)
  std::size_t trials = 0;

  double relative_std_error() const { return std_error / target; }
  /// |estimate - target| in units of std_error
  double z_score() const { return std_error > 0.0 ? (estimate - target) / std_error : 0.0; }
};

/// lemma one: E|sum_k x_k y_k|^4 over B i.i.d. CN(0,1) pairs, target 2B(B+1).
/// lemma two: E[g^-4] with g = sum_k |x_k|^2, target 1/((B-1)(B-2)(B-3)(B-4)).
MomentEstimate moment_mc(Lemma kind, std::size_t bs_antennas, std::size_t trials, std::uint64_t seed,
                         int threads = 0);

struct ResidualCheck {
  double lhs = 0.0;  // ||(A^{-1} - A~_K^{-1}) y_mf||
  double rhs = 0.0;  // ||D^{-1}E||_F^K ||A^{-1} y_mf||
  bool holds = false;
};

ResidualCheck residual_bound_check(const ComplexMatrix& a, std::span<const cplx> y_mf, int terms);

/// Per-subcarrier preprocessing cost split by stage.
struct ComplexityReport {
  OpCountLedger gram;       // H^H H and the regularization
  OpCountLedger inversion;  // Neumann series or Cholesky inverse
  OpCountLedger matched_filter;

  OpCountLedger preprocessing() const { return gram + inversion; }
};

/// Closed-form tallies. Neumann with terms == 1 is the matched-filter
/// detector.
ComplexityReport multiplication_count(Method method, int terms, std::size_t users, std::size_t bs_antennas);

/// Runs the actual kernels on a random instance with counting arithmetic.
ComplexityReport instrumented_count(Method method, int terms, std::size_t users, std::size_t bs_antennas,
                                    bool three_mult = false);

struct SweepRecord {
  double snr_db = 0.0;
  std::string method;
  std::string npi;
  double ber = 0.0;
  std::uint64_t bit_errors = 0;
  std::uint64_t trials = 0;  // successful frames
  std::uint64_t seed = 0;
  std::uint64_t failed_trials = 0;
};

struct SweepOptions {
  int threads = 0;
  std::optional<FxpPipelineConfig> fxp;
};

/// Uncoded BER per SNR point over sim.trials frames. Frame t at every SNR
/// point uses the same bits, channel and unit noise draw.
std::vector<SweepRecord> ber_sweep(const SimConfig& sim, const DetectorConfig& det, std::span<const double> snr_grid,
                                   const SweepOptions& opts = {});

}  // namespace mmse
