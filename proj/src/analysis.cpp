#include "mmse/analysis.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <string>

#include "mmse/detail/kernels.hpp"
#include "mmse/error.hpp"
#include "mmse/rng.hpp"

namespace mmse {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::invalid_input, what); }

int thread_count(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

ComplexMatrix gaussian_matrix(Philox4x32& rng, std::size_t rows, std::size_t cols) {
  ComplexMatrix m(rows, cols);
  for (cplx& z : m.entries()) z = complex_normal(rng);
  return m;
}

// Monte-Carlo sums are formed per fixed-size chunk of trials and the chunk
// sums added in chunk order, so the result does not depend on the number of
// threads.
constexpr std::size_t kChunk = 4096;

}  // namespace

void BoundQuery::validate() const {
  if (users < 1) invalid("bound: need at least one user");
  if (bs_antennas <= 4)
    throw Error(Errc::out_of_domain, "bound: needs B > 4, got B=" + std::to_string(bs_antennas));
  if (terms < 1) invalid("bound: need K >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) invalid("bound: alpha must lie in (0, 1]");
}

double theorem1_bound(const BoundQuery& q) {
  q.validate();
  const double u = static_cast<double>(q.users);
  const double b = static_cast<double>(q.bs_antennas);
  const double ratio = 2.0 * b * (b + 1.0) / ((b - 1.0) * (b - 2.0) * (b - 3.0) * (b - 4.0));
  return 1.0 - (u * u - u) / std::pow(q.alpha, 2.0 / q.terms) * std::sqrt(ratio);
}

ProbEstimate empirical_norm_prob(const BoundQuery& q, std::size_t trials, std::uint64_t seed, int threads) {
  q.validate();
  if (trials < 1) invalid("empirical_norm_prob: need at least one trial");
  std::vector<std::uint8_t> hit(trials);
  std::vector<std::exception_ptr> errs(trials);
#pragma omp parallel for schedule(static) num_threads(thread_count(threads))
  for (std::ptrdiff_t st = 0; st < static_cast<std::ptrdiff_t>(trials); ++st) {
    const auto t = static_cast<std::size_t>(st);
    try {
      Philox4x32 rng(seed, substream(StreamTag::analysis, t));
      const ComplexMatrix h = gaussian_matrix(rng, q.bs_antennas, q.users);
      const double n = convergence_norm(diag_split(gram_matrix(h)));
      hit[t] = std::pow(n, q.terms) < q.alpha ? 1 : 0;
    } catch (...) {
      errs[t] = std::current_exception();
    }
  }
  for (const auto& e : errs)
    if (e) std::rethrow_exception(e);
  std::size_t count = 0;
  for (std::uint8_t h : hit) count += h;
  ProbEstimate p;
  p.trials = trials;
  p.value = static_cast<double>(count) / static_cast<double>(trials);
  p.std_error = std::sqrt(p.value * (1.0 - p.value) / static_cast<double>(trials));
  return p;
}

MomentEstimate moment_mc(Lemma kind, std::size_t bs_antennas, std::size_t trials, std::uint64_t seed, int threads) {
  if (trials < 1) invalid("moment_mc: need at least one trial");
  if (bs_antennas < 1) invalid("moment_mc: need B >= 1");
  const double b = static_cast<double>(bs_antennas);
  MomentEstimate m;
  m.trials = trials;
  if (kind == Lemma::one) {
    m.target = 2.0 * b * (b + 1.0);
  } else {
    if (bs_antennas <= 4)
      throw Error(Errc::out_of_domain, "lemma 2 needs B > 4, got B=" + std::to_string(bs_antennas));
    m.target = 1.0 / ((b - 1.0) * (b - 2.0) * (b - 3.0) * (b - 4.0));
  }

  const std::size_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<double> sum(chunks), sum_sq(chunks);
#pragma omp parallel for schedule(static) num_threads(thread_count(threads))
  for (std::ptrdiff_t sc = 0; sc < static_cast<std::ptrdiff_t>(chunks); ++sc) {
    const auto c = static_cast<std::size_t>(sc);
    double s = 0.0, s2 = 0.0;
    for (std::size_t t = c * kChunk; t < std::min(trials, (c + 1) * kChunk); ++t) {
      Philox4x32 rng(seed, substream(StreamTag::analysis, t));
      double v;
      if (kind == Lemma::one) {
        cplx acc{};
        for (std::size_t k = 0; k < bs_antennas; ++k) {
          const cplx x = complex_normal(rng);
          const cplx y = complex_normal(rng);
          acc += PlainOps::mul(x, y);
        }
        const double a2 = std::norm(acc);
        v = a2 * a2;
      } else {
        double g = 0.0;
        for (std::size_t k = 0; k < bs_antennas; ++k) g += std::norm(complex_normal(rng));
        const double g2 = g * g;
        v = 1.0 / (g2 * g2);
      }
      s += v;
      s2 += v * v;
    }
    sum[c] = s;
    sum_sq[c] = s2;
  }
  double s = 0.0, s2 = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    s += sum[c];
    s2 += sum_sq[c];
  }
  const double n = static_cast<double>(trials);
  m.estimate = s / n;
  const double var = trials > 1 ? std::max(0.0, (s2 - n * m.estimate * m.estimate) / (n - 1.0)) : 0.0;
  m.std_error = std::sqrt(var / n);
  return m;
}

ResidualCheck residual_bound_check(const ComplexMatrix& a, std::span<const cplx> y_mf, int terms) {
  if (terms < 1) invalid("residual_bound_check: need K >= 1");
  const DiagSplit split = diag_split(a);
  const CVector exact = invert_via_cholesky(a) * y_mf;
  const CVector approx = neumann_inverse(split, terms) * y_mf;
  CVector diff(exact.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = exact[i] - approx[i];
  ResidualCheck r;
  r.lhs = norm2(diff);
  r.rhs = std::pow(convergence_norm(split), terms) * norm2(exact);
  r.holds = r.lhs <= r.rhs + 1e-9;
  return r;
}

ComplexityReport multiplication_count(Method method, int terms, std::size_t users, std::size_t bs_antennas) {
  if (users < 1 || bs_antennas < 1) invalid("multiplication_count: need U, B >= 1");
  if (method == Method::neumann && terms < 1) invalid("multiplication_count: need K >= 1");
  const std::uint64_t u = users, b = bs_antennas;
  ComplexityReport r;
  r.gram.real_mults = 2 * b * u * u;
  r.gram.real_adds = 2 * b * u * u + u;
  r.matched_filter.real_mults = 4 * b * u;
  r.matched_filter.real_adds = 4 * b * u;

  OpCountLedger& inv = r.inversion;
  if (method == Method::neumann) {
    inv.real_divs = u;
    if (terms >= 2) {
      const std::uint64_t extra = static_cast<std::uint64_t>(terms - 2);
      inv.real_mults = 3 * u * (u - 1) + extra * 4 * u * u * (u - 1);
      inv.real_adds = extra * (4 * u * u * (u - 1) + u);
    }
  } else if (u == 1) {
    inv.real_divs = 1;
  } else {
    const std::uint64_t cubic = 2 * u * (u - 1) * (u - 2) / 3;
    // decomposition + U (forward + backward) solves + symmetrization
    inv.real_mults = (2 * u * (u - 1) + cubic) + u * 4 * u * u + u * (u - 1);
    inv.real_adds = (u * (u - 1) + cubic) + u * 4 * u * (u - 1) + u * (u - 1);
    inv.real_divs = u + u * 2 * u;
    inv.real_sqrts = u;
  }
  return r;
}

ComplexityReport instrumented_count(Method method, int terms, std::size_t users, std::size_t bs_antennas,
                                    bool three_mult) {
  if (users < 1 || bs_antennas < users) invalid("instrumented_count: need 1 <= U <= B");
  if (method == Method::neumann && terms < 1) invalid("instrumented_count: need K >= 1");
  Philox4x32 rng(0x5eed, substream(StreamTag::analysis, users * 1000 + bs_antennas));
  const ComplexMatrix h = gaussian_matrix(rng, bs_antennas, users);
  CVector y(bs_antennas);
  for (cplx& z : y) z = complex_normal(rng);

  ComplexityReport r;
  CountingOps ops;
  ops.three_mult = three_mult;
  const ComplexMatrix a = detail::regularize(ops, detail::gram(ops, h), 0.1);
  r.gram = ops.tally;

  ops.tally = {};
  if (method == Method::neumann) detail::neumann(ops, diag_split(a), terms);
  else detail::cholesky_inverse(ops, a);
  r.inversion = ops.tally;

  ops.tally = {};
  detail::matched_filter(ops, h, y);
  r.matched_filter = ops.tally;
  return r;
}

std::vector<SweepRecord> ber_sweep(const SimConfig& sim, const DetectorConfig& det, std::span<const double> snr_grid,
                                   const SweepOptions& opts) {
  sim.validate();
  det.validate();
  if (det.modulation != sim.modulation) invalid("sweep: detector and simulation disagree on the constellation");
  if (opts.fxp) {
    opts.fxp->validate();
  }
  const std::size_t points = snr_grid.size(), trials = sim.trials;
  const std::size_t items = points * trials;
  std::vector<std::uint64_t> errors(items);
  std::vector<std::uint8_t> failed(items);

#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(opts.threads))
  for (std::ptrdiff_t sn = 0; sn < static_cast<std::ptrdiff_t>(items); ++sn) {
    const auto n = static_cast<std::size_t>(sn);
    SimConfig cfg = sim;
    cfg.snr_db = snr_grid[n / trials];
    const std::size_t trial = n % trials;
    try {
      const UplinkFrame f = generate_frame(cfg, trial);
      const std::vector<std::uint8_t> hard =
          opts.fxp ? fxp_detect_frame(*opts.fxp, det, f, 1).hard_bits : detect_frame(det, f, 1).llr.hard_bits;
      std::uint64_t e = 0;
      for (std::size_t k = 0; k < hard.size(); ++k) e += hard[k] != f.bits[k];
      errors[n] = e;
    } catch (const Error&) {
      failed[n] = 1;
    }
  }

  const double bits_per_frame =
      static_cast<double>(sim.users * sim.subcarriers * bits_per_symbol(sim.modulation));
  std::vector<SweepRecord> out(points);
  for (std::size_t s = 0; s < points; ++s) {
    SweepRecord& r = out[s];
    r.snr_db = snr_grid[s];
    r.method = det.label();
    r.npi = std::string(to_string(det.npi));
    r.seed = sim.seed;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t n = s * trials + t;
      if (failed[n]) {
        ++r.failed_trials;
      } else {
        ++r.trials;
        r.bit_errors += errors[n];
      }
    }
    r.ber = r.trials ? static_cast<double>(r.bit_errors) / (static_cast<double>(r.trials) * bits_per_frame)
                     : std::nan("");
  }
  return out;
}

}  // namespace mmse
