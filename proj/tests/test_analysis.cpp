#include <doctest.h>

#include <cmath>

#include "mmse/analysis.hpp"
#include "mmse/error.hpp"
#include "oracles.hpp"

using namespace mmse;

namespace {

BoundQuery bq(std::size_t u, std::size_t b, int k, double a) { return BoundQuery{u, b, k, a}; }

}  // namespace

TEST_CASE("theorem1_bound values") {
  CHECK(theorem1_bound(bq(8, 128, 1, 1)) == doctest::Approx(0.3538253999499097).epsilon(1e-14));
  CHECK(theorem1_bound(bq(4, 64, 1, 1)) == doctest::Approx(0.7105082130712483).epsilon(1e-14));
  CHECK(theorem1_bound(bq(1, 5, 1, 0.1)) == 1.0);
  CHECK(theorem1_bound(bq(1, 300, 7, 1)) == 1.0);
  // vacuous region is reported, not clamped
  CHECK(theorem1_bound(bq(16, 16, 1, 1)) < 0.0);
  // K and alpha enter as alpha^(2/K)
  CHECK(theorem1_bound(bq(4, 64, 2, 0.25)) == doctest::Approx(theorem1_bound(bq(4, 64, 1, 0.5))).epsilon(1e-14));
}

TEST_CASE("theorem1 domain errors") {
  for (auto q : {bq(2, 4, 1, 1), bq(2, 16, 1, 0.0), bq(2, 16, 1, 1.5), bq(0, 16, 1, 1), bq(2, 16, 0, 1)}) {
    try {
      theorem1_bound(q);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK((e.code() == Errc::out_of_domain || e.code() == Errc::invalid_input));
    }
  }
  try {
    theorem1_bound(bq(2, 4, 1, 1));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::out_of_domain);
  }
}

TEST_CASE("empirical norm probability respects the bound") {
  CHECK(empirical_norm_prob(bq(1, 8, 1, 0.5), 100, 1).value == 1.0);
  for (auto q : {bq(8, 128, 1, 1), bq(4, 64, 2, 0.5)}) {
    const auto p = empirical_norm_prob(q, 10000, 1);
    CHECK(p.trials == 10000);
    CHECK(p.value >= theorem1_bound(q) - 3 * p.std_error);
  }
}

TEST_CASE("empirical norm probability is thread-count independent") {
  const auto a = empirical_norm_prob(bq(8, 32, 1, 1), 3000, 9, 1);
  const auto b = empirical_norm_prob(bq(8, 32, 1, 1), 3000, 9, 4);
  CHECK(a.value == b.value);
}

TEST_CASE("convergence probability grows with B") {
  double prev = -1;
  for (std::size_t b : {16, 32, 64, 128, 256}) {
    const auto p = empirical_norm_prob(bq(8, b, 1, 1), 4000, 2);
    CHECK(p.value >= prev - 3 * p.std_error);
    prev = p.value;
  }
}

TEST_CASE("moment targets") {
  CHECK(moment_mc(Lemma::one, 1, 10, 1).target == 4.0);
  CHECK(moment_mc(Lemma::one, 128, 10, 1).target == 33024.0);
  CHECK(moment_mc(Lemma::two, 5, 10, 1).target == doctest::Approx(1.0 / 24).epsilon(1e-15));
  try {
    moment_mc(Lemma::two, 4, 10, 1);
    FAIL("expected out_of_domain");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::out_of_domain);
  }
}

TEST_CASE("moment estimates agree with their targets") {
  for (std::size_t b : {1, 8, 128}) {
    const auto m = moment_mc(Lemma::one, b, 200000, 3);
    CAPTURE(b);
    CHECK(std::abs(m.z_score()) < 5.0);
  }
  // B = 6 has an infinite-variance estimator; 16 and 64 are well behaved
  for (std::size_t b : {16, 64}) {
    const auto m = moment_mc(Lemma::two, b, 200000, 3);
    CAPTURE(b);
    CHECK(std::abs(m.z_score()) < 5.0);
  }
}

TEST_CASE("residual bound hand example") {
  const ComplexMatrix a{{2, 1}, {1, 2}};
  const auto r = residual_bound_check(a, CVector{1, 0}, 2);
  CHECK(r.lhs == doctest::Approx(std::sqrt(1.0 / 36 + 1.0 / 144)).epsilon(1e-14));
  CHECK(r.rhs == doctest::Approx(0.5 * std::sqrt(5.0 / 9)).epsilon(1e-14));
  CHECK(r.holds);

  const double d[] = {2.0, 3.0, 0.5};
  for (int k = 1; k <= 4; ++k) {
    const auto z = residual_bound_check(ComplexMatrix::diagonal(d), CVector{1, 2, 3}, k);
    CHECK(z.lhs < 1e-14);
    CHECK(z.holds);
  }
}

TEST_CASE("residual bound holds on random draws") {
  Philox4x32 rng(77);
  int violations = 0;
  for (int t = 0; t < 500; ++t) {
    const auto a = oracle::random_hpd(rng, 8, 128, 0.5);
    const auto y = oracle::gaussian_vector(rng, 8);
    for (int k = 1; k <= 4; ++k) violations += !residual_bound_check(a, y, k).holds;
  }
  CHECK(violations == 0);
}

TEST_CASE("closed-form counts equal the instrumented counts") {
  for (std::size_t u : {1, 2, 4, 8, 16})
    for (std::size_t b : {16, 64, 128})
      for (int k = 1; k <= 4; ++k) {
        CAPTURE(u);
        CAPTURE(b);
        CAPTURE(k);
        const auto cf = multiplication_count(Method::neumann, k, u, b);
        const auto in = instrumented_count(Method::neumann, k, u, b);
        CHECK(cf.gram == in.gram);
        CHECK(cf.inversion == in.inversion);
        CHECK(cf.matched_filter == in.matched_filter);
        if (k == 1) {
          const auto cc = multiplication_count(Method::cholesky, 0, u, b);
          const auto ic = instrumented_count(Method::cholesky, 0, u, b);
          CHECK(cc.gram == ic.gram);
          CHECK(cc.inversion == ic.inversion);
        }
      }
}

TEST_CASE("count examples and scaling") {
  for (std::size_t u : {1, 3, 9}) {
    const auto mf = multiplication_count(Method::neumann, 1, u, 32).inversion;
    CHECK(mf.real_mults == 0);
    CHECK(mf.real_divs == u);
  }
  const auto c1 = multiplication_count(Method::cholesky, 0, 1, 8).inversion;
  CHECK(c1.real_mults == 0);
  CHECK(c1.real_divs == 1);

  auto inv = [](Method m, int k, std::size_t u) {
    return static_cast<double>(multiplication_count(m, k, u, 128).inversion.real_mults);
  };
  CHECK(inv(Method::neumann, 2, 512) / inv(Method::neumann, 2, 256) == doctest::Approx(4.0).epsilon(0.01));
  CHECK(inv(Method::cholesky, 0, 512) / inv(Method::cholesky, 0, 256) == doctest::Approx(8.0).epsilon(0.01));
  // K >= 3 adds one U^3 product per extra term
  CHECK(inv(Method::neumann, 3, 512) / inv(Method::neumann, 3, 256) == doctest::Approx(8.0).epsilon(0.01));
  CHECK(inv(Method::neumann, 4, 512) / inv(Method::neumann, 3, 512) == doctest::Approx(2.0).epsilon(0.01));

  for (std::size_t u = 4; u <= 16; ++u) {
    CHECK(inv(Method::neumann, 1, u) < inv(Method::neumann, 2, u));
    CHECK(inv(Method::neumann, 2, u) < inv(Method::neumann, 3, u));
    CHECK(inv(Method::neumann, 3, u) < inv(Method::cholesky, 0, u));
  }
  CHECK(inv(Method::neumann, 4, 16) > inv(Method::cholesky, 0, 16));
}

TEST_CASE("three-mult complex products reduce the count") {
  const auto four = instrumented_count(Method::cholesky, 0, 8, 64);
  const auto three = instrumented_count(Method::cholesky, 0, 8, 64, true);
  CHECK(three.gram.real_mults < four.gram.real_mults);
  CHECK(three.gram.real_adds > four.gram.real_adds);
}

TEST_CASE("sweep: noiseless frames are error free") {
  SimConfig s;
  s.users = 2;
  s.bs_antennas = 8;
  s.subcarriers = 12;
  s.modulation = 16;
  s.trials = 4;
  s.noiseless = true;
  const double grid[] = {0.0};
  const auto r = ber_sweep(s, DetectorConfig::parse("neumann:2", "", 16), grid);
  REQUIRE(r.size() == 1);
  CHECK(r[0].ber == 0.0);
  CHECK(r[0].trials == 4);
  CHECK(r[0].failed_trials == 0);
}

TEST_CASE("sweep is deterministic and thread independent") {
  SimConfig s;
  s.users = 4;
  s.bs_antennas = 32;
  s.subcarriers = 12;
  s.modulation = 16;
  s.trials = 12;
  s.seed = 11;
  const double grid[] = {0.0, 6.0, 12.0};
  const auto det = DetectorConfig::parse("neumann:3", "low", 16);
  const auto a = ber_sweep(s, det, grid, {1, {}});
  const auto b = ber_sweep(s, det, grid, {4, {}});
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].bit_errors == b[i].bit_errors);
    CHECK(a[i].ber == b[i].ber);
    CHECK(a[i].ber == static_cast<double>(a[i].bit_errors) / (12.0 * 4 * 12 * 4));
  }
}

TEST_CASE("sweep: exact detector BER falls with SNR") {
  SimConfig s;
  s.users = 4;
  s.bs_antennas = 64;
  s.subcarriers = 72;
  s.modulation = 64;
  s.trials = 30;
  const double grid[] = {6.0, 10.0, 14.0, 18.0};
  const auto r = ber_sweep(s, DetectorConfig::parse("cholesky", "", 64), grid);
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i].ber < r[i - 1].ber);
}
