#include <doctest.h>

#include <cmath>
#include <map>

#include "mmse/error.hpp"
#include "mmse/txchain.hpp"

using namespace mmse;

namespace {

bool close(cplx a, cplx b) { return std::abs(a - b) < 1e-15; }

}  // namespace

TEST_CASE("Gray mapping table entries") {
  const double r2 = std::sqrt(2.0), r10 = std::sqrt(10.0), r42 = std::sqrt(42.0);
  CHECK(close(map_gray_qam(std::vector<std::uint8_t>{0, 0}, 4), cplx{1, 1} / r2));
  CHECK(close(map_gray_qam(std::vector<std::uint8_t>{1, 1}, 4), cplx{-1, -1} / r2));
  CHECK(close(map_gray_qam(std::vector<std::uint8_t>{0}, 2), cplx{1, 1} / r2));
  CHECK(close(map_gray_qam(std::vector<std::uint8_t>{1}, 2), cplx{-1, -1} / r2));
  CHECK(close(map_gray_qam(std::vector<std::uint8_t>{0, 0, 0, 0}, 16), cplx{1, 1} / r10));
  CHECK(close(map_gray_qam(std::vector<std::uint8_t>{1, 0, 1, 0}, 16), cplx{-3, 1} / r10));
  CHECK(close(map_gray_qam(std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0}, 64), cplx{3, 3} / r42));
  CHECK(close(map_gray_qam(std::vector<std::uint8_t>{0, 1, 0, 1, 1, 1}, 64), cplx{1, -7} / r42));
  CHECK_THROWS_AS(map_gray_qam(std::vector<std::uint8_t>{0, 0, 0}, 8), Error);
  CHECK_THROWS_AS(map_gray_qam(std::vector<std::uint8_t>{0}, 4), Error);
}

TEST_CASE("constellations have unit energy and distinct points") {
  for (int m : {2, 4, 16, 64}) {
    const auto pts = constellation(m);
    double e = 0;
    for (cplx p : pts) e += std::norm(p);
    CHECK(e / m == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) CHECK(std::abs(pts[i] - pts[j]) > 0.1);
  }
}

TEST_CASE("Gray property: axis neighbours differ in one bit") {
  for (int m : {4, 16, 64}) {
    const double c = level_scale(m);
    const auto pts = constellation(m);
    std::map<std::pair<long, long>, std::size_t> at;
    for (std::size_t label = 0; label < pts.size(); ++label)
      at[{std::lround(pts[label].real() / c), std::lround(pts[label].imag() / c)}] = label;
    int pairs = 0;
    for (const auto& [pos, label] : at)
      for (auto [dx, dy] : {std::pair{2L, 0L}, std::pair{0L, 2L}}) {
        auto it = at.find({pos.first + dx, pos.second + dy});
        if (it == at.end()) continue;
        ++pairs;
        CHECK(__builtin_popcountll(label ^ it->second) == 1);
      }
    const long side = std::lround(std::sqrt(m));
    CHECK(pairs == 2 * side * (side - 1));
  }
}

TEST_CASE("empirical symbol energy over random bits") {
  SimConfig cfg;
  cfg.users = 4;
  cfg.bs_antennas = 4;
  cfg.subcarriers = 1200;
  cfg.modulation = 64;
  cfg.es = 2.0;
  double e = 0;
  std::size_t n = 0;
  for (std::uint64_t t = 0; t < 25; ++t) {
    const auto f = generate_frame(cfg, t);
    for (cplx x : f.x.entries()) e += std::norm(x);
    n += f.x.entries().size();
  }
  CHECK(n >= 100000);
  CHECK(std::abs(e / n / cfg.es - 1.0) < 0.01);
}

TEST_CASE("snr_to_n0") {
  CHECK(snr_to_n0(0, 1, 1) == 1.0);
  CHECK(snr_to_n0(10, 4, 1) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(snr_to_n0(21.07, 128, 1) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(snr_to_n0(0, 1, 0), Error);
}

TEST_CASE("noiseless identity channel delivers s_w") {
  SimConfig cfg;
  cfg.users = 3;
  cfg.bs_antennas = 5;
  cfg.subcarriers = 16;
  cfg.modulation = 16;
  cfg.identity_channel = true;
  cfg.noiseless = true;
  const auto f = generate_frame(cfg, 0);
  CHECK(f.n0 == 0.0);
  for (std::size_t w = 0; w < cfg.subcarriers; ++w)
    for (std::size_t r = 0; r < cfg.bs_antennas; ++r) CHECK(f.y(w, r) == (r < cfg.users ? f.s(r, w) : cplx{}));
}

TEST_CASE("channel and noise moments") {
  SimConfig cfg;
  cfg.users = 4;
  cfg.bs_antennas = 64;
  cfg.subcarriers = 400;
  cfg.modulation = 4;
  cfg.snr_db = 10.0 * std::log10(64.0 / 0.4);  // N0 = 0.4
  const auto f = generate_frame(cfg, 3);
  CHECK(f.n0 == doctest::Approx(0.4).epsilon(1e-12));

  double hp = 0, np = 0;
  std::size_t hn = 0, nn = 0;
  for (std::size_t w = 0; w < cfg.subcarriers; ++w) {
    for (cplx h : f.channels[w].entries()) hp += std::norm(h);
    hn += f.channels[w].entries().size();
    const CVector sw = f.subcarrier_symbols(w);
    const CVector clean = f.channels[w] * std::span<const cplx>(sw);
    for (std::size_t r = 0; r < cfg.bs_antennas; ++r) np += std::norm(f.y(w, r) - clean[r]);
    nn += cfg.bs_antennas;
  }
  CHECK(hn >= 100000);
  CHECK(nn >= 25000);
  CHECK(std::abs(hp / hn - 1.0) < 0.02);
  CHECK(std::abs(np / nn - 0.4) < 0.01);
}

TEST_CASE("unitary spreading and determinism") {
  SimConfig cfg;
  cfg.users = 2;
  cfg.bs_antennas = 8;
  cfg.subcarriers = 72;
  cfg.modulation = 64;
  cfg.seed = 99;
  const auto a = generate_frame(cfg, 5);
  const auto b = generate_frame(cfg, 5);
  const auto c = generate_frame(cfg, 6);
  CHECK(a.bits == b.bits);
  CHECK(a.y == b.y);
  CHECK(a.channels == b.channels);
  CHECK(a.bits != c.bits);
  for (std::size_t i = 0; i < cfg.users; ++i) CHECK(std::abs(norm2(a.s.row(i)) - norm2(a.x.row(i))) < 1e-10);
}

TEST_CASE("common random numbers across SNR points") {
  SimConfig cfg;
  cfg.users = 2;
  cfg.bs_antennas = 8;
  cfg.subcarriers = 12;
  cfg.modulation = 4;
  cfg.snr_db = 5;
  const auto lo = generate_frame(cfg, 1);
  cfg.snr_db = 15;
  const auto hi = generate_frame(cfg, 1);
  CHECK(lo.bits == hi.bits);
  CHECK(lo.channels == hi.channels);
  CHECK(lo.n0 == doctest::Approx(10 * hi.n0));
}

TEST_CASE("configuration validation") {
  SimConfig cfg;
  cfg.users = 5;
  cfg.bs_antennas = 4;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.users = 2;
  cfg.modulation = 8;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.modulation = 4;
  cfg.subcarriers = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.subcarriers = 1;
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
