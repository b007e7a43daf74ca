#include <benchmark/benchmark.h>

#include "mmse/analysis.hpp"
#include "mmse/detector.hpp"
#include "mmse/fxp.hpp"
#include "mmse/linalg.hpp"
#include "mmse/txchain.hpp"

using namespace mmse;

namespace {

SimConfig sim(std::size_t users, std::size_t antennas) {
  SimConfig s;
  s.users = users;
  s.bs_antennas = antennas;
  s.subcarriers = 72;
  s.modulation = 64;
  s.snr_db = 18;
  return s;
}

const char* kMethods[] = {"mf", "neumann:2", "neumann:3", "cholesky"};

// args: method index, U (B = 16U)
void BM_DetectSerial(benchmark::State& st) {
  const auto u = static_cast<std::size_t>(st.range(1));
  const auto f = generate_frame(sim(u, 16 * u), 0);
  const auto det = DetectorConfig::parse(kMethods[st.range(0)], "", 64);
  for (auto _ : st) benchmark::DoNotOptimize(detect_frame_serial(det, f));
  st.SetLabel(det.label());
  st.SetItemsProcessed(st.iterations() * 72);
}

void BM_DetectParallel(benchmark::State& st) {
  const auto u = static_cast<std::size_t>(st.range(1));
  const auto f = generate_frame(sim(u, 16 * u), 0);
  const auto det = DetectorConfig::parse(kMethods[st.range(0)], "", 64);
  for (auto _ : st) benchmark::DoNotOptimize(detect_frame(det, f));
  st.SetLabel(det.label());
  st.SetItemsProcessed(st.iterations() * 72);
}

void BM_DetectFixedPoint(benchmark::State& st) {
  const auto f = generate_frame(sim(8, 128), 0);
  const auto det = DetectorConfig::parse(kMethods[st.range(0)], "", 64);
  const auto cfg = FxpPipelineConfig::fpga();
  for (auto _ : st) benchmark::DoNotOptimize(fxp_detect_frame(cfg, det, f));
  st.SetLabel(det.label());
}

void BM_Inverse(benchmark::State& st) {
  const auto u = static_cast<std::size_t>(st.range(1));
  const auto f = generate_frame(sim(u, 16 * u), 0);
  const auto a = regularized_gram(gram_matrix(f.channels[0]), 0.1);
  const auto split = diag_split(a);
  const int k = static_cast<int>(st.range(0));
  for (auto _ : st) {
    if (k == 0)
      benchmark::DoNotOptimize(invert_via_cholesky(a));
    else
      benchmark::DoNotOptimize(neumann_inverse(split, k));
  }
  st.SetLabel(k == 0 ? "cholesky" : "neumann:" + std::to_string(k));
}

void BM_Sweep(benchmark::State& st) {
  SimConfig s = sim(8, 128);
  s.trials = 8;
  const double grid[] = {10, 14, 18, 22};
  const auto det = DetectorConfig::parse("neumann:3", "", 64);
  SweepOptions opts;
  opts.threads = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(ber_sweep(s, det, grid, opts));
  st.SetItemsProcessed(st.iterations() * 32);
}

void BM_Transform(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  CVector v(n, cplx{0.5, -0.25});
  for (auto _ : st) benchmark::DoNotOptimize(unitary_transform(v, TransformDirection::forward));
}

}  // namespace

BENCHMARK(BM_DetectSerial)->ArgsProduct({{0, 1, 2, 3}, {4, 8, 16}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DetectParallel)->ArgsProduct({{0, 1, 2, 3}, {4, 8, 16}})->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_DetectFixedPoint)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Inverse)->ArgsProduct({{0, 1, 2, 3, 4}, {4, 8, 16}});
BENCHMARK(BM_Sweep)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Transform)->Arg(12)->Arg(72)->Arg(300)->Arg(1200);

BENCHMARK_MAIN();
