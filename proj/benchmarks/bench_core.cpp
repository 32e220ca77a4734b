// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "pathbench/entropy.hpp"
#include "pathbench/extractor.hpp"
#include "pathbench/metrics.hpp"
#include "pathbench/random.hpp"
#include "pathbench/refcodec.hpp"
#include "pathbench/synthetic.hpp"

using namespace pathbench;

namespace {

const Tile& tile224() {
  static const Tile t = synthetic::tissue_tile(224, 224, 11);
  return t;
}

void BM_Dct8x8(benchmark::State& state) {
  Block8x8 block{};
  SplitMix64 rng(1);
  for (auto& v : block) v = rng.uniform(-128.0, 127.0);
  for (auto _ : state) {
    auto c = dct2_8x8(block);
    benchmark::DoNotOptimize(c);
    auto p = idct2_8x8(c);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_Dct8x8);

void BM_EntropyRoundTrip(benchmark::State& state) {
  const auto symbols = refcodec_symbols(tile224(), QualityParam(static_cast<int>(state.range(0))))[0];
  for (auto _ : state) {
    const Bytes b = entropy_encode(symbols);
    auto back = entropy_decode(b);
    benchmark::DoNotOptimize(back);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(symbols.size()));
}
BENCHMARK(BM_EntropyRoundTrip)->Arg(30)->Arg(80)->Arg(95);

void BM_RefCodecEncode(benchmark::State& state) {
  const QualityParam q(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto blob = refcodec_encode(tile224(), q);
    benchmark::DoNotOptimize(blob);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RefCodecEncode)->Arg(30)->Arg(80)->Arg(95)->Unit(benchmark::kMillisecond);

void BM_RefCodecDecode(benchmark::State& state) {
  const auto blob = refcodec_encode(tile224(), QualityParam(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    auto t = refcodec_decode(blob);
    benchmark::DoNotOptimize(t);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RefCodecDecode)->Arg(30)->Arg(80)->Arg(95)->Unit(benchmark::kMillisecond);

void BM_MsSsim(benchmark::State& state) {
  const Tile degraded = refcodec_decode(refcodec_encode(tile224(), QualityParam(30)));
  for (auto _ : state) benchmark::DoNotOptimize(ms_ssim(tile224(), degraded));
}
BENCHMARK(BM_MsSsim)->Unit(benchmark::kMillisecond);

void BM_Psnr(benchmark::State& state) {
  const Tile degraded = refcodec_decode(refcodec_encode(tile224(), QualityParam(30)));
  for (auto _ : state) benchmark::DoNotOptimize(psnr(tile224(), degraded));
}
BENCHMARK(BM_Psnr);

void BM_ExtractorForward(benchmark::State& state) {
  const ConvExtractor extractor = seeded_extractor(42);
  for (auto _ : state) {
    auto f = extractor.extract(tile224());
    benchmark::DoNotOptimize(f);
  }
}
BENCHMARK(BM_ExtractorForward)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
