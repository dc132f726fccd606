#include <benchmark/benchmark.h>

#include "nkd/distillation.hpp"
#include "nkd/privacy_amp.hpp"
#include "nkd/session.hpp"
#include "nkd/transport.hpp"

static void BM_BiasedBits(benchmark::State& state) {
  nkd::Generator g(nkd::Seed{1}, 0);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(g.biased_bits(n, 0.16));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BiasedBits)->Arg(1 << 16)->Arg(500000);

static void BM_Round(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto r = nkd::gen_uniform_bits(n, nkd::Seed{1}, 6);
  const auto x = r ^ nkd::gen_biased_bits(n, 0.16, nkd::Seed{1}, 0);
  const auto y = r ^ nkd::gen_biased_bits(n, 0.16, nkd::Seed{1}, 1);
  nkd::Generator msg(nkd::Seed{1}, 3);
  nkd::Generator tie(nkd::Seed{1}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(nkd::run_round(x, y, r, 2, msg, tie));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Round)->Arg(500000);

static void BM_Toeplitz(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<std::size_t>(state.range(1));
  nkd::Generator g(nkd::Seed{1}, 4);
  const auto x = g.uniform_bits(n);
  const auto seed = nkd::draw_hash_seed(n, m, g);
  for (auto _ : state) benchmark::DoNotOptimize(nkd::toeplitz_hash(x, seed, m));
}
BENCHMARK(BM_Toeplitz)->Args({14450, 3000})->Args({14450, 7450})->Args({152000, 67000});

static void BM_FrameCodec(benchmark::State& state) {
  const nkd::Message msg = nkd::RandomBlock{nkd::gen_uniform_bits(500000, nkd::Seed{1}, 6)};
  for (auto _ : state) {
    const auto bytes = nkd::encode_frame(nkd::to_frame(msg));
    benchmark::DoNotOptimize(nkd::from_frame(*nkd::decode_frame(bytes).frame));
  }
}
BENCHMARK(BM_FrameCodec);

static void BM_Session(benchmark::State& state) {
  nkd::SessionConfig c;
  for (auto _ : state) benchmark::DoNotOptimize(nkd::run_local_simulation(c));
}
BENCHMARK(BM_Session)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
