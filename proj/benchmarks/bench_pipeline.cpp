#include <benchmark/benchmark.h>

#include <vector>

#include "oamcorr/correlate.hpp"
#include "oamcorr/masks.hpp"
#include "oamcorr/oam.hpp"
#include "oamcorr/polar_field.hpp"

namespace {

const oamcorr::PolarGrid kGrid(64, 256, 3.0);
const oamcorr::Envelope kEnvelope = oamcorr::GaussianEnvelope{1.0};

}  // namespace

static void GenerateRealization(benchmark::State& state) {
  std::vector<double> sigma = oamcorr::envelope_profile(kEnvelope, kGrid);
  for (double& s : sigma) s = std::sqrt(s);
  oamcorr::SpeckleField field{kGrid, {}, 0, 0};
  std::uint64_t index = 0;
  for (auto _ : state) {
    oamcorr::generate_realization_into(field, sigma, oamcorr::DeltaCorrelated{}, 42, index++);
    benchmark::DoNotOptimize(field.samples.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kGrid.cell_count()));
}
BENCHMARK(GenerateRealization);

static void ProjectOam(benchmark::State& state) {
  const auto field = oamcorr::generate_realization(kGrid, kEnvelope, oamcorr::DeltaCorrelated{}, 42, 0);
  const oamcorr::OamProjector projector(kGrid, static_cast<int>(state.range(0)));
  std::vector<oamcorr::Complex> amps(static_cast<std::size_t>(projector.window().size()));
  std::vector<oamcorr::Complex> scratch;
  for (auto _ : state) {
    projector.project(field.samples, amps, scratch);
    benchmark::DoNotOptimize(amps.data());
  }
}
BENCHMARK(ProjectOam)->Arg(8)->Arg(12)->Arg(32);

static void Accumulate(benchmark::State& state) {
  const oamcorr::ModeWindow window{static_cast<int>(state.range(0))};
  oamcorr::CorrelationAccumulator acc(window);
  std::vector<double> test(static_cast<std::size_t>(window.size()), 1.5);
  std::vector<double> ref(test.size(), 0.5);
  for (auto _ : state) {
    oamcorr::accumulate(acc, std::span<const double>(test), std::span<const double>(ref));
    benchmark::DoNotOptimize(acc.count);
  }
}
BENCHMARK(Accumulate)->Arg(12)->Arg(32);

static void RunEnsemble(benchmark::State& state) {
  oamcorr::EnsembleSpec spec{kGrid, kEnvelope, oamcorr::DeltaCorrelated{}, oamcorr::make_angular_slits(4, 0.5235987755982988),
                             12, static_cast<std::uint64_t>(state.range(0)), 7, 0};
  for (auto _ : state) {
    auto m = oamcorr::run_ensemble(spec);
    benchmark::DoNotOptimize(m.g2.values().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(RunEnsemble)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
