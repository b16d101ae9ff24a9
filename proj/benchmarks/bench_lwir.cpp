#include <benchmark/benchmark.h>

#include "lwir/atmosphere.hpp"
#include "lwir/closed_form.hpp"
#include "lwir/cube_io.hpp"
#include "lwir/forward_model.hpp"
#include "lwir/hyperspectral.hpp"
#include "lwir/scenes.hpp"

namespace {

using namespace lwir;

struct Setup {
  Temperature t_air{288.0};
  SpectralGrid grid = fixture_grid();
  AtmosphereParams params = default_atmosphere(t_air);
  AttenuationSpectrum alpha = synth_attenuation(params, grid);
  DownwellingSet downwelling = synth_downwelling(params, grid, default_zenith_angles());
  BandSelection bands = BandSelection::resolve(grid, BandWavelengths{});
  BuiltinScene scene = make_scene("panels", grid, default_zenith_angles(), t_air);
  SceneCube cube = synthesize_cube(scene.truth, alpha, downwelling, t_air, 1.0, 7);
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_SynthesizeCube(benchmark::State& state) {
  const auto& s = setup();
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        synthesize_cube(s.scene.truth, s.alpha, s.downwelling, s.t_air, 1.0, 7, threads));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.cube.radiance.pixels()));
}
BENCHMARK(BM_SynthesizeCube)->Arg(1)->Arg(4);

void BM_Quadspectral(benchmark::State& state) {
  const auto& s = setup();
  const double slope = fit_ozone_slope(s.downwelling, s.bands).slope;
  for (auto _ : state) {
    benchmark::DoNotOptimize(quadspectral(s.cube, s.alpha, s.bands, s.t_air, slope));
  }
}
BENCHMARK(BM_Quadspectral);

void BM_DataLossAndGradients(benchmark::State& state) {
  const auto& s = setup();
  const SolverConfig config;
  const auto est = initial_estimate(s.cube, s.alpha, s.t_air, s.downwelling.size(), config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gradients(est, s.cube, s.alpha, s.downwelling, s.t_air, config.rho_eps));
  }
}
BENCHMARK(BM_DataLossAndGradients);

void BM_SolveIterations(benchmark::State& state) {
  const auto& s = setup();
  SolverConfig config;
  config.max_iterations = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(s.cube, s.alpha, s.downwelling, s.t_air, config));
  }
}
BENCHMARK(BM_SolveIterations)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Lwc1Encode(benchmark::State& state) {
  const auto& s = setup();
  CubeHeader h;
  h.kind = PayloadKind::cube;
  h.rows = s.cube.radiance.rows();
  h.cols = s.cube.radiance.cols();
  h.depth = s.cube.radiance.depth();
  h.wavelengths_um.assign(s.grid.wavelengths().begin(), s.grid.wavelengths().end());
  h.unit = "microflick";
  const auto data = to_float(s.cube.radiance);
  for (auto _ : state) {
    const auto bytes = encode_cube(h, data);
    benchmark::DoNotOptimize(decode_cube(bytes));
  }
}
BENCHMARK(BM_Lwc1Encode);

}  // namespace

BENCHMARK_MAIN();
