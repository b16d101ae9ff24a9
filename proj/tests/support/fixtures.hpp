#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lwir/atmosphere.hpp"
#include "lwir/closed_form.hpp"
#include "lwir/forward_model.hpp"
#include "lwir/hyperspectral.hpp"
#include "lwir/scenes.hpp"

namespace lwir::testing {

// Default synthetic atmosphere on the 64-band fixture grid.
struct Fixture {
  SpectralGrid grid;
  AtmosphereParams params;
  AttenuationSpectrum alpha;
  DownwellingSet downwelling;
  Temperature air_temperature;
  BandSelection bands;
};

const Fixture& fixture();

// Truth with all maps allocated and zero-filled.
SceneTruth blank_truth(std::size_t m, std::size_t n, std::size_t k, std::size_t q);
SceneTruth crop(const SceneTruth& truth, std::size_t row, std::size_t col, std::size_t rows,
                std::size_t cols);

struct ExactCase {
  SceneTruth truth;
  SceneCube cube;
  Temperature air_temperature;
  double slope = 0.0;
};

// 32 x 32 noiseless cubes on the fixture atmosphere in which every
// assumption behind the named estimator holds exactly, with distances
// spread over 5-200 m:
//   hot: negligible air emission (T_air = 1 K), no reflection, and
//        eps(l1) B(l1) = eps(l2) B(l2);
//   air: no reflection and eps(l1) B(l1) - B(l1; T_air) equal at l1, l2;
//   quad: sky reflection from vertical surfaces with eps = 0.6 and eps(l4)
//        set so that s (L(l4) - L(l3)) equals the true lambda2 bias
//        tau(l2) (E(l2) - E(l1)), E being the surface-minus-air radiance.
ExactCase hot_exact_case();
ExactCase air_exact_case();
ExactCase quad_exact_case();

// Noiseless 32 x 32 scene with no sky reflection (omegas zero, no ground
// term) and eps(l4) nudged per pixel so L(l4) == L(l3) bit for bit, i.e. no
// ozone cue. Pixels where that could not be reached are listed in `misses`.
struct NoOzoneCase {
  ExactCase exact;
  std::size_t misses = 0;
};
NoOzoneCase no_ozone_case();

// The shipped panel scene synthesised on the fixture atmosphere.
struct PanelCase {
  BuiltinScene scene;
  SceneCube cube;
};
PanelCase panel_case(double noise_sigma, std::uint64_t seed);

// Random small problem for gradient and loss checks: grid of `bands` bands
// over 8-13 um with random attenuation and `angles` random sky spectra.
struct SmallProblem {
  AttenuationSpectrum alpha;
  std::optional<DownwellingSet> downwelling;
  Temperature air_temperature;
  SceneCube cube;
  EstimateMaps params;
};
SmallProblem random_problem(std::uint64_t seed, std::size_t m, std::size_t n, std::size_t bands,
                            std::size_t angles);

}  // namespace lwir::testing
