#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lwir/atmosphere.hpp"
#include "lwir/closed_form.hpp"
#include "lwir/forward_model.hpp"
#include "lwir/ndarray.hpp"

namespace lwir {

struct SolverConfig {
  double rho_eps = 3000.0;
  double rho_d = 0.0;
  double d_max = 200.0;
  // Number of downwelling angles used, spread evenly over the supplied set.
  // Empty means all of them; 0 drops downwelling from the model.
  std::optional<std::size_t> q;
  GroundFill ground_fill = GroundFill::ambient;
  std::size_t max_iterations = 2000;
  double tolerance = 1e-8;
  std::size_t patience = 5;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  std::size_t max_backtracks = 40;
  std::size_t tv_iterations = 100;
  // Initial emissivity guess and a relative jitter on the initial state.
  double initial_emissivity = 0.95;
  double init_jitter = 0.0;
  double min_temperature_k = 1.0;
  BandWavelengths bands;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  // Returns one message per violated bound (empty when valid).
  std::vector<std::string> violations() const;
  // Throws ErrorKind::config listing every violation.
  void validate() const;
};

struct EstimateMaps {
  Map2<double> d;
  Map2<double> temperature_k;
  Cube3<double> eps;
  Cube3<double> omegas;
  // Per-pixel data term sum_k (yhat - y)^2 at the returned state.
  Map2<double> loss;
  std::size_t iterations = 0;
  bool converged = false;

  std::size_t rows() const noexcept { return d.rows(); }
  std::size_t cols() const noexcept { return d.cols(); }
};

struct GradientMaps {
  Map2<double> d;
  Map2<double> temperature_k;
  Cube3<double> eps;
  Cube3<double> omegas;
};

// sum_{i,j,k} (yhat - y)^2.
double data_loss(const EstimateMaps& params, const SceneCube& cube, const AttenuationSpectrum& alpha,
                 const std::optional<DownwellingSet>& downwelling, Temperature air_temperature,
                 GroundFill fill = GroundFill::ambient);

// Sum over pixels of squared adjacent-band emissivity differences.
double emissivity_smoothness(const Cube3<double>& eps);

// Anisotropic TV over i < M-1, j < N-1.
double tv_distance(const Map2<double>& d);

// Analytic gradient of data_loss + rho_eps * emissivity_smoothness.
GradientMaps gradients(const EstimateMaps& params, const SceneCube& cube,
                       const AttenuationSpectrum& alpha,
                       const std::optional<DownwellingSet>& downwelling,
                       Temperature air_temperature, double rho_eps,
                       GroundFill fill = GroundFill::ambient);

// Euclidean projection of omegas onto {x >= 0, sum x <= pi}, in place.
void project_solid_angles(std::span<double> omegas);

// Projects every variable onto its feasible set: d in [0, d_max], eps in
// [0, 1], omegas as above.
void project(EstimateMaps& params, double d_max);

// Minimises, over i,j, the weighted problem
//   sum_p w_p/2 (x_p - v_p)^2 + lambda * tv_distance(x)
// with a fixed number of primal-dual iterations. Weights must be >= 0.
Map2<double> tv_denoise(const Map2<double>& v, const Map2<double>& weights, double lambda,
                        std::size_t iterations);

struct IterationInfo {
  std::size_t iteration = 0;
  double objective = 0.0;
  const EstimateMaps* state = nullptr;
};

using IterationObserver = std::function<void(const IterationInfo&)>;

// Initial state: d from bispectral_air clamped to [0, d_max] (d_max/2 where
// flagged or when the bands are not on the grid), T from the brightness
// temperature at the most transparent band, eps constant, omegas zero.
EstimateMaps initial_estimate(const SceneCube& cube, const AttenuationSpectrum& alpha,
                              Temperature air_temperature, std::size_t angles,
                              const SolverConfig& config);

// Projected block-coordinate descent on
//   data_loss + rho_eps * emissivity_smoothness + rho_d * tv_distance.
// Stops when the relative objective decrease stays below `tolerance` for
// `patience` iterations: per pixel when rho_d = 0 (a pixel's result does not
// depend on other pixels' data), for the whole map otherwise.
EstimateMaps solve(const SceneCube& cube, const AttenuationSpectrum& alpha,
                   const std::optional<DownwellingSet>& downwelling, Temperature air_temperature,
                   const SolverConfig& config, const IterationObserver& observer = {});

// Same, starting from `initial` (projected first).
EstimateMaps solve_from(EstimateMaps initial, const SceneCube& cube,
                        const AttenuationSpectrum& alpha,
                        const std::optional<DownwellingSet>& downwelling,
                        Temperature air_temperature, const SolverConfig& config,
                        const IterationObserver& observer = {});

// Downwelling set restricted per config.q (empty optional for q = 0).
std::optional<DownwellingSet> select_downwelling(const std::optional<DownwellingSet>& downwelling,
                                                 const SolverConfig& config);

}  // namespace lwir
