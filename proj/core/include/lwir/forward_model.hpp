#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lwir/atmosphere.hpp"
#include "lwir/ndarray.hpp"
#include "lwir/radiometry.hpp"

namespace lwir {

// Ground-truth scene maps for synthesis.
struct SceneTruth {
  Map2<double> distance_m;
  Map2<double> temperature_k;
  Cube3<double> emissivity;      // M x N x K, in [0, 1]
  Cube3<double> solid_angles;    // M x N x Q projected solid angles (sr)
  Cube3<double> ground_ambient;  // M x N x K microflick

  std::size_t rows() const noexcept { return distance_m.rows(); }
  std::size_t cols() const noexcept { return distance_m.cols(); }

  // Throws ErrorKind::dimension_mismatch or ErrorKind::constraint.
  void validate(std::size_t bands, std::size_t angles) const;
};

struct SceneCube {
  Cube3<double> radiance;  // M x N x K microflick
  SpectralGrid grid;
  Temperature air_temperature;
  double noise_sigma = 0.0;
};

// How the part of the hemisphere not covered by sky sectors is filled when a
// pixel has no explicit ground-ambient spectrum.
enum class GroundFill { ambient, none };

// Precomputed per-band quantities shared by every pixel: alpha, B(T_air) and
// the downwelling matrix. Evaluates
//   L = tau (eps B(T) + L_ref - B(T_air)) + B(T_air)
//   L_ref = (1 - eps)/pi (sum_q Omega_q L_D,q + (pi - sum Omega) L_G)
class RadianceModel {
 public:
  // `downwelling` may be empty (Q = 0).
  RadianceModel(const AttenuationSpectrum& alpha, const std::optional<DownwellingSet>& downwelling,
                Temperature air_temperature);

  std::size_t bands() const noexcept { return alpha_.size(); }
  std::size_t angles() const noexcept { return sky_.size(); }
  const SpectralGrid& grid() const noexcept { return grid_; }
  Temperature air_temperature() const noexcept { return air_temperature_; }
  std::span<const double> alpha() const noexcept { return alpha_; }
  std::span<const double> air_planck() const noexcept { return air_planck_; }
  std::span<const double> sky(std::size_t q) const noexcept { return sky_[q]; }

  // Reflected radiance with an explicit ground spectrum (empty span = none).
  void reflected(std::span<const double> emissivity, std::span<const double> omegas,
                 std::span<const double> ground, std::span<double> out) const;
  // Reflected radiance with the hemisphere remainder filled per `fill`.
  void reflected(std::span<const double> emissivity, std::span<const double> omegas,
                 GroundFill fill, std::span<double> out) const;

  // Observed radiance given the pixel's reflected term.
  void observed(double distance_m, double temperature_k, std::span<const double> emissivity,
                std::span<const double> reflected, std::span<double> out) const;

 private:
  SpectralGrid grid_;
  Temperature air_temperature_;
  std::vector<double> alpha_;
  std::vector<double> air_planck_;
  std::vector<std::vector<double>> sky_;
};

// L_ref(lambda) for one pixel. `omegas` must match the downwelling set size
// (or be empty when no set is given). Throws ErrorKind::constraint when any
// omega is negative or their sum exceeds pi.
Spectrum reflected_radiance(const Spectrum& emissivity, std::span<const double> omegas,
                            const std::optional<DownwellingSet>& downwelling,
                            const Spectrum& ground_ambient);

struct PixelTruth {
  double distance_m = 0.0;
  Temperature temperature{300.0};
  Spectrum emissivity;
  std::vector<double> omegas;
  Spectrum ground_ambient;
};

Spectrum observed_radiance(const PixelTruth& pixel, const AttenuationSpectrum& alpha,
                           const std::optional<DownwellingSet>& downwelling,
                           Temperature air_temperature);

// Noiseless model per pixel plus i.i.d. N(0, sigma^2) noise. Each pixel draws
// from its own generator seeded from (seed, pixel index), so the result does not
// depend on `threads`.
SceneCube synthesize_cube(const SceneTruth& truth, const AttenuationSpectrum& alpha,
                          const std::optional<DownwellingSet>& downwelling,
                          Temperature air_temperature, double noise_sigma, std::uint64_t seed,
                          unsigned threads = 1);

enum class SurfaceOrientation { horizontal, vertical };

// Projected solid angle of each sky sector for a surface of the given
// orientation. Sector q spans the midpoints between neighbouring zenith angles
// (first from 0, last to 90 degrees). Horizontal sums to pi, vertical to pi/2.
std::vector<double> sky_solid_angles(std::span<const double> zenith_angles_deg,
                                     SurfaceOrientation orientation);

std::uint64_t pixel_seed(std::uint64_t seed, std::uint64_t pixel_index) noexcept;

}  // namespace lwir
