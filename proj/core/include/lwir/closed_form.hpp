#pragma once

#include <cstdint>

#include "lwir/atmosphere.hpp"
#include "lwir/forward_model.hpp"
#include "lwir/ndarray.hpp"

namespace lwir {

// Wavelengths for the closed-form estimators, resolved to grid indices.
// lambda1/lambda2 straddle a water-vapour feature (alpha1 > alpha2),
// lambda3/lambda4 straddle the ozone feature, lambda_sat is optically thick.
struct BandWavelengths {
  double lambda1 = 8.42;
  double lambda2 = 8.46;
  double lambda3 = 9.49;
  double lambda4 = 9.57;
  double lambda_sat = 13.2;
};

struct BandSelection {
  BandWavelengths wavelengths;
  std::size_t i1 = 0;
  std::size_t i2 = 0;
  std::size_t i3 = 0;
  std::size_t i4 = 0;
  std::size_t isat = 0;

  // Throws ErrorKind::domain if any wavelength is not on the grid (within
  // `tolerance_um`) or if lambda1 == lambda2.
  static BandSelection resolve(const SpectralGrid& grid, const BandWavelengths& w,
                               double tolerance_um = 1e-6);
};

enum class RangeFlag : std::uint8_t {
  valid = 0,
  nonpositive_ratio = 1,
  zero_denominator = 2,
  // Estimate came out negative or non-finite; the raw value is kept.
  clipped = 3,
};

struct RangeMap {
  Map2<double> distance_m;
  Map2<RangeFlag> flags;

  bool valid(std::size_t i, std::size_t j) const { return flags(i, j) == RangeFlag::valid; }
  std::size_t valid_count() const;
};

struct OzoneSlope {
  double slope = 0.0;
  double residual_rms = 0.0;
};

// |L_obs(lambda1) - B(lambda1; T_air)| below this flags a pixel (microflick).
inline constexpr double kZeroDenominatorTolerance = 1e-6;

// Median brightness temperature at the saturated band over pixels with
// positive radiance. Throws ErrorKind::all_invalid if there are none.
Temperature estimate_air_temperature(const SceneCube& cube, const BandSelection& bands);

// Hot-object estimate, ignoring air emission and reflection.
RangeMap bispectral_hot(const SceneCube& cube, const AttenuationSpectrum& alpha,
                        const BandSelection& bands);

// Estimate with air-path emission removed using B(lambda; T_air).
RangeMap bispectral_air(const SceneCube& cube, const AttenuationSpectrum& alpha,
                        const BandSelection& bands, Temperature air_temperature);

// Through-origin least squares of the water-vapour difference
// L_D(lambda2) - L_D(lambda1) on the ozone difference L_D(lambda4) - L_D(lambda3)
// over the sky angles. Throws ErrorKind::degenerate_fit for fewer than two
// angles or an all-zero ozone difference.
OzoneSlope fit_ozone_slope(const DownwellingSet& downwelling, const BandSelection& bands);

// Air-emission estimate with the reflected-sky bias b = s (L(lambda4) - L(lambda3))
// removed from the lambda2 numerator.
RangeMap quadspectral(const SceneCube& cube, const AttenuationSpectrum& alpha,
                      const BandSelection& bands, Temperature air_temperature, double slope);

// |L_obs(lambda4) - L_obs(lambda3)| per pixel.
Map2<double> ozone_difference_map(const SceneCube& cube, const BandSelection& bands);

}  // namespace lwir
