#include <gtest/gtest.h>

#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "lwir/closed_form.hpp"
#include "lwir/error.hpp"

namespace lwir {
namespace {

using testing::fixture;

double worst_relative_error(const RangeMap& est, const Map2<double>& truth) {
  double worst = 0.0;
  for (std::size_t p = 0; p < truth.size(); ++p) {
    if (est.flags[p] != RangeFlag::valid) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(est.distance_m[p] - truth[p]) / truth[p]);
  }
  return worst;
}

// Cube on the fixture grid whose pixels hold the given values at the five
// estimator bands and 100 elsewhere.
SceneCube band_cube(const std::vector<std::array<double, 5>>& pixels, Temperature t_air) {
  const auto& f = fixture();
  SceneCube cube{Cube3<double>(1, pixels.size(), f.grid.size(), 100.0), f.grid, t_air, 0.0};
  for (std::size_t j = 0; j < pixels.size(); ++j) {
    cube.radiance(0, j, f.bands.i1) = pixels[j][0];
    cube.radiance(0, j, f.bands.i2) = pixels[j][1];
    cube.radiance(0, j, f.bands.i3) = pixels[j][2];
    cube.radiance(0, j, f.bands.i4) = pixels[j][3];
    cube.radiance(0, j, f.bands.isat) = pixels[j][4];
  }
  return cube;
}

TEST(BandSelection, ResolvesFixtureBands) {
  const auto& f = fixture();
  EXPECT_EQ(f.grid[f.bands.i1], 8.42);
  EXPECT_EQ(f.grid[f.bands.i2], 8.46);
  EXPECT_EQ(f.grid[f.bands.i3], 9.49);
  EXPECT_EQ(f.grid[f.bands.i4], 9.57);
  EXPECT_EQ(f.grid[f.bands.isat], 13.2);
  BandWavelengths off;
  off.lambda1 = 8.43;
  EXPECT_THROW(BandSelection::resolve(f.grid, off), Error);
  BandWavelengths same;
  same.lambda2 = same.lambda1;
  EXPECT_THROW(BandSelection::resolve(f.grid, same), Error);
}

TEST(Exactness, HotObjectAssumptions) {
  const auto c = testing::hot_exact_case();
  auto est = bispectral_hot(c.cube, fixture().alpha, fixture().bands);
  EXPECT_LE(worst_relative_error(est, c.truth.distance_m), 1e-6);
}

TEST(Exactness, AirEmissionAssumptions) {
  const auto c = testing::air_exact_case();
  auto est = bispectral_air(c.cube, fixture().alpha, fixture().bands, c.air_temperature);
  EXPECT_LE(worst_relative_error(est, c.truth.distance_m), 1e-6);
}

TEST(Exactness, QuadspectralAssumptions) {
  const auto c = testing::quad_exact_case();
  auto est = quadspectral(c.cube, fixture().alpha, fixture().bands, c.air_temperature, c.slope);
  EXPECT_LE(worst_relative_error(est, c.truth.distance_m), 1e-6);
}

TEST(Exactness, AirEstimatorIsBiasedWhenSkyIsReflected) {
  const auto c = testing::quad_exact_case();
  auto est = bispectral_air(c.cube, fixture().alpha, fixture().bands, c.air_temperature);
  EXPECT_GT(worst_relative_error(est, c.truth.distance_m), 0.05);
}

TEST(Reduction, QuadWithoutOzoneCueEqualsAirBitForBit) {
  const auto c = testing::no_ozone_case();
  ASSERT_EQ(c.misses, 0u);
  const auto& f = fixture();
  auto quad = quadspectral(c.exact.cube, f.alpha, f.bands, c.exact.air_temperature, 2.25);
  auto air = bispectral_air(c.exact.cube, f.alpha, f.bands, c.exact.air_temperature);
  EXPECT_EQ(quad.flags, air.flags);
  for (std::size_t p = 0; p < air.distance_m.size(); ++p) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(quad.distance_m[p]),
              std::bit_cast<std::uint64_t>(air.distance_m[p]));
  }
}

TEST(Reduction, ZeroSlopeEqualsAir) {
  const auto p = testing::panel_case(1.0, 7);
  const auto& f = fixture();
  auto quad = quadspectral(p.cube, f.alpha, f.bands, f.air_temperature, 0.0);
  auto air = bispectral_air(p.cube, f.alpha, f.bands, f.air_temperature);
  EXPECT_EQ(quad.flags, air.flags);
  for (std::size_t x = 0; x < air.distance_m.size(); ++x) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(quad.distance_m[x]),
              std::bit_cast<std::uint64_t>(air.distance_m[x]));
  }
}

TEST(Reduction, ZeroAirRadianceMakesAirEqualHot) {
  const auto c = testing::hot_exact_case();
  const auto& f = fixture();
  auto hot = bispectral_hot(c.cube, f.alpha, f.bands);
  auto air = bispectral_air(c.cube, f.alpha, f.bands, c.air_temperature);
  EXPECT_EQ(hot.distance_m, air.distance_m);
}

TEST(BispectralHot, WorkedExample) {
  const auto& f = fixture();
  const double a1 = f.alpha[f.bands.i1];
  const double a2 = f.alpha[f.bands.i2];
  // L2 / L1 = 10^(-(a2 - a1) * 25 / 10).
  const double l1 = 500.0;
  const double l2 = l1 * std::pow(10.0, -(a2 - a1) * 25.0 / 10.0);
  auto est = bispectral_hot(band_cube({{l1, l2, 1, 1, 1}, {400, 400, 1, 1, 1}}, f.air_temperature),
                            f.alpha, f.bands);
  EXPECT_NEAR(est.distance_m(0, 0), 25.0, 1e-10);
  EXPECT_EQ(est.flags(0, 1), RangeFlag::valid);
  EXPECT_EQ(est.distance_m(0, 1), 0.0);
}

TEST(BispectralHot, FlagsNonPositiveRatio) {
  const auto& f = fixture();
  auto est = bispectral_hot(
      band_cube({{500, -1, 1, 1, 1}, {0, 0, 1, 1, 1}, {600, 500, 1, 1, 1}}, f.air_temperature),
      f.alpha, f.bands);
  EXPECT_EQ(est.flags(0, 0), RangeFlag::nonpositive_ratio);
  EXPECT_EQ(est.flags(0, 1), RangeFlag::nonpositive_ratio);
  EXPECT_TRUE(std::isnan(est.distance_m(0, 0)));
  // L2 < L1 means a negative range: kept but flagged.
  EXPECT_EQ(est.flags(0, 2), RangeFlag::clipped);
  EXPECT_LT(est.distance_m(0, 2), 0.0);
  EXPECT_EQ(est.valid_count(), 0u);
}

TEST(BispectralAir, FlagsZeroDenominator) {
  const auto& f = fixture();
  const double b1 = planck(8.42, f.air_temperature);
  auto est = bispectral_air(band_cube({{b1, 500, 1, 1, 1}, {b1 + 1e-7, 500, 1, 1, 1}}, f.air_temperature),
                            f.alpha, f.bands, f.air_temperature);
  EXPECT_EQ(est.flags(0, 0), RangeFlag::zero_denominator);
  EXPECT_EQ(est.flags(0, 1), RangeFlag::zero_denominator);
}

TEST(BispectralAir, ColdObjectGivesPositiveRatio) {
  const auto c = testing::quad_exact_case();
  const auto& f = fixture();
  auto est = bispectral_air(c.cube, f.alpha, f.bands, c.air_temperature);
  // Odd pixels are colder than the air; both terms negative, ratio positive.
  std::size_t cold_valid = 0;
  for (std::size_t p = 1; p < c.truth.distance_m.size(); p += 2) {
    if (est.flags[p] == RangeFlag::valid || est.flags[p] == RangeFlag::clipped) ++cold_valid;
  }
  EXPECT_EQ(cold_valid, c.truth.distance_m.size() / 2);
}

TEST(Quadspectral, RemovesSkyBiasOnPanels) {
  const auto p = testing::panel_case(0.0, 0);
  const auto& f = fixture();
  const double s = fit_ozone_slope(f.downwelling, f.bands).slope;
  auto quad = quadspectral(p.cube, f.alpha, f.bands, f.air_temperature, s);
  auto air = bispectral_air(p.cube, f.alpha, f.bands, f.air_temperature);
  // Front panel, low emissivity square at (8..15, 0..7), truth 31 m.
  double quad_err = 0.0;
  double air_err = 0.0;
  for (std::size_t i = 8; i < 16; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      quad_err += std::abs(quad.distance_m(i, j) - 31.0);
      air_err += std::abs(air.distance_m(i, j) - 31.0);
    }
  }
  EXPECT_LT(quad_err, air_err / 4.0);
}

TEST(Quadspectral, DecreasesWithNumerator) {
  const auto& f = fixture();
  const double b1 = planck(8.42, f.air_temperature);
  const double b2 = planck(8.46, f.air_temperature);
  std::vector<std::array<double, 5>> px;
  for (int n = 1; n <= 10; ++n) px.push_back({b1 + 50.0, b2 + 50.0 - 3.0 * n, 10, 10, 1});
  auto est = quadspectral(band_cube(px, f.air_temperature), f.alpha, f.bands, f.air_temperature,
                          1.0);
  for (std::size_t j = 1; j < px.size(); ++j) {
    EXPECT_LT(est.distance_m(0, j), est.distance_m(0, j - 1));
  }
}

TEST(Estimators, ScaleWithAttenuationContrast) {
  const auto c = testing::hot_exact_case();
  const auto& f = fixture();
  std::vector<double> doubled(f.alpha.spectrum().values().begin(),
                              f.alpha.spectrum().values().end());
  for (double& a : doubled) a *= 2.0;
  AttenuationSpectrum alpha2(Spectrum(f.grid, doubled, Unit::db_per_m));
  auto one = bispectral_hot(c.cube, f.alpha, f.bands);
  auto two = bispectral_hot(c.cube, alpha2, f.bands);
  for (std::size_t p = 0; p < one.distance_m.size(); ++p) {
    EXPECT_NEAR(two.distance_m[p], one.distance_m[p] / 2.0, 1e-12 * one.distance_m[p]);
  }
}

TEST(Estimators, RejectEqualAttenuation) {
  const auto& f = fixture();
  std::vector<double> a(f.grid.size(), 0.05);
  AttenuationSpectrum flat(Spectrum(f.grid, a, Unit::db_per_m));
  auto cube = band_cube({{1, 1, 1, 1, 1}}, f.air_temperature);
  EXPECT_THROW(bispectral_hot(cube, flat, f.bands), Error);
}

TEST(AirTemperature, ExactWhenSaturatedBandIsOpaque) {
  const auto& f = fixture();
  std::vector<double> a(f.alpha.spectrum().values().begin(), f.alpha.spectrum().values().end());
  a[f.bands.isat] = 1e6;
  AttenuationSpectrum opaque(Spectrum(f.grid, a, Unit::db_per_m));
  auto p = testing::panel_case(0.0, 0);
  auto cube = synthesize_cube(p.scene.truth, opaque, f.downwelling, f.air_temperature, 0.0, 0);
  const double t = estimate_air_temperature(cube, f.bands).kelvin();
  EXPECT_NEAR(t, f.air_temperature.kelvin(), 1e-12 * f.air_temperature.kelvin());
}

TEST(AirTemperature, RobustToNoise) {
  const auto& f = fixture();
  auto p = testing::panel_case(1.0, 3);
  const double t = estimate_air_temperature(p.cube, f.bands).kelvin();
  EXPECT_NEAR(t, f.air_temperature.kelvin(), 0.1);
}

TEST(AirTemperature, MedianOfEvenCountAndAllInvalid) {
  const auto& f = fixture();
  const double l_a = planck(13.2, 280.0);
  const double l_b = planck(13.2, 290.0);
  auto t = estimate_air_temperature(
      band_cube({{1, 1, 1, 1, l_a}, {1, 1, 1, 1, l_b}, {1, 1, 1, 1, -5.0}}, f.air_temperature),
      f.bands);
  EXPECT_NEAR(t.kelvin(), 285.0, 1e-9);
  try {
    estimate_air_temperature(band_cube({{1, 1, 1, 1, 0.0}}, f.air_temperature), f.bands);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::all_invalid);
  }
}

// Long double normal equations for a through-origin fit.
double oracle_slope(const DownwellingSet& dw, const BandSelection& b) {
  long double sxy = 0;
  long double sxx = 0;
  for (std::size_t q = 0; q < dw.size(); ++q) {
    const auto& r = dw.radiance(q);
    const long double x = static_cast<long double>(r[b.i4]) - r[b.i3];
    const long double y = static_cast<long double>(r[b.i2]) - r[b.i1];
    sxy += x * y;
    sxx += x * x;
  }
  return static_cast<double>(sxy / sxx);
}

DownwellingSet proportional_sky(std::size_t count, double ratio, std::uint64_t seed) {
  const auto& f = fixture();
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> angles;
  std::vector<Spectrum> spectra;
  for (std::size_t q = 0; q < count; ++q) {
    angles.push_back(80.0 * static_cast<double>(q) / static_cast<double>(count));
    Spectrum s(f.grid, std::vector<double>(f.grid.size(), 300.0), Unit::microflick);
    const double base = 200.0 + 300.0 * u(gen);
    const double dx = -(5.0 + 40.0 * u(gen));
    s[f.bands.i3] = base;
    s[f.bands.i4] = base + dx;
    s[f.bands.i1] = base + 50.0;
    s[f.bands.i2] = base + 50.0 + ratio * dx;
    spectra.push_back(s);
  }
  return DownwellingSet(angles, spectra);
}

TEST(OzoneSlope, RecoversConstructedProportion) {
  const auto& f = fixture();
  for (std::size_t count : {2u, 3u, 10u, 40u}) {
    auto dw = proportional_sky(count, 0.94, count);
    auto fit = fit_ozone_slope(dw, f.bands);
    EXPECT_NEAR(fit.slope, 0.94, 1e-9);
    EXPECT_NEAR(fit.slope, oracle_slope(dw, f.bands), 1e-12);
    EXPECT_LT(fit.residual_rms, 1e-9);
  }
}

TEST(OzoneSlope, MatchesNormalEquationsOnFixture) {
  const auto& f = fixture();
  auto fit = fit_ozone_slope(f.downwelling, f.bands);
  EXPECT_NEAR(fit.slope, oracle_slope(f.downwelling, f.bands), 1e-12);
  EXPECT_GT(fit.slope, 0.0);
}

TEST(OzoneSlope, Degenerate) {
  const auto& f = fixture();
  auto one = f.downwelling.subset(1);
  try {
    fit_ozone_slope(one, f.bands);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_fit);
  }
  Spectrum flat(f.grid, std::vector<double>(f.grid.size(), 250.0), Unit::microflick);
  DownwellingSet zero({0.0, 45.0}, {flat, flat});
  try {
    fit_ozone_slope(zero, f.bands);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_fit);
  }
}

TEST(OzoneDifference, IsAbsoluteBandDifference) {
  const auto& f = fixture();
  auto map = ozone_difference_map(
      band_cube({{1, 1, 10, 7, 1}, {1, 1, 7, 10, 1}, {1, 1, 4, 4, 1}}, f.air_temperature), f.bands);
  EXPECT_EQ(map(0, 0), 3.0);
  EXPECT_EQ(map(0, 1), 3.0);
  EXPECT_EQ(map(0, 2), 0.0);
}

}  // namespace
}  // namespace lwir
