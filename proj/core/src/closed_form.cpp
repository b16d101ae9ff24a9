#include "lwir/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lwir/error.hpp"

namespace lwir {
namespace {

struct RatioTerms {
  double numerator;
  double denominator;
};

// Shared tail of all three estimators: flag, then invert Beer's law.
template <typename TermsFn>
RangeMap invert_ratio(const SceneCube& cube, const AttenuationSpectrum& alpha,
                      const BandSelection& bands, bool check_zero_denominator, TermsFn terms) {
  if (!(cube.grid == alpha.grid())) {
    fail(ErrorKind::dimension_mismatch, "cube and attenuation grids differ");
  }
  const double a1 = alpha[bands.i1];
  const double a2 = alpha[bands.i2];
  if (a1 == a2) fail(ErrorKind::domain, "alpha(lambda1) must differ from alpha(lambda2)");
  const double scale = -10.0 / (a2 - a1);

  const std::size_t m = cube.radiance.rows();
  const std::size_t n = cube.radiance.cols();
  RangeMap out{Map2<double>(m, n, std::nan("")), Map2<RangeFlag>(m, n, RangeFlag::valid)};
  for (std::size_t p = 0; p < m * n; ++p) {
    const auto px = cube.radiance.pixel(p);
    const RatioTerms t = terms(px);
    if (check_zero_denominator && !(std::abs(t.denominator) >= kZeroDenominatorTolerance)) {
      out.flags[p] = RangeFlag::zero_denominator;
      continue;
    }
    const double ratio = t.numerator / t.denominator;
    if (!(ratio > 0.0) || !std::isfinite(ratio)) {
      out.flags[p] = RangeFlag::nonpositive_ratio;
      continue;
    }
    const double d = scale * std::log10(ratio);
    out.distance_m[p] = d;
    if (!std::isfinite(d) || d < 0.0) out.flags[p] = RangeFlag::clipped;
  }
  return out;
}

}  // namespace

BandSelection BandSelection::resolve(const SpectralGrid& grid, const BandWavelengths& w,
                                     double tolerance_um) {
  if (w.lambda1 == w.lambda2) fail(ErrorKind::domain, "lambda1 and lambda2 must differ");
  BandSelection b;
  b.wavelengths = w;
  b.i1 = grid.index_of(w.lambda1, tolerance_um);
  b.i2 = grid.index_of(w.lambda2, tolerance_um);
  b.i3 = grid.index_of(w.lambda3, tolerance_um);
  b.i4 = grid.index_of(w.lambda4, tolerance_um);
  b.isat = grid.index_of(w.lambda_sat, tolerance_um);
  return b;
}

std::size_t RangeMap::valid_count() const {
  return static_cast<std::size_t>(
      std::count(flags.values().begin(), flags.values().end(), RangeFlag::valid));
}

Temperature estimate_air_temperature(const SceneCube& cube, const BandSelection& bands) {
  const double wavelength = cube.grid[bands.isat];
  std::vector<double> temps;
  temps.reserve(cube.radiance.pixels());
  for (std::size_t p = 0; p < cube.radiance.pixels(); ++p) {
    const double l = cube.radiance.pixel(p)[bands.isat];
    if (l > 0.0 && std::isfinite(l)) temps.push_back(brightness_temperature(wavelength, l).kelvin());
  }
  if (temps.empty()) {
    fail(ErrorKind::all_invalid, "no pixel has positive radiance at the saturated band");
  }
  const std::size_t mid = temps.size() / 2;
  std::nth_element(temps.begin(), temps.begin() + mid, temps.end());
  double median = temps[mid];
  if (temps.size() % 2 == 0) {
    const double lower = *std::max_element(temps.begin(), temps.begin() + mid);
    median = 0.5 * (lower + median);
  }
  return Temperature(median);
}

RangeMap bispectral_hot(const SceneCube& cube, const AttenuationSpectrum& alpha,
                        const BandSelection& bands) {
  return invert_ratio(cube, alpha, bands, false, [&](std::span<const double> px) {
    return RatioTerms{px[bands.i2], px[bands.i1]};
  });
}

RangeMap bispectral_air(const SceneCube& cube, const AttenuationSpectrum& alpha,
                        const BandSelection& bands, Temperature air_temperature) {
  const double b1 = planck(cube.grid[bands.i1], air_temperature);
  const double b2 = planck(cube.grid[bands.i2], air_temperature);
  return invert_ratio(cube, alpha, bands, true, [&](std::span<const double> px) {
    return RatioTerms{px[bands.i2] - b2, px[bands.i1] - b1};
  });
}

OzoneSlope fit_ozone_slope(const DownwellingSet& downwelling, const BandSelection& bands) {
  if (downwelling.size() < 2) {
    fail(ErrorKind::degenerate_fit, "ozone slope fit needs at least two sky angles");
  }
  double sxy = 0.0;
  double sxx = 0.0;
  std::vector<double> x(downwelling.size());
  std::vector<double> y(downwelling.size());
  for (std::size_t q = 0; q < downwelling.size(); ++q) {
    const Spectrum& r = downwelling.radiance(q);
    y[q] = r[bands.i2] - r[bands.i1];
    x[q] = r[bands.i4] - r[bands.i3];
    sxy += x[q] * y[q];
    sxx += x[q] * x[q];
  }
  if (sxx == 0.0) fail(ErrorKind::degenerate_fit, "ozone difference is zero at every angle");
  OzoneSlope out;
  out.slope = sxy / sxx;
  double ss = 0.0;
  for (std::size_t q = 0; q < x.size(); ++q) {
    const double r = y[q] - out.slope * x[q];
    ss += r * r;
  }
  out.residual_rms = std::sqrt(ss / static_cast<double>(x.size()));
  return out;
}

RangeMap quadspectral(const SceneCube& cube, const AttenuationSpectrum& alpha,
                      const BandSelection& bands, Temperature air_temperature, double slope) {
  const double b1 = planck(cube.grid[bands.i1], air_temperature);
  const double b2 = planck(cube.grid[bands.i2], air_temperature);
  return invert_ratio(cube, alpha, bands, true, [&](std::span<const double> px) {
    const double bias = slope * (px[bands.i4] - px[bands.i3]);
    return RatioTerms{(px[bands.i2] - b2) - bias, px[bands.i1] - b1};
  });
}

Map2<double> ozone_difference_map(const SceneCube& cube, const BandSelection& bands) {
  Map2<double> out(cube.radiance.rows(), cube.radiance.cols());
  for (std::size_t p = 0; p < cube.radiance.pixels(); ++p) {
    const auto px = cube.radiance.pixel(p);
    out[p] = std::abs(px[bands.i4] - px[bands.i3]);
  }
  return out;
}

}  // namespace lwir
