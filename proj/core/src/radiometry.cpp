#include "lwir/radiometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lwir/error.hpp"

namespace lwir {
namespace {

using C = PhysicalConstants;

// First radiation constant 2hc^2 rescaled so that wavelengths in um give
// microflicks: the 1e30 from um^5 times the 1e-4 radiance scale.
constexpr double kC1 = 2.0 * C::planck * C::speed_of_light * C::speed_of_light * 1e26;
// Second radiation constant hc/kB in um K.
constexpr double kC2 = C::planck * C::speed_of_light / C::boltzmann * 1e6;

void check_wavelength(double wavelength_um) {
  if (!(wavelength_um > 0.0) || !std::isfinite(wavelength_um)) {
    fail(ErrorKind::domain,
         "wavelength must be positive and finite, got " + std::to_string(wavelength_um));
  }
}

void check_kelvin(double kelvin) {
  if (!(kelvin > 0.0) || !std::isfinite(kelvin)) {
    fail(ErrorKind::domain,
         "temperature must be positive and finite, got " + std::to_string(kelvin));
  }
}

}  // namespace

double si_to_microflick(double si_radiance) noexcept {
  return si_radiance * kMicroflickPerSi;
}

double microflick_to_si(double microflick) noexcept {
  return microflick / kMicroflickPerSi;
}

Temperature::Temperature(double kelvin) : kelvin_(kelvin) { check_kelvin(kelvin); }

SpectralGrid::SpectralGrid(std::vector<double> wavelengths_um) {
  if (wavelengths_um.empty()) {
    fail(ErrorKind::domain, "spectral grid needs at least one wavelength");
  }
  for (std::size_t k = 0; k < wavelengths_um.size(); ++k) {
    const double w = wavelengths_um[k];
    if (!(w > 0.0) || !std::isfinite(w)) {
      fail(ErrorKind::domain, "grid wavelength " + std::to_string(k) +
                                  " must be positive and finite");
    }
    if (k > 0 && !(w > wavelengths_um[k - 1])) {
      fail(ErrorKind::non_monotone_grid,
           "grid wavelengths must be strictly increasing at index " + std::to_string(k));
    }
  }
  wavelengths_ = std::make_shared<const std::vector<double>>(std::move(wavelengths_um));
}

std::size_t SpectralGrid::nearest_index(double wavelength_um) const {
  const auto& w = *wavelengths_;
  auto it = std::lower_bound(w.begin(), w.end(), wavelength_um);
  if (it == w.end()) return w.size() - 1;
  if (it == w.begin()) return 0;
  const auto hi = static_cast<std::size_t>(it - w.begin());
  return (w[hi] - wavelength_um) < (wavelength_um - w[hi - 1]) ? hi : hi - 1;
}

std::size_t SpectralGrid::index_of(double wavelength_um, double tolerance_um) const {
  const std::size_t k = nearest_index(wavelength_um);
  if (std::abs((*wavelengths_)[k] - wavelength_um) > tolerance_um) {
    fail(ErrorKind::domain,
         "wavelength " + std::to_string(wavelength_um) + " um is not on the grid");
  }
  return k;
}

std::string_view to_string(Unit unit) noexcept {
  switch (unit) {
    case Unit::microflick: return "microflick";
    case Unit::db_per_m: return "dB/m";
    case Unit::dimensionless: return "dimensionless";
  }
  return "unknown";
}

Unit parse_unit(std::string_view tag) {
  if (tag == "microflick") return Unit::microflick;
  if (tag == "dB/m") return Unit::db_per_m;
  if (tag == "dimensionless") return Unit::dimensionless;
  fail(ErrorKind::parse, "unknown unit tag '" + std::string(tag) + "'");
}

Spectrum::Spectrum(SpectralGrid grid, Unit unit)
    : grid_(std::move(grid)), values_(grid_.size(), 0.0), unit_(unit) {}

Spectrum::Spectrum(SpectralGrid grid, std::vector<double> values, Unit unit)
    : grid_(std::move(grid)), values_(std::move(values)), unit_(unit) {
  if (values_.size() != grid_.size()) {
    fail(ErrorKind::dimension_mismatch,
         "spectrum has " + std::to_string(values_.size()) + " values for a grid of " +
             std::to_string(grid_.size()));
  }
}

double planck(double wavelength_um, double kelvin) {
  check_wavelength(wavelength_um);
  check_kelvin(kelvin);
  const double l5 = std::pow(wavelength_um, 5);
  return kC1 / (l5 * std::expm1(kC2 / (wavelength_um * kelvin)));
}

double planck(double wavelength_um, Temperature t) { return planck(wavelength_um, t.kelvin()); }

Spectrum planck(const SpectralGrid& grid, Temperature t) {
  Spectrum out(grid, Unit::microflick);
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = planck(grid[k], t);
  return out;
}

Temperature brightness_temperature(double wavelength_um, double radiance_microflick) {
  check_wavelength(wavelength_um);
  if (!(radiance_microflick > 0.0) || !std::isfinite(radiance_microflick)) {
    fail(ErrorKind::domain, "brightness temperature needs positive radiance, got " +
                                std::to_string(radiance_microflick));
  }
  const double l5 = std::pow(wavelength_um, 5);
  return Temperature(kC2 / (wavelength_um * std::log1p(kC1 / (l5 * radiance_microflick))));
}

double planck_dT(double wavelength_um, double kelvin) {
  const double b = planck(wavelength_um, kelvin);
  const double x = kC2 / (wavelength_um * kelvin);
  // x e^x / (e^x - 1) written without overflow for large x.
  return b * x / (kelvin * -std::expm1(-x));
}

double planck_dT(double wavelength_um, Temperature t) { return planck_dT(wavelength_um, t.kelvin()); }

}  // namespace lwir
