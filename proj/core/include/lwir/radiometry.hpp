#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace lwir {

// CODATA 2018 exact SI values.
struct PhysicalConstants {
  static constexpr double planck = 6.62607015e-34;        // J s
  static constexpr double speed_of_light = 299792458.0;   // m / s
  static constexpr double boltzmann = 1.380649e-23;       // J / K
};

// Radiance scale: 1 W m^-2 sr^-1 m^-1 equals 1e-4 microflick
// (uW sr^-1 cm^-2 um^-1).
inline constexpr double kMicroflickPerSi = 1e-4;

double si_to_microflick(double si_radiance) noexcept;
double microflick_to_si(double microflick) noexcept;

class Temperature {
 public:
  // Throws ErrorKind::domain unless kelvin > 0 and finite.
  explicit Temperature(double kelvin);

  double kelvin() const noexcept { return kelvin_; }

  friend auto operator<=>(const Temperature&, const Temperature&) = default;

 private:
  double kelvin_;
};

// Strictly increasing wavelength samples in micrometres. Copies share storage.
class SpectralGrid {
 public:
  explicit SpectralGrid(std::vector<double> wavelengths_um);

  std::size_t size() const noexcept { return wavelengths_->size(); }
  double operator[](std::size_t k) const { return (*wavelengths_)[k]; }
  std::span<const double> wavelengths() const noexcept { return *wavelengths_; }

  // Index of the sample closest to `wavelength_um`.
  std::size_t nearest_index(double wavelength_um) const;
  // Index of a sample within `tolerance_um` of `wavelength_um`; throws
  // ErrorKind::domain when the wavelength is not on the grid.
  std::size_t index_of(double wavelength_um, double tolerance_um = 1e-6) const;

  friend bool operator==(const SpectralGrid& a, const SpectralGrid& b) {
    return a.wavelengths_ == b.wavelengths_ || *a.wavelengths_ == *b.wavelengths_;
  }

 private:
  std::shared_ptr<const std::vector<double>> wavelengths_;
};

enum class Unit { microflick, db_per_m, dimensionless };

std::string_view to_string(Unit unit) noexcept;
// Throws ErrorKind::parse on an unknown tag.
Unit parse_unit(std::string_view tag);

class Spectrum {
 public:
  Spectrum(SpectralGrid grid, Unit unit);
  Spectrum(SpectralGrid grid, std::vector<double> values, Unit unit);

  const SpectralGrid& grid() const noexcept { return grid_; }
  Unit unit() const noexcept { return unit_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  friend bool operator==(const Spectrum&, const Spectrum&) = default;

 private:
  SpectralGrid grid_;
  std::vector<double> values_;
  Unit unit_;
};

// Planck spectral radiance B(lambda; T) in microflicks.
double planck(double wavelength_um, Temperature t);
double planck(double wavelength_um, double kelvin);

// Planck radiance sampled on every grid wavelength.
Spectrum planck(const SpectralGrid& grid, Temperature t);

// Exact inverse of planck(): the temperature whose blackbody radiance at
// `wavelength_um` equals `radiance_microflick`. Throws ErrorKind::domain for
// non-positive radiance.
Temperature brightness_temperature(double wavelength_um, double radiance_microflick);

// dB/dT in microflick per kelvin.
double planck_dT(double wavelength_um, Temperature t);
double planck_dT(double wavelength_um, double kelvin);

}  // namespace lwir
