#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lwir/radiometry.hpp"

namespace lwir {

// Ground-level attenuation coefficient alpha(lambda) in dB/m, non-negative.
class AttenuationSpectrum {
 public:
  explicit AttenuationSpectrum(Spectrum spectrum);

  const Spectrum& spectrum() const noexcept { return spectrum_; }
  const SpectralGrid& grid() const noexcept { return spectrum_.grid(); }
  std::size_t size() const noexcept { return spectrum_.size(); }
  double operator[](std::size_t k) const { return spectrum_[k]; }

 private:
  Spectrum spectrum_;
};

// Sky radiance spectra indexed by zenith angle, all on one grid.
class DownwellingSet {
 public:
  DownwellingSet(std::vector<double> zenith_angles_deg, std::vector<Spectrum> radiances);

  std::size_t size() const noexcept { return angles_.size(); }
  const SpectralGrid& grid() const noexcept { return radiances_.front().grid(); }
  std::span<const double> zenith_angles_deg() const noexcept { return angles_; }
  const Spectrum& radiance(std::size_t q) const { return radiances_[q]; }
  std::span<const Spectrum> radiances() const noexcept { return radiances_; }

  // `count` angles spread evenly over the set (endpoints kept). `count` must
  // be in [1, size()].
  DownwellingSet subset(std::size_t count) const;

 private:
  std::vector<double> angles_;
  std::vector<Spectrum> radiances_;
};

enum class Species { water_vapor, ozone, carbon_dioxide };

std::string_view to_string(Species species) noexcept;
Species parse_species(std::string_view name);

// Gaussian absorption line. `width_um` is the standard deviation; `peak_db_per_m`
// is the ground-level coefficient at the centre for unit species strength.
struct AbsorptionLine {
  Species species = Species::water_vapor;
  double center_um = 0.0;
  double width_um = 0.0;
  double peak_db_per_m = 0.0;

  friend bool operator==(const AbsorptionLine&, const AbsorptionLine&) = default;
};

// Parametric stand-in for a line-by-line atmosphere. Strengths are abstract
// multipliers, not physical humidity or mixing ratios.
struct AtmosphereParams {
  Temperature air_temperature{288.0};
  double water_vapor_strength = 1.0;
  double ozone_strength = 1.0;
  double carbon_dioxide_strength = 1.0;
  std::vector<AbsorptionLine> lines;
  // Gaussian instrument response FWHM; 0 disables smoothing.
  double isrf_fwhm_um = 0.04;
  // Effective vertical path used to turn dB/m into sky optical depth.
  double column_length_m = 1000.0;
  // Lower-atmosphere emission temperature is air_temperature + this offset.
  double sky_temperature_offset_k = 0.0;
  Temperature ozone_temperature{230.0};

  Temperature sky_temperature() const {
    return Temperature(air_temperature.kelvin() + sky_temperature_offset_k);
  }
  double strength(Species species) const noexcept;
  // Throws ErrorKind::constraint listing every violated bound.
  void validate() const;
};

// Default line list: a water doublet around 8.41-8.46 um, an ozone feature over
// 9.49-9.57 um, scattered weaker water lines, a broad water continuum and a
// saturating CO2 edge at 13.2 um.
std::vector<AbsorptionLine> default_lines();
AtmosphereParams default_atmosphere(Temperature air_temperature);

// 64-band grid over 8.0-13.2 um that carries the default band wavelengths
// 8.42, 8.46, 9.49, 9.57 and 13.2 um exactly.
SpectralGrid fixture_grid();
SpectralGrid uniform_grid(double first_um, double last_um, std::size_t bands);

// Beer's law: 10^(-alpha d / 10) per band. Throws ErrorKind::domain for d < 0.
Spectrum transmittance(const AttenuationSpectrum& alpha, double distance_m);

// Ground-level attenuation from the line list; ozone never contributes.
AttenuationSpectrum synth_attenuation(const AtmosphereParams& params, const SpectralGrid& grid);

// Sky radiance per zenith angle: (1 - t) B(T_sky) + t (1 - t_oz) B(T_oz), with
// t and t_oz the lower-atmosphere and ozone transmittances along an air mass
// sec(theta) capped at 89.9 degrees.
DownwellingSet synth_downwelling(const AtmosphereParams& params, const SpectralGrid& grid,
                                 std::span<const double> zenith_angles_deg);

std::vector<double> default_zenith_angles();

// CSV spectra: "# unit: <tag>" header, then wavelength_um,value rows.
Spectrum load_spectrum(const std::filesystem::path& path, std::optional<Unit> expected_unit);
Spectrum parse_spectrum(std::string_view text, std::optional<Unit> expected_unit,
                        std::string_view source_name = "<memory>");
std::string format_spectrum(const Spectrum& spectrum);
void save_spectrum(const std::filesystem::path& path, const Spectrum& spectrum);

AttenuationSpectrum load_attenuation(const std::filesystem::path& path);

// Directory with angles.csv (zenith_deg,filename) plus one spectrum per angle.
DownwellingSet load_downwelling(const std::filesystem::path& dir);
void save_downwelling(const std::filesystem::path& dir, const DownwellingSet& set);

}  // namespace lwir
