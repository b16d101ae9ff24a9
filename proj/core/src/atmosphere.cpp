#include "lwir/atmosphere.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "lwir/error.hpp"

namespace lwir {
namespace {

constexpr double kFwhmToSigma = 0.42466090014400953;  // 1 / (2 sqrt(2 ln 2))
constexpr double kDbToNeper = std::numbers::ln10 / 10.0;
constexpr double kMaxZenithDeg = 89.9;

double gaussian(double x, double center, double sigma) {
  const double u = (x - center) / sigma;
  return std::exp(-0.5 * u * u);
}

// Sum of lines of one species at `wavelength_um`, optionally convolved with a
// unit-area Gaussian of standard deviation `isrf_sigma` (exact for Gaussians).
double species_profile(const AtmosphereParams& params, Species species, double wavelength_um,
                       double isrf_sigma) {
  double sum = 0.0;
  for (const auto& line : params.lines) {
    if (line.species != species) continue;
    const double sigma = std::hypot(line.width_um, isrf_sigma);
    sum += line.peak_db_per_m * (line.width_um / sigma) *
           gaussian(wavelength_um, line.center_um, sigma);
  }
  return sum;
}

double ground_level_alpha(const AtmosphereParams& params, double wavelength_um, double isrf_sigma) {
  return params.water_vapor_strength *
             species_profile(params, Species::water_vapor, wavelength_um, isrf_sigma) +
         params.carbon_dioxide_strength *
             species_profile(params, Species::carbon_dioxide, wavelength_um, isrf_sigma);
}

// Unsmoothed sky radiance at one wavelength and air mass.
double sky_radiance(const AtmosphereParams& params, double wavelength_um, double air_mass) {
  const double column_neper = params.column_length_m * kDbToNeper;
  const double tau_low = air_mass * column_neper * ground_level_alpha(params, wavelength_um, 0.0);
  const double tau_oz = air_mass * column_neper * params.ozone_strength *
                        species_profile(params, Species::ozone, wavelength_um, 0.0);
  const double t_low = std::exp(-tau_low);
  const double emis_low = -std::expm1(-tau_low);
  const double emis_oz = t_low * -std::expm1(-tau_oz);
  double out = 0.0;
  if (emis_low > 0.0) out += emis_low * planck(wavelength_um, params.sky_temperature());
  if (emis_oz > 0.0) out += emis_oz * planck(wavelength_um, params.ozone_temperature);
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& field, std::string_view source, std::size_t line_no) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != field.size()) {
    fail(ErrorKind::parse, std::string(source) + ":" + std::to_string(line_no) +
                               ": cannot parse number '" + field + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

AttenuationSpectrum::AttenuationSpectrum(Spectrum spectrum) : spectrum_(std::move(spectrum)) {
  if (spectrum_.unit() != Unit::db_per_m) {
    fail(ErrorKind::unit_mismatch, "attenuation must be in dB/m, got " +
                                       std::string(to_string(spectrum_.unit())));
  }
  for (std::size_t k = 0; k < spectrum_.size(); ++k) {
    if (!(spectrum_[k] >= 0.0)) {
      fail(ErrorKind::constraint, "attenuation must be non-negative at band " + std::to_string(k));
    }
  }
}

DownwellingSet::DownwellingSet(std::vector<double> zenith_angles_deg,
                               std::vector<Spectrum> radiances)
    : angles_(std::move(zenith_angles_deg)), radiances_(std::move(radiances)) {
  if (angles_.empty()) fail(ErrorKind::constraint, "downwelling set needs at least one angle");
  if (angles_.size() != radiances_.size()) {
    fail(ErrorKind::dimension_mismatch, "downwelling set has " + std::to_string(angles_.size()) +
                                            " angles but " + std::to_string(radiances_.size()) +
                                            " spectra");
  }
  for (std::size_t q = 0; q < angles_.size(); ++q) {
    if (!(angles_[q] >= 0.0 && angles_[q] < 90.0)) {
      fail(ErrorKind::constraint, "zenith angle " + format_double(angles_[q]) + " outside [0, 90)");
    }
    if (q > 0 && !(angles_[q] > angles_[q - 1])) {
      fail(ErrorKind::non_monotone_grid, "zenith angles must be strictly increasing");
    }
    const Spectrum& r = radiances_[q];
    if (r.unit() != Unit::microflick) {
      fail(ErrorKind::unit_mismatch, "downwelling radiance must be in microflick");
    }
    if (!(r.grid() == radiances_.front().grid())) {
      fail(ErrorKind::dimension_mismatch, "downwelling spectra must share one grid");
    }
    for (double v : r.values()) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        fail(ErrorKind::constraint, "downwelling radiance must be finite and non-negative");
      }
    }
  }
}

DownwellingSet DownwellingSet::subset(std::size_t count) const {
  if (count == 0 || count > size()) {
    fail(ErrorKind::domain, "cannot select " + std::to_string(count) + " of " +
                                std::to_string(size()) + " downwelling angles");
  }
  if (count == size()) return *this;
  std::vector<double> angles;
  std::vector<Spectrum> spectra;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t q =
        count == 1 ? 0
                   : static_cast<std::size_t>(std::lround(
                         static_cast<double>(i) * static_cast<double>(size() - 1) /
                         static_cast<double>(count - 1)));
    angles.push_back(angles_[q]);
    spectra.push_back(radiances_[q]);
  }
  return DownwellingSet(std::move(angles), std::move(spectra));
}

std::string_view to_string(Species species) noexcept {
  switch (species) {
    case Species::water_vapor: return "water_vapor";
    case Species::ozone: return "ozone";
    case Species::carbon_dioxide: return "carbon_dioxide";
  }
  return "unknown";
}

Species parse_species(std::string_view name) {
  if (name == "water_vapor" || name == "h2o") return Species::water_vapor;
  if (name == "ozone" || name == "o3") return Species::ozone;
  if (name == "carbon_dioxide" || name == "co2") return Species::carbon_dioxide;
  fail(ErrorKind::parse, "unknown species '" + std::string(name) + "'");
}

double AtmosphereParams::strength(Species species) const noexcept {
  switch (species) {
    case Species::water_vapor: return water_vapor_strength;
    case Species::ozone: return ozone_strength;
    case Species::carbon_dioxide: return carbon_dioxide_strength;
  }
  return 0.0;
}

void AtmosphereParams::validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  check(water_vapor_strength >= 0.0, "water_vapor_strength must be >= 0");
  check(ozone_strength >= 0.0, "ozone_strength must be >= 0");
  check(carbon_dioxide_strength >= 0.0, "carbon_dioxide_strength must be >= 0");
  check(isrf_fwhm_um >= 0.0, "isrf_fwhm_um must be >= 0");
  check(column_length_m >= 0.0, "column_length_m must be >= 0");
  check(air_temperature.kelvin() + sky_temperature_offset_k > 0.0,
        "sky temperature must be positive");
  // Ozone emission from above a colder layer keeps the sky monotone in angle.
  check(ozone_temperature.kelvin() <= air_temperature.kelvin() + sky_temperature_offset_k,
        "ozone_temperature must not exceed the sky temperature");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    check(lines[i].width_um > 0.0, "line " + std::to_string(i) + " width must be > 0");
    check(lines[i].peak_db_per_m >= 0.0, "line " + std::to_string(i) + " peak must be >= 0");
    check(lines[i].center_um > 0.0, "line " + std::to_string(i) + " center must be > 0");
  }
  if (!problems.empty()) {
    std::string msg = "invalid atmosphere parameters:";
    for (const auto& p : problems) msg += " " + p + ";";
    fail(ErrorKind::constraint, msg);
  }
}

std::vector<AbsorptionLine> default_lines() {
  using S = Species;
  return {
      // Water doublet: strong core just short of 8.42 um, window at 8.46 um.
      {S::water_vapor, 8.405, 0.006, 0.25},
      {S::water_vapor, 8.0839, 0.006, 0.12},
      {S::water_vapor, 8.2516, 0.006, 0.08},
      {S::water_vapor, 8.5871, 0.006, 0.05},
      {S::water_vapor, 8.7548, 0.006, 0.04},
      {S::water_vapor, 9.0065, 0.006, 0.03},
      {S::water_vapor, 9.2581, 0.006, 0.02},
      {S::water_vapor, 10.0968, 0.006, 0.015},
      {S::water_vapor, 10.9355, 0.006, 0.015},
      {S::water_vapor, 11.6903, 0.006, 0.03},
      {S::water_vapor, 12.0258, 0.006, 0.04},
      {S::water_vapor, 12.3613, 0.006, 0.06},
      {S::water_vapor, 12.6129, 0.006, 0.05},
      {S::water_vapor, 12.9484, 0.006, 0.08},
      // Broad continuum.
      {S::water_vapor, 10.6, 3.0, 3.0e-4},
      // Stratospheric ozone: core at 9.49 um, weaker shoulder beyond 9.57 um.
      {S::ozone, 9.49, 0.012, 0.03},
      {S::ozone, 9.66, 0.012, 0.015},
      // Saturated band edge used for air-temperature retrieval.
      {S::carbon_dioxide, 13.2, 0.06, 10.0},
  };
}

AtmosphereParams default_atmosphere(Temperature air_temperature) {
  AtmosphereParams p;
  p.air_temperature = air_temperature;
  p.lines = default_lines();
  return p;
}

SpectralGrid uniform_grid(double first_um, double last_um, std::size_t bands) {
  if (bands == 0) fail(ErrorKind::domain, "grid needs at least one band");
  std::vector<double> w(bands);
  for (std::size_t k = 0; k < bands; ++k) {
    w[k] = bands == 1 ? first_um
                      : first_um + (last_um - first_um) * static_cast<double>(k) /
                                       static_cast<double>(bands - 1);
  }
  return SpectralGrid(std::move(w));
}

SpectralGrid fixture_grid() {
  constexpr double kSpecial[] = {8.42, 8.46, 9.49, 9.57};
  std::vector<double> w(std::begin(kSpecial), std::end(kSpecial));
  const auto uniform = uniform_grid(8.0, 13.2, 63);
  for (double x : uniform.wavelengths()) {
    const bool clear = std::all_of(std::begin(kSpecial), std::end(kSpecial),
                                   [x](double s) { return std::abs(x - s) >= 0.025; });
    if (clear) w.push_back(x);
  }
  std::sort(w.begin(), w.end());
  return SpectralGrid(std::move(w));
}

std::vector<double> default_zenith_angles() {
  return {0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 89.0};
}

Spectrum transmittance(const AttenuationSpectrum& alpha, double distance_m) {
  if (!(distance_m >= 0.0)) {
    fail(ErrorKind::domain, "distance must be non-negative, got " + format_double(distance_m));
  }
  Spectrum out(alpha.grid(), Unit::dimensionless);
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    out[k] = std::pow(10.0, -alpha[k] * distance_m / 10.0);
  }
  return out;
}

AttenuationSpectrum synth_attenuation(const AtmosphereParams& params, const SpectralGrid& grid) {
  params.validate();
  const double isrf_sigma = params.isrf_fwhm_um * kFwhmToSigma;
  Spectrum out(grid, Unit::db_per_m);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out[k] = ground_level_alpha(params, grid[k], isrf_sigma);
  }
  return AttenuationSpectrum(std::move(out));
}

DownwellingSet synth_downwelling(const AtmosphereParams& params, const SpectralGrid& grid,
                                 std::span<const double> zenith_angles_deg) {
  params.validate();
  const double isrf_sigma = params.isrf_fwhm_um * kFwhmToSigma;
  double min_width = isrf_sigma;
  for (const auto& line : params.lines) min_width = std::min(min_width, line.width_um);
  const double step = min_width / 8.0;
  const int half_span = static_cast<int>(std::ceil(5.0 * isrf_sigma / step));

  std::vector<Spectrum> spectra;
  for (double angle : zenith_angles_deg) {
    if (!(angle >= 0.0 && angle < 90.0)) {
      fail(ErrorKind::domain, "zenith angle " + format_double(angle) + " outside [0, 90)");
    }
    const double air_mass =
        1.0 / std::cos(std::min(angle, kMaxZenithDeg) * std::numbers::pi / 180.0);
    Spectrum s(grid, Unit::microflick);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (isrf_sigma == 0.0) {
        s[k] = sky_radiance(params, grid[k], air_mass);
        continue;
      }
      // Weighted average over the instrument response; weights are positive
      // so monotonicity in angle carries over from the unsmoothed spectrum.
      double acc = 0.0;
      double norm = 0.0;
      for (int n = -half_span; n <= half_span; ++n) {
        const double w_um = grid[k] + n * step;
        if (w_um <= 0.0) continue;
        const double w = gaussian(w_um, grid[k], isrf_sigma);
        acc += w * sky_radiance(params, w_um, air_mass);
        norm += w;
      }
      s[k] = acc / norm;
    }
    spectra.push_back(std::move(s));
  }
  return DownwellingSet(std::vector<double>(zenith_angles_deg.begin(), zenith_angles_deg.end()),
                        std::move(spectra));
}

Spectrum parse_spectrum(std::string_view text, std::optional<Unit> expected_unit,
                        std::string_view source_name) {
  std::optional<Unit> unit;
  std::vector<double> wavelengths;
  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string body = trim(std::string_view(line).substr(1));
      if (body.rfind("unit:", 0) == 0) unit = parse_unit(trim(std::string_view(body).substr(5)));
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      fail(ErrorKind::parse, std::string(source_name) + ":" + std::to_string(line_no) +
                                 ": expected 2 columns (wavelength_um,value)");
    }
    const std::string lhs = trim(std::string_view(line).substr(0, comma));
    const std::string rhs = trim(std::string_view(line).substr(comma + 1));
    if (lhs.empty() || rhs.empty()) {
      fail(ErrorKind::parse, std::string(source_name) + ":" + std::to_string(line_no) +
                                 ": missing column");
    }
    const double w = parse_number(lhs, source_name, line_no);
    const double v = parse_number(rhs, source_name, line_no);
    if (!wavelengths.empty() && !(w > wavelengths.back())) {
      fail(ErrorKind::non_monotone_grid, std::string(source_name) + ":" +
                                             std::to_string(line_no) +
                                             ": wavelengths must be strictly increasing");
    }
    wavelengths.push_back(w);
    values.push_back(v);
  }
  if (!unit) fail(ErrorKind::parse, std::string(source_name) + ": missing '# unit:' header");
  if (expected_unit && *unit != *expected_unit) {
    fail(ErrorKind::unit_mismatch, std::string(source_name) + ": expected unit " +
                                       std::string(to_string(*expected_unit)) + ", file declares " +
                                       std::string(to_string(*unit)));
  }
  if (wavelengths.empty()) fail(ErrorKind::parse, std::string(source_name) + ": no data rows");
  return Spectrum(SpectralGrid(std::move(wavelengths)), std::move(values), *unit);
}

std::string format_spectrum(const Spectrum& spectrum) {
  std::string out = "# unit: " + std::string(to_string(spectrum.unit())) + "\n";
  out += "# wavelength_um,value\n";
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    out += format_double(spectrum.grid()[k]) + "," + format_double(spectrum[k]) + "\n";
  }
  return out;
}

}  // namespace lwir
