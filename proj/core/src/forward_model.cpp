#include "lwir/forward_model.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "lwir/error.hpp"
#include "lwir/parallel.hpp"

namespace lwir {
namespace {

constexpr double kPi = std::numbers::pi;
// Slack on sum(Omega) <= pi for sums that are pi up to rounding.
constexpr double kSolidAngleSlack = 1e-12;

void check_omegas(std::span<const double> omegas) {
  double sum = 0.0;
  for (std::size_t q = 0; q < omegas.size(); ++q) {
    if (!(omegas[q] >= 0.0)) {
      fail(ErrorKind::constraint, "projected solid angle " + std::to_string(q) + " is negative");
    }
    sum += omegas[q];
  }
  if (sum > kPi * (1.0 + kSolidAngleSlack)) {
    fail(ErrorKind::constraint,
         "projected solid angles sum to " + std::to_string(sum) + " > pi");
  }
}

}  // namespace

void SceneTruth::validate(std::size_t bands, std::size_t angles) const {
  const std::size_t m = distance_m.rows();
  const std::size_t n = distance_m.cols();
  auto same_plane = [&](std::size_t r, std::size_t c) { return r == m && c == n; };
  if (m == 0 || n == 0) fail(ErrorKind::dimension_mismatch, "scene truth is empty");
  if (!same_plane(temperature_k.rows(), temperature_k.cols()) ||
      !same_plane(emissivity.rows(), emissivity.cols()) ||
      !same_plane(solid_angles.rows(), solid_angles.cols()) ||
      !same_plane(ground_ambient.rows(), ground_ambient.cols())) {
    fail(ErrorKind::dimension_mismatch, "scene truth maps disagree on M x N");
  }
  if (emissivity.depth() != bands || ground_ambient.depth() != bands) {
    fail(ErrorKind::dimension_mismatch, "scene truth has " + std::to_string(emissivity.depth()) +
                                            " emissivity bands, grid has " + std::to_string(bands));
  }
  if (solid_angles.depth() != angles) {
    fail(ErrorKind::dimension_mismatch, "scene truth has " +
                                            std::to_string(solid_angles.depth()) +
                                            " solid angles per pixel, downwelling set has " +
                                            std::to_string(angles));
  }
  for (std::size_t p = 0; p < m * n; ++p) {
    if (!(distance_m[p] >= 0.0) || !std::isfinite(distance_m[p])) {
      fail(ErrorKind::constraint, "distance must be finite and >= 0 at pixel " + std::to_string(p));
    }
    if (!(temperature_k[p] > 0.0)) {
      fail(ErrorKind::constraint, "temperature must be > 0 at pixel " + std::to_string(p));
    }
    for (double e : emissivity.pixel(p)) {
      if (!(e >= 0.0 && e <= 1.0)) {
        fail(ErrorKind::constraint, "emissivity outside [0, 1] at pixel " + std::to_string(p));
      }
    }
    check_omegas(solid_angles.pixel(p));
  }
}

RadianceModel::RadianceModel(const AttenuationSpectrum& alpha,
                             const std::optional<DownwellingSet>& downwelling,
                             Temperature air_temperature)
    : grid_(alpha.grid()), air_temperature_(air_temperature) {
  const std::size_t k_bands = alpha.size();
  alpha_.assign(alpha.spectrum().values().begin(), alpha.spectrum().values().end());
  air_planck_.resize(k_bands);
  for (std::size_t k = 0; k < k_bands; ++k) air_planck_[k] = planck(grid_[k], air_temperature);
  if (downwelling) {
    if (!(downwelling->grid() == grid_)) {
      fail(ErrorKind::dimension_mismatch, "downwelling grid differs from attenuation grid");
    }
    for (const auto& s : downwelling->radiances()) {
      sky_.emplace_back(s.values().begin(), s.values().end());
    }
  }
}

void RadianceModel::reflected(std::span<const double> emissivity, std::span<const double> omegas,
                              std::span<const double> ground, std::span<double> out) const {
  double covered = 0.0;
  for (double o : omegas) covered += o / kPi;
  const double remainder = std::max(0.0, 1.0 - covered);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double incoming = 0.0;
    for (std::size_t q = 0; q < omegas.size(); ++q) incoming += (omegas[q] / kPi) * sky_[q][k];
    if (!ground.empty()) incoming += remainder * ground[k];
    out[k] = (1.0 - emissivity[k]) * incoming;
  }
}

void RadianceModel::reflected(std::span<const double> emissivity, std::span<const double> omegas,
                              GroundFill fill, std::span<double> out) const {
  reflected(emissivity, omegas,
            fill == GroundFill::ambient ? std::span<const double>(air_planck_)
                                        : std::span<const double>(),
            out);
}

void RadianceModel::observed(double distance_m, double temperature_k,
                             std::span<const double> emissivity, std::span<const double> reflected,
                             std::span<double> out) const {
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double tau = std::pow(10.0, -alpha_[k] * distance_m / 10.0);
    const double leaving = emissivity[k] * planck(grid_[k], temperature_k) + reflected[k];
    out[k] = tau * leaving + (1.0 - tau) * air_planck_[k];
  }
}

Spectrum reflected_radiance(const Spectrum& emissivity, std::span<const double> omegas,
                            const std::optional<DownwellingSet>& downwelling,
                            const Spectrum& ground_ambient) {
  const std::size_t q_count = downwelling ? downwelling->size() : 0;
  if (omegas.size() != q_count) {
    fail(ErrorKind::dimension_mismatch, "got " + std::to_string(omegas.size()) +
                                            " solid angles for " + std::to_string(q_count) +
                                            " downwelling spectra");
  }
  if (!(emissivity.grid() == ground_ambient.grid()) ||
      (downwelling && !(downwelling->grid() == emissivity.grid()))) {
    fail(ErrorKind::dimension_mismatch, "reflected_radiance inputs are on different grids");
  }
  check_omegas(omegas);
  const Spectrum zero_alpha(emissivity.grid(), Unit::db_per_m);
  // Air temperature is irrelevant for the reflected term.
  const RadianceModel model(AttenuationSpectrum(zero_alpha), downwelling, Temperature(1.0));
  Spectrum out(emissivity.grid(), Unit::microflick);
  model.reflected(emissivity.values(), omegas, ground_ambient.values(), out.values());
  return out;
}

Spectrum observed_radiance(const PixelTruth& pixel, const AttenuationSpectrum& alpha,
                           const std::optional<DownwellingSet>& downwelling,
                           Temperature air_temperature) {
  if (!(pixel.distance_m >= 0.0)) fail(ErrorKind::domain, "distance must be >= 0");
  for (double e : pixel.emissivity.values()) {
    if (!(e >= 0.0 && e <= 1.0)) fail(ErrorKind::constraint, "emissivity outside [0, 1]");
  }
  if (!(pixel.emissivity.grid() == alpha.grid())) {
    fail(ErrorKind::dimension_mismatch, "emissivity and attenuation grids differ");
  }
  const Spectrum refl =
      reflected_radiance(pixel.emissivity, pixel.omegas, downwelling, pixel.ground_ambient);
  const RadianceModel model(alpha, downwelling, air_temperature);
  Spectrum out(alpha.grid(), Unit::microflick);
  model.observed(pixel.distance_m, pixel.temperature.kelvin(), pixel.emissivity.values(),
                 refl.values(), out.values());
  return out;
}

std::uint64_t pixel_seed(std::uint64_t seed, std::uint64_t pixel_index) noexcept {
  // splitmix64 finaliser over the combined key.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (pixel_index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SceneCube synthesize_cube(const SceneTruth& truth, const AttenuationSpectrum& alpha,
                          const std::optional<DownwellingSet>& downwelling,
                          Temperature air_temperature, double noise_sigma, std::uint64_t seed,
                          unsigned threads) {
  const std::size_t k_bands = alpha.size();
  truth.validate(k_bands, downwelling ? downwelling->size() : 0);
  if (!(noise_sigma >= 0.0)) fail(ErrorKind::domain, "noise sigma must be >= 0");
  const RadianceModel model(alpha, downwelling, air_temperature);
  SceneCube cube{Cube3<double>(truth.rows(), truth.cols(), k_bands), alpha.grid(),
                 air_temperature, noise_sigma};
  parallel_for(truth.rows() * truth.cols(), threads, [&](std::size_t p) {
    std::vector<double> refl(k_bands);
    model.reflected(truth.emissivity.pixel(p), truth.solid_angles.pixel(p),
                    truth.ground_ambient.pixel(p), refl);
    auto out = cube.radiance.pixel(p);
    model.observed(truth.distance_m[p], truth.temperature_k[p], truth.emissivity.pixel(p), refl,
                   out);
    if (noise_sigma > 0.0) {
      std::mt19937_64 gen(pixel_seed(seed, p));
      std::normal_distribution<double> noise(0.0, noise_sigma);
      for (double& v : out) v += noise(gen);
    }
  });
  return cube;
}

std::vector<double> sky_solid_angles(std::span<const double> zenith_angles_deg,
                                     SurfaceOrientation orientation) {
  const std::size_t q_count = zenith_angles_deg.size();
  std::vector<double> edges(q_count + 1);
  edges.front() = 0.0;
  edges.back() = kPi / 2.0;
  for (std::size_t q = 1; q < q_count; ++q) {
    edges[q] = 0.5 * (zenith_angles_deg[q - 1] + zenith_angles_deg[q]) * kPi / 180.0;
  }
  auto cumulative = [orientation](double theta) {
    if (orientation == SurfaceOrientation::horizontal) {
      const double s = std::sin(theta);
      return kPi * s * s;
    }
    return theta - std::sin(theta) * std::cos(theta);
  };
  std::vector<double> out(q_count);
  for (std::size_t q = 0; q < q_count; ++q) out[q] = cumulative(edges[q + 1]) - cumulative(edges[q]);
  return out;
}

}  // namespace lwir
