#include "lwir/scenes.hpp"

#include <algorithm>
#include <string>

#include "lwir/error.hpp"

namespace lwir {
namespace {

struct Material {
  double distance_m;
  double temperature_k;
  double emissivity;
  SurfaceOrientation orientation;
};

SceneTruth blank_truth(std::size_t m, std::size_t n, std::size_t k, std::size_t q) {
  return SceneTruth{Map2<double>(m, n), Map2<double>(m, n), Cube3<double>(m, n, k),
                    Cube3<double>(m, n, q), Cube3<double>(m, n, k)};
}

void paint(SceneTruth& truth, std::size_t i, std::size_t j, const Material& mat,
           std::span<const double> omegas, std::span<const double> ambient) {
  truth.distance_m(i, j) = mat.distance_m;
  truth.temperature_k(i, j) = mat.temperature_k;
  auto eps = truth.emissivity.pixel(i, j);
  std::fill(eps.begin(), eps.end(), mat.emissivity);
  auto om = truth.solid_angles.pixel(i, j);
  std::copy(omegas.begin(), omegas.end(), om.begin());
  auto g = truth.ground_ambient.pixel(i, j);
  std::copy(ambient.begin(), ambient.end(), g.begin());
}

BuiltinScene panels(const SpectralGrid& grid, std::span<const double> zenith, Temperature t_air) {
  constexpr std::size_t size = 32;
  const double ta = t_air.kelvin();
  const auto horizontal = sky_solid_angles(zenith, SurfaceOrientation::horizontal);
  const auto vertical = sky_solid_angles(zenith, SurfaceOrientation::vertical);
  const Spectrum ambient = planck(grid, t_air);
  BuiltinScene scene{"panels", blank_truth(size, size, grid.size(), zenith.size()), {}};
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      Material mat{};
      if (i < 8 || i >= 24) {
        const double d = i < 8 ? 90.0 - 2.5 * static_cast<double>(i)
                               : 22.0 - static_cast<double>(i - 24);
        mat = {d, ta + 1.0, 0.98, SurfaceOrientation::horizontal};
      } else {
        const bool low = ((i - 8) / 8 + j / 8) % 2 == 0;
        mat = {j < 16 ? 31.0 : 46.5, ta - 5.0, low ? 0.6 : 0.9, SurfaceOrientation::vertical};
      }
      paint(scene.truth, i, j, mat,
            mat.orientation == SurfaceOrientation::horizontal ? horizontal : vertical,
            ambient.values());
    }
  }
  scene.patches = {
      {8, 0, 8, 8, "front_06_a"},  {16, 8, 8, 8, "front_06_b"},  {8, 16, 8, 8, "rear_06_a"},
      {16, 24, 8, 8, "rear_06_b"}, {8, 8, 8, 8, "front_09_a"},   {16, 0, 8, 8, "front_09_b"},
      {8, 24, 8, 8, "rear_09_a"},  {16, 16, 8, 8, "rear_09_b"},  {0, 0, 8, 8, "grass_far"},
      {24, 0, 8, 8, "grass_near"},
  };
  return scene;
}

BuiltinScene grass(const SpectralGrid& grid, std::span<const double> zenith, Temperature t_air) {
  constexpr std::size_t size = 16;
  const auto horizontal = sky_solid_angles(zenith, SurfaceOrientation::horizontal);
  const Spectrum ambient = planck(grid, t_air);
  BuiltinScene scene{"grass", blank_truth(size, size, grid.size(), zenith.size()), {}};
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const Material mat{20.0 + 5.0 * static_cast<double>(i), t_air.kelvin() + 3.0, 0.98,
                         SurfaceOrientation::horizontal};
      paint(scene.truth, i, j, mat, horizontal, ambient.values());
    }
  }
  scene.patches = {{0, 0, 8, 8, "top_left"},
                   {0, 8, 8, 8, "top_right"},
                   {8, 0, 8, 8, "bottom_left"},
                   {8, 8, 8, 8, "bottom_right"}};
  return scene;
}

}  // namespace

std::vector<std::string> builtin_scene_names() { return {"panels", "grass"}; }

BuiltinScene make_scene(std::string_view name, const SpectralGrid& grid,
                        std::span<const double> zenith_angles_deg, Temperature air_temperature) {
  if (name == "panels") return panels(grid, zenith_angles_deg, air_temperature);
  if (name == "grass") return grass(grid, zenith_angles_deg, air_temperature);
  fail(ErrorKind::domain, "unknown built-in scene '" + std::string(name) + "'");
}

}  // namespace lwir
