#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lwir/eval.hpp"
#include "lwir/forward_model.hpp"

namespace lwir {

struct BuiltinScene {
  std::string name;
  SceneTruth truth;
  std::vector<PatchSpec> patches;
};

std::vector<std::string> builtin_scene_names();

// Built-in scenes:
//   "panels": 32 x 32. Grass plane (eps 0.98, horizontal) in the top and
//     bottom eight rows, sloping away from the sensor; rows 8-23 hold two
//     vertical checkerboard panels (eps 0.6 / 0.9 in 8 x 8 squares, 5 K below
//     air temperature), the left one at 31.0 m, the right one at 46.5 m.
//   "grass": 16 x 16 horizontal grass plane with distance rising row by row.
// Solid angles are split over `zenith_angles_deg` by surface orientation; the
// hemisphere remainder is filled with B(T_air). Throws ErrorKind::domain for
// an unknown name.
BuiltinScene make_scene(std::string_view name, const SpectralGrid& grid,
                        std::span<const double> zenith_angles_deg, Temperature air_temperature);

}  // namespace lwir
