#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "run_config.hpp"

namespace lwir::cli {

struct AtmoArgs {
  std::filesystem::path out_dir;
};

struct SynthArgs {
  std::filesystem::path atmo_dir;
  std::filesystem::path out_cube;
  // Where to write truth maps and patches for a built-in scene.
  std::optional<std::filesystem::path> truth_dir;
};

struct RangeArgs {
  std::filesystem::path cube;
  std::filesystem::path atmo_dir;
  std::filesystem::path out;
};

struct EvalArgs {
  std::filesystem::path estimate;
  std::filesystem::path truth;
  std::optional<std::filesystem::path> patches;
  std::optional<std::filesystem::path> out_csv;
};

struct RenderArgs {
  std::filesystem::path map;
  std::filesystem::path out_image;
};

void cmd_atmo(const RunConfig& config, const Settings& settings, const AtmoArgs& args);
void cmd_synth(const RunConfig& config, const SynthArgs& args);
void cmd_range(const RunConfig& config, const RangeArgs& args, std::ostream& log);
void cmd_eval(const RunConfig& config, const EvalArgs& args, std::ostream& out);
void cmd_render(const RunConfig& config, const RenderArgs& args);

// Air temperature stored alongside a generated atmosphere.
Temperature atmosphere_air_temperature(const std::filesystem::path& atmo_dir);

}  // namespace lwir::cli
