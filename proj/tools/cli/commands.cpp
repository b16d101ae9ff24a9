#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "lwir/closed_form.hpp"
#include "lwir/cube_io.hpp"
#include "lwir/error.hpp"
#include "lwir/eval.hpp"
#include "lwir/forward_model.hpp"
#include "lwir/hyperspectral.hpp"
#include "lwir/scenes.hpp"

namespace lwir::cli {
namespace {

constexpr const char* kAtmosphereFile = "atmosphere.cfg";

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

struct Atmosphere {
  AttenuationSpectrum alpha;
  DownwellingSet downwelling;
};

Atmosphere load_atmosphere(const std::filesystem::path& dir) {
  return {load_attenuation(dir / "attenuation.csv"), load_downwelling(dir / "downwelling")};
}

Temperature resolve_air_temperature(const RunConfig& config, const SceneCube& cube,
                                    const BandSelection& bands) {
  switch (config.air_source) {
    case AirTemperatureSource::header: return cube.air_temperature;
    case AirTemperatureSource::estimate: return estimate_air_temperature(cube, bands);
    case AirTemperatureSource::fixed: return Temperature(config.air_temperature_k);
  }
  return cube.air_temperature;
}

}  // namespace

Temperature atmosphere_air_temperature(const std::filesystem::path& atmo_dir) {
  const auto path = atmo_dir / kAtmosphereFile;
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  Settings stored;
  std::vector<std::string> errors;
  stored.apply_file(in, path.string(), errors);
  if (!errors.empty()) fail(ErrorKind::parse, errors.front());
  const std::string& text = stored.get("atmosphere.air_temperature");
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return Temperature(v);
  } catch (const std::logic_error&) {
    fail(ErrorKind::parse, path.string() + ": bad atmosphere.air_temperature '" + text + "'");
  }
}

void cmd_atmo(const RunConfig& config, const Settings& settings, const AtmoArgs& args) {
  const SpectralGrid grid = make_grid(config.grid);
  const AttenuationSpectrum alpha = synth_attenuation(config.atmosphere, grid);
  const DownwellingSet dw = synth_downwelling(config.atmosphere, grid, config.zenith_angles_deg);
  std::filesystem::create_directories(args.out_dir);
  save_spectrum(args.out_dir / "attenuation.csv", alpha.spectrum());
  save_downwelling(args.out_dir / "downwelling", dw);
  std::ofstream meta(args.out_dir / kAtmosphereFile, std::ios::binary);
  if (!meta) fail(ErrorKind::io, "cannot write " + (args.out_dir / kAtmosphereFile).string());
  meta << "# settings used to generate this atmosphere\n";
  for (const auto& k : known_keys()) {
    if (k.name.rfind("atmosphere.", 0) == 0 || k.name == "grid" || k.name == "zenith_angles") {
      meta << k.name << " = " << settings.get(k.name) << '\n';
    }
  }
}

void cmd_synth(const RunConfig& config, const SynthArgs& args) {
  const Atmosphere atmo = load_atmosphere(args.atmo_dir);
  const Temperature t_air = atmosphere_air_temperature(args.atmo_dir);
  const SpectralGrid& grid = atmo.alpha.grid();
  const auto zenith = atmo.downwelling.zenith_angles_deg();

  SceneTruth truth;
  std::vector<PatchSpec> patches;
  const auto names = builtin_scene_names();
  const bool builtin = std::find(names.begin(), names.end(), config.scene) != names.end();
  if (builtin) {
    BuiltinScene scene = make_scene(config.scene, grid, zenith, t_air);
    truth = std::move(scene.truth);
    patches = std::move(scene.patches);
  } else {
    truth = load_truth(config.scene);
  }
  const SceneCube cube = synthesize_cube(truth, atmo.alpha, atmo.downwelling, t_air,
                                         config.noise_sigma, config.seed, config.threads);
  if (args.out_cube.has_parent_path()) std::filesystem::create_directories(args.out_cube.parent_path());
  save_scene_cube(args.out_cube, cube,
                  {{"generator", "lwir synth"},
                   {"scene", config.scene},
                   {"seed", std::to_string(config.seed)}});
  if (args.truth_dir) {
    save_truth(*args.truth_dir, truth, grid, zenith);
    if (!patches.empty()) save_patches(*args.truth_dir / "patches.csv", patches);
  }
}

void cmd_range(const RunConfig& config, const RangeArgs& args, std::ostream& log) {
  const SceneCube cube = load_scene_cube(args.cube);
  const Atmosphere atmo = load_atmosphere(args.atmo_dir);
  if (!(atmo.alpha.grid() == cube.grid)) {
    fail(ErrorKind::dimension_mismatch, "cube and atmosphere use different spectral grids");
  }
  const BandSelection bands = BandSelection::resolve(cube.grid, config.bands);
  const Temperature t_air = resolve_air_temperature(config, cube, bands);
  std::map<std::string, std::string> meta{{"generator", "lwir range"},
                                          {"mode", config.mode},
                                          {"air_temperature_k", format_double(t_air.kelvin())}};
  if (config.mode == "hyper") {
    const auto used = select_downwelling(atmo.downwelling, config.solver);
    const EstimateMaps est = solve(cube, atmo.alpha, atmo.downwelling, t_air, config.solver);
    std::vector<double> zenith;
    if (used) zenith.assign(used->zenith_angles_deg().begin(), used->zenith_angles_deg().end());
    meta["q"] = std::to_string(zenith.size());
    save_estimate(args.out, est, cube.grid, zenith, meta);
    log << "hyper: " << est.iterations << " iterations"
        << (est.converged ? ", converged" : ", stopped at max_iterations") << '\n';
    return;
  }
  RangeMap map;
  if (config.mode == "bi-hot") {
    map = bispectral_hot(cube, atmo.alpha, bands);
  } else if (config.mode == "bi-air") {
    map = bispectral_air(cube, atmo.alpha, bands, t_air);
  } else {
    const double s = config.slope ? *config.slope : fit_ozone_slope(atmo.downwelling, bands).slope;
    meta["slope"] = format_double(s);
    map = quadspectral(cube, atmo.alpha, bands, t_air, s);
  }
  if (args.out.has_parent_path()) std::filesystem::create_directories(args.out.parent_path());
  save_range_map(args.out, map, meta);
  log << config.mode << ": " << map.valid_count() << " of " << map.flags.size()
      << " pixels valid\n";
}

void cmd_eval(const RunConfig&, const EvalArgs& args, std::ostream& out) {
  const DistanceMap est = load_distance(args.estimate);
  const std::filesystem::path truth_file =
      std::filesystem::is_directory(args.truth) ? args.truth / "d.lwc" : args.truth;
  const Map2<double> truth = to_double(read_map(truth_file).values);
  std::filesystem::path patches_path;
  if (args.patches) {
    patches_path = *args.patches;
  } else if (std::filesystem::is_directory(args.truth)) {
    patches_path = args.truth / "patches.csv";
  } else {
    fail(ErrorKind::config, "eval needs --patches when --truth is a single map");
  }
  const auto stats = patch_stats(est.distance_m, est.valid, truth, load_patches(patches_path));
  if (args.out_csv) {
    save_patch_csv(*args.out_csv, stats);
  } else {
    write_patch_csv(out, stats);
  }
}

void cmd_render(const RunConfig& config, const RenderArgs& args) {
  const DistanceMap map = load_distance(args.map);
  RenderOptions options;
  options.palette = config.palette;
  options.min = config.render_min;
  options.max = config.render_max;
  render_map(map.distance_m, map.valid, args.out_image, options);
}

}  // namespace lwir::cli
