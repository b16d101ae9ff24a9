#include "cli.hpp"

#include <ostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "lwir/error.hpp"
#include "run_config.hpp"

namespace lwir::cli {
namespace {

const char* const kFooter =
    "Settings resolve as: built-in defaults < --config file < LWIR_* environment < flags.\n"
    "Every config key can be set from the environment as LWIR_<KEY>, upper-cased with '.'\n"
    "replaced by '_' (e.g. rho_eps -> LWIR_RHO_EPS). Run `lwir config-dump --keys` for the\n"
    "full list of keys and their defaults.";

struct FlagSink {
  std::map<std::string, std::string> values;

  void add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::map<std::string, std::string>& env) {
  CLI::App app{"Passive ranging from long-wave infrared hyperspectral cubes", "lwir"};
  app.footer(kFooter);
  app.require_subcommand(1);

  FlagSink flags;
  std::string config_path;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value settings file");
    flags.add(sub, "--seed", "seed", "random seed");
    flags.add(sub, "--threads", "threads", "worker threads");
  };

  AtmoArgs atmo_args;
  std::string atmo_out;
  CLI::App* atmo = app.add_subcommand("atmo", "generate an attenuation spectrum and sky set");
  common(atmo);
  atmo->add_option("--out", atmo_out, "output directory")->required();

  SynthArgs synth_args;
  std::string synth_atmo, synth_out, synth_truth;
  CLI::App* synth = app.add_subcommand("synth", "synthesise a radiance cube from a scene");
  common(synth);
  flags.add(synth, "--scene", "scene", "built-in scene name or truth directory");
  flags.add(synth, "--noise-sigma", "noise_sigma", "noise std in microflick");
  synth->add_option("--atmo", synth_atmo, "atmosphere directory from `atmo`")->required();
  synth->add_option("--out", synth_out, "output cube (.lwc)")->required();
  synth->add_option("--truth", synth_truth, "also write truth maps and patches here");

  std::string range_cube, range_atmo, range_out;
  CLI::App* range = app.add_subcommand("range", "estimate distance per pixel");
  common(range);
  flags.add(range, "--mode", "mode", "bi-hot | bi-air | quad | hyper");
  flags.add(range, "--q", "q", "downwelling angles used by hyper (all | count)");
  flags.add(range, "--rho-eps", "rho_eps", "emissivity smoothness weight");
  flags.add(range, "--rho-d", "rho_d", "distance TV weight");
  flags.add(range, "--d-max", "d_max", "distance upper bound (m)");
  flags.add(range, "--bands", "bands", "l1,l2,l3,l4,lsat in um");
  flags.add(range, "--air-temperature", "air_temperature", "header | estimate | kelvin");
  flags.add(range, "--slope", "slope", "fit | number");
  range->add_option("--cube", range_cube, "input cube (.lwc)")->required();
  range->add_option("--atmo", range_atmo, "atmosphere directory")->required();
  range->add_option("--out", range_out, "range map (.lwc) or estimate directory (hyper)")
      ->required();

  std::string eval_est, eval_truth, eval_patches, eval_out;
  CLI::App* eval = app.add_subcommand("eval", "patch statistics against truth");
  common(eval);
  eval->add_option("--est", eval_est, "range map or estimate directory")->required();
  eval->add_option("--truth", eval_truth, "truth directory or distance map")->required();
  eval->add_option("--patches", eval_patches, "patch list (default: <truth>/patches.csv)");
  eval->add_option("--out", eval_out, "CSV output (default: stdout)");

  std::string render_map_path, render_out;
  CLI::App* render = app.add_subcommand("render", "render a distance map as PGM/PPM");
  common(render);
  flags.add(render, "--palette", "palette", "gray | heat");
  flags.add(render, "--min", "render.min", "lower bound (auto: data minimum)");
  flags.add(render, "--max", "render.max", "upper bound (auto: data maximum)");
  render->add_option("--map", render_map_path, "range map or estimate directory")->required();
  render->add_option("--out", render_out, "output image")->required();

  bool dump_help = false;
  CLI::App* dump = app.add_subcommand("config-dump", "print the effective settings");
  common(dump);
  dump->add_flag("--keys", dump_help, "include a description of every key");
  for (const auto& [flag, key] : std::vector<std::pair<std::string, std::string>>{
           {"--mode", "mode"}, {"--q", "q"}, {"--rho-eps", "rho_eps"}, {"--rho-d", "rho_d"},
           {"--d-max", "d_max"}, {"--bands", "bands"}, {"--scene", "scene"},
           {"--noise-sigma", "noise_sigma"}, {"--air-temperature", "air_temperature"},
           {"--slope", "slope"}, {"--palette", "palette"}}) {
    flags.add(dump, flag, key, "override " + key);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    Settings settings;
    std::vector<std::string> problems;
    if (!config_path.empty()) settings.apply_file(std::filesystem::path(config_path), problems);
    settings.apply_env(env, problems);
    for (const auto& [key, value] : flags.values) settings.apply_flag(key, value);
    RunConfig config;
    for (auto& p : check_config(settings, config)) problems.push_back(std::move(p));
    if (!problems.empty()) {
      std::string msg = std::to_string(problems.size()) + " invalid setting(s): ";
      for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
      fail(ErrorKind::config, msg);
    }

    if (*atmo) {
      atmo_args.out_dir = atmo_out;
      cmd_atmo(config, settings, atmo_args);
    } else if (*synth) {
      synth_args.atmo_dir = synth_atmo;
      synth_args.out_cube = synth_out;
      if (!synth_truth.empty()) synth_args.truth_dir = std::filesystem::path(synth_truth);
      cmd_synth(config, synth_args);
    } else if (*range) {
      cmd_range(config, RangeArgs{range_cube, range_atmo, range_out}, out);
    } else if (*eval) {
      EvalArgs e{eval_est, eval_truth, std::nullopt, std::nullopt};
      if (!eval_patches.empty()) e.patches = std::filesystem::path(eval_patches);
      if (!eval_out.empty()) e.out_csv = std::filesystem::path(eval_out);
      cmd_eval(config, e, out);
    } else if (*render) {
      cmd_render(config, RenderArgs{render_map_path, render_out});
    } else if (*dump) {
      dump_settings(out, settings, dump_help);
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: io: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace lwir::cli
