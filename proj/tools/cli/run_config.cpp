#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "lwir/error.hpp"

namespace lwir::cli {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_uint(const std::string& s) {
  std::uint64_t v = 0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

// Collects typed values and every parse problem.
class Reader {
 public:
  explicit Reader(const Settings& s) : settings_(s) {}

  double number(const std::string& key) {
    const auto v = to_double(settings_.get(key));
    if (!v) bad(key, "is not a number");
    return v.value_or(0.0);
  }
  std::uint64_t count(const std::string& key) {
    const auto v = to_uint(settings_.get(key));
    if (!v) bad(key, "is not a non-negative integer");
    return v.value_or(0);
  }
  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    for (const auto& part : split(settings_.get(key), ',')) {
      const auto v = to_double(part);
      if (!v) {
        bad(key, "must be a comma-separated list of numbers");
        return {};
      }
      out.push_back(*v);
    }
    return out;
  }
  const std::string& text(const std::string& key) { return settings_.get(key); }
  void bad(const std::string& key, const std::string& what) {
    errors.push_back(key + " = '" + settings_.get(key) + "' " + what);
  }
  void check(bool ok, const std::string& key, const std::string& what) {
    if (!ok) bad(key, what);
  }

  std::vector<std::string> errors;

 private:
  const Settings& settings_;
};

std::string join_default_angles() {
  std::string out;
  for (double a : default_zenith_angles()) {
    if (!out.empty()) out += ',';
    std::ostringstream ss;
    ss << a;
    out += ss.str();
  }
  return out;
}

}  // namespace

const std::vector<KeyInfo>& known_keys() {
  static const std::vector<KeyInfo> keys = {
      {"seed", "0", "seed for every random draw (noise, solver jitter, k-means)"},
      {"threads", "1", "worker threads; outputs do not depend on this"},
      {"mode", "quad", "range estimator: bi-hot | bi-air | quad | hyper"},
      {"bands", "8.42,8.46,9.49,9.57,13.2", "lambda1,lambda2,lambda3,lambda4,lambda_sat in um"},
      {"air_temperature", "header",
       "air temperature for range: header (from the cube) | estimate (saturated band) | kelvin"},
      {"slope", "fit", "ozone slope s for quad: fit (from the downwelling set) | number"},
      {"rho_eps", "3000", "emissivity smoothness weight"},
      {"rho_d", "0", "total-variation weight on the distance map"},
      {"d_max", "200", "upper distance bound in metres"},
      {"q", "all", "downwelling angles used by the solver: all | count (0 drops downwelling)"},
      {"ground_fill", "ambient",
       "hemisphere remainder in the solver model: ambient (B(T_air)) | none"},
      {"max_iterations", "2000", "solver iteration cap"},
      {"tolerance", "1e-8", "relative objective decrease counted as stalled"},
      {"patience", "5", "consecutive stalled iterations before stopping"},
      {"armijo_c", "1e-4", "Armijo sufficient-decrease constant"},
      {"backtrack", "0.5", "line-search step reduction factor"},
      {"max_backtracks", "40", "line-search reductions per block step"},
      {"tv_iterations", "100", "primal-dual iterations per TV proximal step"},
      {"initial_emissivity", "0.95", "solver starting emissivity"},
      {"init_jitter", "0", "relative random perturbation of the starting d and T"},
      {"min_temperature_k", "1", "lower bound kept on solver temperatures"},
      {"atmosphere.air_temperature", "288", "air temperature (K) for atmo and synth"},
      {"atmosphere.water_vapor_strength", "1", "water-vapour line multiplier"},
      {"atmosphere.ozone_strength", "1", "ozone line multiplier"},
      {"atmosphere.carbon_dioxide_strength", "1", "CO2 line multiplier"},
      {"atmosphere.isrf_fwhm_um", "0.04", "instrument response FWHM in um (0 disables)"},
      {"atmosphere.column_length_m", "1000", "vertical path converting dB/m to sky opacity"},
      {"atmosphere.sky_temperature_offset_k", "0", "lower-sky temperature minus air temperature"},
      {"atmosphere.ozone_temperature", "230", "ozone layer temperature in K"},
      {"grid", "fixture", "spectral grid: fixture | uniform:first_um:last_um:bands"},
      {"zenith_angles", join_default_angles(), "sky zenith angles in degrees for atmo"},
      {"scene", "panels", "synth scene: built-in name (panels, grass) or truth directory"},
      {"noise_sigma", "1", "sensor noise standard deviation in microflick"},
      {"palette", "gray", "render palette: gray | heat"},
      {"render.min", "auto", "render lower bound (auto: data minimum)"},
      {"render.max", "auto", "render upper bound (auto: data maximum)"},
  };
  return keys;
}

std::string env_name(const std::string& key) {
  std::string out = "LWIR_";
  for (char c : key) {
    out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string_view to_string(Source source) noexcept {
  switch (source) {
    case Source::default_value: return "default";
    case Source::file: return "file";
    case Source::env: return "env";
    case Source::flag: return "flag";
  }
  return "?";
}

Settings::Settings() {
  for (const auto& k : known_keys()) values_[k.name] = {k.default_value, Source::default_value};
}

void Settings::apply_file(std::istream& in, const std::string& source,
                          std::vector<std::string>& errors) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      errors.push_back(where + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(body.substr(0, eq));
    auto it = values_.find(key);
    if (it == values_.end()) {
      errors.push_back(where + ": unknown key '" + key + "'");
      continue;
    }
    it->second = {trim(body.substr(eq + 1)), Source::file};
  }
}

void Settings::apply_file(const std::filesystem::path& path, std::vector<std::string>& errors) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config file " + path.string());
  apply_file(in, path.string(), errors);
}

void Settings::apply_env(const std::map<std::string, std::string>& env,
                         std::vector<std::string>& errors) {
  std::map<std::string, std::string> by_env;
  for (const auto& k : known_keys()) by_env[env_name(k.name)] = k.name;
  for (const auto& [name, value] : env) {
    if (name.rfind("LWIR_", 0) != 0) continue;
    auto it = by_env.find(name);
    if (it == by_env.end()) {
      errors.push_back("environment: unknown variable " + name);
      continue;
    }
    values_[it->second] = {trim(value), Source::env};
  }
}

void Settings::apply_flag(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::config, "unknown key '" + key + "'");
  it->second = {value, Source::flag};
}

const std::string& Settings::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::config, "unknown key '" + key + "'");
  return it->second.value;
}

Source Settings::source(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::config, "unknown key '" + key + "'");
  return it->second.source;
}

SpectralGrid make_grid(const std::string& spec) {
  if (spec == "fixture") return fixture_grid();
  const auto parts = split(spec, ':');
  if (parts.size() == 4 && parts[0] == "uniform") {
    const auto first = to_double(parts[1]);
    const auto last = to_double(parts[2]);
    const auto bands = to_uint(parts[3]);
    if (first && last && bands && *bands >= 2 && *first > 0.0 && *last > *first) {
      return uniform_grid(*first, *last, *bands);
    }
  }
  fail(ErrorKind::config, "grid = '" + spec + "' must be fixture or uniform:first:last:bands");
}

RunConfig build_config(const Settings& settings) {
  RunConfig c;
  const auto problems = check_config(settings, c);
  if (!problems.empty()) {
    std::string msg = std::to_string(problems.size()) + " invalid setting(s): ";
    for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
    fail(ErrorKind::config, msg);
  }
  return c;
}

std::vector<std::string> check_config(const Settings& settings, RunConfig& c) {
  Reader r(settings);
  c.seed = r.count("seed");
  const auto threads = r.count("threads");
  r.check(threads >= 1 && threads <= 1024, "threads", "must be in [1, 1024]");
  c.threads = static_cast<unsigned>(std::clamp<std::uint64_t>(threads, 1, 1024));

  c.mode = r.text("mode");
  r.check(c.mode == "bi-hot" || c.mode == "bi-air" || c.mode == "quad" || c.mode == "hyper",
          "mode", "must be bi-hot, bi-air, quad or hyper");

  const auto bands = r.numbers("bands");
  if (bands.size() == 5) {
    c.bands = {bands[0], bands[1], bands[2], bands[3], bands[4]};
    r.check(std::all_of(bands.begin(), bands.end(), [](double b) { return b > 0.0; }), "bands",
            "must be positive wavelengths");
    r.check(bands[0] != bands[1], "bands", "needs lambda1 != lambda2");
  } else if (!bands.empty()) {
    r.bad("bands", "needs exactly five wavelengths");
  }

  const std::string& air = r.text("air_temperature");
  if (air == "header") {
    c.air_source = AirTemperatureSource::header;
  } else if (air == "estimate") {
    c.air_source = AirTemperatureSource::estimate;
  } else {
    c.air_source = AirTemperatureSource::fixed;
    const auto v = to_double(air);
    if (!v || !(*v > 0.0)) r.bad("air_temperature", "must be header, estimate or a kelvin value > 0");
    c.air_temperature_k = v.value_or(0.0);
  }

  if (r.text("slope") != "fit") {
    c.slope = r.number("slope");
  }

  SolverConfig& s = c.solver;
  s.rho_eps = r.number("rho_eps");
  s.rho_d = r.number("rho_d");
  s.d_max = r.number("d_max");
  if (r.text("q") != "all") s.q = r.count("q");
  const std::string& fill = r.text("ground_fill");
  r.check(fill == "ambient" || fill == "none", "ground_fill", "must be ambient or none");
  s.ground_fill = fill == "none" ? GroundFill::none : GroundFill::ambient;
  s.max_iterations = r.count("max_iterations");
  s.tolerance = r.number("tolerance");
  s.patience = r.count("patience");
  s.armijo_c = r.number("armijo_c");
  s.backtrack = r.number("backtrack");
  s.max_backtracks = r.count("max_backtracks");
  s.tv_iterations = r.count("tv_iterations");
  s.initial_emissivity = r.number("initial_emissivity");
  s.init_jitter = r.number("init_jitter");
  s.min_temperature_k = r.number("min_temperature_k");
  s.bands = c.bands;
  s.seed = c.seed;
  s.threads = c.threads;
  for (const auto& v : s.violations()) r.errors.push_back("solver: " + v);

  const double t_air = r.number("atmosphere.air_temperature");
  r.check(t_air > 0.0, "atmosphere.air_temperature", "must be > 0");
  const double t_oz = r.number("atmosphere.ozone_temperature");
  r.check(t_oz > 0.0, "atmosphere.ozone_temperature", "must be > 0");
  if (t_air > 0.0 && t_oz > 0.0) {
    c.atmosphere = default_atmosphere(Temperature(t_air));
    c.atmosphere.ozone_temperature = Temperature(t_oz);
  }
  c.atmosphere.water_vapor_strength = r.number("atmosphere.water_vapor_strength");
  c.atmosphere.ozone_strength = r.number("atmosphere.ozone_strength");
  c.atmosphere.carbon_dioxide_strength = r.number("atmosphere.carbon_dioxide_strength");
  c.atmosphere.isrf_fwhm_um = r.number("atmosphere.isrf_fwhm_um");
  c.atmosphere.column_length_m = r.number("atmosphere.column_length_m");
  c.atmosphere.sky_temperature_offset_k = r.number("atmosphere.sky_temperature_offset_k");
  try {
    c.atmosphere.validate();
  } catch (const Error& e) {
    r.errors.push_back(std::string("atmosphere: ") + e.what());
  }

  c.grid = r.text("grid");
  try {
    make_grid(c.grid);
  } catch (const Error& e) {
    r.errors.push_back(e.what());
  }
  c.zenith_angles_deg = r.numbers("zenith_angles");
  for (std::size_t i = 0; i < c.zenith_angles_deg.size(); ++i) {
    const double a = c.zenith_angles_deg[i];
    if (!(a >= 0.0 && a < 90.0) || (i > 0 && !(a > c.zenith_angles_deg[i - 1]))) {
      r.bad("zenith_angles", "must be strictly increasing within [0, 90)");
      break;
    }
  }
  if (c.zenith_angles_deg.empty() && r.text("zenith_angles").empty()) {
    r.bad("zenith_angles", "needs at least one angle");
  }

  c.scene = r.text("scene");
  c.noise_sigma = r.number("noise_sigma");
  r.check(c.noise_sigma >= 0.0, "noise_sigma", "must be >= 0");
  try {
    c.palette = parse_palette(r.text("palette"));
  } catch (const Error&) {
    r.bad("palette", "must be gray or heat");
  }
  if (r.text("render.min") != "auto") c.render_min = r.number("render.min");
  if (r.text("render.max") != "auto") c.render_max = r.number("render.max");
  if (c.render_min && c.render_max && !(*c.render_max >= *c.render_min)) {
    r.bad("render.max", "must be >= render.min");
  }

  return r.errors;
}

void dump_settings(std::ostream& out, const Settings& settings, bool with_help) {
  for (const auto& k : known_keys()) {
    if (with_help) out << "# " << k.help << '\n';
    out << k.name << " = " << settings.get(k.name);
    if (settings.source(k.name) != Source::default_value) {
      out << "  # from " << to_string(settings.source(k.name));
    }
    out << '\n';
  }
}

}  // namespace lwir::cli
