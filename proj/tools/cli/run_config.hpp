#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lwir/atmosphere.hpp"
#include "lwir/closed_form.hpp"
#include "lwir/eval.hpp"
#include "lwir/hyperspectral.hpp"

namespace lwir::cli {

// One documented configuration key. Environment overrides use
// LWIR_<NAME> with '.' replaced by '_' and upper-cased.
struct KeyInfo {
  std::string name;
  std::string default_value;
  std::string help;
};

const std::vector<KeyInfo>& known_keys();
std::string env_name(const std::string& key);

enum class Source { default_value, file, env, flag };
std::string_view to_string(Source source) noexcept;

struct RawValue {
  std::string value;
  Source source = Source::default_value;
};

// Layered key-value settings: defaults < config file < environment < flags.
class Settings {
 public:
  Settings();

  // "key = value" lines, '#' comments. Unknown keys and malformed lines are
  // collected in `errors`.
  void apply_file(std::istream& in, const std::string& source, std::vector<std::string>& errors);
  void apply_file(const std::filesystem::path& path, std::vector<std::string>& errors);
  // Every LWIR_* variable must name a known key.
  void apply_env(const std::map<std::string, std::string>& env, std::vector<std::string>& errors);
  void apply_flag(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  Source source(const std::string& key) const;
  const std::map<std::string, RawValue>& values() const noexcept { return values_; }

 private:
  std::map<std::string, RawValue> values_;
};

enum class AirTemperatureSource { header, estimate, fixed };

// Typed view of every setting, validated as a whole.
struct RunConfig {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string mode;
  BandWavelengths bands;
  AirTemperatureSource air_source = AirTemperatureSource::header;
  double air_temperature_k = 0.0;
  std::optional<double> slope;  // empty: fit from the downwelling set
  SolverConfig solver;
  AtmosphereParams atmosphere = default_atmosphere(Temperature(288.0));
  std::string grid;
  std::vector<double> zenith_angles_deg;
  std::string scene;
  double noise_sigma = 1.0;
  Palette palette = Palette::gray;
  std::optional<double> render_min;
  std::optional<double> render_max;
};

// Fills `out` and returns one message per invalid value.
std::vector<std::string> check_config(const Settings& settings, RunConfig& out);
// Throws ErrorKind::config listing every invalid value.
RunConfig build_config(const Settings& settings);

SpectralGrid make_grid(const std::string& spec);

// "key = value" dump of all keys in documentation order.
void dump_settings(std::ostream& out, const Settings& settings, bool with_help);

}  // namespace lwir::cli
