#include "lwir/cube_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include <nlohmann/json.hpp>

#include "lwir/error.hpp"

namespace lwir {
namespace {

using json = nlohmann::json;

constexpr char kMagic[4] = {'L', 'W', 'C', '1'};
constexpr std::size_t kPreamble = 4 + 8;
// Largest body accepted, to reject corrupt headers before allocating.
constexpr std::uint64_t kMaxBodyBytes = std::uint64_t{1} << 40;

PayloadKind parse_kind(const std::string& s) {
  if (s == "cube") return PayloadKind::cube;
  if (s == "map") return PayloadKind::map;
  if (s == "stack") return PayloadKind::stack;
  fail(ErrorKind::parse, "unknown LWC1 payload kind '" + s + "'");
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return v;
}

// Number of body bytes implied by the header; throws dim_overflow.
std::uint64_t body_bytes(const CubeHeader& h) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t cells = h.rows;
  for (std::uint64_t f : {std::uint64_t{h.cols}, std::uint64_t{h.depth}}) {
    if (f != 0 && cells > limit / f) fail(ErrorKind::dim_overflow, "dimension product overflows");
    cells *= f;
  }
  if (cells > limit / 5) fail(ErrorKind::dim_overflow, "body size overflows");
  std::uint64_t bytes = cells * 4;
  if (h.kind == PayloadKind::map) bytes += std::uint64_t{h.rows} * h.cols;
  if (bytes > kMaxBodyBytes) {
    fail(ErrorKind::dim_overflow, "body of " + std::to_string(bytes) + " bytes exceeds the limit");
  }
  return bytes;
}

void check_header(const CubeHeader& h) {
  if (h.rows == 0 || h.cols == 0 || h.depth == 0) {
    fail(ErrorKind::dimension_mismatch, "LWC1 dimensions must be positive");
  }
  if (h.kind == PayloadKind::map && h.depth != 1) {
    fail(ErrorKind::dimension_mismatch, "a map must have depth 1");
  }
  if (h.kind == PayloadKind::cube && h.wavelengths_um.size() != h.depth) {
    fail(ErrorKind::dimension_mismatch, "cube has " + std::to_string(h.depth) + " bands but " +
                                            std::to_string(h.wavelengths_um.size()) +
                                            " wavelengths");
  }
  if (h.kind == PayloadKind::stack && !h.zenith_angles_deg.empty() &&
      h.zenith_angles_deg.size() != h.depth) {
    fail(ErrorKind::dimension_mismatch, "stack depth and zenith angle count differ");
  }
}

json header_to_json(const CubeHeader& h) {
  json j;
  j["format"] = "LWC1";
  j["kind"] = std::string(to_string(h.kind));
  j["rows"] = h.rows;
  j["cols"] = h.cols;
  j["depth"] = h.depth;
  j["wavelengths_um"] = h.wavelengths_um;
  j["zenith_angles_deg"] = h.zenith_angles_deg;
  j["unit"] = h.unit;
  j["air_temperature_k"] = h.air_temperature_k ? json(*h.air_temperature_k) : json(nullptr);
  j["noise_sigma"] = h.noise_sigma;
  j["metadata"] = h.metadata;
  return j;
}

CubeHeader header_from_json(const json& j) {
  try {
    CubeHeader h;
    h.kind = parse_kind(j.at("kind").get<std::string>());
    h.rows = j.at("rows").get<std::size_t>();
    h.cols = j.at("cols").get<std::size_t>();
    h.depth = j.at("depth").get<std::size_t>();
    h.wavelengths_um = j.at("wavelengths_um").get<std::vector<double>>();
    h.zenith_angles_deg = j.value("zenith_angles_deg", std::vector<double>{});
    h.unit = j.at("unit").get<std::string>();
    const json& ta = j.at("air_temperature_k");
    if (!ta.is_null()) h.air_temperature_k = ta.get<double>();
    h.noise_sigma = j.at("noise_sigma").get<double>();
    h.metadata = j.value("metadata", std::map<std::string, std::string>{});
    return h;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("bad LWC1 header: ") + e.what());
  }
}

std::vector<std::uint8_t> encode(const CubeHeader& h, std::span<const float> values,
                                 std::span<const std::uint8_t> flags) {
  check_header(h);
  const std::uint64_t bytes = body_bytes(h);
  const std::string text = header_to_json(h).dump();
  std::vector<std::uint8_t> out;
  out.reserve(kPreamble + text.size() + bytes);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  out.insert(out.end(), flags.begin(), flags.end());
  return out;
}

struct Decoded {
  CubeHeader header;
  const std::uint8_t* body;
};

Decoded decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    fail(ErrorKind::magic_mismatch, "not an LWC1 file (bad magic)");
  }
  if (bytes.size() < kPreamble) {
    fail(ErrorKind::truncated, "header length field truncated: expected " +
                                   std::to_string(kPreamble) + " bytes, found " +
                                   std::to_string(bytes.size()));
  }
  const std::uint64_t header_len = get_u64(bytes.data() + 4);
  if (header_len > bytes.size() - kPreamble) {
    fail(ErrorKind::truncated, "header truncated: expected " + std::to_string(header_len) +
                                   " bytes, found " + std::to_string(bytes.size() - kPreamble));
  }
  const char* text = reinterpret_cast<const char*>(bytes.data() + kPreamble);
  json j;
  try {
    j = json::parse(text, text + header_len);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("bad LWC1 header: ") + e.what());
  }
  CubeHeader h = header_from_json(j);
  const std::uint64_t expected = body_bytes(h);
  check_header(h);
  const std::uint64_t actual = bytes.size() - kPreamble - header_len;
  if (actual < expected) {
    fail(ErrorKind::truncated, "body truncated: expected " + std::to_string(expected) +
                                   " bytes, found " + std::to_string(actual));
  }
  if (actual > expected) {
    fail(ErrorKind::parse, "body has " + std::to_string(actual - expected) + " trailing bytes");
  }
  return {std::move(h), bytes.data() + kPreamble + header_len};
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

std::string with_path(const std::filesystem::path& path, const Error& e) {
  return path.string() + ": " + e.what();
}

template <typename F>
auto annotate(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    fail(e.kind(), with_path(path, e));
  }
}

CubeHeader plane_header(std::size_t m, std::size_t n, std::string unit) {
  CubeHeader h;
  h.kind = PayloadKind::map;
  h.rows = m;
  h.cols = n;
  h.depth = 1;
  h.unit = std::move(unit);
  return h;
}

void save_plane(const std::filesystem::path& path, const Map2<double>& values, std::string unit,
                const std::map<std::string, std::string>& metadata = {}) {
  CubeHeader h = plane_header(values.rows(), values.cols(), std::move(unit));
  h.metadata = metadata;
  write_map(path, h, to_float(values), Map2<std::uint8_t>(values.rows(), values.cols(), 0));
}

Map2<double> load_plane(const std::filesystem::path& path) {
  return to_double(read_map(path).values);
}

}  // namespace

std::string_view to_string(PayloadKind kind) noexcept {
  switch (kind) {
    case PayloadKind::cube: return "cube";
    case PayloadKind::map: return "map";
    case PayloadKind::stack: return "stack";
  }
  return "?";
}

std::vector<std::uint8_t> encode_cube(const CubeHeader& header, const Cube3<float>& data) {
  if (header.kind == PayloadKind::map) {
    fail(ErrorKind::kind_mismatch, "use encode_map for map payloads");
  }
  if (data.rows() != header.rows || data.cols() != header.cols || data.depth() != header.depth) {
    fail(ErrorKind::dimension_mismatch, "cube data does not match its header dimensions");
  }
  return encode(header, data.values(), {});
}

CubeFile decode_cube(std::span<const std::uint8_t> bytes) {
  Decoded d = decode(bytes);
  if (d.header.kind == PayloadKind::map) {
    fail(ErrorKind::kind_mismatch, "expected a cube or stack payload, found a map");
  }
  CubeFile out{d.header, Cube3<float>(d.header.rows, d.header.cols, d.header.depth)};
  auto values = out.data.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(get_u32(d.body + 4 * i));
  }
  return out;
}

std::vector<std::uint8_t> encode_map(const CubeHeader& header, const Map2<float>& values,
                                     const Map2<std::uint8_t>& flags) {
  if (header.kind != PayloadKind::map) {
    fail(ErrorKind::kind_mismatch, "use encode_cube for cube and stack payloads");
  }
  if (values.rows() != header.rows || values.cols() != header.cols ||
      flags.rows() != header.rows || flags.cols() != header.cols) {
    fail(ErrorKind::dimension_mismatch, "map data does not match its header dimensions");
  }
  return encode(header, values.values(), flags.values());
}

MapFile decode_map(std::span<const std::uint8_t> bytes) {
  Decoded d = decode(bytes);
  if (d.header.kind != PayloadKind::map) {
    fail(ErrorKind::kind_mismatch,
         "expected a map payload, found a " + std::string(to_string(d.header.kind)));
  }
  const std::size_t cells = d.header.rows * d.header.cols;
  MapFile out{d.header, Map2<float>(d.header.rows, d.header.cols),
              Map2<std::uint8_t>(d.header.rows, d.header.cols)};
  for (std::size_t i = 0; i < cells; ++i) {
    out.values[i] = std::bit_cast<float>(get_u32(d.body + 4 * i));
    out.flags[i] = d.body[4 * cells + i];
  }
  return out;
}

void write_cube(const std::filesystem::path& path, const CubeHeader& header,
                const Cube3<float>& data) {
  write_all(path, encode_cube(header, data));
}

CubeFile read_cube(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  return annotate(path, [&] { return decode_cube(bytes); });
}

void write_map(const std::filesystem::path& path, const CubeHeader& header,
               const Map2<float>& values, const Map2<std::uint8_t>& flags) {
  write_all(path, encode_map(header, values, flags));
}

MapFile read_map(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  return annotate(path, [&] { return decode_map(bytes); });
}

Cube3<float> to_float(const Cube3<double>& cube) {
  Cube3<float> out(cube.rows(), cube.cols(), cube.depth());
  std::transform(cube.values().begin(), cube.values().end(), out.values().begin(),
                 [](double v) { return static_cast<float>(v); });
  return out;
}

Map2<float> to_float(const Map2<double>& map) {
  Map2<float> out(map.rows(), map.cols());
  std::transform(map.values().begin(), map.values().end(), out.values().begin(),
                 [](double v) { return static_cast<float>(v); });
  return out;
}

Cube3<double> to_double(const Cube3<float>& cube) {
  Cube3<double> out(cube.rows(), cube.cols(), cube.depth());
  std::copy(cube.values().begin(), cube.values().end(), out.values().begin());
  return out;
}

Map2<double> to_double(const Map2<float>& map) {
  Map2<double> out(map.rows(), map.cols());
  std::copy(map.values().begin(), map.values().end(), out.values().begin());
  return out;
}

void save_scene_cube(const std::filesystem::path& path, const SceneCube& cube,
                     const std::map<std::string, std::string>& metadata) {
  CubeHeader h;
  h.kind = PayloadKind::cube;
  h.rows = cube.radiance.rows();
  h.cols = cube.radiance.cols();
  h.depth = cube.radiance.depth();
  h.wavelengths_um.assign(cube.grid.wavelengths().begin(), cube.grid.wavelengths().end());
  h.unit = std::string(to_string(Unit::microflick));
  h.air_temperature_k = cube.air_temperature.kelvin();
  h.noise_sigma = cube.noise_sigma;
  h.metadata = metadata;
  write_cube(path, h, to_float(cube.radiance));
}

SceneCube load_scene_cube(const std::filesystem::path& path) {
  CubeFile f = read_cube(path);
  return annotate(path, [&] {
    if (f.header.kind != PayloadKind::cube) {
      fail(ErrorKind::kind_mismatch, "expected a radiance cube, found a stack");
    }
    if (f.header.unit != to_string(Unit::microflick)) {
      fail(ErrorKind::unit_mismatch, "radiance cube unit is '" + f.header.unit + "'");
    }
    if (!f.header.air_temperature_k) fail(ErrorKind::parse, "cube has no air temperature");
    return SceneCube{to_double(f.data), SpectralGrid(f.header.wavelengths_um),
                     Temperature(*f.header.air_temperature_k), f.header.noise_sigma};
  });
}

void save_truth(const std::filesystem::path& dir, const SceneTruth& truth, const SpectralGrid& grid,
                std::span<const double> zenith_angles_deg) {
  std::filesystem::create_directories(dir);
  save_plane(dir / "d.lwc", truth.distance_m, "m");
  save_plane(dir / "temperature.lwc", truth.temperature_k, "K");
  CubeHeader h;
  h.kind = PayloadKind::cube;
  h.rows = truth.rows();
  h.cols = truth.cols();
  h.depth = grid.size();
  h.wavelengths_um.assign(grid.wavelengths().begin(), grid.wavelengths().end());
  h.unit = "dimensionless";
  write_cube(dir / "emissivity.lwc", h, to_float(truth.emissivity));
  h.unit = "microflick";
  write_cube(dir / "ground.lwc", h, to_float(truth.ground_ambient));
  CubeHeader s;
  s.kind = PayloadKind::stack;
  s.rows = truth.rows();
  s.cols = truth.cols();
  s.depth = zenith_angles_deg.size();
  s.zenith_angles_deg.assign(zenith_angles_deg.begin(), zenith_angles_deg.end());
  s.unit = "sr";
  if (s.depth > 0) write_cube(dir / "omegas.lwc", s, to_float(truth.solid_angles));
}

SceneTruth load_truth(const std::filesystem::path& dir) {
  SceneTruth t;
  t.distance_m = load_plane(dir / "d.lwc");
  t.temperature_k = load_plane(dir / "temperature.lwc");
  t.emissivity = to_double(read_cube(dir / "emissivity.lwc").data);
  t.ground_ambient = to_double(read_cube(dir / "ground.lwc").data);
  if (std::filesystem::exists(dir / "omegas.lwc")) {
    t.solid_angles = to_double(read_cube(dir / "omegas.lwc").data);
  } else {
    t.solid_angles = Cube3<double>(t.distance_m.rows(), t.distance_m.cols(), 0);
  }
  return t;
}

void save_range_map(const std::filesystem::path& path, const RangeMap& map,
                    const std::map<std::string, std::string>& metadata) {
  CubeHeader h = plane_header(map.distance_m.rows(), map.distance_m.cols(), "m");
  h.metadata = metadata;
  Map2<std::uint8_t> flags(map.flags.rows(), map.flags.cols());
  for (std::size_t p = 0; p < flags.size(); ++p) flags[p] = static_cast<std::uint8_t>(map.flags[p]);
  write_map(path, h, to_float(map.distance_m), flags);
}

RangeMap load_range_map(const std::filesystem::path& path) {
  MapFile f = read_map(path);
  RangeMap out{to_double(f.values), Map2<RangeFlag>(f.flags.rows(), f.flags.cols())};
  for (std::size_t p = 0; p < f.flags.size(); ++p) {
    if (f.flags[p] > static_cast<std::uint8_t>(RangeFlag::clipped)) {
      fail(ErrorKind::parse, path.string() + ": unknown range flag " + std::to_string(f.flags[p]));
    }
    out.flags[p] = static_cast<RangeFlag>(f.flags[p]);
  }
  return out;
}

void save_estimate(const std::filesystem::path& dir, const EstimateMaps& est,
                   const SpectralGrid& grid, std::span<const double> zenith_angles_deg,
                   const std::map<std::string, std::string>& metadata) {
  std::filesystem::create_directories(dir);
  auto meta = metadata;
  meta["iterations"] = std::to_string(est.iterations);
  meta["converged"] = est.converged ? "true" : "false";
  save_plane(dir / "d.lwc", est.d, "m", meta);
  save_plane(dir / "temperature.lwc", est.temperature_k, "K");
  save_plane(dir / "loss.lwc", est.loss, "microflick^2");
  CubeHeader h;
  h.kind = PayloadKind::cube;
  h.rows = est.rows();
  h.cols = est.cols();
  h.depth = grid.size();
  h.wavelengths_um.assign(grid.wavelengths().begin(), grid.wavelengths().end());
  h.unit = "dimensionless";
  write_cube(dir / "eps.lwc", h, to_float(est.eps));
  std::filesystem::remove(dir / "omegas.lwc");
  if (!zenith_angles_deg.empty()) {
    CubeHeader s;
    s.kind = PayloadKind::stack;
    s.rows = est.rows();
    s.cols = est.cols();
    s.depth = zenith_angles_deg.size();
    s.zenith_angles_deg.assign(zenith_angles_deg.begin(), zenith_angles_deg.end());
    s.unit = "sr";
    write_cube(dir / "omegas.lwc", s, to_float(est.omegas));
  }
}

EstimateMaps load_estimate(const std::filesystem::path& dir) {
  EstimateMaps est;
  const MapFile d = read_map(dir / "d.lwc");
  est.d = to_double(d.values);
  est.temperature_k = load_plane(dir / "temperature.lwc");
  est.loss = load_plane(dir / "loss.lwc");
  est.eps = to_double(read_cube(dir / "eps.lwc").data);
  if (std::filesystem::exists(dir / "omegas.lwc")) {
    est.omegas = to_double(read_cube(dir / "omegas.lwc").data);
  } else {
    est.omegas = Cube3<double>(est.d.rows(), est.d.cols(), 0);
  }
  const auto& meta = d.header.metadata;
  if (auto it = meta.find("iterations"); it != meta.end()) {
    est.iterations = std::stoull(it->second);
  }
  if (auto it = meta.find("converged"); it != meta.end()) est.converged = it->second == "true";
  return est;
}

DistanceMap load_distance(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    const MapFile f = read_map(path / "d.lwc");
    return {to_double(f.values), Map2<std::uint8_t>(f.values.rows(), f.values.cols(), 1)};
  }
  const RangeMap r = load_range_map(path);
  DistanceMap out{r.distance_m, Map2<std::uint8_t>(r.flags.rows(), r.flags.cols())};
  for (std::size_t p = 0; p < out.valid.size(); ++p) {
    out.valid[p] = r.flags[p] == RangeFlag::valid ? 1 : 0;
  }
  return out;
}

}  // namespace lwir
