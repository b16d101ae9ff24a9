#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lwir/closed_form.hpp"
#include "lwir/forward_model.hpp"
#include "lwir/hyperspectral.hpp"
#include "lwir/ndarray.hpp"

namespace lwir {

// LWC1 layout: the 4 bytes "LWC1", a uint64 little-endian header length, a
// UTF-8 JSON header, then the body as little-endian binary32 in row-major
// [i][j][k] order. Maps append one uint8 flag per pixel after the values.
enum class PayloadKind { cube, map, stack };

std::string_view to_string(PayloadKind kind) noexcept;

struct CubeHeader {
  PayloadKind kind = PayloadKind::cube;
  std::size_t rows = 0;
  std::size_t cols = 0;
  // K for cubes, Q for solid-angle stacks, 1 for maps.
  std::size_t depth = 1;
  std::vector<double> wavelengths_um;
  std::vector<double> zenith_angles_deg;
  std::string unit;
  std::optional<double> air_temperature_k;
  double noise_sigma = 0.0;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const CubeHeader&, const CubeHeader&) = default;
};

struct CubeFile {
  CubeHeader header;
  Cube3<float> data;
};

struct MapFile {
  CubeHeader header;
  Map2<float> values;
  Map2<std::uint8_t> flags;
};

// Throws ErrorKind::dimension_mismatch when header and data disagree,
// ErrorKind::io on write failure.
void write_cube(const std::filesystem::path& path, const CubeHeader& header,
                const Cube3<float>& data);
// Accepts cubes and stacks. Throws magic_mismatch, truncated, dim_overflow,
// kind_mismatch or parse.
CubeFile read_cube(const std::filesystem::path& path);

void write_map(const std::filesystem::path& path, const CubeHeader& header,
               const Map2<float>& values, const Map2<std::uint8_t>& flags);
MapFile read_map(const std::filesystem::path& path);

// In-memory encodings of the same format.
std::vector<std::uint8_t> encode_cube(const CubeHeader& header, const Cube3<float>& data);
CubeFile decode_cube(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_map(const CubeHeader& header, const Map2<float>& values,
                                     const Map2<std::uint8_t>& flags);
MapFile decode_map(std::span<const std::uint8_t> bytes);

Cube3<float> to_float(const Cube3<double>& cube);
Map2<float> to_float(const Map2<double>& map);
Cube3<double> to_double(const Cube3<float>& cube);
Map2<double> to_double(const Map2<float>& map);

// Typed helpers on top of the raw format.
void save_scene_cube(const std::filesystem::path& path, const SceneCube& cube,
                     const std::map<std::string, std::string>& metadata = {});
SceneCube load_scene_cube(const std::filesystem::path& path);

// Directory of d.lwc, temperature.lwc, emissivity.lwc, omegas.lwc, ground.lwc.
void save_truth(const std::filesystem::path& dir, const SceneTruth& truth, const SpectralGrid& grid,
                std::span<const double> zenith_angles_deg);
SceneTruth load_truth(const std::filesystem::path& dir);

// Single map file; flags are the RangeFlag values.
void save_range_map(const std::filesystem::path& path, const RangeMap& map,
                    const std::map<std::string, std::string>& metadata = {});
RangeMap load_range_map(const std::filesystem::path& path);

// Directory of d.lwc, temperature.lwc, eps.lwc, omegas.lwc, loss.lwc.
void save_estimate(const std::filesystem::path& dir, const EstimateMaps& est,
                   const SpectralGrid& grid, std::span<const double> zenith_angles_deg,
                   const std::map<std::string, std::string>& metadata = {});
EstimateMaps load_estimate(const std::filesystem::path& dir);

// Loads a distance map with validity from either a range-map file or an
// estimate directory (all pixels valid).
struct DistanceMap {
  Map2<double> distance_m;
  Map2<std::uint8_t> valid;
};
DistanceMap load_distance(const std::filesystem::path& path);

}  // namespace lwir
