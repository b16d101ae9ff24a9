#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "lwir/cube_io.hpp"
#include "lwir/error.hpp"

namespace lwir {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("lwir_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Error caught(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no lwir::Error thrown";
  return Error(ErrorKind::io, "none");
}

CubeHeader cube_header(std::size_t m, std::size_t n, std::size_t k) {
  CubeHeader h;
  h.kind = PayloadKind::cube;
  h.rows = m;
  h.cols = n;
  h.depth = k;
  for (std::size_t b = 0; b < k; ++b) h.wavelengths_um.push_back(8.0 + 0.1 * static_cast<double>(b));
  h.unit = "microflick";
  h.air_temperature_k = 288.0;
  h.noise_sigma = 1.0;
  h.metadata = {{"seed", "7"}};
  return h;
}

// Raw file from a preamble length and arbitrary header text.
std::vector<std::uint8_t> raw_file(const std::string& header, std::size_t body_bytes) {
  std::vector<std::uint8_t> out{'L', 'W', 'C', '1'};
  std::uint64_t len = header.size();
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(len >> (8 * b)));
  out.insert(out.end(), header.begin(), header.end());
  out.resize(out.size() + body_bytes, 0);
  return out;
}

bool bit_equal(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(a[i]) != std::bit_cast<std::uint32_t>(b[i])) return false;
  }
  return true;
}

TEST(Lwc1, RandomCubesRoundTripBitExact) {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  std::uniform_int_distribution<std::uint32_t> bits;
  const auto dir = scratch_dir("random");
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = trial == 0 ? 1 : dim(gen);
    const std::size_t n = trial == 0 ? 1 : dim(gen);
    const std::size_t k = trial == 0 ? 1 : dim(gen);
    Cube3<float> data(m, n, k);
    // Arbitrary bit patterns, NaN payloads and infinities included.
    for (float& v : data.values()) v = std::bit_cast<float>(bits(gen));
    const auto h = cube_header(m, n, k);
    const auto path = dir / ("c" + std::to_string(trial) + ".lwc");
    write_cube(path, h, data);
    const auto back = read_cube(path);
    EXPECT_EQ(back.header, h);
    EXPECT_TRUE(bit_equal(back.data.values(), data.values())) << "trial " << trial;
    EXPECT_EQ(encode_cube(back.header, back.data), encode_cube(h, data));
  }
}

TEST(Lwc1, MapsCarryFlags) {
  CubeHeader h;
  h.kind = PayloadKind::map;
  h.rows = 2;
  h.cols = 3;
  h.unit = "m";
  Map2<float> values(2, 3);
  Map2<std::uint8_t> flags(2, 3);
  for (std::size_t p = 0; p < 6; ++p) {
    values[p] = 1.5f * static_cast<float>(p);
    flags[p] = static_cast<std::uint8_t>(p % 4);
  }
  values[4] = std::numeric_limits<float>::quiet_NaN();
  auto back = decode_map(encode_map(h, values, flags));
  EXPECT_EQ(back.header, h);
  EXPECT_TRUE(bit_equal(back.values.values(), values.values()));
  EXPECT_EQ(back.flags, flags);
}

TEST(Lwc1, StacksDecodeAsCubes) {
  CubeHeader h;
  h.kind = PayloadKind::stack;
  h.rows = 1;
  h.cols = 2;
  h.depth = 3;
  h.zenith_angles_deg = {0.0, 40.0, 80.0};
  h.unit = "sr";
  Cube3<float> data(1, 2, 3, 0.25f);
  auto back = decode_cube(encode_cube(h, data));
  EXPECT_EQ(back.header.kind, PayloadKind::stack);
  EXPECT_EQ(back.data, data);
}

TEST(Lwc1, BadMagic) {
  auto bytes = encode_cube(cube_header(1, 1, 1), Cube3<float>(1, 1, 1));
  bytes[3] = '2';
  EXPECT_EQ(caught([&] { decode_cube(bytes); }).kind(), ErrorKind::magic_mismatch);
  std::vector<std::uint8_t> tiny{'L', 'W'};
  EXPECT_EQ(caught([&] { decode_cube(tiny); }).kind(), ErrorKind::magic_mismatch);
}

TEST(Lwc1, TruncationReportsExpectedAndFound) {
  const auto bytes = encode_cube(cube_header(2, 2, 3), Cube3<float>(2, 2, 3, 1.0f));
  std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 5);
  const auto e = caught([&] { decode_cube(cut); });
  EXPECT_EQ(e.kind(), ErrorKind::truncated);
  const std::string msg = e.what();
  EXPECT_NE(msg.find("expected 48"), std::string::npos) << msg;
  EXPECT_NE(msg.find("found 43"), std::string::npos) << msg;

  std::vector<std::uint8_t> head(bytes.begin(), bytes.begin() + 20);
  EXPECT_EQ(caught([&] { decode_cube(head); }).kind(), ErrorKind::truncated);
  std::vector<std::uint8_t> preamble(bytes.begin(), bytes.begin() + 7);
  EXPECT_EQ(caught([&] { decode_cube(preamble); }).kind(), ErrorKind::truncated);
}

TEST(Lwc1, TrailingBytesAreRejected) {
  auto bytes = encode_cube(cube_header(1, 1, 2), Cube3<float>(1, 1, 2));
  bytes.push_back(0);
  EXPECT_EQ(caught([&] { decode_cube(bytes); }).kind(), ErrorKind::parse);
}

TEST(Lwc1, DimensionOverflow) {
  const std::string huge =
      R"({"kind":"cube","rows":4294967296,"cols":4294967296,"depth":4294967296,)"
      R"("wavelengths_um":[],"unit":"microflick","air_temperature_k":null,"noise_sigma":0})";
  EXPECT_EQ(caught([&] { decode_cube(raw_file(huge, 0)); }).kind(), ErrorKind::dim_overflow);
  const std::string big =
      R"({"kind":"cube","rows":1048576,"cols":1048576,"depth":2,)"
      R"("wavelengths_um":[8,9],"unit":"microflick","air_temperature_k":null,"noise_sigma":0})";
  EXPECT_EQ(caught([&] { decode_cube(raw_file(big, 0)); }).kind(), ErrorKind::dim_overflow);
}

TEST(Lwc1, KindMismatch) {
  CubeHeader mh;
  mh.kind = PayloadKind::map;
  mh.rows = 1;
  mh.cols = 1;
  const auto map_bytes = encode_map(mh, Map2<float>(1, 1), Map2<std::uint8_t>(1, 1));
  EXPECT_EQ(caught([&] { decode_cube(map_bytes); }).kind(), ErrorKind::kind_mismatch);
  const auto cube_bytes = encode_cube(cube_header(1, 1, 1), Cube3<float>(1, 1, 1));
  EXPECT_EQ(caught([&] { decode_map(cube_bytes); }).kind(), ErrorKind::kind_mismatch);
}

TEST(Lwc1, MalformedHeader) {
  EXPECT_EQ(caught([&] { decode_cube(raw_file("{not json", 0)); }).kind(), ErrorKind::parse);
  EXPECT_EQ(caught([&] { decode_cube(raw_file(R"({"kind":"cube"})", 0)); }).kind(),
            ErrorKind::parse);
  EXPECT_EQ(caught([&] {
              decode_cube(raw_file(R"({"kind":"blob","rows":1,"cols":1,"depth":1,)"
                                   R"("wavelengths_um":[8],"unit":"","air_temperature_k":null,)"
                                   R"("noise_sigma":0})",
                                   4));
            }).kind(),
            ErrorKind::parse);
}

TEST(Lwc1, WriterChecksShapes) {
  auto h = cube_header(2, 2, 3);
  EXPECT_EQ(caught([&] { encode_cube(h, Cube3<float>(2, 2, 2)); }).kind(),
            ErrorKind::dimension_mismatch);
  h.wavelengths_um.pop_back();
  EXPECT_EQ(caught([&] { encode_cube(h, Cube3<float>(2, 2, 3)); }).kind(),
            ErrorKind::dimension_mismatch);
}

TEST(Lwc1, FileErrorsNameThePath) {
  const auto dir = scratch_dir("errors");
  const auto missing = dir / "missing.lwc";
  const auto e = caught([&] { read_cube(missing); });
  EXPECT_EQ(e.kind(), ErrorKind::io);
  EXPECT_NE(std::string(e.what()).find("missing.lwc"), std::string::npos);
  std::ofstream(dir / "junk.lwc") << "hello world";
  EXPECT_EQ(caught([&] { read_cube(dir / "junk.lwc"); }).kind(), ErrorKind::magic_mismatch);
}

TEST(SceneCubeIo, RoundTripsThroughFloat) {
  const auto dir = scratch_dir("scene");
  auto p = testing::panel_case(1.0, 7);
  save_scene_cube(dir / "cube.lwc", p.cube, {{"scene", "panels"}});
  auto back = load_scene_cube(dir / "cube.lwc");
  EXPECT_EQ(back.grid, p.cube.grid);
  EXPECT_EQ(back.air_temperature, p.cube.air_temperature);
  EXPECT_EQ(back.noise_sigma, 1.0);
  EXPECT_EQ(back.radiance, to_double(to_float(p.cube.radiance)));
  EXPECT_EQ(read_cube(dir / "cube.lwc").header.metadata.at("scene"), "panels");
}

TEST(SceneCubeIo, RequiresRadianceUnitAndAirTemperature) {
  const auto dir = scratch_dir("scene_bad");
  auto h = cube_header(1, 1, 2);
  h.air_temperature_k.reset();
  write_cube(dir / "noair.lwc", h, Cube3<float>(1, 1, 2, 1.0f));
  EXPECT_EQ(caught([&] { load_scene_cube(dir / "noair.lwc"); }).kind(), ErrorKind::parse);
  h = cube_header(1, 1, 2);
  h.unit = "dB/m";
  write_cube(dir / "unit.lwc", h, Cube3<float>(1, 1, 2, 1.0f));
  EXPECT_EQ(caught([&] { load_scene_cube(dir / "unit.lwc"); }).kind(), ErrorKind::unit_mismatch);
}

TEST(TruthIo, RoundTrips) {
  const auto dir = scratch_dir("truth");
  const auto& f = testing::fixture();
  auto p = testing::panel_case(0.0, 0);
  save_truth(dir, p.scene.truth, f.grid, f.downwelling.zenith_angles_deg());
  auto back = load_truth(dir);
  EXPECT_EQ(back.distance_m, to_double(to_float(p.scene.truth.distance_m)));
  EXPECT_EQ(back.temperature_k, to_double(to_float(p.scene.truth.temperature_k)));
  EXPECT_EQ(back.emissivity, to_double(to_float(p.scene.truth.emissivity)));
  EXPECT_EQ(back.solid_angles, to_double(to_float(p.scene.truth.solid_angles)));
  EXPECT_EQ(back.ground_ambient, to_double(to_float(p.scene.truth.ground_ambient)));
}

TEST(RangeMapIo, RoundTripsFlagsAndNaN) {
  const auto dir = scratch_dir("range");
  RangeMap r{Map2<double>(2, 2, 12.5), Map2<RangeFlag>(2, 2, RangeFlag::valid)};
  r.distance_m(0, 1) = std::nan("");
  r.flags(0, 1) = RangeFlag::nonpositive_ratio;
  r.distance_m(1, 0) = -3.0;
  r.flags(1, 0) = RangeFlag::clipped;
  r.flags(1, 1) = RangeFlag::zero_denominator;
  save_range_map(dir / "r.lwc", r, {{"mode", "quad"}});
  auto back = load_range_map(dir / "r.lwc");
  EXPECT_EQ(back.flags, r.flags);
  EXPECT_EQ(back.distance_m(0, 0), 12.5);
  EXPECT_TRUE(std::isnan(back.distance_m(0, 1)));
  EXPECT_EQ(back.distance_m(1, 0), -3.0);
  auto dist = load_distance(dir / "r.lwc");
  EXPECT_EQ(dist.valid(0, 0), 1);
  EXPECT_EQ(dist.valid(1, 1), 0);
}

TEST(EstimateIo, RoundTrips) {
  const auto dir = scratch_dir("estimate");
  const auto& f = testing::fixture();
  auto sp = testing::random_problem(3, 3, 2, static_cast<std::size_t>(f.grid.size()), 0);
  EstimateMaps e = sp.params;
  e.eps = Cube3<double>(3, 2, f.grid.size(), 0.8);
  e.omegas = Cube3<double>(3, 2, f.downwelling.size(), 0.1);
  e.loss = Map2<double>(3, 2, 2.5);
  e.iterations = 17;
  e.converged = true;
  save_estimate(dir / "est", e, f.grid, f.downwelling.zenith_angles_deg());
  auto back = load_estimate(dir / "est");
  EXPECT_EQ(back.d, to_double(to_float(e.d)));
  EXPECT_EQ(back.temperature_k, to_double(to_float(e.temperature_k)));
  EXPECT_EQ(back.eps, to_double(to_float(e.eps)));
  EXPECT_EQ(back.omegas, to_double(to_float(e.omegas)));
  EXPECT_EQ(back.loss, e.loss);
  EXPECT_EQ(back.iterations, 17u);
  EXPECT_TRUE(back.converged);
  auto dist = load_distance(dir / "est");
  EXPECT_EQ(dist.distance_m, back.d);
  for (auto v : dist.valid.values()) EXPECT_EQ(v, 1);
}

TEST(EstimateIo, ZeroAngleEstimate) {
  const auto dir = scratch_dir("estimate_q0");
  const auto& f = testing::fixture();
  EstimateMaps e{Map2<double>(2, 2, 5.0), Map2<double>(2, 2, 290.0),
                 Cube3<double>(2, 2, f.grid.size(), 0.9), Cube3<double>(2, 2, 0),
                 Map2<double>(2, 2, 1.0), 3, false};
  save_estimate(dir / "est", e, f.grid, {});
  auto back = load_estimate(dir / "est");
  EXPECT_EQ(back.omegas.depth(), 0u);
  EXPECT_EQ(back.d, e.d);
  EXPECT_FALSE(back.converged);
}

}  // namespace
}  // namespace lwir
