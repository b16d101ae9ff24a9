#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "lwir/atmosphere.hpp"
#include "lwir/error.hpp"

namespace lwir {
namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

std::string index_filename(std::size_t q) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sky_%02zu.csv", q);
  return buf;
}

}  // namespace

Spectrum load_spectrum(const std::filesystem::path& path, std::optional<Unit> expected_unit) {
  return parse_spectrum(read_text(path), expected_unit, path.string());
}

void save_spectrum(const std::filesystem::path& path, const Spectrum& spectrum) {
  write_text(path, format_spectrum(spectrum));
}

AttenuationSpectrum load_attenuation(const std::filesystem::path& path) {
  return AttenuationSpectrum(load_spectrum(path, Unit::db_per_m));
}

DownwellingSet load_downwelling(const std::filesystem::path& dir) {
  const auto index_path = dir / "angles.csv";
  const std::string index = read_text(index_path);
  std::vector<double> angles;
  std::vector<Spectrum> spectra;
  std::istringstream lines(index);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      fail(ErrorKind::parse, index_path.string() + ":" + std::to_string(line_no) +
                                 ": expected zenith_deg,filename");
    }
    double angle = 0.0;
    try {
      std::size_t used = 0;
      angle = std::stod(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail(ErrorKind::parse, index_path.string() + ":" + std::to_string(line_no) +
                                 ": bad zenith angle");
    }
    const std::string file = line.substr(comma + 1);
    if (file.empty()) {
      fail(ErrorKind::parse, index_path.string() + ":" + std::to_string(line_no) +
                                 ": missing filename");
    }
    angles.push_back(angle);
    spectra.push_back(load_spectrum(dir / file, Unit::microflick));
  }
  if (angles.empty()) fail(ErrorKind::parse, index_path.string() + ": no angles listed");
  return DownwellingSet(std::move(angles), std::move(spectra));
}

void save_downwelling(const std::filesystem::path& dir, const DownwellingSet& set) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  std::string index = "# zenith_deg,filename\n";
  for (std::size_t q = 0; q < set.size(); ++q) {
    char angle[40];
    std::snprintf(angle, sizeof angle, "%.17g", set.zenith_angles_deg()[q]);
    const std::string name = index_filename(q);
    index += std::string(angle) + "," + name + "\n";
    save_spectrum(dir / name, set.radiance(q));
  }
  write_text(dir / "angles.csv", index);
}

}  // namespace lwir
