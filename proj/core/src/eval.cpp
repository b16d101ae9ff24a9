#include "lwir/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "lwir/error.hpp"

namespace lwir {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

}  // namespace

void check_patch(const PatchSpec& patch, std::size_t rows, std::size_t cols) {
  if (patch.height == 0 || patch.width == 0 || patch.row + patch.height > rows ||
      patch.col + patch.width > cols) {
    fail(ErrorKind::domain, "patch '" + patch.label + "' at (" + std::to_string(patch.row) + ", " +
                                std::to_string(patch.col) + ") size " +
                                std::to_string(patch.height) + "x" + std::to_string(patch.width) +
                                " does not fit a " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " map");
  }
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorKind::domain, "median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

std::vector<PatchStats> patch_stats(const Map2<double>& estimate, const Map2<std::uint8_t>& valid,
                                    const Map2<double>& truth,
                                    const std::vector<PatchSpec>& patches) {
  if (!(estimate.rows() == valid.rows() && estimate.cols() == valid.cols()) ||
      !(estimate.rows() == truth.rows() && estimate.cols() == truth.cols())) {
    fail(ErrorKind::dimension_mismatch, "estimate, validity and truth maps differ in shape");
  }
  std::vector<PatchStats> out;
  out.reserve(patches.size());
  for (const auto& patch : patches) {
    check_patch(patch, estimate.rows(), estimate.cols());
    PatchStats s;
    s.label = patch.label;
    std::vector<double> values;
    std::vector<double> truths;
    for (std::size_t i = patch.row; i < patch.row + patch.height; ++i) {
      for (std::size_t j = patch.col; j < patch.col + patch.width; ++j) {
        truths.push_back(truth(i, j));
        if (valid(i, j) && std::isfinite(estimate(i, j))) values.push_back(estimate(i, j));
      }
    }
    s.truth_median_m = median(truths);
    s.n_valid = values.size();
    if (values.empty()) {
      s.empty = true;
      s.mean_m = kNaN;
      s.std_m = kNaN;
    } else {
      double sum = 0.0;
      for (double v : values) sum += v;
      s.mean_m = sum / static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - s.mean_m) * (v - s.mean_m);
      s.std_m = std::sqrt(ss / static_cast<double>(values.size()));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<PatchStats> patch_stats(const RangeMap& estimate, const Map2<double>& truth,
                                    const std::vector<PatchSpec>& patches) {
  Map2<std::uint8_t> valid(estimate.flags.rows(), estimate.flags.cols());
  for (std::size_t p = 0; p < valid.size(); ++p) {
    valid[p] = estimate.flags[p] == RangeFlag::valid ? 1 : 0;
  }
  return patch_stats(estimate.distance_m, valid, truth, patches);
}

std::vector<PatchStats> patch_stats(const Map2<double>& estimate, const Map2<double>& truth,
                                    const std::vector<PatchSpec>& patches) {
  return patch_stats(estimate, Map2<std::uint8_t>(estimate.rows(), estimate.cols(), 1), truth,
                     patches);
}

void write_patch_csv(std::ostream& out, const std::vector<PatchStats>& stats) {
  out << "# std_m is the population standard deviation over valid pixels\n";
  out << "label,mean_m,std_m,truth_median_m,n_valid\n";
  for (const auto& s : stats) {
    out << s.label << ',' << format_number(s.mean_m) << ',' << format_number(s.std_m) << ','
        << format_number(s.truth_median_m) << ',' << s.n_valid << '\n';
  }
}

void save_patch_csv(const std::filesystem::path& path, const std::vector<PatchStats>& stats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  write_patch_csv(out, stats);
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

std::vector<PatchSpec> parse_patches(std::istream& in, const std::string& source) {
  std::vector<PatchSpec> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    const std::string where = source + ":" + std::to_string(line_no);
    if (fields.size() != 3 && fields.size() != 5) {
      fail(ErrorKind::parse, where + ": expected label,row,col[,height,width]");
    }
    PatchSpec p;
    p.label = fields[0];
    std::size_t* targets[] = {&p.row, &p.col, &p.height, &p.width};
    for (std::size_t f = 1; f < fields.size(); ++f) {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(fields[f], &used);
        if (used != fields[f].size() || v < 0) throw std::invalid_argument(fields[f]);
        *targets[f - 1] = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        fail(ErrorKind::parse, where + ": '" + fields[f] + "' is not a non-negative integer");
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PatchSpec> load_patches(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  return parse_patches(in, path.string());
}

void save_patches(const std::filesystem::path& path, const std::vector<PatchSpec>& patches) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << "# label,row,col,height,width\n";
  for (const auto& p : patches) {
    out << p.label << ',' << p.row << ',' << p.col << ',' << p.height << ',' << p.width << '\n';
  }
}

KMeansResult kmeans_emissivity(const Cube3<double>& eps, std::size_t k, std::uint64_t seed,
                               std::size_t max_iterations) {
  const std::size_t n = eps.pixels();
  const std::size_t dim = eps.depth();
  if (k == 0) fail(ErrorKind::domain, "k must be >= 1");
  if (k > n) {
    fail(ErrorKind::domain,
         "k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " pixels");
  }
  std::mt19937_64 gen(seed);
  KMeansResult result;
  result.labels = Map2<std::size_t>(eps.rows(), eps.cols());
  result.centroids.reserve(k);

  // k-means++ seeding.
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(gen);
  result.centroids.emplace_back(eps.pixel(first).begin(), eps.pixel(first).end());
  while (result.centroids.size() < k) {
    const auto& last = result.centroids.back();
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      nearest[p] = std::min(nearest[p], squared_distance(eps.pixel(p), last));
      total += nearest[p];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, total)(gen);
      pick = n - 1;
      for (std::size_t p = 0; p < n; ++p) {
        target -= nearest[p];
        if (target < 0.0 && nearest[p] > 0.0) {
          pick = p;
          break;
        }
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(gen);
    }
    result.centroids.emplace_back(eps.pixel(pick).begin(), eps.pixel(pick).end());
  }

  std::vector<std::size_t> counts(k);
  std::vector<double> own(n);
  bool changed = true;
  for (std::size_t it = 0; it < max_iterations && changed; ++it) {
    changed = false;
    double wcss = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(eps.pixel(p), result.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (it == 0 || result.labels[p] != best) changed = true;
      result.labels[p] = best;
      own[p] = best_d;
      wcss += best_d;
    }
    result.wcss_history.push_back(wcss);
    result.iterations = it + 1;

    for (auto& c : result.centroids) std::fill(c.begin(), c.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t p = 0; p < n; ++p) {
      auto& c = result.centroids[result.labels[p]];
      const auto x = eps.pixel(p);
      for (std::size_t d = 0; d < dim; ++d) c[d] += x[d];
      ++counts[result.labels[p]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (double& v : result.centroids[c]) v /= static_cast<double>(counts[c]);
        continue;
      }
      const std::size_t far = static_cast<std::size_t>(
          std::max_element(own.begin(), own.end()) - own.begin());
      result.centroids[c].assign(eps.pixel(far).begin(), eps.pixel(far).end());
      own[far] = 0.0;
      changed = true;
    }
  }
  return result;
}

std::string_view to_string(Palette palette) noexcept {
  return palette == Palette::gray ? "gray" : "heat";
}

Palette parse_palette(std::string_view name) {
  if (name == "gray" || name == "grey") return Palette::gray;
  if (name == "heat") return Palette::heat;
  fail(ErrorKind::parse, "unknown palette '" + std::string(name) + "' (expected gray or heat)");
}

std::vector<std::uint8_t> render_levels(const Map2<double>& map, const Map2<std::uint8_t>& valid,
                                        const RenderOptions& options) {
  if (!(map.rows() == valid.rows() && map.cols() == valid.cols())) {
    fail(ErrorKind::dimension_mismatch, "map and validity plane differ in shape");
  }
  auto usable = [&](std::size_t p) { return valid[p] != 0 && std::isfinite(map[p]); };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < map.size(); ++p) {
    if (!usable(p)) continue;
    lo = std::min(lo, map[p]);
    hi = std::max(hi, map[p]);
  }
  if (options.min) lo = *options.min;
  if (options.max) hi = *options.max;
  if (options.min && options.max && !(hi >= lo)) {
    fail(ErrorKind::domain, "render max must be >= min");
  }
  std::vector<std::uint8_t> levels(map.size(), 0);
  for (std::size_t p = 0; p < map.size(); ++p) {
    if (!usable(p)) continue;
    double frac = 0.5;
    if (hi > lo) frac = (std::clamp(map[p], lo, hi) - lo) / (hi - lo);
    levels[p] = static_cast<std::uint8_t>(1 + std::lround(frac * 254.0));
  }
  return levels;
}

void render_map(const Map2<double>& map, const Map2<std::uint8_t>& valid,
                const std::filesystem::path& path, const RenderOptions& options) {
  const auto levels = render_levels(map, valid, options);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  const bool color = options.palette == Palette::heat;
  out << (color ? "P6" : "P5") << '\n' << map.cols() << ' ' << map.rows() << "\n255\n";
  if (!color) {
    out.write(reinterpret_cast<const char*>(levels.data()),
              static_cast<std::streamsize>(levels.size()));
  } else {
    std::vector<std::uint8_t> rgb;
    rgb.reserve(levels.size() * 3);
    for (std::uint8_t level : levels) {
      if (level == 0) {
        rgb.insert(rgb.end(), {0, 0, 0});
        continue;
      }
      const double t = (level - 1) / 254.0;
      auto channel = [&](double offset) {
        return static_cast<std::uint8_t>(
            std::lround(255.0 * std::clamp(3.0 * t - offset, 0.0, 1.0)));
      };
      rgb.push_back(static_cast<std::uint8_t>(std::max<int>(40, channel(0.0))));
      rgb.push_back(channel(1.0));
      rgb.push_back(channel(2.0));
    }
    out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  }
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

Map2<double> downwelling_contribution(const EstimateMaps& estimate,
                                      const DownwellingSet& downwelling, std::size_t band) {
  if (estimate.omegas.depth() != downwelling.size()) {
    fail(ErrorKind::dimension_mismatch,
         "estimate has " + std::to_string(estimate.omegas.depth()) + " solid angles, set has " +
             std::to_string(downwelling.size()));
  }
  if (band >= estimate.eps.depth()) fail(ErrorKind::domain, "band index out of range");
  Map2<double> out(estimate.rows(), estimate.cols());
  for (std::size_t p = 0; p < out.size(); ++p) {
    const auto om = estimate.omegas.pixel(p);
    double in = 0.0;
    for (std::size_t q = 0; q < om.size(); ++q) {
      in += om[q] / std::numbers::pi * downwelling.radiance(q)[band];
    }
    out[p] = (1.0 - estimate.eps.pixel(p)[band]) * in;
  }
  return out;
}

Map2<std::uint8_t> threshold_mask(const Map2<double>& values, double threshold) {
  Map2<std::uint8_t> out(values.rows(), values.cols());
  for (std::size_t p = 0; p < values.size(); ++p) out[p] = values[p] > threshold ? 1 : 0;
  return out;
}

}  // namespace lwir
