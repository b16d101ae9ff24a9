#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lwir/closed_form.hpp"
#include "lwir/hyperspectral.hpp"
#include "lwir/ndarray.hpp"

namespace lwir {

struct PatchSpec {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 8;
  std::size_t width = 8;
  std::string label;
};

struct PatchStats {
  std::string label;
  double mean_m = 0.0;
  double std_m = 0.0;  // population standard deviation
  double truth_median_m = 0.0;
  std::size_t n_valid = 0;
  // True when every estimate in the patch was flagged; mean/std are NaN.
  bool empty = false;
};

// Throws ErrorKind::domain if the patch does not fit inside rows x cols.
void check_patch(const PatchSpec& patch, std::size_t rows, std::size_t cols);

// Statistics of `estimate` over each patch, skipping pixels whose `valid`
// entry is false, alongside the median of `truth` over the whole patch.
std::vector<PatchStats> patch_stats(const Map2<double>& estimate, const Map2<std::uint8_t>& valid,
                                    const Map2<double>& truth,
                                    const std::vector<PatchSpec>& patches);
std::vector<PatchStats> patch_stats(const RangeMap& estimate, const Map2<double>& truth,
                                    const std::vector<PatchSpec>& patches);
// Every pixel counts as valid.
std::vector<PatchStats> patch_stats(const Map2<double>& estimate, const Map2<double>& truth,
                                    const std::vector<PatchSpec>& patches);

// Median with the mean of the two middle values for even counts. Throws
// ErrorKind::domain on empty input.
double median(std::vector<double> values);

// CSV with header "label,mean_m,std_m,truth_median_m,n_valid".
void write_patch_csv(std::ostream& out, const std::vector<PatchStats>& stats);
void save_patch_csv(const std::filesystem::path& path, const std::vector<PatchStats>& stats);

// One patch per line: "label,row,col[,height,width]"; '#' comments.
std::vector<PatchSpec> parse_patches(std::istream& in, const std::string& source = "<patches>");
std::vector<PatchSpec> load_patches(const std::filesystem::path& path);
void save_patches(const std::filesystem::path& path, const std::vector<PatchSpec>& patches);

struct KMeansResult {
  Map2<std::size_t> labels;
  std::vector<std::vector<double>> centroids;
  // Within-cluster sum of squares after each assignment step.
  std::vector<double> wcss_history;
  std::size_t iterations = 0;
};

// k-means++ seeding followed by Lloyd iterations on the per-pixel emissivity
// vectors. An emptied cluster is re-seeded at the point farthest from its
// assigned centroid.
KMeansResult kmeans_emissivity(const Cube3<double>& eps, std::size_t k, std::uint64_t seed,
                               std::size_t max_iterations = 100);

enum class Palette { gray, heat };

std::string_view to_string(Palette palette) noexcept;
Palette parse_palette(std::string_view name);

struct RenderOptions {
  Palette palette = Palette::gray;
  // Scaling range; defaults to the min/max of the valid values.
  std::optional<double> min;
  std::optional<double> max;
};

// Valid values map linearly to levels 1..255 after clamping to [min, max];
// invalid pixels are black (0). Gray writes binary PGM, heat binary PPM.
std::vector<std::uint8_t> render_levels(const Map2<double>& map, const Map2<std::uint8_t>& valid,
                                        const RenderOptions& options);
void render_map(const Map2<double>& map, const Map2<std::uint8_t>& valid,
                const std::filesystem::path& path, const RenderOptions& options = {});

// Estimated reflected-downwelling radiance per pixel at `band`:
// (1 - eps) * sum_q Omega_q / pi * L_D,q.
// Throws ErrorKind::dimension_mismatch when the angle counts differ.
Map2<double> downwelling_contribution(const EstimateMaps& estimate,
                                      const DownwellingSet& downwelling, std::size_t band);

// 1 where value > threshold.
Map2<std::uint8_t> threshold_mask(const Map2<double>& values, double threshold);

}  // namespace lwir
