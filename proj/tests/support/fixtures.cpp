#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace lwir::testing {

namespace {

constexpr std::size_t kSide = 32;

Fixture build_fixture() {
  const Temperature t_air(288.0);
  auto params = default_atmosphere(t_air);
  auto grid = fixture_grid();
  auto alpha = synth_attenuation(params, grid);
  auto angles = default_zenith_angles();
  auto dw = synth_downwelling(params, grid, angles);
  auto bands = BandSelection::resolve(grid, BandWavelengths{});
  return Fixture{grid, params, alpha, dw, t_air, bands};
}

// Distances 5-200 m and a scrambled per-pixel fraction for temperatures.
double pixel_distance(std::size_t p, std::size_t count) {
  return 5.0 + 195.0 * static_cast<double>(p) / static_cast<double>(count - 1);
}

double pixel_fraction(std::size_t p) {
  const double x = static_cast<double>(p) * 0.6180339887498949;
  return x - std::floor(x);
}

double transmittance_at(const AttenuationSpectrum& alpha, std::size_t k, double d) {
  return std::pow(10.0, -alpha[k] * d / 10.0);
}

void require_unit_interval(double eps, const char* what, std::size_t p) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw std::logic_error(std::string(what) + ": emissivity " + std::to_string(eps) +
                           " out of [0, 1] at pixel " + std::to_string(p));
  }
}

}  // namespace

const Fixture& fixture() {
  static const Fixture f = build_fixture();
  return f;
}

SceneTruth blank_truth(std::size_t m, std::size_t n, std::size_t k, std::size_t q) {
  return SceneTruth{Map2<double>(m, n), Map2<double>(m, n), Cube3<double>(m, n, k),
                    Cube3<double>(m, n, q), Cube3<double>(m, n, k)};
}

SceneTruth crop(const SceneTruth& truth, std::size_t row, std::size_t col, std::size_t rows,
                std::size_t cols) {
  auto out = blank_truth(rows, cols, truth.emissivity.depth(), truth.solid_angles.depth());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out.distance_m(i, j) = truth.distance_m(row + i, col + j);
      out.temperature_k(i, j) = truth.temperature_k(row + i, col + j);
      auto copy = [&](const Cube3<double>& src, Cube3<double>& dst) {
        auto s = src.pixel(row + i, col + j);
        auto d = dst.pixel(i, j);
        std::copy(s.begin(), s.end(), d.begin());
      };
      copy(truth.emissivity, out.emissivity);
      copy(truth.solid_angles, out.solid_angles);
      copy(truth.ground_ambient, out.ground_ambient);
    }
  }
  return out;
}

ExactCase hot_exact_case() {
  const auto& f = fixture();
  const Temperature t_air(1.0);
  const std::size_t k = f.grid.size();
  auto truth = blank_truth(kSide, kSide, k, f.downwelling.size());
  const double l1 = f.grid[f.bands.i1];
  const double l2 = f.grid[f.bands.i2];
  const std::size_t count = kSide * kSide;
  for (std::size_t p = 0; p < count; ++p) {
    const double t = 290.0 + 40.0 * pixel_fraction(p);
    truth.distance_m[p] = pixel_distance(p, count);
    truth.temperature_k[p] = t;
    auto eps = truth.emissivity.pixel(p);
    std::fill(eps.begin(), eps.end(), 0.9);
    eps[f.bands.i2] = 0.9 * planck(l1, t) / planck(l2, t);
    require_unit_interval(eps[f.bands.i2], "hot", p);
  }
  auto cube = synthesize_cube(truth, f.alpha, f.downwelling, t_air, 0.0, 0);
  return ExactCase{std::move(truth), std::move(cube), t_air, 0.0};
}

ExactCase air_exact_case() {
  const auto& f = fixture();
  const Temperature t_air = f.air_temperature;
  const std::size_t k = f.grid.size();
  auto truth = blank_truth(kSide, kSide, k, f.downwelling.size());
  const double l1 = f.grid[f.bands.i1];
  const double l2 = f.grid[f.bands.i2];
  const double b1a = planck(l1, t_air);
  const double b2a = planck(l2, t_air);
  const std::size_t count = kSide * kSide;
  for (std::size_t p = 0; p < count; ++p) {
    const double t = 300.0 + 40.0 * pixel_fraction(p);
    truth.distance_m[p] = pixel_distance(p, count);
    truth.temperature_k[p] = t;
    auto eps = truth.emissivity.pixel(p);
    std::fill(eps.begin(), eps.end(), 0.95);
    eps[f.bands.i2] = (0.95 * planck(l1, t) - b1a + b2a) / planck(l2, t);
    require_unit_interval(eps[f.bands.i2], "air", p);
  }
  auto cube = synthesize_cube(truth, f.alpha, f.downwelling, t_air, 0.0, 0);
  return ExactCase{std::move(truth), std::move(cube), t_air, 0.0};
}

ExactCase quad_exact_case() {
  const auto& f = fixture();
  const Temperature t_air = f.air_temperature;
  const std::size_t k = f.grid.size();
  const std::size_t q = f.downwelling.size();
  const double slope = fit_ozone_slope(f.downwelling, f.bands).slope;
  const RadianceModel model(f.alpha, f.downwelling, t_air);
  const auto omegas = sky_solid_angles(f.downwelling.zenith_angles_deg(),
                                       SurfaceOrientation::vertical);
  const auto ground = planck(f.grid, t_air);
  const std::vector<double> black(k, 0.0);
  std::vector<double> incoming(k);
  model.reflected(black, omegas, ground.values(), incoming);

  auto truth = blank_truth(kSide, kSide, k, q);
  const auto& b = f.bands;
  const std::size_t count = kSide * kSide;
  for (std::size_t p = 0; p < count; ++p) {
    const double d = pixel_distance(p, count);
    // Alternate warm and cold surfaces, at least 8 K from air.
    const double offset = 8.0 + 20.0 * pixel_fraction(p);
    const double t = t_air.kelvin() + (p % 2 == 0 ? offset : -offset);
    truth.distance_m[p] = d;
    truth.temperature_k[p] = t;
    auto eps = truth.emissivity.pixel(p);
    std::fill(eps.begin(), eps.end(), 0.6);
    auto om = truth.solid_angles.pixel(p);
    std::copy(omegas.begin(), omegas.end(), om.begin());
    auto g = truth.ground_ambient.pixel(p);
    std::copy(ground.values().begin(), ground.values().end(), g.begin());

    auto surface = [&](std::size_t band) {
      const double bb = planck(f.grid[band], t);
      return 0.6 * bb + 0.4 * incoming[band] - model.air_planck()[band];
    };
    const double e1 = surface(b.i1);
    const double e2 = surface(b.i2);
    const double tau2 = transmittance_at(f.alpha, b.i2, d);
    const double tau3 = transmittance_at(f.alpha, b.i3, d);
    const double tau4 = transmittance_at(f.alpha, b.i4, d);
    const double b3a = model.air_planck()[b.i3];
    const double b4a = model.air_planck()[b.i4];
    const double b3 = planck(f.grid[b.i3], t);
    const double b4 = planck(f.grid[b.i4], t);
    // Required s (L4 - L3), reached through eps(l4) alone when possible,
    // otherwise with eps(l4) at a bound and eps(l3) solving the rest.
    const double target = tau2 * (e2 - e1) / slope;
    auto eps_for = [&](double e, std::size_t band, double bb, double ba) {
      return (e + ba - incoming[band]) / (bb - incoming[band]);
    };
    const double e3 = surface(b.i3);
    eps[b.i4] = eps_for((target - b4a + tau3 * e3 + b3a) / tau4, b.i4, b4, b4a);
    if (!(eps[b.i4] >= 0.0 && eps[b.i4] <= 1.0)) {
      eps[b.i4] = std::clamp(eps[b.i4], 0.0, 1.0);
      const double e4 = eps[b.i4] * b4 + (1.0 - eps[b.i4]) * incoming[b.i4] - b4a;
      eps[b.i3] = eps_for((tau4 * e4 + b4a - b3a - target) / tau3, b.i3, b3, b3a);
      require_unit_interval(eps[b.i3], "quad", p);
    }
    require_unit_interval(eps[b.i4], "quad", p);
  }
  auto cube = synthesize_cube(truth, f.alpha, f.downwelling, t_air, 0.0, 0);
  return ExactCase{std::move(truth), std::move(cube), t_air, slope};
}

NoOzoneCase no_ozone_case() {
  const auto& f = fixture();
  const Temperature t_air = f.air_temperature;
  const std::size_t k = f.grid.size();
  const RadianceModel model(f.alpha, f.downwelling, t_air);
  auto truth = blank_truth(kSide, kSide, k, f.downwelling.size());
  const auto& b = f.bands;
  const std::size_t count = kSide * kSide;
  std::size_t misses = 0;
  std::vector<double> refl(k, 0.0);
  std::vector<double> out(k);
  for (std::size_t p = 0; p < count; ++p) {
    const double d = pixel_distance(p, count);
    const double t = 295.0 + 30.0 * pixel_fraction(p);
    truth.distance_m[p] = d;
    truth.temperature_k[p] = t;
    auto eps = truth.emissivity.pixel(p);
    std::fill(eps.begin(), eps.end(), 0.9);

    // Rounding can step over L3; nudging eps(l3) moves the target.
    bool hit = false;
    for (int outer = 0; outer < 64 && !hit; ++outer) {
      for (int n = 0; n < 8 * (outer > 0); ++n) eps[b.i3] = std::nextafter(eps[b.i3], 0.0);
      model.observed(d, t, eps, refl, out);
      const double l3 = out[b.i3];
      const double tau4 = transmittance_at(f.alpha, b.i4, d);
      const double b4a = model.air_planck()[b.i4];
      double e4 = ((l3 - b4a) / tau4 + b4a) / planck(f.grid[b.i4], t);
      require_unit_interval(e4, "no-ozone", p);
      int last_direction = 0;
      for (int step = 0; step < 512; ++step) {
        eps[b.i4] = e4;
        model.observed(d, t, eps, refl, out);
        if (out[b.i4] == l3) {
          hit = true;
          break;
        }
        const int direction = out[b.i4] < l3 ? 1 : -1;
        if (last_direction != 0 && direction != last_direction) break;
        last_direction = direction;
        e4 = std::nextafter(e4, direction > 0 ? 2.0 : -1.0);
      }
    }
    if (!hit) ++misses;
  }
  auto cube = synthesize_cube(truth, f.alpha, f.downwelling, t_air, 0.0, 0);
  return NoOzoneCase{ExactCase{std::move(truth), std::move(cube), t_air, 0.0}, misses};
}

PanelCase panel_case(double noise_sigma, std::uint64_t seed) {
  const auto& f = fixture();
  auto scene = make_scene("panels", f.grid, f.downwelling.zenith_angles_deg(), f.air_temperature);
  auto cube = synthesize_cube(scene.truth, f.alpha, f.downwelling, f.air_temperature, noise_sigma,
                              seed);
  return PanelCase{std::move(scene), std::move(cube)};
}

SmallProblem random_problem(std::uint64_t seed, std::size_t m, std::size_t n, std::size_t bands,
                            std::size_t angles) {
  std::mt19937_64 gen(seed);
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); };
  const auto grid = uniform_grid(8.0, 13.0, bands);
  const Temperature t_air(u(280.0, 295.0));

  std::vector<double> a(bands);
  for (double& v : a) v = u(0.005, 0.1);
  AttenuationSpectrum alpha(Spectrum(grid, a, Unit::db_per_m));

  std::optional<DownwellingSet> dw;
  if (angles > 0) {
    std::vector<double> zenith(angles);
    std::vector<Spectrum> sky;
    for (std::size_t q = 0; q < angles; ++q) {
      zenith[q] = 80.0 * static_cast<double>(q) / static_cast<double>(angles);
      std::vector<double> s(bands);
      for (double& v : s) v = u(100.0, 700.0);
      sky.emplace_back(grid, s, Unit::microflick);
    }
    dw.emplace(zenith, sky);
  }

  auto random_state = [&](SceneTruth& truth) {
    for (std::size_t p = 0; p < m * n; ++p) {
      truth.distance_m[p] = u(10.0, 80.0);
      truth.temperature_k[p] = u(280.0, 310.0);
      for (double& e : truth.emissivity.pixel(p)) e = u(0.5, 0.95);
      for (double& w : truth.solid_angles.pixel(p)) w = u(0.0, 3.0 / static_cast<double>(angles + 1));
    }
  };
  auto truth = blank_truth(m, n, bands, angles);
  random_state(truth);
  auto air = planck(grid, t_air);
  for (std::size_t p = 0; p < m * n; ++p) {
    auto g = truth.ground_ambient.pixel(p);
    std::copy(air.values().begin(), air.values().end(), g.begin());
  }
  auto cube = synthesize_cube(truth, alpha, dw, t_air, 2.0, seed + 1);

  auto guess = blank_truth(m, n, bands, angles);
  random_state(guess);
  EstimateMaps params;
  params.d = guess.distance_m;
  params.temperature_k = guess.temperature_k;
  params.eps = guess.emissivity;
  params.omegas = guess.solid_angles;
  params.loss = Map2<double>(m, n);
  return SmallProblem{alpha, dw, t_air, std::move(cube), std::move(params)};
}

}  // namespace lwir::testing
