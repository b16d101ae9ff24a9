#include "lwir/hyperspectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "lwir/error.hpp"
#include "lwir/parallel.hpp"

namespace lwir {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLn10Over10 = std::numbers::ln10 / 10.0;
// Backtracks allowed for a curvature-preconditioned direction before the
// plain gradient direction is tried instead.
constexpr std::size_t kPreconditionedBacktracks = 6;

void check_shapes(const EstimateMaps& params, const SceneCube& cube, std::size_t angles) {
  const std::size_t m = cube.radiance.rows();
  const std::size_t n = cube.radiance.cols();
  const std::size_t k = cube.radiance.depth();
  auto plane_ok = [&](std::size_t r, std::size_t c) { return r == m && c == n; };
  if (!plane_ok(params.d.rows(), params.d.cols()) ||
      !plane_ok(params.temperature_k.rows(), params.temperature_k.cols()) ||
      !plane_ok(params.eps.rows(), params.eps.cols()) ||
      !plane_ok(params.omegas.rows(), params.omegas.cols())) {
    fail(ErrorKind::dimension_mismatch, "estimate maps and cube disagree on M x N");
  }
  if (params.eps.depth() != k) {
    fail(ErrorKind::dimension_mismatch, "estimate has " + std::to_string(params.eps.depth()) +
                                            " emissivity bands, cube has " + std::to_string(k));
  }
  if (params.omegas.depth() != angles) {
    fail(ErrorKind::dimension_mismatch, "estimate has " + std::to_string(params.omegas.depth()) +
                                            " solid angles, model has " + std::to_string(angles));
  }
}

double pixel_smoothness(std::span<const double> eps) {
  double s = 0.0;
  for (std::size_t k = 1; k < eps.size(); ++k) {
    const double diff = eps[k] - eps[k - 1];
    s += diff * diff;
  }
  return s;
}

// Per-pixel evaluation against a RadianceModel, with the pieces that depend on
// a single variable block kept separate so a line search only recomputes
// what changed. The arithmetic mirrors RadianceModel::reflected/observed.
class PixelModel {
 public:
  PixelModel(const RadianceModel& model, GroundFill fill, double rho_eps)
      : model_(model), fill_(fill), rho_eps_(rho_eps) {}

  std::size_t bands() const { return model_.bands(); }
  std::size_t angles() const { return model_.angles(); }
  double rho_eps() const { return rho_eps_; }

  void transmittance(double d, std::span<double> out) const {
    const auto alpha = model_.alpha();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::pow(10.0, -alpha[k] * d / 10.0);
  }

  void blackbody(double t, std::span<double> out) const {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = planck(model_.grid()[k], t);
  }

  // Radiance arriving at the surface; returns the covered fraction sum(Omega)/pi.
  double incoming(std::span<const double> omegas, std::span<double> out) const {
    double covered = 0.0;
    for (double o : omegas) covered += o / kPi;
    const double remainder = std::max(0.0, 1.0 - covered);
    const auto ba = model_.air_planck();
    for (std::size_t k = 0; k < out.size(); ++k) {
      double in = 0.0;
      for (std::size_t q = 0; q < omegas.size(); ++q) in += (omegas[q] / kPi) * model_.sky(q)[k];
      if (fill_ == GroundFill::ambient) in += remainder * ba[k];
      out[k] = in;
    }
    return covered;
  }

  // Data term; writes residuals yhat - y.
  double data(std::span<const double> y, std::span<const double> eps, std::span<const double> tau,
              std::span<const double> bb, std::span<const double> in,
              std::span<double> resid) const {
    const auto ba = model_.air_planck();
    double sum = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double refl = (1.0 - eps[k]) * in[k];
      const double leaving = eps[k] * bb[k] + refl;
      const double yhat = tau[k] * leaving + (1.0 - tau[k]) * ba[k];
      resid[k] = yhat - y[k];
      sum += resid[k] * resid[k];
    }
    return sum;
  }

  double objective(std::span<const double> y, std::span<const double> eps,
                   std::span<const double> tau, std::span<const double> bb,
                   std::span<const double> in, std::span<double> resid) const {
    const double smooth = rho_eps_ > 0.0 ? rho_eps_ * pixel_smoothness(eps) : 0.0;
    return data(y, eps, tau, bb, in, resid) + smooth;
  }

  // Jacobian rows of yhat with respect to each block.
  double jac_d(std::size_t k, double eps, double tau, double bb, double in) const {
    const double ba = model_.air_planck()[k];
    return -kLn10Over10 * model_.alpha()[k] * tau * (eps * bb + (1.0 - eps) * in - ba);
  }
  double jac_t(std::size_t k, double t, double eps, double tau) const {
    return tau * eps * planck_dT(model_.grid()[k], t);
  }
  static double jac_eps(double tau, double bb, double in) { return tau * (bb - in); }
  double jac_omega(std::size_t q, std::size_t k, double covered, double eps, double tau) const {
    double source = model_.sky(q)[k];
    if (fill_ == GroundFill::ambient && covered < 1.0) source -= model_.air_planck()[k];
    return tau * (1.0 - eps) * source / kPi;
  }

 private:
  const RadianceModel& model_;
  GroundFill fill_;
  double rho_eps_;
};

void smoothness_gradient(std::span<const double> eps, double rho, std::span<double> out) {
  const std::size_t k_bands = eps.size();
  for (std::size_t k = 0; k < k_bands; ++k) {
    double g = 0.0;
    if (k > 0) g += 2.0 * (eps[k] - eps[k - 1]);
    if (k + 1 < k_bands) g -= 2.0 * (eps[k + 1] - eps[k]);
    out[k] += rho * g;
  }
}

// Solves the symmetric tridiagonal system with diagonal `diag` and constant
// off-diagonal `off` (Thomas algorithm). `work` is scratch of the same size.
void solve_tridiagonal(std::span<const double> diag, double off, std::span<const double> rhs,
                       std::span<double> out, std::span<double> work) {
  const std::size_t n = diag.size();
  double denom = diag[0];
  out[0] = rhs[0] / denom;
  for (std::size_t k = 1; k < n; ++k) {
    work[k] = off / denom;
    denom = diag[k] - off * work[k];
    out[k] = (rhs[k] - off * out[k - 1]) / denom;
  }
  for (std::size_t k = n - 1; k-- > 0;) out[k] -= work[k + 1] * out[k + 1];
}

// State and scratch for one pixel during a sweep.
struct PixelWork {
  explicit PixelWork(std::size_t k_bands, std::size_t q_angles)
      : tau(k_bands), bb(k_bands), in(k_bands), resid(k_bands), trial_tau(k_bands),
        trial_bb(k_bands), trial_in(k_bands), trial_resid(k_bands), trial_eps(k_bands),
        grad_eps(k_bands), scale_eps(k_bands), diag_eps(k_bands), work_eps(k_bands),
        trial_omega(q_angles), grad_omega(q_angles), dir_omega(q_angles),
        jac_omega(static_cast<Eigen::Index>(k_bands), static_cast<Eigen::Index>(q_angles)),
        curv_omega(static_cast<Eigen::Index>(q_angles), static_cast<Eigen::Index>(q_angles)),
        chol_omega(static_cast<Eigen::Index>(q_angles)) {}

  std::vector<double> tau, bb, in, resid;
  std::vector<double> trial_tau, trial_bb, trial_in, trial_resid;
  std::vector<double> trial_eps, grad_eps, scale_eps, diag_eps, work_eps;
  std::vector<double> trial_omega, grad_omega, dir_omega;
  Eigen::MatrixXd jac_omega;
  Eigen::MatrixXd curv_omega;
  Eigen::LLT<Eigen::MatrixXd> chol_omega;
  double covered = 0.0;
};

struct LineSearch {
  double c;
  double backtrack;
  std::size_t max_backtracks;
};

// Projected, diagonally scaled gradient step with Armijo backtracking.
// `trial(t)` fills the trial point for step t and returns (objective,
// directional term g . (x_t - x)); it returns no value when x_t == x.
// Returns the accepted objective or `f0` when nothing was accepted.
template <typename TrialFn, typename AcceptFn>
double armijo(double f0, const LineSearch& ls, TrialFn trial, AcceptFn accept) {
  double t = 1.0;
  for (std::size_t attempt = 0; attempt <= ls.max_backtracks; ++attempt, t *= ls.backtrack) {
    const auto result = trial(t);
    if (!result) return f0;
    const auto [f, decrease] = *result;
    if (std::isfinite(f) && f <= f0 + ls.c * decrease) {
      accept();
      return f;
    }
  }
  return f0;
}

struct StepResult {
  double objective;
  double directional;
};

class PixelSolver {
 public:
  PixelSolver(const PixelModel& pm, const LineSearch& ls, double d_max, double t_min,
              bool update_d)
      : pm_(pm), ls_(ls), d_max_(d_max), t_min_(t_min), update_d_(update_d) {}

  // Full model refresh at the current state; returns the objective.
  double refresh(std::span<const double> y, double d, double t, std::span<const double> eps,
                 std::span<const double> omegas, PixelWork& w) const {
    pm_.transmittance(d, w.tau);
    pm_.blackbody(t, w.bb);
    w.covered = pm_.incoming(omegas, w.in);
    return pm_.objective(y, eps, w.tau, w.bb, w.in, w.resid);
  }

  // One pass over the blocks d, T, eps, omega. Returns the new objective.
  double sweep(std::span<const double> y, double& d, double& t, std::span<double> eps,
               std::span<double> omegas, PixelWork& w, double f) const {
    const std::size_t k_bands = y.size();
    if (update_d_) f = step_d(y, d, eps, w, f);
    f = step_t(y, t, eps, w, f);
    f = step_eps(y, eps, w, f);
    if (!omegas.empty()) f = step_omega(y, eps, omegas, w, f);
    (void)k_bands;
    return f;
  }

 private:
  double step_d(std::span<const double> y, double& d, std::span<const double> eps, PixelWork& w,
                double f) const {
    double g = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double j = pm_.jac_d(k, eps[k], w.tau[k], w.bb[k], w.in[k]);
      g += 2.0 * w.resid[k] * j;
      h += 2.0 * j * j;
    }
    if (!(h > 0.0) || g == 0.0) return f;
    const double x0 = d;
    double x = x0;
    return armijo(
        f, ls_,
        [&](double step) -> std::optional<StepResult> {
          x = std::clamp(x0 - step * g / h, 0.0, d_max_);
          if (x == x0) return std::nullopt;
          pm_.transmittance(x, w.trial_tau);
          const double fx = pm_.objective(y, eps, w.trial_tau, w.bb, w.in, w.trial_resid);
          return StepResult{fx, g * (x - x0)};
        },
        [&] {
          d = x;
          std::swap(w.tau, w.trial_tau);
          std::swap(w.resid, w.trial_resid);
        });
  }

  double step_t(std::span<const double> y, double& t, std::span<const double> eps, PixelWork& w,
                double f) const {
    double g = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double j = pm_.jac_t(k, t, eps[k], w.tau[k]);
      g += 2.0 * w.resid[k] * j;
      h += 2.0 * j * j;
    }
    if (!(h > 0.0) || g == 0.0) return f;
    const double x0 = t;
    double x = x0;
    return armijo(
        f, ls_,
        [&](double step) -> std::optional<StepResult> {
          x = std::max(t_min_, x0 - step * g / h);
          if (x == x0) return std::nullopt;
          pm_.blackbody(x, w.trial_bb);
          const double fx = pm_.objective(y, eps, w.tau, w.trial_bb, w.in, w.trial_resid);
          return StepResult{fx, g * (x - x0)};
        },
        [&] {
          t = x;
          std::swap(w.bb, w.trial_bb);
          std::swap(w.resid, w.trial_resid);
        });
  }

  double step_eps(std::span<const double> y, std::span<double> eps, PixelWork& w,
                  double f) const {
    const std::size_t k_bands = y.size();
    const double rho = pm_.rho_eps();
    bool any = false;
    std::fill(w.grad_eps.begin(), w.grad_eps.end(), 0.0);
    if (rho > 0.0) smoothness_gradient(eps, rho, w.grad_eps);
    double largest = 0.0;
    for (std::size_t k = 0; k < k_bands; ++k) {
      const double j = PixelModel::jac_eps(w.tau[k], w.bb[k], w.in[k]);
      w.grad_eps[k] += 2.0 * w.resid[k] * j;
      const double neighbours = (k > 0 ? 1.0 : 0.0) + (k + 1 < k_bands ? 1.0 : 0.0);
      w.diag_eps[k] = 2.0 * j * j + 2.0 * rho * neighbours;
      largest = std::max(largest, w.diag_eps[k]);
      any = any || w.grad_eps[k] != 0.0;
    }
    if (!any) return f;
    if (!(largest > 0.0)) largest = 1.0;
    for (double& dk : w.diag_eps) dk += 1e-9 * largest;

    auto search = [&](std::span<const double> direction) {
      return armijo(
          f, ls_,
          [&](double step) -> std::optional<StepResult> {
            double dir = 0.0;
            bool moved = false;
            for (std::size_t k = 0; k < k_bands; ++k) {
              const double x = std::clamp(eps[k] - step * direction[k], 0.0, 1.0);
              w.trial_eps[k] = x;
              dir += w.grad_eps[k] * (x - eps[k]);
              moved = moved || x != eps[k];
            }
            if (!moved || !(dir < 0.0)) return std::nullopt;
            const double fx = pm_.objective(y, w.trial_eps, w.tau, w.bb, w.in, w.trial_resid);
            return StepResult{fx, dir};
          },
          [&] {
            std::copy(w.trial_eps.begin(), w.trial_eps.end(), eps.begin());
            std::swap(w.resid, w.trial_resid);
          });
    };

    // Preconditioned by the block curvature: diag(2 J^2) plus the tridiagonal
    // smoothness Hessian. Falls back to the diagonal alone if that direction
    // makes no progress against the bounds.
    solve_tridiagonal(w.diag_eps, -2.0 * rho, w.grad_eps, w.scale_eps, w.work_eps);
    const double g = search(w.scale_eps);
    if (g < f) return g;
    for (std::size_t k = 0; k < k_bands; ++k) w.scale_eps[k] = w.grad_eps[k] / w.diag_eps[k];
    return search(w.scale_eps);
  }

  double step_omega(std::span<const double> y, std::span<const double> eps,
                    std::span<double> omegas, PixelWork& w, double f) const {
    const std::size_t q_angles = omegas.size();
    const std::size_t k_bands = y.size();
    bool any = false;
    for (std::size_t q = 0; q < q_angles; ++q) {
      double g = 0.0;
      for (std::size_t k = 0; k < k_bands; ++k) {
        const double j = pm_.jac_omega(q, k, w.covered, eps[k], w.tau[k]);
        w.jac_omega(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(q)) = j;
        g += 2.0 * w.resid[k] * j;
      }
      w.grad_omega[q] = g;
      any = any || g != 0.0;
    }
    if (!any) return f;
    w.curv_omega.noalias() = 2.0 * w.jac_omega.transpose() * w.jac_omega;
    const double trace = w.curv_omega.trace();
    if (!(trace > 0.0)) return f;
    double trial_covered = 0.0;

    auto search = [&](std::span<const double> direction, const LineSearch& ls) {
      return armijo(
          f, ls,
          [&](double step) -> std::optional<StepResult> {
            for (std::size_t q = 0; q < q_angles; ++q) {
              w.trial_omega[q] = omegas[q] - step * direction[q];
            }
            project_solid_angles(w.trial_omega);
            double dir = 0.0;
            bool moved = false;
            for (std::size_t q = 0; q < q_angles; ++q) {
              dir += w.grad_omega[q] * (w.trial_omega[q] - omegas[q]);
              moved = moved || w.trial_omega[q] != omegas[q];
            }
            if (!moved || !(dir < 0.0)) return std::nullopt;
            trial_covered = pm_.incoming(w.trial_omega, w.trial_in);
            const double fx = pm_.objective(y, eps, w.tau, w.bb, w.trial_in, w.trial_resid);
            return StepResult{fx, dir};
          },
          [&] {
            std::copy(w.trial_omega.begin(), w.trial_omega.end(), omegas.begin());
            std::swap(w.in, w.trial_in);
            std::swap(w.resid, w.trial_resid);
            w.covered = trial_covered;
          });
    };

    // The sky spectra are nearly collinear, so a scalar step crawls along the
    // weak directions; precondition with the damped block curvature first.
    w.curv_omega.diagonal().array() += 1e-6 * trace / static_cast<double>(q_angles);
    w.chol_omega.compute(w.curv_omega);
    const Eigen::Map<const Eigen::VectorXd> grad(w.grad_omega.data(),
                                                 static_cast<Eigen::Index>(q_angles));
    Eigen::Map<Eigen::VectorXd> dir(w.dir_omega.data(), static_cast<Eigen::Index>(q_angles));
    dir = grad;
    w.chol_omega.solveInPlace(dir);
    LineSearch short_ls = ls_;
    short_ls.max_backtracks = std::min<std::size_t>(ls_.max_backtracks, kPreconditionedBacktracks);
    const double g = search(w.dir_omega, short_ls);
    if (g < f) return g;
    for (std::size_t q = 0; q < q_angles; ++q) w.dir_omega[q] = w.grad_omega[q] / trace;
    return search(w.dir_omega, ls_);
  }

  const PixelModel& pm_;
  LineSearch ls_;
  double d_max_;
  double t_min_;
  bool update_d_;
};

std::size_t model_angles(const std::optional<DownwellingSet>& dw) { return dw ? dw->size() : 0; }

}  // namespace

std::vector<std::string> SolverConfig::violations() const {
  std::vector<std::string> out;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) out.push_back(msg);
  };
  need(rho_eps >= 0.0 && std::isfinite(rho_eps), "rho_eps must be finite and >= 0");
  need(rho_d >= 0.0 && std::isfinite(rho_d), "rho_d must be finite and >= 0");
  need(d_max > 0.0 && std::isfinite(d_max), "d_max must be finite and > 0");
  need(max_iterations >= 1, "max_iterations must be >= 1");
  need(tolerance >= 0.0 && std::isfinite(tolerance), "tolerance must be finite and >= 0");
  need(patience >= 1, "patience must be >= 1");
  need(armijo_c > 0.0 && armijo_c < 1.0, "armijo_c must be in (0, 1)");
  need(backtrack > 0.0 && backtrack < 1.0, "backtrack must be in (0, 1)");
  need(initial_emissivity >= 0.0 && initial_emissivity <= 1.0,
       "initial_emissivity must be in [0, 1]");
  need(init_jitter >= 0.0 && init_jitter < 1.0, "init_jitter must be in [0, 1)");
  need(min_temperature_k > 0.0 && std::isfinite(min_temperature_k),
       "min_temperature_k must be finite and > 0");
  need(threads >= 1, "threads must be >= 1");
  return out;
}

void SolverConfig::validate() const {
  const auto problems = violations();
  if (problems.empty()) return;
  std::ostringstream msg;
  for (std::size_t i = 0; i < problems.size(); ++i) msg << (i ? "; " : "") << problems[i];
  fail(ErrorKind::config, msg.str());
}

double data_loss(const EstimateMaps& params, const SceneCube& cube, const AttenuationSpectrum& alpha,
                 const std::optional<DownwellingSet>& downwelling, Temperature air_temperature,
                 GroundFill fill) {
  const RadianceModel model(alpha, downwelling, air_temperature);
  if (!(cube.grid == model.grid())) {
    fail(ErrorKind::dimension_mismatch, "cube and attenuation grids differ");
  }
  check_shapes(params, cube, model.angles());
  const std::size_t k_bands = model.bands();
  std::vector<double> refl(k_bands);
  std::vector<double> yhat(k_bands);
  double sum = 0.0;
  for (std::size_t p = 0; p < cube.radiance.pixels(); ++p) {
    model.reflected(params.eps.pixel(p), params.omegas.pixel(p), fill, refl);
    model.observed(params.d[p], params.temperature_k[p], params.eps.pixel(p), refl, yhat);
    const auto y = cube.radiance.pixel(p);
    for (std::size_t k = 0; k < k_bands; ++k) {
      const double r = yhat[k] - y[k];
      sum += r * r;
    }
  }
  return sum;
}

double emissivity_smoothness(const Cube3<double>& eps) {
  double sum = 0.0;
  for (std::size_t p = 0; p < eps.pixels(); ++p) sum += pixel_smoothness(eps.pixel(p));
  return sum;
}

double tv_distance(const Map2<double>& d) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < d.rows(); ++i) {
    for (std::size_t j = 0; j + 1 < d.cols(); ++j) {
      sum += std::abs(d(i + 1, j) - d(i, j)) + std::abs(d(i, j + 1) - d(i, j));
    }
  }
  return sum;
}

GradientMaps gradients(const EstimateMaps& params, const SceneCube& cube,
                       const AttenuationSpectrum& alpha,
                       const std::optional<DownwellingSet>& downwelling,
                       Temperature air_temperature, double rho_eps, GroundFill fill) {
  const RadianceModel model(alpha, downwelling, air_temperature);
  if (!(cube.grid == model.grid())) {
    fail(ErrorKind::dimension_mismatch, "cube and attenuation grids differ");
  }
  check_shapes(params, cube, model.angles());
  const PixelModel pm(model, fill, rho_eps);
  const std::size_t m = cube.radiance.rows();
  const std::size_t n = cube.radiance.cols();
  const std::size_t k_bands = model.bands();
  const std::size_t q_angles = model.angles();
  GradientMaps g{Map2<double>(m, n), Map2<double>(m, n), Cube3<double>(m, n, k_bands),
                 Cube3<double>(m, n, q_angles)};
  PixelWork w(k_bands, q_angles);
  for (std::size_t p = 0; p < m * n; ++p) {
    const auto y = cube.radiance.pixel(p);
    const auto eps = params.eps.pixel(p);
    const double t = params.temperature_k[p];
    pm.transmittance(params.d[p], w.tau);
    pm.blackbody(t, w.bb);
    w.covered = pm.incoming(params.omegas.pixel(p), w.in);
    pm.data(y, eps, w.tau, w.bb, w.in, w.resid);
    double gd = 0.0;
    double gt = 0.0;
    auto ge = g.eps.pixel(p);
    for (std::size_t k = 0; k < k_bands; ++k) {
      const double r2 = 2.0 * w.resid[k];
      gd += r2 * pm.jac_d(k, eps[k], w.tau[k], w.bb[k], w.in[k]);
      gt += r2 * pm.jac_t(k, t, eps[k], w.tau[k]);
      ge[k] = r2 * PixelModel::jac_eps(w.tau[k], w.bb[k], w.in[k]);
    }
    if (rho_eps > 0.0) smoothness_gradient(eps, rho_eps, ge);
    g.d[p] = gd;
    g.temperature_k[p] = gt;
    auto go = g.omegas.pixel(p);
    for (std::size_t q = 0; q < q_angles; ++q) {
      double s = 0.0;
      for (std::size_t k = 0; k < k_bands; ++k) {
        s += 2.0 * w.resid[k] * pm.jac_omega(q, k, w.covered, eps[k], w.tau[k]);
      }
      go[q] = s;
    }
  }
  return g;
}

void project_solid_angles(std::span<double> omegas) {
  double sum = 0.0;
  for (double& o : omegas) {
    if (!(o > 0.0)) o = 0.0;
    sum += o;
  }
  if (sum <= kPi) return;
  // Projection onto the simplex {x >= 0, sum x = pi}: find the threshold from
  // the sorted values. Negative inputs are already zero and stay there.
  std::vector<double> sorted(omegas.begin(), omegas.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - kPi) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }
  for (double& o : omegas) o = std::max(0.0, o - theta);
  // Rounding can leave the sum a few ulps above pi; trim the largest entry.
  for (int guard = 0; guard < 64; ++guard) {
    double total = 0.0;
    for (double o : omegas) total += o;
    if (total <= kPi) break;
    auto largest = std::max_element(omegas.begin(), omegas.end());
    *largest = std::max(0.0, *largest - (total - kPi) - std::abs(total) * 1e-16);
  }
}

void project(EstimateMaps& params, double d_max) {
  for (double& d : params.d.values()) d = std::clamp(std::isnan(d) ? 0.0 : d, 0.0, d_max);
  for (double& e : params.eps.values()) e = std::clamp(std::isnan(e) ? 0.0 : e, 0.0, 1.0);
  for (std::size_t p = 0; p < params.omegas.pixels(); ++p) {
    project_solid_angles(params.omegas.pixel(p));
  }
}

Map2<double> tv_denoise(const Map2<double>& v, const Map2<double>& weights, double lambda,
                        std::size_t iterations) {
  const std::size_t m = v.rows();
  const std::size_t n = v.cols();
  if (!weights.same_shape(v)) fail(ErrorKind::dimension_mismatch, "TV weights shape differs");
  Map2<double> x = v;
  if (m < 2 || n < 2 || lambda <= 0.0) return x;
  // Diagonally preconditioned primal-dual iterations. Edge (i, j) carries a
  // vertical dual pv and a horizontal dual ph for i < m-1, j < n-1.
  Map2<double> pv(m - 1, n - 1);
  Map2<double> ph(m - 1, n - 1);
  Map2<double> degree(m, n);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    for (std::size_t j = 0; j + 1 < n; ++j) {
      degree(i, j) += 2.0;
      degree(i + 1, j) += 1.0;
      degree(i, j + 1) += 1.0;
    }
  }
  Map2<double> xbar = x;
  Map2<double> kt(m, n);
  constexpr double sigma = 0.5;
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i + 1 < m; ++i) {
      for (std::size_t j = 0; j + 1 < n; ++j) {
        pv(i, j) = std::clamp(pv(i, j) + sigma * (xbar(i + 1, j) - xbar(i, j)), -lambda, lambda);
        ph(i, j) = std::clamp(ph(i, j) + sigma * (xbar(i, j + 1) - xbar(i, j)), -lambda, lambda);
      }
    }
    std::fill(kt.values().begin(), kt.values().end(), 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
      for (std::size_t j = 0; j + 1 < n; ++j) {
        kt(i, j) -= pv(i, j) + ph(i, j);
        kt(i + 1, j) += pv(i, j);
        kt(i, j + 1) += ph(i, j);
      }
    }
    for (std::size_t p = 0; p < m * n; ++p) {
      if (degree[p] == 0.0) continue;
      const double tau = 1.0 / degree[p];
      const double xt = x[p] - tau * kt[p];
      const double xn = (xt + tau * weights[p] * v[p]) / (1.0 + tau * weights[p]);
      xbar[p] = 2.0 * xn - x[p];
      x[p] = xn;
    }
  }
  return x;
}

std::optional<DownwellingSet> select_downwelling(const std::optional<DownwellingSet>& downwelling,
                                                 const SolverConfig& config) {
  if (!downwelling || !config.q) return downwelling;
  if (*config.q == 0) return std::nullopt;
  if (*config.q > downwelling->size()) {
    fail(ErrorKind::config, "q = " + std::to_string(*config.q) + " exceeds the " +
                                std::to_string(downwelling->size()) + " available sky angles");
  }
  return downwelling->subset(*config.q);
}

EstimateMaps initial_estimate(const SceneCube& cube, const AttenuationSpectrum& alpha,
                              Temperature air_temperature, std::size_t angles,
                              const SolverConfig& config) {
  const std::size_t m = cube.radiance.rows();
  const std::size_t n = cube.radiance.cols();
  const std::size_t k_bands = cube.radiance.depth();
  EstimateMaps est{Map2<double>(m, n, 0.5 * config.d_max),
                   Map2<double>(m, n, air_temperature.kelvin()),
                   Cube3<double>(m, n, k_bands, config.initial_emissivity),
                   Cube3<double>(m, n, angles, 0.0),
                   Map2<double>(m, n, 0.0),
                   0,
                   false};
  std::optional<BandSelection> bands;
  try {
    bands = BandSelection::resolve(cube.grid, config.bands);
  } catch (const Error&) {
  }
  if (bands && alpha[bands->i1] != alpha[bands->i2]) {
    const RangeMap ranged = bispectral_air(cube, alpha, *bands, air_temperature);
    for (std::size_t p = 0; p < m * n; ++p) {
      if (ranged.flags[p] == RangeFlag::valid) {
        est.d[p] = std::min(ranged.distance_m[p], config.d_max);
      }
    }
  }
  const auto a = alpha.spectrum().values();
  const std::size_t clear = static_cast<std::size_t>(std::min_element(a.begin(), a.end()) - a.begin());
  for (std::size_t p = 0; p < m * n; ++p) {
    const double l = cube.radiance.pixel(p)[clear];
    if (l > 0.0 && std::isfinite(l)) {
      est.temperature_k[p] = brightness_temperature(cube.grid[clear], l).kelvin();
    }
    est.temperature_k[p] = std::max(est.temperature_k[p], config.min_temperature_k);
  }
  if (config.init_jitter > 0.0) {
    for (std::size_t p = 0; p < m * n; ++p) {
      std::mt19937_64 gen(pixel_seed(config.seed, p));
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      est.d[p] *= 1.0 + config.init_jitter * u(gen);
      est.temperature_k[p] *= 1.0 + 0.01 * config.init_jitter * u(gen);
      est.temperature_k[p] = std::max(est.temperature_k[p], config.min_temperature_k);
    }
  }
  project(est, config.d_max);
  return est;
}

EstimateMaps solve(const SceneCube& cube, const AttenuationSpectrum& alpha,
                   const std::optional<DownwellingSet>& downwelling, Temperature air_temperature,
                   const SolverConfig& config, const IterationObserver& observer) {
  config.validate();
  const auto dw = select_downwelling(downwelling, config);
  EstimateMaps init = initial_estimate(cube, alpha, air_temperature, model_angles(dw), config);
  SolverConfig all = config;
  all.q.reset();
  return solve_from(std::move(init), cube, alpha, dw, air_temperature, all, observer);
}

EstimateMaps solve_from(EstimateMaps est, const SceneCube& cube, const AttenuationSpectrum& alpha,
                        const std::optional<DownwellingSet>& downwelling,
                        Temperature air_temperature, const SolverConfig& config,
                        const IterationObserver& observer) {
  config.validate();
  const auto dw = select_downwelling(downwelling, config);
  const RadianceModel model(alpha, dw, air_temperature);
  if (!(cube.grid == model.grid())) {
    fail(ErrorKind::dimension_mismatch, "cube and attenuation grids differ");
  }
  check_shapes(est, cube, model.angles());
  project(est, config.d_max);
  for (double& t : est.temperature_k.values()) t = std::max(t, config.min_temperature_k);

  const std::size_t pixels = cube.radiance.pixels();
  const std::size_t k_bands = model.bands();
  const std::size_t q_angles = model.angles();
  const PixelModel pm(model, config.ground_fill, config.rho_eps);
  const LineSearch ls{config.armijo_c, config.backtrack, config.max_backtracks};
  const bool use_tv = config.rho_d > 0.0;
  const PixelSolver solver(pm, ls, config.d_max, config.min_temperature_k, !use_tv);

  std::vector<double> objective(pixels);
  // Runs body(p, work) for every pixel with one workspace per worker block.
  auto for_pixels = [&](auto&& body) {
    parallel_for_blocks(pixels, config.threads, [&](std::size_t begin, std::size_t end) {
      PixelWork w(k_bands, q_angles);
      for (std::size_t p = begin; p < end; ++p) body(p, w);
    });
  };
  auto refresh_all = [&] {
    for_pixels([&](std::size_t p, PixelWork& w) {
      objective[p] = solver.refresh(cube.radiance.pixel(p), est.d[p], est.temperature_k[p],
                                    est.eps.pixel(p), est.omegas.pixel(p), w);
    });
  };
  auto total = [&] {
    double sum = 0.0;
    for (double f : objective) sum += f;
    if (use_tv) sum += config.rho_d * tv_distance(est.d);
    return sum;
  };

  refresh_all();
  double current = total();
  std::size_t streak = 0;
  std::size_t iteration = 0;
  bool converged = false;

  Map2<double> grad_d(est.d.rows(), est.d.cols());
  Map2<double> weight_d(est.d.rows(), est.d.cols());
  std::vector<double> trial_objective(pixels);

  // Without TV the pixels are independent, so each one stops on its own
  // relative-decrease test; with TV the whole map stops together.
  std::vector<std::uint8_t> active(pixels, 1);
  std::vector<std::size_t> pixel_streak(pixels, 0);
  std::size_t active_count = pixels;

  while (iteration < config.max_iterations && active_count > 0) {
    ++iteration;
    for_pixels([&](std::size_t p, PixelWork& w) {
      if (!active[p]) return;
      const auto y = cube.radiance.pixel(p);
      const double f = solver.refresh(y, est.d[p], est.temperature_k[p], est.eps.pixel(p),
                                      est.omegas.pixel(p), w);
      objective[p] = solver.sweep(y, est.d[p], est.temperature_k[p], est.eps.pixel(p),
                                  est.omegas.pixel(p), w, f);
      if (!use_tv) {
        const double relative = f > 0.0 ? (f - objective[p]) / f : 0.0;
        pixel_streak[p] = relative < config.tolerance ? pixel_streak[p] + 1 : 0;
        if (pixel_streak[p] >= config.patience) active[p] = 0;
      }
    });
    if (!use_tv) {
      active_count = static_cast<std::size_t>(std::count(active.begin(), active.end(), 1));
    }

    if (use_tv) {
      // Proximal step on d: TV denoising of a Gauss-Newton step, weighted by
      // each pixel's curvature, then backtracking toward the current map.
      for_pixels([&](std::size_t p, PixelWork& w) {
        const auto y = cube.radiance.pixel(p);
        const auto eps = est.eps.pixel(p);
        solver.refresh(y, est.d[p], est.temperature_k[p], eps, est.omegas.pixel(p), w);
        double g = 0.0;
        double h = 0.0;
        for (std::size_t k = 0; k < k_bands; ++k) {
          const double j = pm.jac_d(k, eps[k], w.tau[k], w.bb[k], w.in[k]);
          g += 2.0 * w.resid[k] * j;
          h += 2.0 * j * j;
        }
        weight_d[p] = h;
        grad_d[p] = h > 0.0 ? est.d[p] - g / h : est.d[p];
      });
      Map2<double> target = tv_denoise(grad_d, weight_d, config.rho_d, config.tv_iterations);
      for (double& x : target.values()) x = std::clamp(x, 0.0, config.d_max);
      const double before = total();
      const Map2<double> base = est.d;
      double theta = 1.0;
      bool accepted = false;
      const std::size_t tv_backtracks = std::min(config.max_backtracks, kPreconditionedBacktracks);
      for (std::size_t attempt = 0; attempt <= tv_backtracks; ++attempt) {
        for (std::size_t p = 0; p < pixels; ++p) est.d[p] = base[p] + theta * (target[p] - base[p]);
        for_pixels([&](std::size_t p, PixelWork& w) {
          trial_objective[p] = solver.refresh(cube.radiance.pixel(p), est.d[p],
                                              est.temperature_k[p], est.eps.pixel(p),
                                              est.omegas.pixel(p), w);
        });
        double sum = 0.0;
        for (double f : trial_objective) sum += f;
        sum += config.rho_d * tv_distance(est.d);
        if (sum < before) {
          objective.swap(trial_objective);
          accepted = true;
          break;
        }
        theta *= config.backtrack;
      }
      if (!accepted) est.d = base;
    }

    const double next = total();
    const double decrease = current - next;
    const double relative = current > 0.0 ? decrease / current : 0.0;
    current = next;
    if (observer) observer(IterationInfo{iteration, current, &est});
    if (use_tv) {
      streak = relative < config.tolerance ? streak + 1 : 0;
      if (streak >= config.patience) active_count = 0;
    }
  }
  converged = active_count == 0;

  for_pixels([&](std::size_t p, PixelWork& w) {
    solver.refresh(cube.radiance.pixel(p), est.d[p], est.temperature_k[p], est.eps.pixel(p),
                   est.omegas.pixel(p), w);
    est.loss[p] = pm.data(cube.radiance.pixel(p), est.eps.pixel(p), w.tau, w.bb, w.in, w.resid);
  });
  est.iterations = iteration;
  est.converged = converged;
  return est;
}

}  // namespace lwir
