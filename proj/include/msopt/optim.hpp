#pragma once

#include "msopt/manifolds.hpp"
#include "msopt/objectives.hpp"
#include "msopt/score.hpp"

#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace msopt {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct DlfConfig {
  double eta = 3e3;
  double t_step = 1e-4;
  std::size_t max_steps = 1000;
  /// Negative disables the early stop.
  double stop_grad_tol = 1e-8;

  void validate() const;
};

struct DrgdConfig {
  double gamma = 1e-3;
  std::size_t max_steps = 1000;
  /// Stops once |x_{k+1} - x_k| / gamma falls to this value.
  double stop_grad_tol = 1e-8;

  void validate() const;
};

struct LandingDescentConfig {
  double gamma = 1e-4;
  double eta = 3e3;
  std::size_t max_steps = 1000;
  double stop_grad_tol = 1e-8;
  /// Consecutive increases of the penalized objective that count as oscillation.
  std::size_t oscillation_window = 3;

  void validate() const;
};

/// Measurements attached to a run. Unset members yield the NaN sentinel.
struct RunMonitor {
  std::string name = "none";
  std::function<double(const Vector&)> feasibility;
  /// Distance to the closest point, when it differs from the feasibility metric.
  std::function<double(const Vector&)> distance;
  /// Riemannian gradient norm of f at the closest point of x.
  std::function<double(const Vector&, const Objective&)> riem_grad_norm;
  double safe_tube_radius = std::numeric_limits<double>::infinity();

  static RunMonitor for_manifold(const Manifold& m);
};

struct RunRow {
  std::size_t step = 0;
  double objective = kMissing;            ///< f(x_k)
  double surrogate_objective = kMissing;  ///< f(s(x_k))
  double feasibility = kMissing;
  double riem_grad_norm = kMissing;
  double step_norm = kMissing;            ///< |x_k - x_{k-1}|, missing at k = 0
  double distance = kMissing;             ///< not persisted in the CSV

  bool operator==(const RunRow&) const = default;
};

enum class StopReason { budget, tolerance, non_finite, diverged, oscillation };
std::string to_string(StopReason r);

struct RunRecord {
  std::vector<RunRow> rows;
  Vector final_point;
  StopReason stop_reason = StopReason::budget;
  bool left_safe_tube = false;
  double wall_time_seconds = 0.0;
  /// Algorithm, config, seed, oracle kind and anything callers add.
  std::map<std::string, std::string> metadata;

  bool aborted() const;
  /// Running averages (1/N) sum_{k<N} |grad|^2 of the recorded Riemannian
  /// gradient norms; NaN entries are skipped.
  std::vector<double> running_avg_sq_grad() const;
  /// Rows and final point identical (metadata and timing ignored).
  bool same_trace(const RunRecord& other) const;
};

/// Euler discretization of the denoising landing flow
/// x <- x + t_step (-s'(x) grad f(s(x)) + eta (s(x) - x)).
RunRecord dlf_run(const ScoreOps& score, const Objective& f, const Vector& x0, const DlfConfig& cfg,
                  const RunMonitor& monitor = {});

/// x_{k+1} = s(x_k - gamma s'(x_k) grad f(x_k)).
RunRecord drgd_run(const ScoreOps& score, const Objective& f, const Vector& x0, const DrgdConfig& cfg,
                   const RunMonitor& monitor = {});

/// Gradient descent on f(s(x)) + eta d_sigma(x) with gradient
/// s'(x) grad f(s(x)) + eta (x - s(x)). Needs an oracle with a link value.
/// Stops with StopReason::diverged on non-finite or exploding values and with
/// StopReason::oscillation after cfg.oscillation_window consecutive increases.
RunRecord landing_descent_run(const ScoreOps& score, const Objective& f, const Vector& x0,
                              const LandingDescentConfig& cfg, const RunMonitor& monitor = {});

/// Projected Riemannian gradient descent x <- project(x - gamma grad_R f(x)).
RunRecord riemannian_gd_baseline(const Manifold& m, const Objective& f, const Vector& x0, double gamma,
                                 std::size_t max_steps, double stop_grad_tol = 1e-8);

inline constexpr const char* kRunCsvHeader =
    "step,objective,surrogate_objective,feasibility,riem_grad_norm,step_norm";

void write_run_csv(const RunRecord& record, const std::filesystem::path& path);
/// Sidecar key=value file: metadata plus stop reason, tube flag and timing.
void write_run_metadata(const RunRecord& record, const std::filesystem::path& path);
/// Rows only; final_point is taken as empty.
RunRecord read_run_csv(const std::filesystem::path& path);

}  // namespace msopt
