#pragma once

#include "msopt/manifolds.hpp"
#include "msopt/optim.hpp"
#include "msopt/score.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace msopt {

/// Builds the oracle for one noise level.
using OracleFamily = std::function<std::unique_ptr<ScoreOps>(double sigma)>;

struct RateSweepOptions {
  /// Normal offsets in ambient units; each must stay below the manifold's
  /// safe tube radius.
  std::vector<double> offsets{0.3};
  /// Strictly decreasing.
  std::vector<double> sigmas{0.2, 0.1, 0.05, 0.025, 0.0125};
  std::size_t n_points = 100;
  std::uint64_t seed = 0;
  double fd_step = 1e-6;
};

struct RateSweepReport {
  std::vector<double> sigmas;
  std::vector<double> mean_error;      ///< sup |s(x) - pi(x)| per sigma
  std::vector<double> jacobian_error;  ///< sup |s'(x) - pi'(x)|_op per sigma
  double mean_slope = 0.0;
  double jacobian_slope = 0.0;
  std::vector<double> offsets;
  std::size_t point_count = 0;
  std::uint64_t seed = 0;
  std::size_t excluded = 0;
  std::vector<std::string> exclusion_notes;

  /// Each error at most (1 + noise) times the one at the previous, larger sigma.
  bool monotone(double noise = 0.0) const;
};

/// Test points at +-offset along normals of uniformly sampled manifold points,
/// alternating sign.
std::vector<Vector> tube_test_points(const Manifold& m, const std::vector<double>& offsets, std::size_t n_points,
                                     std::uint64_t seed);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

RateSweepReport rate_sweep(const OracleFamily& family, const Manifold& m, const RateSweepOptions& opts);

struct LandingReport {
  std::vector<double> times;
  std::vector<double> measured;   ///< d(x(t)) = dist^2 / 2
  std::vector<double> predicted;  ///< exp(-2 eta t) d(x0)
  double max_relative_deviation = 0.0;

  /// First time the measured curve reaches level, linearly interpolated; NaN
  /// when it never does.
  double time_to_reach(double level) const;
};

/// Integrates the landing flow with zero objective and the exact oracle.
LandingReport landing_check(const Manifold& m, double eta, const Vector& x0, double t_end, double euler_step);

struct ReportContext {
  std::optional<double> dataset_best;
  std::optional<double> ground_truth_optimum;
  /// Objective of the back-tested final trajectory (control runs).
  std::optional<double> final_true_objective;
};

struct FeasibilityOptimalitySummary {
  std::size_t steps = 0;
  double initial_objective = kMissing;
  double final_objective = kMissing;
  double objective_improvement = kMissing;  ///< initial - final
  double final_feasibility = kMissing;
  double final_riem_grad_norm = kMissing;
  double final_avg_sq_grad = kMissing;
  double improvement_vs_dataset_best = kMissing;  ///< dataset best - final
  double gap_closed_fraction = kMissing;          ///< relative to the ground-truth optimum
  double final_true_objective = kMissing;

  bool operator==(const FeasibilityOptimalitySummary&) const = default;
};

FeasibilityOptimalitySummary feasibility_optimality_report(const RunRecord& record, const ReportContext& ctx = {});

void write_rate_sweep_csv(const RateSweepReport& r, const std::filesystem::path& path);
std::string rate_sweep_text(const RateSweepReport& r);
void write_landing_csv(const LandingReport& r, const std::filesystem::path& path);
std::string landing_text(const LandingReport& r);
std::string summary_text(const FeasibilityOptimalitySummary& s);

}  // namespace msopt
