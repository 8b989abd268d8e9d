#pragma once

#include "msopt/numerics.hpp"
#include "msopt/optim.hpp"
#include "msopt/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace msopt {

enum class SystemKind { unicycle, double_pendulum };

SystemKind parse_system_kind(const std::string& name);
std::string to_string(SystemKind kind);

struct PendulumParams {
  double m1 = 1.0;
  double l1 = 1.0;
  double g = 1.0;
  double m2 = 0.5;
  double l2 = 0.5;
  double d1 = 0.1;
  double d2 = 0.1;
};

/// Discrete-time benchmark system: RK4 over the continuous dynamics with
/// step dt and zero initial state.
struct SystemModel {
  SystemKind kind = SystemKind::unicycle;
  double dt = 0.05;
  PendulumParams pendulum;

  static SystemModel unicycle(double dt = 0.05);
  static SystemModel double_pendulum(double dt = 0.1, PendulumParams params = {});

  std::size_t state_dim() const;
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  /// Unicycle: the full state. Pendulum: (theta1, theta2).
  Vector output(const Vector& state) const;
  std::string input_law() const;
  void validate() const;
};

/// Unicycle (v cos theta, v sin theta, omega); pendulum state
/// (theta1, omega1, theta2, omega2) with M(theta) thetadd = tau - C - G - D thetad.
Vector continuous_dynamics(const SystemModel& m, const Vector& state, const Vector& input);

/// Total mechanical energy of the pendulum (kinetic plus potential).
double pendulum_energy(const SystemModel& m, const Vector& state);

struct RolloutResult {
  std::vector<Vector> outputs;  ///< y_0..y_N
  std::vector<Vector> states;   ///< x_0..x_N
};

/// Simulates N = inputs.size() steps from x0 (zero when omitted).
RolloutResult rollout(const SystemModel& m, const std::vector<Vector>& inputs,
                      const std::optional<Vector>& x0 = std::nullopt);

struct Trajectory {
  std::vector<Vector> inputs;   ///< u_0..u_{N-1}
  std::vector<Vector> outputs;  ///< y_0..y_N
};

/// Length N*n_u + (N+1)*n_y of a flattened trajectory.
std::size_t trajectory_dim(const SystemModel& m, std::size_t horizon);
/// Input blocks followed by output blocks.
Vector flatten_trajectory(const Trajectory& t);
Trajectory unflatten_trajectory(const SystemModel& m, std::size_t horizon, const Vector& z);

/// Per-coordinate affine standardization z = (x - offset) / scale.
struct Normalization {
  Vector offset;
  Vector scale;

  static Normalization identity(std::size_t dim);
  /// Sample mean and standard deviation; coordinates with spread below 1e-12
  /// keep scale 1.
  static Normalization fit(const std::vector<Vector>& points);
  Vector apply(const Vector& x) const { return (x - offset).cwiseQuotient(scale); }
  Vector invert(const Vector& z) const { return offset + scale.cwiseProduct(z); }
};

struct TrajectoryDataset {
  SystemModel system;
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  std::vector<Trajectory> trajectories;
  Normalization normalization;

  std::vector<Vector> flattened() const;
  std::vector<Vector> normalized() const;
};

/// One input sequence drawn from the system's excitation law.
std::vector<Vector> sample_inputs(const SystemModel& m, std::size_t horizon, Rng& rng);

/// count rollouts under i.i.d. random inputs; trajectory i uses its own
/// stream derived from (seed, i). Every pair is re-simulated and must match
/// within 1e-10.
TrajectoryDataset generate_dataset(const SystemModel& m, std::size_t horizon, std::size_t count,
                                   std::uint64_t seed);

struct BacktestResult {
  std::vector<Vector> y_true;
  double gap = 0.0;  ///< Frobenius norm of claimed minus true outputs
};

BacktestResult backtest(const SystemModel& m, const std::vector<Vector>& u_star,
                        const std::vector<Vector>& y_star);
/// Back-test gap of a flattened trajectory.
double backtest_gap(const SystemModel& m, std::size_t horizon, const Vector& z);

/// Feasibility = back-test gap of the de-normalized point.
RunMonitor backtest_monitor(const SystemModel& m, std::size_t horizon, const Normalization& norm);

/// Tracking weights used in the benchmarks: unicycle Q = diag(10, 10, 0),
/// R = 0.01 I; pendulum Q = 10 I, R = 0.01.
Matrix default_tracking_q(const SystemModel& m);
Matrix default_tracking_r(const SystemModel& m);

/// Directory with meta.txt and data.csv.
void save_dataset(const TrajectoryDataset& ds, const std::filesystem::path& dir);
TrajectoryDataset load_dataset(const std::filesystem::path& dir);

}  // namespace msopt
