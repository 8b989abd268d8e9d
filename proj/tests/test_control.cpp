#include "msopt/control.hpp"
#include "msopt/objectives.hpp"
#include "msopt/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

using namespace msopt;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "msopt_tests" / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Dynamics, UnicycleExamples) {
  const SystemModel m = SystemModel::unicycle();
  EXPECT_EQ(continuous_dynamics(m, vec({0, 0, 0}), vec({1, 0})), vec({1, 0, 0}));
  EXPECT_LE((continuous_dynamics(m, vec({0, 0, M_PI / 2}), vec({2, 1})) - vec({0, 2, 1})).norm(), 1e-12);
}

TEST(Dynamics, PendulumHangingEquilibrium) {
  const SystemModel m = SystemModel::double_pendulum();
  EXPECT_EQ(continuous_dynamics(m, Vector::Zero(4), vec({0})).norm(), 0.0);
}

TEST(Dynamics, Dimensions) {
  const SystemModel u = SystemModel::unicycle(), p = SystemModel::double_pendulum();
  EXPECT_EQ(u.state_dim(), 3u);
  EXPECT_EQ(u.input_dim(), 2u);
  EXPECT_EQ(u.output_dim(), 3u);
  EXPECT_EQ(p.state_dim(), 4u);
  EXPECT_EQ(p.input_dim(), 1u);
  EXPECT_EQ(p.output_dim(), 2u);
  EXPECT_EQ(u.dt, 0.05);
  EXPECT_EQ(p.dt, 0.1);
  EXPECT_THROW(continuous_dynamics(u, vec({0, 0}), vec({1, 0})), InvalidArgument);
  EXPECT_THROW(SystemModel::unicycle(0.0), InvalidArgument);
}

TEST(Rollout, UnicycleZeroInputsStayAtOrigin) {
  const SystemModel m = SystemModel::unicycle();
  const auto r = rollout(m, std::vector<Vector>(20, Vector::Zero(2)));
  ASSERT_EQ(r.outputs.size(), 21u);
  for (const Vector& y : r.outputs) EXPECT_EQ(y.norm(), 0.0);
}

TEST(Rollout, UnicycleStraightLine) {
  const SystemModel m = SystemModel::unicycle();
  const auto r = rollout(m, std::vector<Vector>(30, vec({1, 0})));
  for (std::size_t k = 0; k < r.outputs.size(); ++k) EXPECT_NEAR(r.outputs[k](0), k * m.dt, 1e-12);
}

TEST(Rollout, PendulumEnergyConservedWithoutDamping) {
  PendulumParams p;
  p.d1 = p.d2 = 0.0;
  const SystemModel m = SystemModel::double_pendulum(0.1, p);
  const Vector x0 = vec({0.3, 0.0, 0.0, 0.0});
  const auto r = rollout(m, std::vector<Vector>(100, vec({0})), x0);
  const double e0 = pendulum_energy(m, x0);
  for (const Vector& x : r.states) EXPECT_LE(std::abs(pendulum_energy(m, x) - e0) / std::abs(e0), 1e-5);
}

TEST(Rollout, PendulumMatchesLinearizedModes) {
  PendulumParams p;
  p.d1 = p.d2 = 0.0;
  const SystemModel m = SystemModel::double_pendulum(0.01, p);
  // M0 thetadd = -K theta at theta = 0.
  Matrix mass(2, 2), stiff(2, 2);
  mass << (p.m1 + p.m2) * p.l1 * p.l1, p.m2 * p.l1 * p.l2, p.m2 * p.l1 * p.l2, p.m2 * p.l2 * p.l2;
  stiff << (p.m1 + p.m2) * p.g * p.l1, 0, 0, p.m2 * p.g * p.l2;
  // Modes from the symmetric form L^-1 K L^-T with M0 = L L^T.
  const Eigen::LLT<Matrix> llt(mass);
  const Matrix l = llt.matrixL();
  const Matrix linv = l.inverse();
  const EigResult eig = sym_eig(linv * stiff * linv.transpose());
  const Matrix modes = linv.transpose() * eig.eigenvectors;
  const Vector theta0 = vec({0.03, -0.02});
  const Vector coeff = modes.inverse() * theta0;

  const auto r = rollout(m, std::vector<Vector>(100, vec({0})), vec({theta0(0), 0.0, theta0(1), 0.0}));
  for (std::size_t k = 0; k < r.outputs.size(); ++k) {
    const double t = k * m.dt;
    Vector linear = Vector::Zero(2);
    for (int i = 0; i < 2; ++i) linear += coeff(i) * std::cos(std::sqrt(eig.eigenvalues(i)) * t) * modes.col(i);
    EXPECT_NEAR(r.outputs[k](0), linear(0), 1e-3) << "t=" << t;
  }
}

TEST(Rollout, Deterministic) {
  const SystemModel m = SystemModel::double_pendulum();
  Rng a = make_stream(3, "test"), b = make_stream(3, "test");
  const auto ua = sample_inputs(m, 50, a), ub = sample_inputs(m, 50, b);
  EXPECT_EQ(rollout(m, ua).states, rollout(m, ub).states);
}

TEST(Inputs, PendulumUniformKs) {
  const SystemModel m = SystemModel::double_pendulum();
  Rng rng = make_stream(1, "ks");
  const auto inputs = sample_inputs(m, 100000, rng);
  std::vector<double> u;
  for (const Vector& v : inputs) u.push_back(v(0));
  std::sort(u.begin(), u.end());
  double ks = 0.0;
  const double n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double cdf = (u[i] + 5.0) / 10.0;
    ks = std::max({ks, std::abs((i + 1) / n - cdf), std::abs(i / n - cdf)});
  }
  EXPECT_LE(ks, 0.02);
  EXPECT_GE(u.front(), -5.0);
  EXPECT_LE(u.back(), 5.0);
}

TEST(Inputs, UnicycleMoments) {
  const SystemModel m = SystemModel::unicycle();
  Rng rng = make_stream(2, "moments");
  const auto inputs = sample_inputs(m, 100000, rng);
  double mean = 0.0, sq = 0.0, vmin = 1.0, vmax = 0.0;
  for (const Vector& v : inputs) {
    mean += v(1);
    sq += v(1) * v(1);
    vmin = std::min(vmin, v(0));
    vmax = std::max(vmax, v(0));
  }
  mean /= inputs.size();
  const double var = sq / inputs.size() - mean * mean;
  EXPECT_NEAR(var, 25.0, 0.05 * 25.0);
  EXPECT_GE(vmin, 0.0);
  EXPECT_LE(vmax, 1.0);
}

TEST(Dataset, FeasibleAndLayoutMatchesObjective) {
  for (const SystemModel& m : {SystemModel::unicycle(), SystemModel::double_pendulum()}) {
    const TrajectoryDataset ds = generate_dataset(m, 20, 200, 7);
    ASSERT_EQ(ds.trajectories.size(), 200u);
    for (const Trajectory& t : ds.trajectories) EXPECT_LE(backtest(m, t.inputs, t.outputs).gap, 1e-10);
    const TrackingObjective f(make_reference(ReferenceShape::sinusoid, 20, m.dt, m.output_dim(), true),
                              default_tracking_q(m), default_tracking_r(m), 20, m.input_dim(), m.output_dim());
    EXPECT_EQ(f.dim(), trajectory_dim(m, 20));
    EXPECT_EQ(static_cast<std::size_t>(ds.flattened().front().size()), f.dim());
  }
}

TEST(Dataset, DeterministicPerSeed) {
  const SystemModel m = SystemModel::unicycle();
  EXPECT_EQ(generate_dataset(m, 10, 100, 3).flattened(), generate_dataset(m, 10, 100, 3).flattened());
  EXPECT_NE(generate_dataset(m, 10, 100, 3).flattened(), generate_dataset(m, 10, 100, 4).flattened());
}

TEST(Dataset, NormalizationStandardizes) {
  const TrajectoryDataset ds = generate_dataset(SystemModel::double_pendulum(), 10, 500, 5);
  const auto z = ds.normalized();
  const auto d = z.front().size();
  Vector mean = Vector::Zero(d), sq = Vector::Zero(d);
  for (const Vector& v : z) {
    mean += v;
    sq += v.cwiseProduct(v);
  }
  mean /= z.size();
  sq /= z.size();
  for (Eigen::Index i = 0; i < d; ++i) {
    EXPECT_NEAR(mean(i), 0.0, 1e-10);
    // Constant coordinates (y_0 = 0) keep scale 1 and variance 0.
    if (ds.normalization.scale(i) != 1.0) {
      EXPECT_NEAR(sq(i), 1.0, 1e-2);
    }
  }
  const Vector x = ds.flattened()[3];
  EXPECT_LE((ds.normalization.invert(ds.normalization.apply(x)) - x).norm(), 1e-12);
}

TEST(Dataset, SaveLoadRoundTrip) {
  const TrajectoryDataset ds = generate_dataset(SystemModel::double_pendulum(), 8, 30, 9);
  const auto dir = temp_dir("dataset");
  save_dataset(ds, dir);
  const TrajectoryDataset back = load_dataset(dir);
  EXPECT_EQ(back.horizon, ds.horizon);
  EXPECT_EQ(back.seed, ds.seed);
  EXPECT_EQ(back.system.kind, ds.system.kind);
  EXPECT_EQ(back.flattened(), ds.flattened());
  EXPECT_EQ(back.normalization.offset, ds.normalization.offset);
  EXPECT_EQ(back.normalization.scale, ds.normalization.scale);
}

TEST(Backtest, PerturbedOutput) {
  const SystemModel m = SystemModel::unicycle();
  const TrajectoryDataset ds = generate_dataset(m, 10, 5, 1);
  Trajectory t = ds.trajectories[2];
  EXPECT_LE(backtest(m, t.inputs, t.outputs).gap, 1e-10);
  t.outputs[4](1) += 0.1;
  EXPECT_NEAR(backtest(m, t.inputs, t.outputs).gap, 0.1, 1e-10);
  EXPECT_NEAR(backtest_gap(m, 10, flatten_trajectory(t)), 0.1, 1e-10);
}

TEST(Backtest, MonitorReportsGapOfDenormalizedPoint) {
  const SystemModel m = SystemModel::unicycle();
  const TrajectoryDataset ds = generate_dataset(m, 10, 50, 2);
  const RunMonitor mon = backtest_monitor(m, 10, ds.normalization);
  EXPECT_LE(mon.feasibility(ds.normalized()[0]), 1e-10);
}

TEST(Trajectory, FlattenRoundTrip) {
  const SystemModel m = SystemModel::double_pendulum();
  const TrajectoryDataset ds = generate_dataset(m, 5, 3, 4);
  const Vector z = ds.flattened()[1];
  EXPECT_EQ(flatten_trajectory(unflatten_trajectory(m, 5, z)), z);
  EXPECT_THROW(unflatten_trajectory(m, 6, z), InvalidArgument);
}

TEST(TrackingWeights, Defaults) {
  const Matrix qu = default_tracking_q(SystemModel::unicycle());
  EXPECT_EQ(qu, Matrix(vec({10, 10, 0}).asDiagonal()));
  EXPECT_EQ(default_tracking_r(SystemModel::unicycle()), 0.01 * Matrix::Identity(2, 2));
  EXPECT_EQ(default_tracking_q(SystemModel::double_pendulum()), 10.0 * Matrix::Identity(2, 2));
  EXPECT_EQ(default_tracking_r(SystemModel::double_pendulum()), 0.01 * Matrix::Identity(1, 1));
}

TEST(SystemKind, Parse) {
  EXPECT_EQ(parse_system_kind("unicycle"), SystemKind::unicycle);
  EXPECT_EQ(to_string(SystemKind::double_pendulum), "double_pendulum");
  EXPECT_THROW(parse_system_kind("cartpole"), InvalidArgument);
}
