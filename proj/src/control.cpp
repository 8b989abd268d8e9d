#include "msopt/control.hpp"

#include "msopt/io.hpp"
#include "msopt/parallel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace msopt {

SystemKind parse_system_kind(const std::string& name) {
  if (name == "unicycle") return SystemKind::unicycle;
  if (name == "double_pendulum") return SystemKind::double_pendulum;
  throw InvalidArgument("unknown system '" + name + "' (expected unicycle, double_pendulum)");
}

std::string to_string(SystemKind kind) {
  return kind == SystemKind::unicycle ? "unicycle" : "double_pendulum";
}

SystemModel SystemModel::unicycle(double dt) {
  SystemModel m;
  m.kind = SystemKind::unicycle;
  m.dt = dt;
  m.validate();
  return m;
}

SystemModel SystemModel::double_pendulum(double dt, PendulumParams params) {
  SystemModel m;
  m.kind = SystemKind::double_pendulum;
  m.dt = dt;
  m.pendulum = params;
  m.validate();
  return m;
}

std::size_t SystemModel::state_dim() const { return kind == SystemKind::unicycle ? 3 : 4; }
std::size_t SystemModel::input_dim() const { return kind == SystemKind::unicycle ? 2 : 1; }
std::size_t SystemModel::output_dim() const { return kind == SystemKind::unicycle ? 3 : 2; }

Vector SystemModel::output(const Vector& state) const {
  if (kind == SystemKind::unicycle) return state;
  Vector y(2);
  y << state(0), state(2);
  return y;
}

std::string SystemModel::input_law() const {
  return kind == SystemKind::unicycle ? "v~U[0,1];omega~N(0,25)" : "u~U[-5,5]";
}

void SystemModel::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("system: dt must be positive");
}

Vector continuous_dynamics(const SystemModel& m, const Vector& x, const Vector& u) {
  if (static_cast<std::size_t>(x.size()) != m.state_dim() || static_cast<std::size_t>(u.size()) != m.input_dim()) {
    throw InvalidArgument("continuous_dynamics: expected state/input dims " + std::to_string(m.state_dim()) +
                          "/" + std::to_string(m.input_dim()) + ", got " + std::to_string(x.size()) + "/" +
                          std::to_string(u.size()));
  }
  Vector dx(x.size());
  if (m.kind == SystemKind::unicycle) {
    dx << u(0) * std::cos(x(2)), u(0) * std::sin(x(2)), u(1);
    return dx;
  }
  const PendulumParams& p = m.pendulum;
  const double th1 = x(0), w1 = x(1), th2 = x(2), w2 = x(3);
  const double delta = th2 - th1;
  const double coupling = p.m2 * p.l1 * p.l2;
  Eigen::Matrix2d mass;
  mass << (p.m1 + p.m2) * p.l1 * p.l1, coupling * std::cos(delta),
      coupling * std::cos(delta), p.m2 * p.l2 * p.l2;
  const double det = mass.determinant();
  if (std::abs(det) < 1e-12) throw NumericalError("continuous_dynamics: singular mass matrix");
  Eigen::Vector2d rhs;
  rhs << u(0) + coupling * std::sin(delta) * w2 * w2 - (p.m1 + p.m2) * p.g * p.l1 * std::sin(th1) - p.d1 * w1,
      -coupling * std::sin(delta) * w1 * w1 - p.m2 * p.g * p.l2 * std::sin(th2) - p.d2 * w2;
  // Explicit 2x2 inverse.
  const double a1 = (mass(1, 1) * rhs(0) - mass(0, 1) * rhs(1)) / det;
  const double a2 = (mass(0, 0) * rhs(1) - mass(1, 0) * rhs(0)) / det;
  dx << w1, a1, w2, a2;
  return dx;
}

double pendulum_energy(const SystemModel& m, const Vector& x) {
  if (m.kind != SystemKind::double_pendulum) throw InvalidArgument("pendulum_energy: not a pendulum");
  const PendulumParams& p = m.pendulum;
  const double th1 = x(0), w1 = x(1), th2 = x(2), w2 = x(3);
  const double kinetic = 0.5 * (p.m1 + p.m2) * p.l1 * p.l1 * w1 * w1 + 0.5 * p.m2 * p.l2 * p.l2 * w2 * w2 +
                         p.m2 * p.l1 * p.l2 * std::cos(th2 - th1) * w1 * w2;
  const double potential = -(p.m1 + p.m2) * p.g * p.l1 * std::cos(th1) - p.m2 * p.g * p.l2 * std::cos(th2);
  return kinetic + potential;
}

RolloutResult rollout(const SystemModel& m, const std::vector<Vector>& inputs, const std::optional<Vector>& x0) {
  m.validate();
  const Dynamics f = [&m](const Vector& x, const Vector& u) { return continuous_dynamics(m, x, u); };
  Vector x = x0 ? *x0 : Vector::Zero(static_cast<Eigen::Index>(m.state_dim()));
  if (static_cast<std::size_t>(x.size()) != m.state_dim()) throw InvalidArgument("rollout: bad initial state");
  RolloutResult out;
  out.states.reserve(inputs.size() + 1);
  out.outputs.reserve(inputs.size() + 1);
  out.states.push_back(x);
  out.outputs.push_back(m.output(x));
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    x = rk4_step(f, x, inputs[k], m.dt);
    if (!x.allFinite()) throw NumericalError("rollout: non-finite state at step " + std::to_string(k + 1));
    out.states.push_back(x);
    out.outputs.push_back(m.output(x));
  }
  return out;
}

std::size_t trajectory_dim(const SystemModel& m, std::size_t horizon) {
  return horizon * m.input_dim() + (horizon + 1) * m.output_dim();
}

Vector flatten_trajectory(const Trajectory& t) {
  Eigen::Index n = 0;
  for (const Vector& u : t.inputs) n += u.size();
  for (const Vector& y : t.outputs) n += y.size();
  Vector z(n);
  Eigen::Index at = 0;
  for (const Vector& u : t.inputs) {
    z.segment(at, u.size()) = u;
    at += u.size();
  }
  for (const Vector& y : t.outputs) {
    z.segment(at, y.size()) = y;
    at += y.size();
  }
  return z;
}

Trajectory unflatten_trajectory(const SystemModel& m, std::size_t horizon, const Vector& z) {
  if (static_cast<std::size_t>(z.size()) != trajectory_dim(m, horizon)) {
    throw InvalidArgument("unflatten_trajectory: length " + std::to_string(z.size()) + ", expected " +
                          std::to_string(trajectory_dim(m, horizon)));
  }
  const auto nu = static_cast<Eigen::Index>(m.input_dim());
  const auto ny = static_cast<Eigen::Index>(m.output_dim());
  Trajectory t;
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < horizon; ++k, at += nu) t.inputs.push_back(z.segment(at, nu));
  for (std::size_t k = 0; k <= horizon; ++k, at += ny) t.outputs.push_back(z.segment(at, ny));
  return t;
}

Normalization Normalization::identity(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return Normalization{Vector::Zero(n), Vector::Ones(n)};
}

Normalization Normalization::fit(const std::vector<Vector>& points) {
  if (points.empty()) throw InvalidArgument("Normalization::fit: no points");
  const Eigen::Index d = points.front().size();
  Vector mean = Vector::Zero(d);
  for (const Vector& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Vector var = Vector::Zero(d);
  for (const Vector& p : points) var += (p - mean).cwiseAbs2();
  var /= static_cast<double>(points.size());
  Vector scale = var.cwiseSqrt();
  for (Eigen::Index i = 0; i < d; ++i)
    if (scale(i) < 1e-12) scale(i) = 1.0;
  return Normalization{mean, scale};
}

std::vector<Vector> TrajectoryDataset::flattened() const {
  std::vector<Vector> out;
  out.reserve(trajectories.size());
  for (const Trajectory& t : trajectories) out.push_back(flatten_trajectory(t));
  return out;
}

std::vector<Vector> TrajectoryDataset::normalized() const {
  std::vector<Vector> out = flattened();
  for (Vector& z : out) z = normalization.apply(z);
  return out;
}

std::vector<Vector> sample_inputs(const SystemModel& m, std::size_t horizon, Rng& rng) {
  std::vector<Vector> u(horizon);
  if (m.kind == SystemKind::unicycle) {
    std::uniform_real_distribution<double> speed(0.0, 1.0);
    std::normal_distribution<double> turn(0.0, 5.0);
    for (auto& uk : u) {
      uk.resize(2);
      uk(0) = speed(rng);
      uk(1) = turn(rng);
    }
  } else {
    std::uniform_real_distribution<double> torque(-5.0, 5.0);
    for (auto& uk : u) {
      uk.resize(1);
      uk(0) = torque(rng);
    }
  }
  return u;
}

TrajectoryDataset generate_dataset(const SystemModel& m, std::size_t horizon, std::size_t count,
                                   std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("generate_dataset: count must be at least 1");
  if (horizon == 0) throw InvalidArgument("generate_dataset: horizon must be at least 1");
  m.validate();
  TrajectoryDataset ds;
  ds.system = m;
  ds.horizon = horizon;
  ds.seed = seed;
  ds.trajectories.resize(count);
  for_each_chunk(count, 64, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = make_stream(seed, "control.dataset", i);
      Trajectory t;
      t.inputs = sample_inputs(m, horizon, rng);
      t.outputs = rollout(m, t.inputs).outputs;
      ds.trajectories[i] = std::move(t);
    }
  });
  for (std::size_t i = 0; i < count; ++i) {
    const double gap = backtest(m, ds.trajectories[i].inputs, ds.trajectories[i].outputs).gap;
    if (!(gap <= 1e-10)) {
      throw NumericalError("generate_dataset: trajectory " + std::to_string(i) + " does not re-simulate (gap " +
                           format_double(gap) + ")");
    }
  }
  ds.normalization = Normalization::fit(ds.flattened());
  return ds;
}

BacktestResult backtest(const SystemModel& m, const std::vector<Vector>& u_star, const std::vector<Vector>& y_star) {
  if (y_star.size() != u_star.size() + 1) {
    throw InvalidArgument("backtest: expected " + std::to_string(u_star.size() + 1) + " outputs, got " +
                          std::to_string(y_star.size()));
  }
  BacktestResult out;
  out.y_true = rollout(m, u_star).outputs;
  double sq = 0.0;
  for (std::size_t k = 0; k < y_star.size(); ++k) {
    if (y_star[k].size() != out.y_true[k].size()) throw InvalidArgument("backtest: output dimension mismatch");
    sq += (y_star[k] - out.y_true[k]).squaredNorm();
  }
  out.gap = std::sqrt(sq);
  return out;
}

double backtest_gap(const SystemModel& m, std::size_t horizon, const Vector& z) {
  const Trajectory t = unflatten_trajectory(m, horizon, z);
  return backtest(m, t.inputs, t.outputs).gap;
}

RunMonitor backtest_monitor(const SystemModel& m, std::size_t horizon, const Normalization& norm) {
  RunMonitor mon;
  mon.name = to_string(m.kind) + "_backtest";
  mon.feasibility = [m, horizon, norm](const Vector& z) {
    try {
      return backtest_gap(m, horizon, norm.invert(z));
    } catch (const NumericalError&) {
      return kMissing;
    }
  };
  return mon;
}

Matrix default_tracking_q(const SystemModel& m) {
  if (m.kind == SystemKind::unicycle) return Matrix(Eigen::Vector3d(10.0, 10.0, 0.0).asDiagonal());
  return 10.0 * Matrix::Identity(2, 2);
}

Matrix default_tracking_r(const SystemModel& m) {
  return 0.01 * Matrix::Identity(static_cast<Eigen::Index>(m.input_dim()), static_cast<Eigen::Index>(m.input_dim()));
}

namespace {

std::string join_vector(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v(i));
  return s;
}

Vector parse_vector(const std::string& s) {
  const auto parts = split(s, ',');
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_double(parts[i]);
  return v;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key,
                        const std::filesystem::path& where) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw InvalidArgument(where.string() + ": missing key '" + key + "'");
  return it->second;
}

}  // namespace

void save_dataset(const TrajectoryDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::string> meta{
      {"system", to_string(ds.system.kind)},
      {"dt", format_double(ds.system.dt)},
      {"horizon", std::to_string(ds.horizon)},
      {"state_dim", std::to_string(ds.system.state_dim())},
      {"input_dim", std::to_string(ds.system.input_dim())},
      {"output_dim", std::to_string(ds.system.output_dim())},
      {"count", std::to_string(ds.trajectories.size())},
      {"seed", std::to_string(ds.seed)},
      {"input_law", ds.system.input_law()},
      {"normalization_offset", join_vector(ds.normalization.offset)},
      {"normalization_scale", join_vector(ds.normalization.scale)},
  };
  write_key_values(dir / "meta.txt", meta);
  std::ofstream out(dir / "data.csv", std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + (dir / "data.csv").string());
  for (const Vector& z : ds.flattened()) out << join_vector(z) << '\n';
}

TrajectoryDataset load_dataset(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.txt";
  const auto kv = read_key_values(meta_path);
  TrajectoryDataset ds;
  const SystemKind kind = parse_system_kind(need(kv, "system", meta_path));
  const double dt = parse_double(need(kv, "dt", meta_path));
  ds.system = kind == SystemKind::unicycle ? SystemModel::unicycle(dt) : SystemModel::double_pendulum(dt);
  ds.horizon = std::stoull(need(kv, "horizon", meta_path));
  ds.seed = std::stoull(need(kv, "seed", meta_path));
  ds.normalization.offset = parse_vector(need(kv, "normalization_offset", meta_path));
  ds.normalization.scale = parse_vector(need(kv, "normalization_scale", meta_path));
  const std::size_t dim = trajectory_dim(ds.system, ds.horizon);
  if (static_cast<std::size_t>(ds.normalization.offset.size()) != dim ||
      static_cast<std::size_t>(ds.normalization.scale.size()) != dim) {
    throw InvalidArgument(meta_path.string() + ": normalization length does not match the layout");
  }
  const auto rows = read_numeric_csv(dir / "data.csv", false);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) {
      throw InvalidArgument((dir / "data.csv").string() + ": row " + std::to_string(i + 1) + " has " +
                            std::to_string(rows[i].size()) + " values, expected " + std::to_string(dim));
    }
    ds.trajectories.push_back(
        unflatten_trajectory(ds.system, ds.horizon, Eigen::Map<const Vector>(rows[i].data(), static_cast<Eigen::Index>(dim))));
  }
  const std::size_t count = std::stoull(need(kv, "count", meta_path));
  if (count != ds.trajectories.size()) {
    throw InvalidArgument(meta_path.string() + ": count " + std::to_string(count) + " but data.csv has " +
                          std::to_string(ds.trajectories.size()) + " rows");
  }
  return ds;
}

}  // namespace msopt
