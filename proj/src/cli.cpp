#include "msopt/cli.hpp"

#include "msopt/config.hpp"
#include "msopt/control.hpp"
#include "msopt/io.hpp"
#include "msopt/mlp.hpp"
#include "msopt/optim.hpp"
#include "msopt/rng.hpp"
#include "msopt/validation.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>

#ifndef MSOPT_VERSION
#define MSOPT_VERSION "unknown"
#endif

namespace msopt {
namespace {

namespace fs = std::filesystem;

/// Thresholds violated under --assert.
class AssertionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Run {
  ExperimentConfig cfg;
  fs::path out_dir;
  std::uint64_t seed = 0;
  bool check = false;
  std::ostream& out;
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    out << (ok ? "ok   " : "FAIL ") << what << '\n';
    if (!ok) failures.push_back(what);
  }
};

bool is_system(const std::string& kind) { return kind == "unicycle" || kind == "double_pendulum"; }

Manifold build_manifold(const ExperimentConfig& cfg) {
  const std::string kind = cfg.text("manifold.kind");
  if (kind == "circle") return Manifold::circle(cfg.real("manifold.radius"));
  if (kind == "sphere") return Manifold::sphere(cfg.count("manifold.dim"), cfg.real("manifold.radius"));
  if (kind == "orthogonal") return Manifold::orthogonal(cfg.count("manifold.n"));
  throw ConfigError("manifold.kind = " + kind + " is a dynamical system, not a manifold");
}

SystemModel build_system(const ExperimentConfig& cfg) {
  const SystemKind kind = parse_system_kind(cfg.text("manifold.kind"));
  const double dt = cfg.real("manifold.dt");
  if (kind == SystemKind::unicycle) return dt > 0.0 ? SystemModel::unicycle(dt) : SystemModel::unicycle();
  return dt > 0.0 ? SystemModel::double_pendulum(dt) : SystemModel::double_pendulum();
}

std::vector<Vector> read_points_csv(const fs::path& path) {
  std::vector<Vector> pts;
  for (const auto& row : read_numeric_csv(path, false)) {
    pts.push_back(Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(row.size())));
  }
  if (pts.empty()) throw ConfigError("dataset " + path.string() + " is empty");
  for (const Vector& p : pts) {
    if (p.size() != pts.front().size()) throw ConfigError("dataset " + path.string() + " has ragged rows");
  }
  return pts;
}

void write_points_csv(const std::vector<Vector>& pts, const fs::path& path) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  for (const Vector& p : pts) {
    for (Eigen::Index i = 0; i < p.size(); ++i) out << (i ? "," : "") << format_double(p(i));
    out << '\n';
  }
}

std::optional<TrajectoryDataset> maybe_trajectories(const ExperimentConfig& cfg) {
  const fs::path p = cfg.text("oracle.dataset");
  if (!p.empty() && fs::is_directory(p)) return load_dataset(p);
  return std::nullopt;
}

std::vector<Vector> dataset_points(const ExperimentConfig& cfg, const std::optional<TrajectoryDataset>& traj) {
  if (traj) return cfg.boolean("manifold.normalize") ? traj->normalized() : traj->flattened();
  const fs::path p = cfg.text("oracle.dataset");
  if (!fs::exists(p)) throw ConfigError("oracle.dataset " + p.string() + " does not exist");
  return read_points_csv(p);
}

std::size_t argmin(const Objective& f, const std::vector<Vector>& pts) {
  std::size_t best = 0;
  double best_value = f.value(pts[0]);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double v = f.value(pts[i]);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

void write_manifest(const Run& run, double wall_seconds, const std::string& status) {
  fs::create_directories(run.out_dir);
  std::ofstream out(run.out_dir / "manifest.cfg", std::ios::binary);
  out << "# msopt " << MSOPT_VERSION << " (Eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
      << EIGEN_MINOR_VERSION << ")\n"
      << "# command: " << run.cfg.command() << "\n"
      << "# status: " << status << "\n"
      << "# wall_time_seconds: " << format_double(wall_seconds) << "\n"
      << run.cfg.echo();
}

// --- generate-data -----------------------------------------------------------

void cmd_generate(Run& run) {
  const auto& cfg = run.cfg;
  const std::size_t count = cfg.count("algorithm.count");
  if (is_system(cfg.text("manifold.kind"))) {
    const SystemModel sys = build_system(cfg);
    const TrajectoryDataset ds = generate_dataset(sys, cfg.count("manifold.horizon"), count, run.seed);
    save_dataset(ds, run.out_dir / "dataset");
    run.out << "wrote " << ds.trajectories.size() << " " << to_string(sys.kind) << " trajectories to "
            << (run.out_dir / "dataset").string() << '\n';
    return;
  }
  const Manifold m = build_manifold(cfg);
  write_points_csv(m.sample_uniform(count, run.seed), run.out_dir / "dataset.csv");
  run.out << "wrote " << count << " samples of " << m.describe() << " to " << (run.out_dir / "dataset.csv").string()
          << '\n';
}

// --- train-score -------------------------------------------------------------

void cmd_train(Run& run) {
  const auto& cfg = run.cfg;
  const auto traj = maybe_trajectories(cfg);
  const auto data = dataset_points(cfg, traj);
  DsmTrainConfig tc;
  tc.epochs = cfg.count("oracle.epochs");
  tc.batch = cfg.count("oracle.batch");
  tc.t_max = cfg.real("oracle.t_max");
  tc.t_min = cfg.real("oracle.t_min");
  tc.lr_hi = cfg.real("oracle.lr_hi");
  tc.lr_lo = cfg.real("oracle.lr_lo");
  tc.seed = run.seed;
  try {
    tc.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const auto hidden = cfg.count_list("oracle.hidden");
  const auto res = dsm_train(data, ScoreMlp::create(static_cast<std::size_t>(data[0].size()), hidden, run.seed), tc);
  res.mlp.save(run.out_dir / "score.msopt");
  std::ofstream loss(run.out_dir / "loss.csv", std::ios::binary);
  loss << "epoch,loss\n";
  for (std::size_t i = 0; i < res.loss_trace.size(); ++i) loss << i << ',' << format_double(res.loss_trace[i]) << '\n';
  if (!res.loss_trace.empty()) {
    run.out << "final loss " << format_double(res.loss_trace.back()) << '\n';
    const std::size_t w = std::min<std::size_t>(100, res.loss_trace.size());
    double head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
      head += res.loss_trace[i];
      tail += res.loss_trace[res.loss_trace.size() - w + i];
    }
    run.expect(res.loss_trace.size() < 2 || tail <= head, "moving-average loss decreased");
  }
}

// --- sample ------------------------------------------------------------------

void cmd_sample(Run& run) {
  const auto& cfg = run.cfg;
  const ScoreMlp mlp = ScoreMlp::load(cfg.text("oracle.network"));
  const auto samples = ve_reverse_sample(mlp, cfg.count("algorithm.count"), cfg.count("algorithm.steps"), run.seed,
                                         cfg.real("oracle.t_max"), cfg.real("oracle.t_min"));
  write_points_csv(samples, run.out_dir / "samples.csv");
  if (!cfg.has("oracle.dataset")) {
    if (run.check) throw ConfigError("--assert for sample needs oracle.dataset");
    return;
  }
  const auto traj = maybe_trajectories(cfg);
  const auto data = dataset_points(cfg, traj);
  const double radius = cfg.real("algorithm.assert_radius");
  std::size_t close = 0;
  for (const Vector& s : samples) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vector& y : data) best = std::min(best, (s - y).norm());
    if (best <= radius) ++close;
  }
  const double fraction = static_cast<double>(close) / static_cast<double>(samples.size());
  run.out << "fraction within " << format_double(radius) << " of a data point: " << format_double(fraction) << '\n';
  run.expect(fraction >= cfg.real("algorithm.assert_fraction"), "sample fraction >= assert_fraction");
}

// --- optimize ----------------------------------------------------------------

struct Problem {
  std::shared_ptr<const Objective> objective;
  std::unique_ptr<ScoreOps> oracle;
  std::vector<Vector> data;
  RunMonitor monitor;
  std::optional<Manifold> manifold;
  std::optional<double> optimum;
  // Control runs.
  std::optional<SystemModel> system;
  std::shared_ptr<const TrackingObjective> tracking;
  Normalization normalization;
  std::size_t horizon = 0;
};

std::unique_ptr<ScoreOps> build_oracle(const ExperimentConfig& cfg, const std::optional<Manifold>& m,
                                       const std::vector<Vector>& data, double sigma, std::size_t dim) {
  const std::string kind = cfg.text("oracle.kind");
  std::unique_ptr<ScoreOps> oracle;
  if (kind == "exact") {
    if (!m) throw ConfigError("oracle.kind = exact needs a geometric manifold");
    oracle = std::make_unique<ExactManifoldOracle>(*m);
  } else if (kind == "quadrature") {
    if (!m || m->kind() != ManifoldKind::circle) throw ConfigError("oracle.kind = quadrature needs manifold.kind = circle");
    oracle = std::make_unique<QuadratureScoreOracle>(*m, cfg.count("oracle.nodes"), sigma);
  } else if (kind == "empirical") {
    oracle = std::make_unique<EmpiricalScoreOracle>(data, sigma);
  } else {
    if (!cfg.has("oracle.network")) throw ConfigError("oracle.kind = mlp needs oracle.network");
    oracle = std::make_unique<MlpScoreOracle>(ScoreMlp::load(cfg.text("oracle.network")), sigma);
  }
  if (oracle->ambient_dim() != dim) {
    throw ConfigError("oracle dimension " + std::to_string(oracle->ambient_dim()) + " does not match problem dimension " +
                      std::to_string(dim));
  }
  return oracle;
}

Problem build_problem(Run& run) {
  const auto& cfg = run.cfg;
  Problem p;
  const std::string okind = cfg.text("objective.kind");
  const double sigma = cfg.real("oracle.sigma");
  if (is_system(cfg.text("manifold.kind"))) {
    p.system = build_system(cfg);
    if (okind != "tracking") throw ConfigError("systems only support objective.kind = tracking");
    const auto traj = maybe_trajectories(cfg);
    if (!traj) throw ConfigError("control runs need oracle.dataset pointing to a trajectory dataset directory");
    if (traj->system.kind != p.system->kind) throw ConfigError("dataset system does not match manifold.kind");
    p.horizon = traj->horizon;
    if (p.horizon != cfg.count("manifold.horizon")) {
      throw ConfigError("dataset horizon " + std::to_string(p.horizon) + " does not match manifold.horizon");
    }
    p.system = traj->system;
    p.normalization = cfg.boolean("manifold.normalize") ? traj->normalization
                                                         : Normalization::identity(trajectory_dim(*p.system, p.horizon));
    p.data = cfg.boolean("manifold.normalize") ? traj->normalized() : traj->flattened();
    const std::size_t ny = p.system->output_dim();
    const auto reference = cfg.has("objective.reference_file")
                               ? load_reference_csv(cfg.text("objective.reference_file"), ny)
                               : make_reference(parse_reference_shape(cfg.text("objective.reference")), p.horizon,
                                                p.system->dt, ny, p.system->kind == SystemKind::unicycle);
    p.tracking = std::make_shared<TrackingObjective>(reference, default_tracking_q(*p.system),
                                                     default_tracking_r(*p.system), p.horizon, p.system->input_dim(), ny);
    p.objective = std::make_shared<RescaledObjective>(p.tracking, p.normalization.offset, p.normalization.scale);
    p.monitor = backtest_monitor(*p.system, p.horizon, p.normalization);
    p.oracle = build_oracle(cfg, std::nullopt, p.data, sigma, p.tracking->dim());
    return p;
  }

  p.manifold = build_manifold(cfg);
  const Manifold& m = *p.manifold;
  const std::size_t dim = m.ambient_dim();
  if (okind == "brockett") {
    if (m.kind() != ManifoldKind::orthogonal) throw ConfigError("objective.kind = brockett needs manifold.kind = orthogonal");
    auto b = std::make_shared<BrockettObjective>(random_symmetric(m.matrix_size(), stream_seed(run.seed, "cli.brockett")));
    p.optimum = brockett_optimum(*b);
    p.objective = b;
  } else if (okind == "linear") {
    auto a = cfg.real_list("objective.coefficients");
    Vector coeffs = Vector::Zero(static_cast<Eigen::Index>(dim));
    if (a.empty()) {
      coeffs(0) = 1.0;
    } else if (a.size() != dim) {
      throw ConfigError("objective.coefficients has " + std::to_string(a.size()) + " entries, manifold dimension is " +
                        std::to_string(dim));
    } else {
      coeffs = Eigen::Map<const Vector>(a.data(), static_cast<Eigen::Index>(dim));
    }
    if (m.kind() != ManifoldKind::orthogonal) p.optimum = -m.radius() * coeffs.norm();
    p.objective = std::make_shared<LinearObjective>(coeffs);
  } else if (okind == "zero") {
    p.objective = std::make_shared<ConstantObjective>(dim, 0.0);
  } else {
    throw ConfigError("objective.kind = tracking needs a dynamical system");
  }
  if (cfg.has("oracle.dataset")) {
    p.data = dataset_points(cfg, std::nullopt);
  } else {
    p.data = m.sample_uniform(cfg.count("oracle.samples"), stream_seed(run.seed, "cli.dataset"));
  }
  if (static_cast<std::size_t>(p.data.front().size()) != dim) {
    throw ConfigError("dataset dimension " + std::to_string(p.data.front().size()) + " does not match manifold dimension " +
                      std::to_string(dim));
  }
  p.monitor = RunMonitor::for_manifold(m);
  p.oracle = build_oracle(cfg, p.manifold, p.data, sigma, dim);
  return p;
}

void cmd_optimize(Run& run) {
  const auto& cfg = run.cfg;
  Problem p = build_problem(run);
  const Objective& f = *p.objective;
  const std::string algo = cfg.text("algorithm.kind");

  Vector x0;
  std::optional<double> dataset_best;
  if (cfg.text("algorithm.start") == "dataset_argmin") {
    x0 = p.data[argmin(f, p.data)];
    dataset_best = f.value(x0);
  } else {
    if (!p.manifold) throw ConfigError("algorithm.start = random needs a geometric manifold");
    x0 = p.manifold->sample_uniform(1, stream_seed(run.seed, "cli.start")).front();
  }

  RunRecord rec;
  if (algo == "drgd") {
    DrgdConfig c;
    c.gamma = cfg.real("algorithm.gamma");
    c.max_steps = cfg.count("algorithm.max_steps");
    c.stop_grad_tol = cfg.real("algorithm.stop_grad_tol");
    rec = drgd_run(*p.oracle, f, x0, c, p.monitor);
  } else if (algo == "dlf") {
    DlfConfig c;
    c.eta = cfg.real("algorithm.eta");
    c.t_step = cfg.real("algorithm.t_step");
    c.max_steps = cfg.count("algorithm.max_steps");
    c.stop_grad_tol = cfg.real("algorithm.stop_grad_tol");
    rec = dlf_run(*p.oracle, f, x0, c, p.monitor);
  } else if (algo == "landing") {
    LandingDescentConfig c;
    c.gamma = cfg.real("algorithm.gamma");
    c.eta = cfg.real("algorithm.eta");
    c.max_steps = cfg.count("algorithm.max_steps");
    c.stop_grad_tol = cfg.real("algorithm.stop_grad_tol");
    rec = landing_descent_run(*p.oracle, f, x0, c, p.monitor);
  } else if (algo == "rgd") {
    if (!p.manifold) throw ConfigError("algorithm.kind = rgd needs a geometric manifold");
    rec = riemannian_gd_baseline(*p.manifold, f, p.manifold->project(x0), cfg.real("algorithm.gamma"),
                                 cfg.count("algorithm.max_steps"), cfg.real("algorithm.stop_grad_tol"));
  } else {
    throw ConfigError("algorithm.kind = " + algo + " is a validate algorithm");
  }
  rec.metadata["seed"] = std::to_string(run.seed);
  rec.metadata["name"] = cfg.text("experiment.name");

  ReportContext ctx;
  ctx.dataset_best = dataset_best;
  ctx.ground_truth_optimum = p.optimum;
  double gap_ratio = kMissing;
  if (p.system) {
    const Vector z = p.normalization.invert(rec.final_point);
    const Trajectory claimed = unflatten_trajectory(*p.system, p.horizon, z);
    const BacktestResult bt = backtest(*p.system, claimed.inputs, claimed.outputs);
    const Trajectory realized{claimed.inputs, bt.y_true};
    ctx.final_true_objective = p.tracking->value(flatten_trajectory(realized));
    double y_norm_sq = 0.0;
    for (const Vector& y : claimed.outputs) y_norm_sq += y.squaredNorm();
    gap_ratio = bt.gap / std::sqrt(y_norm_sq);
    rec.metadata["backtest_gap"] = format_double(bt.gap);
    rec.metadata["backtest_gap_ratio"] = format_double(gap_ratio);
    rec.metadata["final_true_objective"] = format_double(*ctx.final_true_objective);
    write_points_csv({z}, run.out_dir / "final_trajectory.csv");
  }
  write_run_csv(rec, run.out_dir / "run.csv");
  write_run_metadata(rec, run.out_dir / "run.meta.txt");
  const auto summary = feasibility_optimality_report(rec, ctx);
  {
    std::ofstream s(run.out_dir / "summary.txt", std::ios::binary);
    s << summary_text(summary) << "stop_reason=" << to_string(rec.stop_reason) << '\n';
  }
  run.out << summary_text(summary) << "stop_reason=" << to_string(rec.stop_reason) << '\n';

  if (rec.aborted()) throw NumericalError("run aborted: " + to_string(rec.stop_reason));
  const double max_feas = cfg.real("algorithm.assert_max_feasibility");
  if (std::isfinite(max_feas)) run.expect(summary.final_feasibility <= max_feas, "final feasibility <= bound");
  const double min_gap = cfg.real("algorithm.assert_min_gap_closed");
  if (std::isfinite(min_gap)) run.expect(summary.gap_closed_fraction >= min_gap, "gap to optimum closed");
  const double max_ratio = cfg.real("algorithm.assert_max_objective_ratio");
  if (std::isfinite(max_ratio) && dataset_best) {
    const double achieved = ctx.final_true_objective.value_or(summary.final_objective);
    run.expect(achieved <= max_ratio * *dataset_best, "objective ratio to dataset best");
  }
  const double max_gap = cfg.real("algorithm.assert_max_gap_ratio");
  if (std::isfinite(max_gap) && p.system) run.expect(gap_ratio <= max_gap, "back-test gap ratio");
}

// --- validate ----------------------------------------------------------------

void cmd_validate(Run& run) {
  const auto& cfg = run.cfg;
  const Manifold m = build_manifold(cfg);
  const std::string algo = cfg.text("algorithm.kind");
  if (algo == "rate_sweep") {
    const std::string kind = cfg.text("oracle.kind");
    std::vector<Vector> data;
    if (kind == "empirical") data = m.sample_uniform(cfg.count("oracle.samples"), stream_seed(run.seed, "cli.dataset"));
    if (kind == "mlp") throw ConfigError("rate_sweep needs a sigma-indexed oracle family; mlp is not supported");
    if (kind == "quadrature" && m.kind() != ManifoldKind::circle) {
      throw ConfigError("oracle.kind = quadrature needs manifold.kind = circle");
    }
    const std::size_t nodes = cfg.count("oracle.nodes");
    OracleFamily family = [&](double sigma) -> std::unique_ptr<ScoreOps> {
      if (kind == "exact") return std::make_unique<ExactManifoldOracle>(m);
      if (kind == "quadrature") return std::make_unique<QuadratureScoreOracle>(m, nodes, sigma);
      return std::make_unique<EmpiricalScoreOracle>(data, sigma);
    };
    RateSweepOptions o;
    o.offsets = cfg.real_list("algorithm.offsets");
    o.sigmas = cfg.real_list("algorithm.sigmas");
    o.n_points = cfg.count("algorithm.points");
    o.seed = run.seed;
    RateSweepReport rep;
    try {
      rep = rate_sweep(family, m, o);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    write_rate_sweep_csv(rep, run.out_dir / "rate.csv");
    std::ofstream(run.out_dir / "rate.txt", std::ios::binary) << rate_sweep_text(rep);
    run.out << rate_sweep_text(rep);
    const double lo = cfg.real("algorithm.slope_min");
    const double hi = cfg.real("algorithm.slope_max");
    run.expect(rep.mean_slope >= lo && rep.mean_slope <= hi, "mean-error slope within bounds");
    run.expect(rep.jacobian_slope >= lo && rep.jacobian_slope <= hi, "jacobian-error slope within bounds");
    run.expect(rep.monotone(), "errors decrease with sigma");
  } else if (algo == "landing_check") {
    const auto x0 = tube_test_points(m, {cfg.real("algorithm.start_distance")}, 1, run.seed).front();
    LandingReport rep;
    try {
      rep = landing_check(m, cfg.real("algorithm.eta"), x0, cfg.real("algorithm.t_end"), cfg.real("algorithm.t_step"));
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    write_landing_csv(rep, run.out_dir / "landing.csv");
    std::ofstream(run.out_dir / "landing.txt", std::ios::binary) << landing_text(rep);
    run.out << landing_text(rep);
    run.expect(rep.max_relative_deviation <= cfg.real("algorithm.landing_tol"), "landing law within tolerance");
  } else {
    throw ConfigError("algorithm.kind = " + algo + " is not a validate algorithm (rate_sweep, landing_check)");
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Manifold-constrained optimization with denoising scores", "msopt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MSOPT_VERSION);

  struct Flags {
    std::string config;
    std::optional<std::int64_t> seed;
    std::string out_dir;
    bool check = false;
  } flags;
  const std::vector<std::pair<std::string, std::string>> descriptions{
      {"generate-data", "sample a manifold or simulate a system into a dataset"},
      {"train-score", "train a score network by denoising score matching"},
      {"optimize", "run DRGD, DLF, landing descent or the Riemannian baseline"},
      {"validate", "rate sweep or exact landing check"},
      {"sample", "draw samples with the reverse-time SDE"},
  };
  for (const auto& [name, desc] : descriptions) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", flags.config, "experiment config file")->required();
    sub->add_option("--seed", flags.seed, "override [experiment] seed");
    sub->add_option("--out", flags.out_dir, "override [output] dir");
    sub->add_flag("--assert", flags.check, "exit 1 when acceptance thresholds are violated");
    sub->footer(schema_help(name));
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << MSOPT_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand help is raised as CallForHelp with the subcommand active.
    for (CLI::App* sub : app.get_subcommands()) {
      if (sub->get_help_ptr() && sub->get_help_ptr()->count() > 0) {
        out << sub->help();
        return kExitOk;
      }
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  const auto start = std::chrono::steady_clock::now();
  std::optional<Run> run;
  try {
    ExperimentConfig cfg = load_config(flags.config, command);
    if (flags.seed) {
      if (*flags.seed < 0) throw ConfigError("--seed must be non-negative");
      cfg.set("experiment.seed", std::to_string(*flags.seed));
    }
    if (!flags.out_dir.empty()) cfg.set("output.dir", flags.out_dir);
    run.emplace(Run{cfg, fs::path(cfg.text("output.dir")), static_cast<std::uint64_t>(cfg.integer("experiment.seed")),
                    flags.check, out, {}});
    fs::create_directories(run->out_dir);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  auto seconds = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  try {
    if (command == "generate-data") cmd_generate(*run);
    if (command == "train-score") cmd_train(*run);
    if (command == "optimize") cmd_optimize(*run);
    if (command == "validate") cmd_validate(*run);
    if (command == "sample") cmd_sample(*run);
  } catch (const ConfigError& e) {
    write_manifest(*run, seconds(), "config error");
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    write_manifest(*run, seconds(), "config error");
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    write_manifest(*run, seconds(), "aborted");
    err << "error: run aborted: " << e.what() << '\n';
    return kExitValidationFailure;
  }
  const bool failed = run->check && !run->failures.empty();
  write_manifest(*run, seconds(), failed ? "assertions failed" : "ok");
  if (failed) {
    err << run->failures.size() << " acceptance threshold(s) violated\n";
    return kExitValidationFailure;
  }
  return kExitOk;
}

}  // namespace msopt
