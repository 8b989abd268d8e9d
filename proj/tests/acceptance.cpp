// Acceptance runs. Prints one PASS/FAIL line per criterion and exits 1 if any fail.

#include "msopt/cli.hpp"
#include "msopt/control.hpp"
#include "msopt/io.hpp"
#include "msopt/mlp.hpp"
#include "msopt/optim.hpp"
#include "msopt/validation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace msopt;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << title << ": " << o.detail << " ["
            << num(seconds_since(t0)) << " s]" << std::endl;
}

const fs::path kOut = "acceptance_out";

std::vector<Vector> unit_points(std::size_t count, Eigen::Index dim, double scale, std::uint64_t seed) {
  Rng rng = make_stream(seed, "acceptance.points");
  std::normal_distribution<double> n(0.0, scale);
  std::vector<Vector> out;
  for (std::size_t i = 0; i < count; ++i) {
    Vector p(dim);
    for (Eigen::Index j = 0; j < dim; ++j) p(j) = n(rng);
    out.push_back(p);
  }
  return out;
}

std::size_t argmin(const Objective& f, const std::vector<Vector>& pts) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (f.value(pts[i]) < f.value(pts[best])) best = i;
  return best;
}

// --- 1 ------------------------------------------------------------------------

Outcome oracle_identities() {
  const auto t0 = Clock::now();
  const Manifold sphere = Manifold::sphere(3);
  const EmpiricalScoreOracle empirical(sphere.sample_uniform(1000, 1), 0.2);
  const QuadratureScoreOracle quadrature(Manifold::circle(), 4096, 0.1);
  double link = 0.0, jac = 0.0;
  for (const Vector& x : unit_points(100, 3, 0.8, 2)) {
    link = std::max(link, link_gradient_residual(empirical, x));
    jac = std::max(jac, mean_jacobian_residual(empirical, x));
  }
  for (const Vector& x : unit_points(100, 2, 0.8, 3)) {
    link = std::max(link, link_gradient_residual(quadrature, x));
    jac = std::max(jac, mean_jacobian_residual(quadrature, x));
  }
  const double t = seconds_since(t0);
  return {link <= 1e-5 && jac <= 1e-4 && t < 10.0,
          "max |FD grad link - mean| = " + num(link) + " (<= 1e-5), max |FD jac mean - jacobian| = " + num(jac) +
              " (<= 1e-4), runtime < 10 s"};
}

// --- 2 ------------------------------------------------------------------------

Outcome rate_check() {
  const auto t0 = Clock::now();
  const Manifold circle = Manifold::circle();
  RateSweepOptions o;
  o.offsets = {0.3 * circle.radius()};
  o.n_points = 100;
  o.seed = 1;
  const auto rep =
      rate_sweep([&](double s) { return std::make_unique<QuadratureScoreOracle>(circle, 4096, s); }, circle, o);
  write_rate_sweep_csv(rep, kOut / "rate.csv");
  const double t = seconds_since(t0);
  const auto in_band = [](double s) { return s >= 0.7 && s <= 1.4; };
  return {in_band(rep.mean_slope) && in_band(rep.jacobian_slope) && rep.monotone() && t < 60.0,
          "mean slope " + num(rep.mean_slope) + ", jacobian slope " + num(rep.jacobian_slope) +
              " (band [0.7, 1.4]), monotone " + (rep.monotone() ? "yes" : "no") + ", runtime < 60 s"};
}

// --- 3 ------------------------------------------------------------------------

Outcome landing_law() {
  const auto t0 = Clock::now();
  const Manifold sphere = Manifold::sphere(3);
  const Vector x0 = tube_test_points(sphere, {0.3}, 1, 4).front();
  const LandingReport rep = landing_check(sphere, 1.0, x0, 3.0, 1e-4);
  write_landing_csv(rep, kOut / "landing.csv");
  const double t = seconds_since(t0);
  return {rep.max_relative_deviation <= 0.05 && t < 30.0,
          "max relative deviation from exp(-2t) d0 = " + num(rep.max_relative_deviation) + " (<= 0.05)"};
}

// --- 4 ------------------------------------------------------------------------

Outcome baseline_exactness() {
  const auto t0 = Clock::now();
  const Manifold sphere = Manifold::sphere(3);
  Vector a(3);
  a << 1.0, -2.0, 0.5;
  const RunRecord s = riemannian_gd_baseline(sphere, LinearObjective(a), sphere.sample_uniform(1, 5).front(), 0.1,
                                             20000, 1e-12);
  const double sphere_err = (s.final_point + a.normalized()).norm();

  const Manifold on = Manifold::orthogonal(5);
  const BrockettObjective f(random_symmetric(5, 12));
  const RunRecord b = riemannian_gd_baseline(on, f, on.sample_uniform(1, 6).front(), 0.01, 100000, 1e-10);
  write_run_csv(b, kOut / "brockett_rgd.csv");
  const double gap = b.rows.back().objective - brockett_optimum(f);
  const double t = seconds_since(t0);
  return {sphere_err <= 1e-6 && std::abs(gap) <= 1e-6 && t < 30.0,
          "sphere |x - (-a/|a|)| = " + num(sphere_err) + " (<= 1e-6), O(5) Brockett gap = " + num(gap) +
              " (<= 1e-6)"};
}

// --- 5 ------------------------------------------------------------------------

Outcome brockett_drgd() {
  const auto t0 = Clock::now();
  const Manifold on = Manifold::orthogonal(5);
  const auto data = on.sample_uniform(4000, 11);
  const BrockettObjective f(random_symmetric(5, 12));
  const std::size_t best = argmin(f, data);
  const EmpiricalScoreOracle oracle(data, 0.05);
  DrgdConfig cfg;
  cfg.gamma = 1e-3;
  cfg.max_steps = 5000;
  const RunRecord rec = drgd_run(oracle, f, data[best], cfg, RunMonitor::for_manifold(on));
  write_run_csv(rec, kOut / "brockett_drgd.csv");
  const double dataset_best = f.value(data[best]);
  const auto s = feasibility_optimality_report(rec, {dataset_best, brockett_optimum(f), std::nullopt});
  const double t = seconds_since(t0);
  return {s.final_objective < dataset_best && s.gap_closed_fraction >= 0.1 && s.final_feasibility <= 0.15 && t < 300.0,
          "dataset best " + num(dataset_best) + ", final " + num(s.final_objective) + " (must be lower), optimum " +
              num(brockett_optimum(f)) + ", gap closed " + num(s.gap_closed_fraction) + " (>= 0.1), feasibility " +
              num(s.final_feasibility) + " (<= 0.15), steps " + std::to_string(s.steps)};
}

// --- 6 and 7 ------------------------------------------------------------------

DsmTrainConfig dsm_config() {
  DsmTrainConfig cfg;
  cfg.epochs = 15000;
  cfg.batch = 256;
  cfg.seed = 7;
  return cfg;
}

const std::vector<std::size_t> kHidden{128, 128, 128};

std::vector<Vector> two_points() {
  Vector lo(1), hi(1);
  lo << -1.0;
  hi << 1.0;
  return {lo, hi};
}

ScoreMlp two_point_network;

Outcome dsm_sanity() {
  auto t0 = Clock::now();
  const std::vector<Vector> single(1, Vector::Zero(2));
  const auto gauss = dsm_train(single, ScoreMlp::create(2, kHidden, 1), dsm_config());
  double num_sq = 0.0, den_sq = 0.0;
  for (double s : {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0})
    for (double radius : {0.5, 1.0, 1.5, 2.0})
      for (int k = 0; k < 8; ++k) {
        Vector x(2);
        x << radius * s * std::cos(k * M_PI / 4), radius * s * std::sin(k * M_PI / 4);
        const Vector truth = -x / (s * s);
        num_sq += (gauss.mlp.score(x, s) - truth).squaredNorm();
        den_sq += truth.squaredNorm();
      }
  const double rel = std::sqrt(num_sq / den_sq);
  const double t_gauss = seconds_since(t0);

  t0 = Clock::now();
  const auto pair = dsm_train(two_points(), ScoreMlp::create(1, kHidden, 1), dsm_config());
  two_point_network = pair.mlp;
  two_point_network.save(kOut / "two_point.msopt");
  const EmpiricalScoreOracle exact(two_points(), 0.5);
  const MlpScoreOracle learned(pair.mlp, 0.5);
  double worst = 0.0;
  for (int i = 0; i <= 80; ++i) {
    Vector x(1);
    x << -2.0 + 0.05 * i;
    worst = std::max(worst, (exact.tweedie_mean(x) - learned.tweedie_mean(x)).norm());
  }
  const double t_pair = seconds_since(t0);
  return {rel <= 0.1 && worst <= 0.05 && t_gauss < 300.0 && t_pair < 300.0,
          "single point: relative L2 score error " + num(rel) + " (<= 0.1) in " + num(t_gauss) +
              " s; two points: max Tweedie-mean gap " + num(worst) + " (<= 0.05) in " + num(t_pair) + " s"};
}

Outcome sampler() {
  const auto t0 = Clock::now();
  if (two_point_network.layers().empty()) two_point_network = ScoreMlp::load(kOut / "two_point.msopt");
  const auto samples = ve_reverse_sample(two_point_network, 1000, 1000, 3);
  std::size_t close = 0;
  for (const Vector& s : samples)
    if (std::min(std::abs(s(0) + 1.0), std::abs(s(0) - 1.0)) <= 0.15) ++close;
  const double t = seconds_since(t0);
  return {close >= 900 && t < 60.0, std::to_string(close) + "/1000 samples within 0.15 of a data point (>= 900)"};
}

// --- 8 ------------------------------------------------------------------------

Outcome tracking() {
  const auto t0 = Clock::now();
  const SystemModel sys = SystemModel::unicycle();
  const std::size_t horizon = 20;
  const TrajectoryDataset ds = generate_dataset(sys, horizon, 2000, 5);
  auto inner = std::make_shared<TrackingObjective>(
      make_reference(ReferenceShape::circle_arc, horizon, sys.dt, sys.output_dim(), true), default_tracking_q(sys),
      default_tracking_r(sys), horizon, sys.input_dim(), sys.output_dim());
  const RescaledObjective f(inner, ds.normalization.offset, ds.normalization.scale);
  const auto pts = ds.normalized();
  const std::size_t best = argmin(f, pts);
  const EmpiricalScoreOracle oracle(pts, 0.05);
  DrgdConfig cfg;
  cfg.gamma = 1e-3;
  cfg.max_steps = 2000;
  const RunRecord rec = drgd_run(oracle, f, pts[best], cfg, backtest_monitor(sys, horizon, ds.normalization));
  write_run_csv(rec, kOut / "tracking_drgd.csv");

  const Trajectory claimed = unflatten_trajectory(sys, horizon, ds.normalization.invert(rec.final_point));
  const BacktestResult bt = backtest(sys, claimed.inputs, claimed.outputs);
  const double true_objective = inner->value(flatten_trajectory(Trajectory{claimed.inputs, bt.y_true}));
  double y_sq = 0.0;
  for (const Vector& y : claimed.outputs) y_sq += y.squaredNorm();
  const double ratio = true_objective / f.value(pts[best]);
  const double gap_ratio = bt.gap / std::sqrt(y_sq);
  const double t = seconds_since(t0);
  return {ratio <= 0.7 && gap_ratio <= 0.1 && t < 600.0,
          "back-tested objective / dataset-argmin objective = " + num(ratio) + " (<= 0.7), back-test gap / |y*| = " +
              num(gap_ratio) + " (<= 0.1), steps " + std::to_string(rec.rows.back().step)};
}

// --- 9 ------------------------------------------------------------------------

Outcome gradient_checks() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  auto check = [&](const Objective& f) {
    const double e = grad_check(f, unit_points(50, static_cast<Eigen::Index>(f.dim()), 1.0, 9));
    if (e >= worst) {
      worst = e;
      worst_name = f.name();
    }
  };
  check(BrockettObjective(random_symmetric(5, 1)));
  const SystemModel uni = SystemModel::unicycle(), pend = SystemModel::double_pendulum();
  auto uni_track = std::make_shared<TrackingObjective>(make_reference(ReferenceShape::figure_eight, 20, uni.dt, 3, true),
                                                       default_tracking_q(uni), default_tracking_r(uni), 20, 2, 3);
  check(*uni_track);
  check(TrackingObjective(make_reference(ReferenceShape::sinusoid, 20, pend.dt, 2, false), default_tracking_q(pend),
                          default_tracking_r(pend), 20, 1, 2));
  const auto d = static_cast<Eigen::Index>(uni_track->dim());
  check(RescaledObjective(uni_track, unit_points(1, d, 1.0, 10).front(),
                          Vector(unit_points(1, d, 1.0, 11).front().cwiseAbs().array() + 0.1)));
  check(LinearObjective(unit_points(1, 7, 1.0, 12).front()));
  check(ConstantObjective(4, 2.0));
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && t < 10.0, "worst relative gradient error " + num(worst) + " (" + worst_name + ", <= 1e-6)"};
}

// --- 10 -----------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  std::string command;
  std::string name;
  std::string config;
};

Outcome reproducibility() {
  const fs::path root = kOut / "repro";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string dataset = (root / "unicycle" / "dataset").string();
  const std::vector<CliRun> runs{
      {"validate", "rate", "[oracle]\nkind=quadrature\n[manifold]\nkind=circle\n[algorithm]\nkind=rate_sweep\n"},
      {"validate", "landing",
       "[oracle]\nkind=exact\n[manifold]\nkind=sphere\n[algorithm]\nkind=landing_check\neta=1\nt_end=3\n"},
      {"optimize", "brockett_rgd",
       "[oracle]\nkind=exact\n[manifold]\nkind=orthogonal\nn=5\n[objective]\nkind=brockett\n"
       "[algorithm]\nkind=rgd\ngamma=0.01\nmax_steps=20000\nstart=random\n"},
      {"optimize", "brockett_drgd",
       "[oracle]\nkind=empirical\nsigma=0.05\nsamples=4000\n[manifold]\nkind=orthogonal\nn=5\n[objective]\n"
       "kind=brockett\n[algorithm]\nkind=drgd\ngamma=0.001\nmax_steps=5000\n"},
      {"generate-data", "unicycle", "[manifold]\nkind=unicycle\nhorizon=20\n[algorithm]\ncount=2000\n"},
      {"optimize", "tracking",
       "[oracle]\nkind=empirical\nsigma=0.05\ndataset=" + dataset +
           "\n[manifold]\nkind=unicycle\nhorizon=20\n[objective]\nkind=tracking\n[algorithm]\nkind=drgd\n"
           "max_steps=2000\n"},
  };
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const CliRun& r : runs) {
    const fs::path cfg = root / (r.name + ".cfg");
    std::ofstream(cfg) << "[experiment]\nseed = 2024\n" << r.config;
    for (const char* rep : {"a", "b"}) {
      // The second generate-data copy is compared but the first feeds the tracking run.
      const fs::path out = std::string(rep) == "a" ? root / r.name : root / (r.name + "_b");
      std::ostringstream sink;
      const int code = run_cli({r.command, "--config", cfg.string(), "--out", out.string()}, sink, sink);
      if (code != kExitOk) return {false, r.name + " exited with " + std::to_string(code) + ": " + sink.str()};
    }
    for (const auto& entry : fs::recursive_directory_iterator(root / r.name)) {
      if (entry.path().extension() != ".csv") continue;
      const fs::path twin = root / (r.name + "_b") / fs::relative(entry.path(), root / r.name);
      ++compared;
      if (slurp(entry.path()) != slurp(twin)) differing.push_back(fs::relative(entry.path(), root).string());
    }
  }
  std::string detail = std::to_string(compared) + " CSV artifacts from " + std::to_string(runs.size()) +
                       " CLI runs compared byte for byte";
  for (const auto& d : differing) detail += "; differs: " + d;
  return {differing.empty() && compared >= runs.size(), detail};
}

}  // namespace

int main() {
  fs::create_directories(kOut);
  std::cout << "acceptance suite (artifacts in " << fs::absolute(kOut).string() << ")" << std::endl;
  report(1, "exact-oracle identities", oracle_identities);
  report(2, "Tweedie rate on the circle", rate_check);
  report(3, "exact landing law", landing_law);
  report(4, "Riemannian GD baseline", baseline_exactness);
  report(5, "DRGD on Brockett O(5)", brockett_drgd);
  report(6, "score matching sanity", dsm_sanity);
  report(7, "VE reverse sampler", sampler);
  report(8, "unicycle tracking", tracking);
  report(9, "gradient checks", gradient_checks);
  report(10, "reproducibility", reproducibility);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
