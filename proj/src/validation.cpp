#include "msopt/validation.hpp"

#include "msopt/io.hpp"
#include "msopt/objectives.hpp"
#include "msopt/parallel.hpp"
#include "msopt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace msopt {

bool RateSweepReport::monotone(double noise) const {
  for (std::size_t i = 1; i < sigmas.size(); ++i) {
    if (noise == 0.0) {
      if (!(mean_error[i] < mean_error[i - 1]) || !(jacobian_error[i] < jacobian_error[i - 1])) return false;
    } else if (mean_error[i] > (1.0 + noise) * mean_error[i - 1] ||
               jacobian_error[i] > (1.0 + noise) * jacobian_error[i - 1]) {
      return false;
    }
  }
  return true;
}

std::vector<Vector> tube_test_points(const Manifold& m, const std::vector<double>& offsets, std::size_t n_points,
                                     std::uint64_t seed) {
  if (offsets.empty() || n_points == 0) throw InvalidArgument("tube_test_points: need offsets and points");
  for (double o : offsets) {
    if (!(o > 0.0) || o >= m.safe_tube_radius()) {
      throw InvalidArgument("tube_test_points: offset " + format_double(o) + " outside (0, safe tube radius " +
                            format_double(m.safe_tube_radius()) + ")");
    }
  }
  const auto base = m.sample_uniform(n_points, seed);
  Rng rng = make_stream(seed, "validation.normals");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const Vector& p = base[i];
    const double offset = offsets[i % offsets.size()] * ((i / offsets.size()) % 2 == 0 ? 1.0 : -1.0);
    Vector dir;
    if (m.kind() == ManifoldKind::orthogonal) {
      // Normal space at X is X * Sym(n); pick a random unit symmetric direction.
      const auto n = static_cast<Eigen::Index>(m.matrix_size());
      Matrix g(n, n);
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) g(r, c) = normal(rng);
      const Matrix sym = 0.5 * (g + g.transpose());
      dir = flatten(unflatten(p, n, n) * sym);
    } else {
      dir = p;
    }
    out.push_back(p + offset * dir / dir.norm());
  }
  return out;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("log_log_slope: need two or more pairs");
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

RateSweepReport rate_sweep(const OracleFamily& family, const Manifold& m, const RateSweepOptions& opts) {
  if (opts.sigmas.size() < 2) throw InvalidArgument("rate_sweep: need at least two sigma values");
  for (std::size_t i = 0; i < opts.sigmas.size(); ++i) {
    if (!(opts.sigmas[i] > 0.0) || (i > 0 && !(opts.sigmas[i] < opts.sigmas[i - 1]))) {
      throw InvalidArgument("rate_sweep: sigma grid must be positive and strictly decreasing");
    }
  }
  const auto points = tube_test_points(m, opts.offsets, opts.n_points, opts.seed);

  // Ground truth is independent of sigma.
  std::vector<Vector> truth_mean(points.size());
  std::vector<Matrix> truth_jac(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    truth_mean[i] = m.project(points[i]);
    truth_jac[i] = fd_jacobian([&](const Vector& p) { return m.project(p); }, points[i], opts.fd_step);
  }

  RateSweepReport rep;
  rep.sigmas = opts.sigmas;
  rep.offsets = opts.offsets;
  rep.point_count = points.size();
  rep.seed = opts.seed;
  std::vector<char> excluded(points.size(), 0);
  std::vector<std::string> notes(points.size());

  std::vector<std::vector<double>> mean_err(opts.sigmas.size(), std::vector<double>(points.size(), 0.0));
  std::vector<std::vector<double>> jac_err(opts.sigmas.size(), std::vector<double>(points.size(), 0.0));
  for (std::size_t s = 0; s < opts.sigmas.size(); ++s) {
    const auto oracle = family(opts.sigmas[s]);
    for_each_chunk(points.size(), 8, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        try {
          const ScoreEval e = oracle->eval(points[i]);
          if (!e.tweedie_mean.allFinite() || !e.tweedie_jacobian.allFinite()) {
            throw NumericalError("non-finite oracle output");
          }
          mean_err[s][i] = (e.tweedie_mean - truth_mean[i]).norm();
          jac_err[s][i] = operator_norm(e.tweedie_jacobian - truth_jac[i]);
        } catch (const std::exception& ex) {
          excluded[i] = 1;
          notes[i] = "point " + std::to_string(i) + " sigma " + format_double(opts.sigmas[s]) + ": " + ex.what();
        }
      }
    });
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (excluded[i]) {
      ++rep.excluded;
      rep.exclusion_notes.push_back(notes[i]);
    }
  }
  if (rep.excluded == points.size()) throw NumericalError("rate_sweep: every test point was excluded");
  for (std::size_t s = 0; s < opts.sigmas.size(); ++s) {
    double worst_mean = 0.0;
    double worst_jac = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (excluded[i]) continue;
      worst_mean = std::max(worst_mean, mean_err[s][i]);
      worst_jac = std::max(worst_jac, jac_err[s][i]);
    }
    rep.mean_error.push_back(worst_mean);
    rep.jacobian_error.push_back(worst_jac);
  }
  rep.mean_slope = log_log_slope(rep.sigmas, rep.mean_error);
  rep.jacobian_slope = log_log_slope(rep.sigmas, rep.jacobian_error);
  return rep;
}

double LandingReport::time_to_reach(double level) const {
  for (std::size_t i = 1; i < measured.size(); ++i) {
    if (measured[i] <= level && measured[i - 1] > level) {
      const double w = (measured[i - 1] - level) / (measured[i - 1] - measured[i]);
      return times[i - 1] + w * (times[i] - times[i - 1]);
    }
  }
  return kMissing;
}

LandingReport landing_check(const Manifold& m, double eta, const Vector& x0, double t_end, double euler_step) {
  if (!(euler_step > 0.0) || !(t_end > 0.0)) throw InvalidArgument("landing_check: t_end and euler_step must be > 0");
  const double d0_dist = m.dist_to_manifold(x0);
  if (!(d0_dist < m.safe_tube_radius())) {
    throw InvalidArgument("landing_check: start point at distance " + format_double(d0_dist) +
                          " is outside the tube of radius " + format_double(m.safe_tube_radius()));
  }
  const ExactManifoldOracle exact(m);
  const ConstantObjective zero(m.ambient_dim(), 0.0);
  DlfConfig cfg;
  cfg.eta = eta;
  cfg.t_step = euler_step;
  cfg.max_steps = static_cast<std::size_t>(std::llround(t_end / euler_step));
  cfg.stop_grad_tol = -1.0;
  RunMonitor mon;
  mon.name = "landing";
  mon.distance = [m](const Vector& x) { return m.dist_to_manifold(x); };
  const RunRecord rec = dlf_run(exact, zero, x0, cfg, mon);

  LandingReport rep;
  const double d0 = 0.5 * d0_dist * d0_dist;
  for (const RunRow& row : rec.rows) {
    const double t = static_cast<double>(row.step) * euler_step;
    const double measured = 0.5 * row.distance * row.distance;
    const double predicted = std::exp(-2.0 * eta * t) * d0;
    rep.times.push_back(t);
    rep.measured.push_back(measured);
    rep.predicted.push_back(predicted);
    if (predicted > 0.0) {
      rep.max_relative_deviation = std::max(rep.max_relative_deviation, std::abs(measured - predicted) / predicted);
    }
  }
  return rep;
}

FeasibilityOptimalitySummary feasibility_optimality_report(const RunRecord& record, const ReportContext& ctx) {
  if (record.rows.empty()) throw InvalidArgument("feasibility_optimality_report: empty record");
  FeasibilityOptimalitySummary s;
  const RunRow& first = record.rows.front();
  const RunRow& last = record.rows.back();
  s.steps = last.step;
  s.initial_objective = first.objective;
  s.final_objective = last.objective;
  s.objective_improvement = first.objective - last.objective;
  s.final_feasibility = last.feasibility;
  s.final_riem_grad_norm = last.riem_grad_norm;
  s.final_avg_sq_grad = record.running_avg_sq_grad().back();
  if (ctx.final_true_objective) s.final_true_objective = *ctx.final_true_objective;
  const double achieved = ctx.final_true_objective ? *ctx.final_true_objective : last.objective;
  if (ctx.dataset_best) s.improvement_vs_dataset_best = *ctx.dataset_best - achieved;
  if (ctx.ground_truth_optimum) {
    const double start = ctx.dataset_best ? *ctx.dataset_best : first.objective;
    const double gap = start - *ctx.ground_truth_optimum;
    // A start already at the optimum leaves no gap to close.
    s.gap_closed_fraction = gap > 1e-9 * std::max(1.0, std::abs(start)) ? (start - achieved) / gap : kMissing;
  }
  return s;
}

void write_rate_sweep_csv(const RateSweepReport& r, const std::filesystem::path& path) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << "sigma,mean_error,jacobian_error\n";
  for (std::size_t i = 0; i < r.sigmas.size(); ++i) {
    out << format_double(r.sigmas[i]) << ',' << format_double(r.mean_error[i]) << ','
        << format_double(r.jacobian_error[i]) << '\n';
  }
}

std::string rate_sweep_text(const RateSweepReport& r) {
  std::ostringstream os;
  os << "rate sweep: " << r.point_count << " points, seed " << r.seed << ", offsets";
  for (double o : r.offsets) os << ' ' << format_double(o);
  os << "\nmean_slope=" << format_double(r.mean_slope) << "\njacobian_slope=" << format_double(r.jacobian_slope)
     << "\nmonotone=" << (r.monotone() ? "true" : "false") << "\nexcluded=" << r.excluded << '\n';
  for (const auto& note : r.exclusion_notes) os << "  excluded: " << note << '\n';
  return os.str();
}

void write_landing_csv(const LandingReport& r, const std::filesystem::path& path) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << "t,measured,predicted\n";
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    out << format_double(r.times[i]) << ',' << format_double(r.measured[i]) << ','
        << format_double(r.predicted[i]) << '\n';
  }
}

std::string landing_text(const LandingReport& r) {
  std::ostringstream os;
  os << "landing check: " << r.times.size() << " samples up to t=" << format_double(r.times.back())
     << "\nmax_relative_deviation=" << format_double(r.max_relative_deviation) << '\n';
  return os.str();
}

std::string summary_text(const FeasibilityOptimalitySummary& s) {
  std::ostringstream os;
  os << "steps=" << s.steps << "\ninitial_objective=" << format_double(s.initial_objective)
     << "\nfinal_objective=" << format_double(s.final_objective)
     << "\nobjective_improvement=" << format_double(s.objective_improvement)
     << "\nfinal_feasibility=" << format_double(s.final_feasibility)
     << "\nfinal_riem_grad_norm=" << format_double(s.final_riem_grad_norm)
     << "\nfinal_avg_sq_grad=" << format_double(s.final_avg_sq_grad)
     << "\nimprovement_vs_dataset_best=" << format_double(s.improvement_vs_dataset_best)
     << "\ngap_closed_fraction=" << format_double(s.gap_closed_fraction)
     << "\nfinal_true_objective=" << format_double(s.final_true_objective) << '\n';
  return os.str();
}

}  // namespace msopt
