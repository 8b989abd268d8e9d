#include "msopt/optim.hpp"

#include "msopt/io.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace msopt {
namespace {

using Clock = std::chrono::steady_clock;

RunRow make_row(std::size_t step, const Objective& f, const Vector& x, const Vector& mean,
                const RunMonitor& monitor, double step_norm) {
  RunRow row;
  row.step = step;
  row.objective = f.value(x);
  row.surrogate_objective = f.value(mean);
  if (monitor.feasibility) row.feasibility = monitor.feasibility(x);
  if (monitor.riem_grad_norm) row.riem_grad_norm = monitor.riem_grad_norm(x, f);
  if (monitor.distance) row.distance = monitor.distance(x);
  row.step_norm = step_norm;
  return row;
}

void push_row(RunRecord& rec, RunRow row, const RunMonitor& monitor) {
  if (std::isfinite(row.feasibility) && row.feasibility > monitor.safe_tube_radius) rec.left_safe_tube = true;
  rec.rows.push_back(row);
}

void require_start(const Vector& x0, std::size_t dim, const char* who) {
  if (static_cast<std::size_t>(x0.size()) != dim) {
    throw InvalidArgument(std::string(who) + ": start point has dimension " + std::to_string(x0.size()) +
                          ", oracle expects " + std::to_string(dim));
  }
  if (!x0.allFinite()) throw InvalidArgument(std::string(who) + ": start point is not finite");
}

void finish(RunRecord& rec, const Vector& x, Clock::time_point start) {
  rec.final_point = x;
  rec.wall_time_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  rec.metadata["stop_reason"] = to_string(rec.stop_reason);
}

}  // namespace

void DlfConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("dlf: eta must be finite and >= 0");
  if (!(t_step > 0.0) || !std::isfinite(t_step)) throw InvalidArgument("dlf: t_step must be > 0");
  if (std::isnan(stop_grad_tol)) throw InvalidArgument("dlf: stop_grad_tol is NaN");
}

void DrgdConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("drgd: gamma must be > 0");
  if (!(stop_grad_tol >= 0.0)) throw InvalidArgument("drgd: stop_grad_tol must be >= 0");
}

void LandingDescentConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("landing: gamma must be > 0");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("landing: eta must be finite and >= 0");
  if (oscillation_window == 0) throw InvalidArgument("landing: oscillation_window must be positive");
}

RunMonitor RunMonitor::for_manifold(const Manifold& m) {
  RunMonitor mon;
  mon.name = m.describe();
  mon.safe_tube_radius = m.safe_tube_radius();
  mon.feasibility = [m](const Vector& x) { return m.constraint_residual(x); };
  if (m.kind() == ManifoldKind::orthogonal) {
    mon.distance = [m](const Vector& x) {
      try {
        return m.dist_to_manifold(x);
      } catch (const OutsideTubeError&) {
        return kMissing;
      }
    };
  }
  mon.riem_grad_norm = [m](const Vector& x, const Objective& f) {
    try {
      const Vector p = m.project(x);
      return m.riemannian_grad(p, f.gradient(p)).norm();
    } catch (const OutsideTubeError&) {
      return kMissing;
    }
  };
  return mon;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::budget: return "budget";
    case StopReason::tolerance: return "tolerance";
    case StopReason::non_finite: return "non_finite";
    case StopReason::diverged: return "diverged";
    case StopReason::oscillation: return "oscillation";
  }
  return "unknown";
}

bool RunRecord::aborted() const {
  return stop_reason == StopReason::non_finite || stop_reason == StopReason::diverged ||
         stop_reason == StopReason::oscillation;
}

std::vector<double> RunRecord::running_avg_sq_grad() const {
  std::vector<double> out;
  out.reserve(rows.size());
  double acc = 0.0;
  std::size_t n = 0;
  for (const RunRow& r : rows) {
    if (!std::isnan(r.riem_grad_norm)) {
      acc += r.riem_grad_norm * r.riem_grad_norm;
      ++n;
    }
    out.push_back(n == 0 ? kMissing : acc / static_cast<double>(n));
  }
  return out;
}

bool RunRecord::same_trace(const RunRecord& other) const {
  auto same = [](double a, double b) {
    return (std::isnan(a) && std::isnan(b)) || a == b;
  };
  if (rows.size() != other.rows.size()) return false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RunRow& a = rows[i];
    const RunRow& b = other.rows[i];
    if (a.step != b.step || !same(a.objective, b.objective) ||
        !same(a.surrogate_objective, b.surrogate_objective) || !same(a.feasibility, b.feasibility) ||
        !same(a.riem_grad_norm, b.riem_grad_norm) || !same(a.step_norm, b.step_norm)) {
      return false;
    }
  }
  return final_point.size() == other.final_point.size() && final_point == other.final_point;
}

// --- denoising landing flow --------------------------------------------------

RunRecord dlf_run(const ScoreOps& score, const Objective& f, const Vector& x0, const DlfConfig& cfg,
                  const RunMonitor& monitor) {
  cfg.validate();
  require_start(x0, score.ambient_dim(), "dlf_run");
  const auto start = Clock::now();
  RunRecord rec;
  rec.metadata = {{"algorithm", "dlf"},
                  {"eta", format_double(cfg.eta)},
                  {"t_step", format_double(cfg.t_step)},
                  {"max_steps", std::to_string(cfg.max_steps)},
                  {"stop_grad_tol", format_double(cfg.stop_grad_tol)},
                  {"oracle", score.kind()},
                  {"objective", f.name()},
                  {"monitor", monitor.name}};

  Vector x = x0;
  double step_norm = kMissing;
  for (std::size_t k = 0;; ++k) {
    const MeanContraction mc =
        score.mean_and_contract(x, [&](const Vector& mean) { return f.gradient(mean); });
    push_row(rec, make_row(k, f, x, mc.mean, monitor, step_norm), monitor);

    const Vector direction = -mc.contracted + cfg.eta * (mc.mean - x);
    if (direction.norm() <= cfg.stop_grad_tol) {
      rec.stop_reason = StopReason::tolerance;
      break;
    }
    if (k == cfg.max_steps) break;
    Vector next = x + cfg.t_step * direction;
    if (!next.allFinite()) {
      rec.stop_reason = StopReason::non_finite;
      break;
    }
    step_norm = (next - x).norm();
    x = std::move(next);
  }
  finish(rec, x, start);
  return rec;
}

// --- denoising Riemannian gradient descent -----------------------------------

RunRecord drgd_run(const ScoreOps& score, const Objective& f, const Vector& x0, const DrgdConfig& cfg,
                   const RunMonitor& monitor) {
  cfg.validate();
  require_start(x0, score.ambient_dim(), "drgd_run");
  const auto start = Clock::now();
  RunRecord rec;
  rec.metadata = {{"algorithm", "drgd"},
                  {"gamma", format_double(cfg.gamma)},
                  {"max_steps", std::to_string(cfg.max_steps)},
                  {"stop_grad_tol", format_double(cfg.stop_grad_tol)},
                  {"oracle", score.kind()},
                  {"objective", f.name()},
                  {"monitor", monitor.name}};

  Vector x = x0;
  double step_norm = kMissing;
  bool converged = false;
  for (std::size_t k = 0;; ++k) {
    const Vector grad = f.gradient(x);
    const MeanContraction mc = score.mean_and_contract(x, [&](const Vector&) { return grad; });
    push_row(rec, make_row(k, f, x, mc.mean, monitor, step_norm), monitor);
    if (converged) {
      rec.stop_reason = StopReason::tolerance;
      break;
    }
    if (k == cfg.max_steps) break;

    Vector next = score.tweedie_mean(x - cfg.gamma * mc.contracted);
    if (!next.allFinite()) {
      rec.stop_reason = StopReason::non_finite;
      break;
    }
    step_norm = (next - x).norm();
    x = std::move(next);
    converged = step_norm / cfg.gamma <= cfg.stop_grad_tol;
  }
  finish(rec, x, start);
  return rec;
}

// --- landing descent ---------------------------------------------------------

RunRecord landing_descent_run(const ScoreOps& score, const Objective& f, const Vector& x0,
                              const LandingDescentConfig& cfg, const RunMonitor& monitor) {
  cfg.validate();
  if (!score.provides_link_value()) {
    throw InvalidArgument("landing_descent_run: oracle '" + score.kind() + "' has no link value");
  }
  require_start(x0, score.ambient_dim(), "landing_descent_run");
  const auto start = Clock::now();
  RunRecord rec;
  rec.metadata = {{"algorithm", "landing_descent"},
                  {"gamma", format_double(cfg.gamma)},
                  {"eta", format_double(cfg.eta)},
                  {"max_steps", std::to_string(cfg.max_steps)},
                  {"stop_grad_tol", format_double(cfg.stop_grad_tol)},
                  {"oracle", score.kind()},
                  {"objective", f.name()},
                  {"monitor", monitor.name}};

  constexpr double kBlowUp = 1e12;
  Vector x = x0;
  double step_norm = kMissing;
  double previous = kMissing;
  std::size_t increases = 0;
  for (std::size_t k = 0;; ++k) {
    const ScoreEval e = score.eval(x);
    const Vector v = f.gradient(e.tweedie_mean);
    const Vector contracted = e.tweedie_jacobian * v;
    const double penalized = f.value(e.tweedie_mean) + cfg.eta * e.distance_surrogate(x);
    push_row(rec, make_row(k, f, x, e.tweedie_mean, monitor, step_norm), monitor);

    if (!std::isfinite(penalized) || x.norm() > kBlowUp) {
      rec.stop_reason = StopReason::diverged;
      break;
    }
    if (k > 0 && penalized > previous) {
      if (++increases >= cfg.oscillation_window) {
        rec.stop_reason = StopReason::oscillation;
        break;
      }
    } else {
      increases = 0;
    }
    previous = penalized;

    const Vector grad = contracted + cfg.eta * (x - e.tweedie_mean);
    if (grad.norm() <= cfg.stop_grad_tol) {
      rec.stop_reason = StopReason::tolerance;
      break;
    }
    if (k == cfg.max_steps) break;
    Vector next = x - cfg.gamma * grad;
    if (!next.allFinite()) {
      rec.stop_reason = StopReason::diverged;
      break;
    }
    step_norm = (next - x).norm();
    x = std::move(next);
  }
  finish(rec, x, start);
  return rec;
}

// --- exact baseline ----------------------------------------------------------

RunRecord riemannian_gd_baseline(const Manifold& m, const Objective& f, const Vector& x0, double gamma,
                                 std::size_t max_steps, double stop_grad_tol) {
  if (!(gamma > 0.0)) throw InvalidArgument("riemannian_gd_baseline: gamma must be > 0");
  require_start(x0, m.ambient_dim(), "riemannian_gd_baseline");
  if (m.constraint_residual(x0) > 1e-9) {
    throw InvalidArgument("riemannian_gd_baseline: start point is off the manifold (residual " +
                          format_double(m.constraint_residual(x0)) + ")");
  }
  const auto start = Clock::now();
  RunRecord rec;
  rec.metadata = {{"algorithm", "riemannian_gd"},
                  {"gamma", format_double(gamma)},
                  {"max_steps", std::to_string(max_steps)},
                  {"stop_grad_tol", format_double(stop_grad_tol)},
                  {"oracle", "exact"},
                  {"objective", f.name()},
                  {"monitor", m.describe()}};

  Vector x = x0;
  double step_norm = kMissing;
  for (std::size_t k = 0;; ++k) {
    const Vector rgrad = m.riemannian_grad(x, f.gradient(x));
    RunRow row;
    row.step = k;
    row.objective = f.value(x);
    row.surrogate_objective = row.objective;
    row.feasibility = m.constraint_residual(x);
    if (m.kind() == ManifoldKind::orthogonal) row.distance = m.dist_to_manifold(x);
    row.riem_grad_norm = rgrad.norm();
    row.step_norm = step_norm;
    rec.rows.push_back(row);
    if (row.riem_grad_norm <= stop_grad_tol) {
      rec.stop_reason = StopReason::tolerance;
      break;
    }
    if (k == max_steps) break;
    Vector next = m.project(x - gamma * rgrad);
    step_norm = (next - x).norm();
    x = std::move(next);
  }
  finish(rec, x, start);
  return rec;
}

// --- persistence -------------------------------------------------------------

void write_run_csv(const RunRecord& record, const std::filesystem::path& path) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << kRunCsvHeader << '\n';
  for (const RunRow& r : record.rows) {
    out << r.step << ',' << format_double(r.objective) << ',' << format_double(r.surrogate_objective) << ','
        << format_double(r.feasibility) << ',' << format_double(r.riem_grad_norm) << ','
        << format_double(r.step_norm) << '\n';
  }
}

void write_run_metadata(const RunRecord& record, const std::filesystem::path& path) {
  auto kv = record.metadata;
  kv["stop_reason"] = to_string(record.stop_reason);
  kv["left_safe_tube"] = record.left_safe_tube ? "true" : "false";
  kv["wall_time_seconds"] = format_double(record.wall_time_seconds);
  kv["rows"] = std::to_string(record.rows.size());
  if (!record.rows.empty()) {
    kv["final_feasibility"] = format_double(record.rows.back().feasibility);
    kv["final_distance"] = format_double(record.rows.back().distance);
  }
  write_key_values(path, kv);
}

RunRecord read_run_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_numeric_csv(path, true, &header);
  std::string joined;
  for (std::size_t i = 0; i < header.size(); ++i) joined += (i ? "," : "") + header[i];
  if (joined != kRunCsvHeader) throw InvalidArgument(path.string() + ": unexpected header '" + joined + "'");
  RunRecord rec;
  for (const auto& r : rows) {
    if (r.size() != 6) throw InvalidArgument(path.string() + ": expected 6 columns");
    rec.rows.push_back(RunRow{static_cast<std::size_t>(r[0]), r[1], r[2], r[3], r[4], r[5], kMissing});
  }
  return rec;
}

}  // namespace msopt
