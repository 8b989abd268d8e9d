#include "msopt/objectives.hpp"

#include "msopt/io.hpp"
#include "msopt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace msopt {
namespace {

void require_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw InvalidArgument(std::string(what) + " must be square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidArgument(std::string(what) + " must be symmetric");
  }
}

}  // namespace

// --- linear ------------------------------------------------------------------

LinearObjective::LinearObjective(Vector a) : a_(std::move(a)) {
  if (a_.size() == 0 || a_.norm() == 0.0) throw InvalidArgument("LinearObjective: a must be nonzero");
}

double LinearObjective::value(const Vector& x) const {
  if (x.size() != a_.size()) throw InvalidArgument("LinearObjective: dimension mismatch");
  return a_.dot(x);
}

Vector LinearObjective::gradient(const Vector& x) const {
  if (x.size() != a_.size()) throw InvalidArgument("LinearObjective: dimension mismatch");
  return a_;
}

// --- brockett ----------------------------------------------------------------

BrockettObjective::BrockettObjective(Matrix a)
    : BrockettObjective(a, Vector::LinSpaced(a.rows(), 1.0, static_cast<double>(a.rows())).asDiagonal().toDenseMatrix()) {}

BrockettObjective::BrockettObjective(Matrix a, Matrix q) : a_(std::move(a)), q_(std::move(q)) {
  require_symmetric(a_, "BrockettObjective: A");
  require_symmetric(q_, "BrockettObjective: Q");
  if (a_.rows() != q_.rows()) throw InvalidArgument("BrockettObjective: A and Q sizes differ");
}

Matrix BrockettObjective::reshape(const Vector& x) const {
  const Eigen::Index n = a_.rows();
  if (x.size() != n * n) {
    throw InvalidArgument("BrockettObjective: point of length " + std::to_string(x.size()) +
                          " does not reshape to " + std::to_string(n) + "x" + std::to_string(n));
  }
  return unflatten(x, n, n);
}

double BrockettObjective::value(const Vector& x) const {
  const Matrix m = reshape(x);
  return (a_ * m * q_ * m.transpose()).trace();
}

Vector BrockettObjective::gradient(const Vector& x) const {
  return flatten(2.0 * a_ * reshape(x) * q_);
}

std::pair<double, Vector> BrockettObjective::value_grad(const Vector& x) const {
  const Matrix m = reshape(x);
  const Matrix amq = a_ * m * q_;
  return {(amq * m.transpose()).trace(), flatten(2.0 * amq)};
}

double brockett_optimum(const BrockettObjective& objective) {
  const Matrix& q = objective.q();
  const Eigen::Index n = q.rows();
  Matrix off = q;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidArgument("brockett_optimum: Q must be diagonal");
  }
  std::vector<double> diag;
  for (Eigen::Index i = 0; i < n; ++i) diag.push_back(q(i, i));
  std::sort(diag.begin(), diag.end(), std::greater<>());
  for (std::size_t i = 1; i < diag.size(); ++i) {
    if (diag[i] == diag[i - 1]) throw InvalidArgument("brockett_optimum: Q entries must be distinct");
  }
  const Vector alpha = sym_eig(objective.a()).eigenvalues;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += alpha(i) * diag[static_cast<std::size_t>(i)];
  return total;
}

Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
  Rng rng = make_stream(seed, "objective.random_symmetric");
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(n);
  Matrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) g(i, j) = normal(rng);
  return 0.5 * (g + g.transpose());
}

// --- tracking ----------------------------------------------------------------

TrackingObjective::TrackingObjective(std::vector<Vector> reference, Matrix q_weight, Matrix r_weight,
                                     std::size_t horizon, std::size_t input_dim,
                                     std::size_t output_dim)
    : reference_(std::move(reference)),
      q_(std::move(q_weight)),
      r_(std::move(r_weight)),
      horizon_(horizon),
      input_dim_(input_dim),
      output_dim_(output_dim) {
  if (horizon_ == 0 || input_dim_ == 0 || output_dim_ == 0) {
    throw InvalidArgument("TrackingObjective: horizon and dimensions must be positive");
  }
  if (reference_.size() != horizon_ + 1) {
    throw InvalidArgument("TrackingObjective: reference has " + std::to_string(reference_.size()) +
                          " points, expected horizon + 1 = " + std::to_string(horizon_ + 1));
  }
  for (const Vector& r : reference_) {
    if (static_cast<std::size_t>(r.size()) != output_dim_) {
      throw InvalidArgument("TrackingObjective: reference point dimension mismatch");
    }
  }
  require_symmetric(q_, "TrackingObjective: Q");
  require_symmetric(r_, "TrackingObjective: R");
  if (static_cast<std::size_t>(q_.rows()) != output_dim_ || static_cast<std::size_t>(r_.rows()) != input_dim_) {
    throw InvalidArgument("TrackingObjective: weight sizes do not match dimensions");
  }
  if (sym_eig(q_).eigenvalues.minCoeff() < -1e-12) {
    throw InvalidArgument("TrackingObjective: Q must be positive semidefinite");
  }
  if (sym_eig(r_).eigenvalues.minCoeff() <= 0.0) {
    throw InvalidArgument("TrackingObjective: R must be positive definite");
  }
}

std::size_t TrackingObjective::dim() const {
  return horizon_ * input_dim_ + (horizon_ + 1) * output_dim_;
}

Eigen::Index TrackingObjective::input_offset(std::size_t k) const {
  return static_cast<Eigen::Index>(k * input_dim_);
}

Eigen::Index TrackingObjective::output_offset(std::size_t k) const {
  return static_cast<Eigen::Index>(horizon_ * input_dim_ + k * output_dim_);
}

void TrackingObjective::check_layout(const Vector& z) const {
  if (static_cast<std::size_t>(z.size()) != dim()) {
    throw InvalidArgument("TrackingObjective: point of length " + std::to_string(z.size()) +
                          " does not match layout N_h*n_u + (N_h+1)*n_y = " + std::to_string(dim()));
  }
}

double TrackingObjective::value(const Vector& z) const { return value_grad(z).first; }

Vector TrackingObjective::gradient(const Vector& z) const { return value_grad(z).second; }

std::pair<double, Vector> TrackingObjective::value_grad(const Vector& z) const {
  check_layout(z);
  const auto nu = static_cast<Eigen::Index>(input_dim_);
  const auto ny = static_cast<Eigen::Index>(output_dim_);
  double total = 0.0;
  Vector grad(z.size());
  for (std::size_t k = 0; k < horizon_; ++k) {
    const Vector u = z.segment(input_offset(k), nu);
    const Vector ru = r_ * u;
    total += u.dot(ru);
    grad.segment(input_offset(k), nu) = 2.0 * ru;
  }
  // Outputs y_0..y_{N-1} and the terminal y_N carry the same weight Q.
  for (std::size_t k = 0; k <= horizon_; ++k) {
    const Vector e = z.segment(output_offset(k), ny) - reference_[k];
    const Vector qe = q_ * e;
    total += e.dot(qe);
    grad.segment(output_offset(k), ny) = 2.0 * qe;
  }
  return {total, grad};
}

// --- rescaled ----------------------------------------------------------------

RescaledObjective::RescaledObjective(std::shared_ptr<const Objective> inner, Vector offset, Vector scale)
    : inner_(std::move(inner)), offset_(std::move(offset)), scale_(std::move(scale)) {
  if (!inner_) throw InvalidArgument("RescaledObjective: null objective");
  if (static_cast<std::size_t>(offset_.size()) != inner_->dim() || offset_.size() != scale_.size()) {
    throw InvalidArgument("RescaledObjective: offset/scale dimension mismatch");
  }
  if ((scale_.array() == 0.0).any()) throw InvalidArgument("RescaledObjective: zero scale");
}

Vector RescaledObjective::gradient(const Vector& z) const {
  return scale_.cwiseProduct(inner_->gradient(to_original(z)));
}

std::pair<double, Vector> RescaledObjective::value_grad(const Vector& z) const {
  auto [v, g] = inner_->value_grad(to_original(z));
  return {v, scale_.cwiseProduct(g)};
}

// --- checks ------------------------------------------------------------------

double grad_check(const Objective& f, const std::vector<Vector>& points, double h) {
  double worst = 0.0;
  for (const Vector& p : points) {
    const Vector analytic = f.gradient(p);
    const Vector numeric = fd_gradient([&](const Vector& x) { return f.value(x); }, p, h);
    worst = std::max(worst, (analytic - numeric).norm() / (1.0 + analytic.norm()));
  }
  return worst;
}

// --- references --------------------------------------------------------------

ReferenceShape parse_reference_shape(const std::string& name) {
  if (name == "sinusoid") return ReferenceShape::sinusoid;
  if (name == "circle_arc") return ReferenceShape::circle_arc;
  if (name == "figure_eight") return ReferenceShape::figure_eight;
  throw InvalidArgument("unknown reference shape '" + name + "' (expected sinusoid, circle_arc, figure_eight)");
}

std::string to_string(ReferenceShape shape) {
  switch (shape) {
    case ReferenceShape::sinusoid: return "sinusoid";
    case ReferenceShape::circle_arc: return "circle_arc";
    case ReferenceShape::figure_eight: return "figure_eight";
  }
  return "unknown";
}

std::vector<Vector> make_reference(ReferenceShape shape, std::size_t horizon, double dt,
                                   std::size_t output_dim, bool planar) {
  if (output_dim == 0 || (planar && output_dim < 2)) {
    throw InvalidArgument("make_reference: output dimension too small");
  }
  const double span = dt * static_cast<double>(horizon);
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<Vector> out;
  out.reserve(horizon + 1);
  for (std::size_t k = 0; k <= horizon; ++k) {
    const double t = dt * static_cast<double>(k);
    double px = 0.0;
    double py = 0.0;
    switch (shape) {
      case ReferenceShape::sinusoid:
        px = 0.5 * t;
        py = 0.5 * std::sin(two_pi * t / std::max(span, dt));
        break;
      case ReferenceShape::circle_arc: {
        // Unit-speed-scaled arc of radius 0.5 starting at the origin heading +x.
        const double radius = 0.5;
        const double angle = t;
        px = radius * std::sin(angle);
        py = radius * (1.0 - std::cos(angle));
        break;
      }
      case ReferenceShape::figure_eight: {
        const double w = two_pi * t / std::max(span, dt);
        px = 0.4 * std::sin(w);
        py = 0.4 * std::sin(w) * std::cos(w);
        break;
      }
    }
    Vector r = Vector::Zero(static_cast<Eigen::Index>(output_dim));
    if (planar) {
      r(0) = px;
      r(1) = py;
    } else {
      r(0) = py;
    }
    out.push_back(r);
  }
  return out;
}

std::vector<Vector> load_reference_csv(const std::filesystem::path& path, std::size_t output_dim) {
  const auto rows = read_numeric_csv(path, false);
  std::vector<Vector> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != output_dim) {
      throw InvalidArgument(path.string() + ": row " + std::to_string(i + 1) + " has " +
                            std::to_string(rows[i].size()) + " values, expected " + std::to_string(output_dim));
    }
    out.push_back(Eigen::Map<const Vector>(rows[i].data(), static_cast<Eigen::Index>(output_dim)));
  }
  return out;
}

}  // namespace msopt
