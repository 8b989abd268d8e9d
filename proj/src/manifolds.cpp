#include "msopt/manifolds.hpp"

#include "msopt/rng.hpp"

#include <cmath>
#include <sstream>

namespace msopt {
namespace {

constexpr double kDegenerateTol = 1e-12;
constexpr double kOnManifoldTol = 1e-9;

Matrix skew(const Matrix& m) { return 0.5 * (m - m.transpose()); }

}  // namespace

std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::circle: return "circle";
    case ManifoldKind::sphere: return "sphere";
    case ManifoldKind::orthogonal: return "orthogonal";
  }
  return "unknown";
}

Manifold::Manifold(ManifoldKind kind, std::size_t ambient_dim, double radius, std::size_t n)
    : kind_(kind), ambient_dim_(ambient_dim), radius_(radius), n_(n) {}

Manifold Manifold::circle(double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("circle: radius must be positive");
  return Manifold(ManifoldKind::circle, 2, radius, 0);
}

Manifold Manifold::sphere(std::size_t ambient_dim, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("sphere: radius must be positive");
  if (ambient_dim < 2) throw InvalidArgument("sphere: ambient dimension must be at least 2");
  return Manifold(ManifoldKind::sphere, ambient_dim, radius, 0);
}

Manifold Manifold::orthogonal(std::size_t n) {
  if (n < 1) throw InvalidArgument("orthogonal: n must be at least 1");
  return Manifold(ManifoldKind::orthogonal, n * n, 1.0, n);
}

std::size_t Manifold::dimension() const {
  if (kind_ == ManifoldKind::orthogonal) return n_ * (n_ - 1) / 2;
  return ambient_dim_ - 1;
}

double Manifold::safe_tube_radius() const {
  return kind_ == ManifoldKind::orthogonal ? 0.4 : 0.5 * radius_;
}

std::string Manifold::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case ManifoldKind::circle: out << "circle(radius=" << radius_ << ")"; break;
    case ManifoldKind::sphere:
      out << "sphere(ambient_dim=" << ambient_dim_ << ", radius=" << radius_ << ")";
      break;
    case ManifoldKind::orthogonal: out << "orthogonal(n=" << n_ << ")"; break;
  }
  return out.str();
}

void Manifold::check_dim(const Vector& x, const char* where) const {
  if (static_cast<std::size_t>(x.size()) != ambient_dim_) {
    throw InvalidArgument(std::string(where) + ": point has dimension " +
                          std::to_string(x.size()) + ", manifold " + describe() +
                          " expects " + std::to_string(ambient_dim_));
  }
  if (!x.allFinite()) throw InvalidArgument(std::string(where) + ": non-finite coordinates");
}

Vector Manifold::project(const Vector& x) const {
  check_dim(x, "project");
  if (kind_ != ManifoldKind::orthogonal) {
    const double norm = x.norm();
    if (norm < kDegenerateTol) {
      throw OutsideTubeError("project: point at the center of " + describe() +
                             " is outside the tubular neighborhood");
    }
    return (radius_ / norm) * x;
  }
  const auto n = static_cast<Eigen::Index>(n_);
  const SvdResult f = svd(unflatten(x, n, n));
  if (f.singular_values(n - 1) < kDegenerateTol) {
    throw OutsideTubeError("project: singular matrix (smallest singular value " +
                           std::to_string(f.singular_values(n - 1)) +
                           ") is outside the tubular neighborhood of O(n)");
  }
  return flatten(f.u * f.vt);
}

Vector Manifold::tangent_project(const Vector& p, const Vector& v) const {
  check_dim(p, "tangent_project");
  check_dim(v, "tangent_project");
  const double residual = constraint_residual(p);
  if (residual > kOnManifoldTol) {
    throw InvalidArgument("tangent_project: base point is off the manifold (residual " +
                          std::to_string(residual) + ")");
  }
  if (kind_ != ManifoldKind::orthogonal) {
    const Vector unit = p / p.norm();
    return v - v.dot(unit) * unit;
  }
  const auto n = static_cast<Eigen::Index>(n_);
  const Matrix base = unflatten(p, n, n);
  return flatten(base * skew(base.transpose() * unflatten(v, n, n)));
}

Vector Manifold::riemannian_grad(const Vector& p, const Vector& euclid_grad) const {
  return tangent_project(p, euclid_grad);
}

Matrix Manifold::projection_jacobian(const Vector& x) const {
  check_dim(x, "projection_jacobian");
  const auto d = static_cast<Eigen::Index>(ambient_dim_);
  if (kind_ != ManifoldKind::orthogonal) {
    const double norm = x.norm();
    if (norm < kDegenerateTol) {
      throw OutsideTubeError("projection_jacobian: point at the center of " + describe());
    }
    const Vector unit = x / norm;
    return (radius_ / norm) * (Matrix::Identity(d, d) - unit * unit.transpose());
  }
  // Polar factor Q = U V^T of X = U S V^T moves as dQ = U W V^T with
  // W_ij = (C_ij - C_ji) / (s_i + s_j) and C = U^T dX V.
  const auto n = static_cast<Eigen::Index>(n_);
  const SvdResult f = svd(unflatten(x, n, n));
  if (f.singular_values(n - 1) < kDegenerateTol) {
    throw OutsideTubeError("projection_jacobian: singular matrix is outside the tube of O(n)");
  }
  const Matrix v = f.vt.transpose();
  Matrix jac(d, d);
  for (Eigen::Index col = 0; col < d; ++col) {
    Matrix e = Matrix::Zero(n, n);
    e(col / n, col % n) = 1.0;
    const Matrix c = f.u.transpose() * e * v;
    Matrix w(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        w(i, j) = (c(i, j) - c(j, i)) / (f.singular_values(i) + f.singular_values(j));
    jac.col(col) = flatten(f.u * w * f.vt);
  }
  return jac;
}

std::vector<Vector> Manifold::sample_uniform(std::size_t count, std::uint64_t seed) const {
  Rng rng = make_stream(seed, "manifold.sample_uniform");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(count);
  const auto d = static_cast<Eigen::Index>(ambient_dim_);
  for (std::size_t s = 0; s < count; ++s) {
    if (kind_ != ManifoldKind::orthogonal) {
      Vector g(d);
      double norm = 0.0;
      while (norm < kDegenerateTol) {
        for (Eigen::Index i = 0; i < d; ++i) g(i) = normal(rng);
        norm = g.norm();
      }
      out.push_back((radius_ / norm) * g);
      continue;
    }
    const auto n = static_cast<Eigen::Index>(n_);
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    const Matrix& r = qr.matrixQR();
    for (Eigen::Index j = 0; j < n; ++j)
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    out.push_back(flatten(q));
  }
  return out;
}

double Manifold::dist_to_manifold(const Vector& x) const { return (x - project(x)).norm(); }

double Manifold::constraint_residual(const Vector& x) const {
  check_dim(x, "constraint_residual");
  if (kind_ != ManifoldKind::orthogonal) return std::abs(x.norm() - radius_);
  const auto n = static_cast<Eigen::Index>(n_);
  const Matrix m = unflatten(x, n, n);
  return (m.transpose() * m - Matrix::Identity(n, n)).norm();
}

}  // namespace msopt
