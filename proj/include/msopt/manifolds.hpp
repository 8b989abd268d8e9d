#pragma once

#include "msopt/numerics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace msopt {

/// Raised when a point has no unique closest point on the manifold.
class OutsideTubeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class ManifoldKind { circle, sphere, orthogonal };

std::string to_string(ManifoldKind kind);

/// An exactly known embedded manifold: circle and sphere of a given radius
/// centered at the origin, or the orthogonal group O(n) embedded in R^{n*n}
/// through row-major flattening.
class Manifold {
 public:
  static Manifold circle(double radius = 1.0);
  static Manifold sphere(std::size_t ambient_dim, double radius = 1.0);
  static Manifold orthogonal(std::size_t n);

  ManifoldKind kind() const { return kind_; }
  std::size_t ambient_dim() const { return ambient_dim_; }
  /// Intrinsic dimension.
  std::size_t dimension() const;
  double radius() const { return radius_; }
  /// Matrix size n for O(n); 0 otherwise.
  std::size_t matrix_size() const { return n_; }
  /// Radius of the tube in which validation harnesses place test points.
  double safe_tube_radius() const;
  std::string describe() const;

  /// Closest point. Throws OutsideTubeError where it is not unique.
  Vector project(const Vector& x) const;
  /// Orthogonal projection of v onto T_p M; p must lie on M within 1e-9.
  Vector tangent_project(const Vector& p, const Vector& v) const;
  Vector riemannian_grad(const Vector& p, const Vector& euclid_grad) const;
  /// Derivative of project at x (n x n ambient matrix), closed form.
  Matrix projection_jacobian(const Vector& x) const;
  std::vector<Vector> sample_uniform(std::size_t count, std::uint64_t seed) const;
  double dist_to_manifold(const Vector& x) const;
  /// Constraint residual: | |x| - r | for circle/sphere, |X^T X - I|_F for O(n).
  double constraint_residual(const Vector& x) const;

 private:
  Manifold(ManifoldKind kind, std::size_t ambient_dim, double radius, std::size_t n);
  void check_dim(const Vector& x, const char* where) const;

  ManifoldKind kind_;
  std::size_t ambient_dim_;
  double radius_;
  std::size_t n_;
};

}  // namespace msopt
