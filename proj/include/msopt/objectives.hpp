#pragma once

#include "msopt/numerics.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace msopt {

/// Smooth objective on the ambient space.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual std::pair<double, Vector> value_grad(const Vector& x) const { return {value(x), gradient(x)}; }
};

/// f(x) = a . x
class LinearObjective final : public Objective {
 public:
  explicit LinearObjective(Vector a);
  std::size_t dim() const override { return static_cast<std::size_t>(a_.size()); }
  std::string name() const override { return "linear"; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  const Vector& coefficients() const { return a_; }

 private:
  Vector a_;
};

/// f(x) = c
class ConstantObjective final : public Objective {
 public:
  ConstantObjective(std::size_t dim, double c = 0.0) : dim_(dim), c_(c) {}
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "constant"; }
  double value(const Vector&) const override { return c_; }
  Vector gradient(const Vector&) const override { return Vector::Zero(static_cast<Eigen::Index>(dim_)); }

 private:
  std::size_t dim_;
  double c_;
};

/// Brockett cost f(X) = tr(A X Q X^T) on row-major flattened n x n matrices.
class BrockettObjective final : public Objective {
 public:
  /// q defaults to diag(1, ..., n).
  explicit BrockettObjective(Matrix a);
  BrockettObjective(Matrix a, Matrix q);

  std::size_t dim() const override { return static_cast<std::size_t>(a_.size()); }
  std::string name() const override { return "brockett"; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  std::pair<double, Vector> value_grad(const Vector& x) const override;

  const Matrix& a() const { return a_; }
  const Matrix& q() const { return q_; }
  std::size_t n() const { return static_cast<std::size_t>(a_.rows()); }

 private:
  Matrix reshape(const Vector& x) const;

  Matrix a_;
  Matrix q_;
};

/// Minimum of the Brockett cost over O(n) by the rearrangement pairing of the
/// ascending eigenvalues of A with the descending diagonal of Q. Requires Q
/// diagonal with distinct entries.
double brockett_optimum(const BrockettObjective& objective);

/// (G + G^T) / 2 with standard normal G drawn from the seed.
Matrix random_symmetric(std::size_t n, std::uint64_t seed);

/// Finite-horizon tracking cost on z = (u_0..u_{N-1}, y_0..y_N):
/// sum_{k<N} u_k^T R u_k + (y_k - r_k)^T Q (y_k - r_k) plus the terminal
/// term (y_N - r_N)^T Q (y_N - r_N).
class TrackingObjective final : public Objective {
 public:
  TrackingObjective(std::vector<Vector> reference, Matrix q_weight, Matrix r_weight,
                    std::size_t horizon, std::size_t input_dim, std::size_t output_dim);

  std::size_t dim() const override;
  std::string name() const override { return "tracking"; }
  double value(const Vector& z) const override;
  Vector gradient(const Vector& z) const override;
  std::pair<double, Vector> value_grad(const Vector& z) const override;

  std::size_t horizon() const { return horizon_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  const std::vector<Vector>& reference() const { return reference_; }
  const Matrix& q_weight() const { return q_; }
  const Matrix& r_weight() const { return r_; }

  /// Offsets of u_k and y_k in the flattened layout.
  Eigen::Index input_offset(std::size_t k) const;
  Eigen::Index output_offset(std::size_t k) const;

 private:
  void check_layout(const Vector& z) const;

  std::vector<Vector> reference_;
  Matrix q_;
  Matrix r_;
  std::size_t horizon_;
  std::size_t input_dim_;
  std::size_t output_dim_;
};

/// g(z) = f(offset + scale .* z): an objective seen through a per-coordinate
/// affine change of variables (used for standardized datasets).
class RescaledObjective final : public Objective {
 public:
  RescaledObjective(std::shared_ptr<const Objective> inner, Vector offset, Vector scale);
  std::size_t dim() const override { return inner_->dim(); }
  std::string name() const override { return inner_->name() + "(rescaled)"; }
  double value(const Vector& z) const override { return inner_->value(to_original(z)); }
  Vector gradient(const Vector& z) const override;
  std::pair<double, Vector> value_grad(const Vector& z) const override;

  Vector to_original(const Vector& z) const { return offset_ + scale_.cwiseProduct(z); }
  Vector from_original(const Vector& x) const { return (x - offset_).cwiseQuotient(scale_); }
  const Objective& inner() const { return *inner_; }

 private:
  std::shared_ptr<const Objective> inner_;
  Vector offset_;
  Vector scale_;
};

/// max over points of |analytic - central-FD gradient| / (1 + |analytic|).
double grad_check(const Objective& f, const std::vector<Vector>& points, double h = kDefaultFdStep);

enum class ReferenceShape { sinusoid, circle_arc, figure_eight };

ReferenceShape parse_reference_shape(const std::string& name);
std::string to_string(ReferenceShape shape);

/// Reference outputs r_0..r_horizon sampled every dt from a planar curve.
/// With planar = true the curve fills output components 0 and 1 (positional
/// tracking); otherwise its second coordinate fills component 0 (angle
/// tracking). Remaining components are zero.
std::vector<Vector> make_reference(ReferenceShape shape, std::size_t horizon, double dt,
                                   std::size_t output_dim, bool planar);

/// One output vector per CSV row, no header.
std::vector<Vector> load_reference_csv(const std::filesystem::path& path, std::size_t output_dim);

}  // namespace msopt
