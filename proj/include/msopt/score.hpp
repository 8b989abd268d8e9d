#pragma once

#include "msopt/manifolds.hpp"
#include "msopt/numerics.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace msopt {

/// Derivative information of the link function at one point.
///
/// tweedie_mean is s(x) = x + sigma^2 grad log p_sigma(x) and tweedie_jacobian
/// its Jacobian I + sigma^2 Hess log p_sigma(x). link_value is
/// |x|^2/2 + sigma^2 log p_sigma(x) with the x-independent part
/// link_dropped_constant removed, so that the true value is
/// link_value + link_dropped_constant. It is NaN for oracles that cannot
/// evaluate it (trained networks).
struct ScoreEval {
  Vector tweedie_mean;
  Matrix tweedie_jacobian;
  double link_value = std::numeric_limits<double>::quiet_NaN();
  double link_dropped_constant = 0.0;

  bool has_link_value() const { return !std::isnan(link_value); }
  /// Distance surrogate d_sigma(x) = |x|^2/2 - link, up to the dropped constant.
  double distance_surrogate(const Vector& x) const { return 0.5 * x.squaredNorm() - link_value; }
};

/// Picks the covector to contract the Jacobian with, given the Tweedie mean.
using CovectorFn = std::function<Vector(const Vector& tweedie_mean)>;

struct MeanContraction {
  Vector mean;        ///< s(x)
  Vector covector;    ///< v = covector(s(x))
  Vector contracted;  ///< s'(x) v for exact oracles, s'(x)^T v for networks
};

/// Uniform evaluation contract for every Tweedie-score source.
class ScoreOps {
 public:
  virtual ~ScoreOps() = default;

  virtual std::size_t ambient_dim() const = 0;
  virtual std::string kind() const = 0;
  virtual bool provides_link_value() const = 0;

  virtual ScoreEval eval(const Vector& x) const = 0;
  virtual Vector tweedie_mean(const Vector& x) const { return eval(x).tweedie_mean; }
  /// Mean and one Jacobian contraction with a covector that may depend on the
  /// mean, computed from a single pass where the oracle allows it.
  virtual MeanContraction mean_and_contract(const Vector& x, const CovectorFn& covector) const;
};

/// Exact Tweedie quantities of the empirical measure (1/N) sum_i delta_{y_i},
/// i.e. a Gaussian mixture posterior over the data points.
class EmpiricalScoreOracle final : public ScoreOps {
 public:
  EmpiricalScoreOracle(const std::vector<Vector>& dataset, double sigma);

  std::size_t ambient_dim() const override { return static_cast<std::size_t>(data_.rows()); }
  std::string kind() const override { return "empirical"; }
  bool provides_link_value() const override { return true; }
  ScoreEval eval(const Vector& x) const override;
  Vector tweedie_mean(const Vector& x) const override;
  MeanContraction mean_and_contract(const Vector& x, const CovectorFn& covector) const override;

  /// Standard error of the self-normalized mean estimate,
  /// sqrt(sum_i w_i^2 |y_i - m|^2) with normalized posterior weights w_i.
  double mean_standard_error(const Vector& x) const;

  double sigma() const { return sigma_; }
  std::size_t size() const { return static_cast<std::size_t>(data_.cols()); }

 private:
  struct Posterior {
    Vector weights;  ///< normalized
    Vector mean;
    double log_partition;  ///< log sum_i exp(-|x-y_i|^2 / 2 sigma^2)
  };
  Posterior posterior(const Vector& x) const;
  Matrix covariance(const Posterior& post) const;
  Vector covariance_times(const Posterior& post, const Vector& v) const;
  double dropped_constant() const;

  Matrix data_;  ///< d x N, one point per column
  double sigma_;
};

/// Tweedie quantities of the uniform measure on a circle, by the trapezoid
/// rule on equispaced nodes (spectrally accurate for periodic integrands).
class QuadratureScoreOracle final : public ScoreOps {
 public:
  QuadratureScoreOracle(const Manifold& circle, std::size_t node_count, double sigma);

  std::size_t ambient_dim() const override { return 2; }
  std::string kind() const override { return "quadrature"; }
  bool provides_link_value() const override { return true; }
  ScoreEval eval(const Vector& x) const override { return nodes_.eval(x); }
  Vector tweedie_mean(const Vector& x) const override { return nodes_.tweedie_mean(x); }
  MeanContraction mean_and_contract(const Vector& x, const CovectorFn& covector) const override {
    return nodes_.mean_and_contract(x, covector);
  }

  std::size_t node_count() const { return node_count_; }
  double sigma() const { return nodes_.sigma(); }

 private:
  static std::vector<Vector> circle_nodes(const Manifold& circle, std::size_t node_count);

  std::size_t node_count_;
  EmpiricalScoreOracle nodes_;
};

/// The sigma = 0 limit on a known manifold: mean = pi(x), jacobian = pi'(x),
/// link = |x|^2/2 - dist(x)^2/2.
class ExactManifoldOracle final : public ScoreOps {
 public:
  explicit ExactManifoldOracle(Manifold manifold) : manifold_(std::move(manifold)) {}

  std::size_t ambient_dim() const override { return manifold_.ambient_dim(); }
  std::string kind() const override { return "exact"; }
  bool provides_link_value() const override { return true; }
  ScoreEval eval(const Vector& x) const override;
  Vector tweedie_mean(const Vector& x) const override { return manifold_.project(x); }

  const Manifold& manifold() const { return manifold_; }

 private:
  Manifold manifold_;
};

/// |fd_gradient(link_value) - tweedie_mean| at x.
double link_gradient_residual(const ScoreOps& oracle, const Vector& x, double h = kDefaultFdStep);

/// Operator norm of fd_jacobian(tweedie_mean) - tweedie_jacobian at x.
double mean_jacobian_residual(const ScoreOps& oracle, const Vector& x, double h = kDefaultFdStep);

}  // namespace msopt
