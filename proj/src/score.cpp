#include "msopt/score.hpp"

#include "msopt/parallel.hpp"

#include <cmath>
#include <numbers>

namespace msopt {
namespace {

constexpr std::size_t kChunk = 512;

}  // namespace

MeanContraction ScoreOps::mean_and_contract(const Vector& x, const CovectorFn& covector) const {
  const ScoreEval e = eval(x);
  Vector v = covector(e.tweedie_mean);
  Vector contracted = e.tweedie_jacobian * v;
  return MeanContraction{e.tweedie_mean, std::move(v), std::move(contracted)};
}

// --- empirical -------------------------------------------------------------

EmpiricalScoreOracle::EmpiricalScoreOracle(const std::vector<Vector>& dataset, double sigma)
    : sigma_(sigma) {
  if (dataset.empty()) throw InvalidArgument("EmpiricalScoreOracle: empty dataset");
  if (!(sigma > 0.0)) throw InvalidArgument("EmpiricalScoreOracle: sigma must be positive");
  const Eigen::Index d = dataset.front().size();
  data_.resize(d, static_cast<Eigen::Index>(dataset.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].size() != d) {
      throw InvalidArgument("EmpiricalScoreOracle: point " + std::to_string(i) +
                            " has dimension " + std::to_string(dataset[i].size()) +
                            ", expected " + std::to_string(d));
    }
    data_.col(static_cast<Eigen::Index>(i)) = dataset[i];
  }
  if (!data_.allFinite()) throw InvalidArgument("EmpiricalScoreOracle: non-finite data");
}

// Posterior weights softmax_i(-|x - y_i|^2 / 2 sigma^2). Partial results are
// reduced in chunk order, so the output does not depend on the thread count.
EmpiricalScoreOracle::Posterior EmpiricalScoreOracle::posterior(const Vector& x) const {
  if (x.size() != data_.rows()) {
    throw InvalidArgument("EmpiricalScoreOracle: point has dimension " + std::to_string(x.size()) +
                          ", expected " + std::to_string(data_.rows()));
  }
  const std::size_t n = size();
  const std::size_t chunks = chunk_count(n, kChunk);
  const double inv_two_var = 1.0 / (2.0 * sigma_ * sigma_);

  Vector logits(static_cast<Eigen::Index>(n));
  std::vector<double> chunk_max(chunks);
  for_each_chunk(n, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = begin; i < end; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      const double a = -(data_.col(col) - x).squaredNorm() * inv_two_var;
      logits(col) = a;
      top = std::max(top, a);
    }
    chunk_max[c] = top;
  });
  double top = -std::numeric_limits<double>::infinity();
  for (double m : chunk_max) top = std::max(top, m);

  std::vector<double> chunk_sum(chunks);
  std::vector<Vector> chunk_moment(chunks);
  for_each_chunk(n, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    double sum = 0.0;
    Vector moment = Vector::Zero(data_.rows());
    for (std::size_t i = begin; i < end; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      const double w = std::exp(logits(col) - top);
      logits(col) = w;
      sum += w;
      moment.noalias() += w * data_.col(col);
    }
    chunk_sum[c] = sum;
    chunk_moment[c] = std::move(moment);
  });
  double total = 0.0;
  Vector moment = Vector::Zero(data_.rows());
  for (std::size_t c = 0; c < chunks; ++c) {
    total += chunk_sum[c];
    moment += chunk_moment[c];
  }
  return Posterior{logits / total, moment / total, top + std::log(total)};
}

Matrix EmpiricalScoreOracle::covariance(const Posterior& post) const {
  const std::size_t n = size();
  const std::size_t chunks = chunk_count(n, kChunk);
  const Eigen::Index d = data_.rows();
  std::vector<Matrix> partial(chunks);
  for_each_chunk(n, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    const auto b = static_cast<Eigen::Index>(begin);
    const auto len = static_cast<Eigen::Index>(end - begin);
    Matrix centered = data_.middleCols(b, len).colwise() - post.mean;
    Matrix scaled = centered * post.weights.segment(b, len).asDiagonal();
    partial[c] = scaled * centered.transpose();
  });
  Matrix cov = Matrix::Zero(d, d);
  for (const Matrix& p : partial) cov += p;
  // Symmetrize away rounding so downstream checks see an exactly symmetric matrix.
  return 0.5 * (cov + cov.transpose());
}

Vector EmpiricalScoreOracle::covariance_times(const Posterior& post, const Vector& v) const {
  const std::size_t n = size();
  const std::size_t chunks = chunk_count(n, kChunk);
  std::vector<Vector> partial(chunks);
  for_each_chunk(n, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    const auto b = static_cast<Eigen::Index>(begin);
    const auto len = static_cast<Eigen::Index>(end - begin);
    Matrix centered = data_.middleCols(b, len).colwise() - post.mean;
    Vector coeff = (centered.transpose() * v).cwiseProduct(post.weights.segment(b, len));
    partial[c] = centered * coeff;
  });
  Vector out = Vector::Zero(data_.rows());
  for (const Vector& p : partial) out += p;
  return out;
}

double EmpiricalScoreOracle::dropped_constant() const {
  const double d = static_cast<double>(data_.rows());
  const double var = sigma_ * sigma_;
  return -var * (std::log(static_cast<double>(size())) + 0.5 * d * std::log(2.0 * std::numbers::pi * var));
}

ScoreEval EmpiricalScoreOracle::eval(const Vector& x) const {
  const Posterior post = posterior(x);
  const double var = sigma_ * sigma_;
  ScoreEval out;
  out.tweedie_mean = post.mean;
  out.tweedie_jacobian = covariance(post) / var;
  out.link_value = 0.5 * x.squaredNorm() + var * post.log_partition;
  out.link_dropped_constant = dropped_constant();
  return out;
}

Vector EmpiricalScoreOracle::tweedie_mean(const Vector& x) const { return posterior(x).mean; }

MeanContraction EmpiricalScoreOracle::mean_and_contract(const Vector& x,
                                                        const CovectorFn& covector) const {
  Posterior post = posterior(x);
  Vector v = covector(post.mean);
  Vector contracted = covariance_times(post, v) / (sigma_ * sigma_);
  return MeanContraction{std::move(post.mean), std::move(v), std::move(contracted)};
}

double EmpiricalScoreOracle::mean_standard_error(const Vector& x) const {
  const Posterior post = posterior(x);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data_.cols(); ++i) {
    const double w = post.weights(i);
    acc += w * w * (data_.col(i) - post.mean).squaredNorm();
  }
  return std::sqrt(acc);
}

// --- quadrature ------------------------------------------------------------

std::vector<Vector> QuadratureScoreOracle::circle_nodes(const Manifold& circle,
                                                        std::size_t node_count) {
  if (circle.kind() != ManifoldKind::circle) {
    throw InvalidArgument("QuadratureScoreOracle: only the circle is supported, got " +
                          circle.describe());
  }
  if (node_count < 64) {
    throw InvalidArgument("QuadratureScoreOracle: node_count must be at least 64, got " +
                          std::to_string(node_count));
  }
  std::vector<Vector> nodes;
  nodes.reserve(node_count);
  for (std::size_t j = 0; j < node_count; ++j) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(node_count);
    Vector y(2);
    y << circle.radius() * std::cos(theta), circle.radius() * std::sin(theta);
    nodes.push_back(y);
  }
  return nodes;
}

QuadratureScoreOracle::QuadratureScoreOracle(const Manifold& circle, std::size_t node_count,
                                             double sigma)
    : node_count_(node_count), nodes_(circle_nodes(circle, node_count), sigma) {}

// --- exact -----------------------------------------------------------------

ScoreEval ExactManifoldOracle::eval(const Vector& x) const {
  ScoreEval out;
  out.tweedie_mean = manifold_.project(x);
  out.tweedie_jacobian = manifold_.projection_jacobian(x);
  out.link_value = 0.5 * x.squaredNorm() - 0.5 * (x - out.tweedie_mean).squaredNorm();
  return out;
}

// --- consistency residuals -------------------------------------------------

double link_gradient_residual(const ScoreOps& oracle, const Vector& x, double h) {
  if (!oracle.provides_link_value()) {
    throw InvalidArgument("link_gradient_residual: oracle '" + oracle.kind() +
                          "' does not provide a link value");
  }
  const Vector grad = fd_gradient([&](const Vector& p) { return oracle.eval(p).link_value; }, x, h);
  return (grad - oracle.tweedie_mean(x)).norm();
}

double mean_jacobian_residual(const ScoreOps& oracle, const Vector& x, double h) {
  const Matrix fd = fd_jacobian([&](const Vector& p) { return oracle.tweedie_mean(p); }, x, h);
  return operator_norm(fd - oracle.eval(x).tweedie_jacobian);
}

}  // namespace msopt
