#pragma once

#include "msopt/score.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace msopt {

struct DenseLayer {
  Matrix weight;  ///< out x in
  Vector bias;    ///< out
};

/// How the raw network output o(x, sigma) maps to a score estimate.
enum class OutputScaling {
  none,           ///< score = o
  inverse_sigma,  ///< score = o / sigma
};

/// Fully connected rectifier network taking (x_1..x_d, sigma) and returning a
/// d-dimensional output. Hidden layers use ReLU, the last layer is affine.
class ScoreMlp {
 public:
  ScoreMlp() = default;
  explicit ScoreMlp(std::vector<DenseLayer> layers,
                    OutputScaling scaling = OutputScaling::inverse_sigma);

  /// He-initialized hidden layers and a zero output layer, so the untrained
  /// score is identically zero.
  static ScoreMlp create(std::size_t ambient_dim, const std::vector<std::size_t>& hidden,
                         std::uint64_t seed);

  std::size_t ambient_dim() const;
  /// (d+1, hidden..., d)
  std::vector<std::size_t> widths() const;
  OutputScaling scaling() const { return scaling_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::size_t parameter_count() const;

  /// Raw outputs for a batch of inputs laid out as columns (d+1) x B.
  Matrix forward(const Matrix& inputs) const;
  Vector raw_output(const Vector& x, double sigma) const;
  /// Score estimate for grad log p_sigma at x.
  Vector score(const Vector& x, double sigma) const;
  /// Multiplier c(sigma) with score = c(sigma) * raw output.
  double output_factor(double sigma) const;

  /// d(raw output)/dx as a d x d matrix (the sigma input column dropped),
  /// via the product of layer Jacobians with rectifier masks. Pre-activations
  /// exactly at 0 get derivative 0.
  Matrix raw_input_jacobian(const Vector& x, double sigma) const;

  /// Raw output and v^T d(raw output)/dx from one forward and one backward pass.
  std::pair<Vector, Vector> raw_output_and_vjp(const Vector& x, double sigma,
                                               const std::function<Vector(const Vector&)>& covector) const;

  /// Binary format: "MSOPT1", uint64 layer count, then per layer uint64 rows,
  /// uint64 cols, rows*cols row-major weights and rows biases as float64. All
  /// little-endian. Only inverse_sigma networks are persisted.
  void save(const std::filesystem::path& path) const;
  static ScoreMlp load(const std::filesystem::path& path);

  bool operator==(const ScoreMlp& other) const;

 private:
  void validate() const;
  Vector input(const Vector& x, double sigma) const;

  std::vector<DenseLayer> layers_;
  OutputScaling scaling_ = OutputScaling::inverse_sigma;
};

/// Tweedie quantities from a network score: mean = x + sigma^2 score(x, sigma)
/// and jacobian = I + sigma^2 d score/dx. The link value is unavailable.
ScoreEval mlp_score_eval(const ScoreMlp& mlp, const Vector& x, double sigma);

class MlpScoreOracle final : public ScoreOps {
 public:
  MlpScoreOracle(ScoreMlp mlp, double sigma);

  std::size_t ambient_dim() const override { return mlp_.ambient_dim(); }
  std::string kind() const override { return "mlp"; }
  bool provides_link_value() const override { return false; }
  ScoreEval eval(const Vector& x) const override { return mlp_score_eval(mlp_, x, sigma_); }
  Vector tweedie_mean(const Vector& x) const override;
  /// Contracts with the transposed Jacobian (a vector-Jacobian product).
  MeanContraction mean_and_contract(const Vector& x, const CovectorFn& covector) const override;

  const ScoreMlp& mlp() const { return mlp_; }
  double sigma() const { return sigma_; }

 private:
  ScoreMlp mlp_;
  double sigma_;
};

struct DsmTrainConfig {
  double t_max = 3.0;
  double t_min = 1e-4;
  std::size_t epochs = 1000;
  std::size_t batch = 256;
  double lr_hi = 1e-3;
  double lr_lo = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DsmTrainResult {
  ScoreMlp mlp;
  std::vector<double> loss_trace;  ///< mean loss per epoch
};

/// Denoising score matching for the variance-exploding scheme sigma(t) = t:
/// minimizes E_{t ~ U[t_min, t_max], x0, z} sigma^2 |score(x0 + sigma z, sigma) + z / sigma|^2
/// with Adam and a cosine learning-rate schedule. One epoch is ceil(N / batch)
/// steps over minibatches drawn with replacement.
DsmTrainResult dsm_train(const std::vector<Vector>& dataset, ScoreMlp mlp, const DsmTrainConfig& cfg);

/// Euler-Maruyama discretization of the reverse VE SDE on a uniform grid over
/// [0, t_max - t_min], started from N(0, t_max^2 I).
std::vector<Vector> ve_reverse_sample(const ScoreMlp& mlp, std::size_t count, std::size_t steps,
                                      std::uint64_t seed, double t_max = 3.0, double t_min = 1e-4);

}  // namespace msopt
