#include "msopt/mlp.hpp"

#include "msopt/rng.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace msopt {
namespace {

constexpr char kMagic[6] = {'M', 'S', 'O', 'P', 'T', '1'};

Matrix relu(const Matrix& a) { return a.cwiseMax(0.0); }

Matrix relu_mask(const Matrix& a) { return (a.array() > 0.0).cast<double>().matrix(); }

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t read_u64(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw InvalidArgument("ScoreMlp::load: truncated file " + path.string());
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in, const std::filesystem::path& path) {
  return std::bit_cast<double>(read_u64(in, path));
}

}  // namespace

ScoreMlp::ScoreMlp(std::vector<DenseLayer> layers, OutputScaling scaling)
    : layers_(std::move(layers)), scaling_(scaling) {
  validate();
}

void ScoreMlp::validate() const {
  if (layers_.empty()) throw InvalidArgument("ScoreMlp: at least one layer required");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.bias.size() != layer.weight.rows()) {
      throw InvalidArgument("ScoreMlp: layer " + std::to_string(l) + " bias length mismatch");
    }
    if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows()) {
      throw InvalidArgument("ScoreMlp: layer " + std::to_string(l) + " input width " +
                            std::to_string(layer.weight.cols()) + " does not match previous output " +
                            std::to_string(layers_[l - 1].weight.rows()));
    }
  }
  if (layers_.front().weight.cols() != layers_.back().weight.rows() + 1) {
    throw InvalidArgument("ScoreMlp: input width must be output width + 1 (coordinates and sigma)");
  }
}

ScoreMlp ScoreMlp::create(std::size_t ambient_dim, const std::vector<std::size_t>& hidden,
                          std::uint64_t seed) {
  if (ambient_dim == 0) throw InvalidArgument("ScoreMlp::create: ambient_dim must be positive");
  Rng rng = make_stream(seed, "mlp.init");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<DenseLayer> layers;
  std::size_t in = ambient_dim + 1;
  for (std::size_t width : hidden) {
    DenseLayer layer{Matrix(width, in), Vector::Zero(static_cast<Eigen::Index>(width))};
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = scale * normal(rng);
    layers.push_back(std::move(layer));
    in = width;
  }
  const auto d = static_cast<Eigen::Index>(ambient_dim);
  layers.push_back(DenseLayer{Matrix::Zero(d, static_cast<Eigen::Index>(in)), Vector::Zero(d)});
  return ScoreMlp(std::move(layers));
}

std::size_t ScoreMlp::ambient_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows());
}

std::vector<std::size_t> ScoreMlp::widths() const {
  std::vector<std::size_t> out;
  if (layers_.empty()) return out;
  out.push_back(static_cast<std::size_t>(layers_.front().weight.cols()));
  for (const DenseLayer& l : layers_) out.push_back(static_cast<std::size_t>(l.weight.rows()));
  return out;
}

std::size_t ScoreMlp::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Vector ScoreMlp::input(const Vector& x, double sigma) const {
  if (static_cast<std::size_t>(x.size()) != ambient_dim()) {
    throw InvalidArgument("ScoreMlp: point has dimension " + std::to_string(x.size()) +
                          ", network expects " + std::to_string(ambient_dim()));
  }
  Vector in(x.size() + 1);
  in << x, sigma;
  return in;
}

Matrix ScoreMlp::forward(const Matrix& inputs) const {
  Matrix h = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix a = layers_[l].weight * h;
    a.colwise() += layers_[l].bias;
    h = (l + 1 < layers_.size()) ? relu(a) : std::move(a);
  }
  return h;
}

Vector ScoreMlp::raw_output(const Vector& x, double sigma) const {
  return forward(input(x, sigma));
}

double ScoreMlp::output_factor(double sigma) const {
  return scaling_ == OutputScaling::inverse_sigma ? 1.0 / sigma : 1.0;
}

Vector ScoreMlp::score(const Vector& x, double sigma) const {
  return output_factor(sigma) * raw_output(x, sigma);
}

Matrix ScoreMlp::raw_input_jacobian(const Vector& x, double sigma) const {
  Vector h = input(x, sigma);
  Matrix jac = Matrix::Identity(h.size(), h.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Vector a = layers_[l].weight * h + layers_[l].bias;
    jac = layers_[l].weight * jac;
    if (l + 1 < layers_.size()) {
      jac = relu_mask(a).asDiagonal() * jac;
      h = relu(a);
    }
  }
  return jac.leftCols(static_cast<Eigen::Index>(ambient_dim()));
}

std::pair<Vector, Vector> ScoreMlp::raw_output_and_vjp(
    const Vector& x, double sigma, const std::function<Vector(const Vector&)>& covector) const {
  std::vector<Vector> pre;
  pre.reserve(layers_.size());
  Vector h = input(x, sigma);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Vector a = layers_[l].weight * h + layers_[l].bias;
    if (l + 1 < layers_.size()) {
      h = relu(a);
      pre.push_back(std::move(a));
    } else {
      h = std::move(a);
    }
  }
  Vector grad = covector(h);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    grad = layers_[l].weight.transpose() * grad;
    if (l > 0) grad = grad.cwiseProduct(relu_mask(pre[l - 1]));
  }
  return {h, grad.head(static_cast<Eigen::Index>(ambient_dim()))};
}

void ScoreMlp::save(const std::filesystem::path& path) const {
  if (scaling_ != OutputScaling::inverse_sigma) {
    throw InvalidArgument("ScoreMlp::save: only inverse_sigma networks can be persisted");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("ScoreMlp::save: cannot open " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_u64(out, layers_.size());
  for (const DenseLayer& l : layers_) {
    write_u64(out, static_cast<std::uint64_t>(l.weight.rows()));
    write_u64(out, static_cast<std::uint64_t>(l.weight.cols()));
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) write_f64(out, l.weight(i, j));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) write_f64(out, l.bias(i));
  }
  if (!out) throw InvalidArgument("ScoreMlp::save: write failed for " + path.string());
}

ScoreMlp ScoreMlp::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("ScoreMlp::load: cannot open " + path.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic)) {
    throw InvalidArgument("ScoreMlp::load: " + path.string() + " is not an MSOPT1 network file");
  }
  const std::uint64_t count = read_u64(in, path);
  if (count == 0 || count > 1024) throw InvalidArgument("ScoreMlp::load: bad layer count");
  std::vector<DenseLayer> layers;
  for (std::uint64_t l = 0; l < count; ++l) {
    const std::uint64_t rows = read_u64(in, path);
    const std::uint64_t cols = read_u64(in, path);
    if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) {
      throw InvalidArgument("ScoreMlp::load: bad layer shape in " + path.string());
    }
    DenseLayer layer{Matrix(rows, cols), Vector(rows)};
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = read_f64(in, path);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = read_f64(in, path);
    layers.push_back(std::move(layer));
  }
  return ScoreMlp(std::move(layers), OutputScaling::inverse_sigma);
}

bool ScoreMlp::operator==(const ScoreMlp& other) const {
  if (scaling_ != other.scaling_ || layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight.rows() != other.layers_[l].weight.rows() ||
        layers_[l].weight.cols() != other.layers_[l].weight.cols() ||
        layers_[l].weight != other.layers_[l].weight || layers_[l].bias != other.layers_[l].bias) {
      return false;
    }
  }
  return true;
}

ScoreEval mlp_score_eval(const ScoreMlp& mlp, const Vector& x, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("mlp_score_eval: sigma must be positive");
  const double var = sigma * sigma;
  const double c = mlp.output_factor(sigma);
  const auto d = x.size();
  ScoreEval out;
  out.tweedie_mean = x + var * c * mlp.raw_output(x, sigma);
  out.tweedie_jacobian = Matrix::Identity(d, d) + var * c * mlp.raw_input_jacobian(x, sigma);
  return out;
}

// --- oracle adapter ----------------------------------------------------------

MlpScoreOracle::MlpScoreOracle(ScoreMlp mlp, double sigma) : mlp_(std::move(mlp)), sigma_(sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("MlpScoreOracle: sigma must be positive");
}

Vector MlpScoreOracle::tweedie_mean(const Vector& x) const {
  return x + sigma_ * sigma_ * mlp_.score(x, sigma_);
}

MeanContraction MlpScoreOracle::mean_and_contract(const Vector& x, const CovectorFn& covector) const {
  const double k = sigma_ * sigma_ * mlp_.output_factor(sigma_);
  Vector mean;
  Vector v;
  auto [raw, vjp] = mlp_.raw_output_and_vjp(x, sigma_, [&](const Vector& out) {
    mean = x + k * out;
    v = covector(mean);
    return Vector(k * v);
  });
  (void)raw;
  return MeanContraction{std::move(mean), v, v + vjp};
}

// --- training ----------------------------------------------------------------

void DsmTrainConfig::validate() const {
  if (!(t_min > 0.0 && t_min < t_max)) {
    throw InvalidArgument("DsmTrainConfig: need 0 < t_min < t_max");
  }
  if (batch == 0) throw InvalidArgument("DsmTrainConfig: batch must be positive");
  if (!(lr_hi > 0.0 && lr_lo > 0.0)) throw InvalidArgument("DsmTrainConfig: learning rates must be positive");
}

DsmTrainResult dsm_train(const std::vector<Vector>& dataset, ScoreMlp mlp, const DsmTrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw InvalidArgument("dsm_train: empty dataset");
  const auto d = static_cast<Eigen::Index>(mlp.ambient_dim());
  for (const Vector& p : dataset) {
    if (p.size() != d) throw InvalidArgument("dsm_train: dataset dimension does not match network");
  }

  DsmTrainResult result;
  const std::size_t steps_per_epoch = (dataset.size() + cfg.batch - 1) / cfg.batch;
  const std::size_t total_steps = cfg.epochs * steps_per_epoch;
  auto& layers = mlp.layers();
  const std::size_t depth = layers.size();

  std::vector<DenseLayer> m1, m2;
  for (const DenseLayer& l : layers) {
    m1.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    m2.push_back(m1.back());
  }

  Rng rng = make_stream(cfg.seed, "dsm.train");
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::uniform_real_distribution<double> time(cfg.t_min, cfg.t_max);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto batch = static_cast<Eigen::Index>(cfg.batch);

  Matrix inputs(d + 1, batch);
  Matrix noise(d, batch);
  Vector sigmas(batch);
  std::vector<Matrix> pre(depth);
  std::vector<Matrix> act(depth);

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      for (Eigen::Index j = 0; j < batch; ++j) {
        const Vector& x0 = dataset[pick(rng)];
        const double sigma = time(rng);
        sigmas(j) = sigma;
        for (Eigen::Index i = 0; i < d; ++i) {
          const double z = normal(rng);
          noise(i, j) = z;
          inputs(i, j) = x0(i) + sigma * z;
        }
        inputs(d, j) = sigma;
      }

      act[0] = inputs;
      Matrix out;
      for (std::size_t l = 0; l < depth; ++l) {
        Matrix a = layers[l].weight * act[l];
        a.colwise() += layers[l].bias;
        if (l + 1 < depth) {
          act[l + 1] = relu(a);
          pre[l] = std::move(a);
        } else {
          out = std::move(a);
        }
      }

      // sigma^2 |c out + z / sigma|^2 == |sigma c out + z|^2 per sample.
      Vector gain(batch);
      for (Eigen::Index j = 0; j < batch; ++j) gain(j) = sigmas(j) * mlp.output_factor(sigmas(j));
      const Matrix residual = out * gain.asDiagonal() + noise;
      const double loss = residual.squaredNorm() / static_cast<double>(batch);
      if (!std::isfinite(loss) || loss > 1e6) {
        std::ostringstream msg;
        msg << "dsm_train: diverged at epoch " << epoch << " step " << step << " (batch loss " << loss
            << ")";
        throw NumericalError(msg.str());
      }
      epoch_loss += loss;

      Matrix grad = residual * (2.0 / static_cast<double>(batch)) * gain.asDiagonal();
      const double progress = total_steps > 1 ? static_cast<double>(step) / static_cast<double>(total_steps - 1) : 0.0;
      const double lr = cfg.lr_lo + 0.5 * (cfg.lr_hi - cfg.lr_lo) * (1.0 + std::cos(std::numbers::pi * progress));
      const double t = static_cast<double>(step + 1);
      const double corr1 = 1.0 - std::pow(cfg.beta1, t);
      const double corr2 = 1.0 - std::pow(cfg.beta2, t);
      for (std::size_t l = depth; l-- > 0;) {
        const Matrix gw = grad * act[l].transpose();
        const Vector gb = grad.rowwise().sum();
        if (l > 0) grad = (layers[l].weight.transpose() * grad).cwiseProduct(relu_mask(pre[l - 1]));

        m1[l].weight = cfg.beta1 * m1[l].weight + (1.0 - cfg.beta1) * gw;
        m2[l].weight = cfg.beta2 * m2[l].weight + (1.0 - cfg.beta2) * gw.cwiseAbs2();
        m1[l].bias = cfg.beta1 * m1[l].bias + (1.0 - cfg.beta1) * gb;
        m2[l].bias = cfg.beta2 * m2[l].bias + (1.0 - cfg.beta2) * gb.cwiseAbs2();
        layers[l].weight.array() -= lr * (m1[l].weight.array() / corr1) /
                                    ((m2[l].weight.array() / corr2).sqrt() + cfg.adam_eps);
        layers[l].bias.array() -= lr * (m1[l].bias.array() / corr1) /
                                  ((m2[l].bias.array() / corr2).sqrt() + cfg.adam_eps);
      }
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
  }
  result.mlp = std::move(mlp);
  return result;
}

// --- sampling ----------------------------------------------------------------

std::vector<Vector> ve_reverse_sample(const ScoreMlp& mlp, std::size_t count, std::size_t steps,
                                      std::uint64_t seed, double t_max, double t_min) {
  if (!(t_min >= 0.0 && t_min < t_max)) throw InvalidArgument("ve_reverse_sample: need 0 <= t_min < t_max");
  const auto d = static_cast<Eigen::Index>(mlp.ambient_dim());
  const auto n = static_cast<Eigen::Index>(count);
  Rng rng = make_stream(seed, "ve.sample");
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix state(d + 1, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < d; ++i) state(i, j) = t_max * normal(rng);

  const double h = steps > 0 ? (t_max - t_min) / static_cast<double>(steps) : 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    // Reverse time t_k = k h sees noise level sigma = t_max - t_k; drift
    // 2 sigma score h, diffusion sqrt(2 sigma h).
    const double sigma = t_max - static_cast<double>(k) * h;
    state.row(d).setConstant(sigma);
    const Matrix score = mlp.forward(state) * mlp.output_factor(sigma);
    const double diffusion = std::sqrt(2.0 * sigma * h);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < d; ++i)
        state(i, j) += 2.0 * sigma * score(i, j) * h + diffusion * normal(rng);
  }

  std::vector<Vector> out;
  out.reserve(count);
  for (Eigen::Index j = 0; j < n; ++j) out.push_back(state.col(j).head(d));
  return out;
}

}  // namespace msopt
