#include "viscal/mlp.hpp"

#include <cmath>
#include <string>

#include "viscal/errors.hpp"
#include "viscal/rng.hpp"

namespace viscal {

namespace {

constexpr double kProbFloor = 1e-300;

std::vector<int> layer_dims(const MlpArchitecture& arch) {
  std::vector<int> dims;
  dims.push_back(arch.input_dim);
  dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
  dims.push_back(arch.output_dim);
  return dims;
}

void check_shapes(const MlpParams& p) {
  const std::vector<int> dims = layer_dims(p.arch);
  if (p.weights.size() + 1 != dims.size() || p.biases.size() + 1 != dims.size()) {
    throw ValidationError("layer count does not match the architecture");
  }
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (p.weights[l].rows() != dims[l + 1] || p.weights[l].cols() != dims[l] ||
        p.biases[l].size() != dims[l + 1]) {
      throw ValidationError("parameter shapes do not match the architecture");
    }
  }
}

// Row-wise softmax with the row maximum subtracted first, so exponentials
// never overflow.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double mx = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace

void validate_architecture(const MlpArchitecture& arch) {
  if (arch.input_dim < 1 || arch.output_dim < 2) {
    throw ValidationError("architecture needs inputs and at least 2 outputs");
  }
  for (const int h : arch.hidden) {
    if (h < 1) throw ValidationError("hidden layer sizes must be positive");
  }
}

MlpParams mlp_init(const MlpArchitecture& arch, std::uint64_t seed,
                   double init_scale) {
  validate_architecture(arch);
  Rng rng(seed);
  MlpParams p;
  p.arch = arch;
  const std::vector<int> dims = layer_dims(arch);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = rng.uniform(-init_scale, init_scale);
      }
    }
    Eigen::VectorXd b(dims[l + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) {
      b[r] = rng.uniform(-init_scale, init_scale);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& x) {
  check_shapes(p);
  if (x.size() != p.arch.input_dim) {
    throw ValidationError("input has " + std::to_string(x.size()) +
                          " components, network expects " +
                          std::to_string(p.arch.input_dim));
  }
  Eigen::VectorXd h = x;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    Eigen::VectorXd z = p.weights[l] * h + p.biases[l];
    if (l + 1 == p.weights.size()) {
      const double mx = z.maxCoeff();
      Eigen::VectorXd e = (z.array() - mx).exp();
      return e / e.sum();
    }
    h = (1.0 / (1.0 + (-z.array()).exp())).matrix();
  }
  return h;  // unreachable: the loop always returns at the output layer
}

PredictiveDistribution mlp_predict(const MlpParams& p, const FeatureVector& x) {
  if (p.arch.output_dim != kNumClasses) {
    throw ValidationError("network covers " +
                          std::to_string(p.arch.output_dim) +
                          " classes, expected the full reporting scale");
  }
  const Eigen::VectorXd xv =
      Eigen::Map<const Eigen::VectorXd>(x.data(),
                                        static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd probs = mlp_forward(p, xv);
  PredictiveDistribution f;
  for (int k = 0; k < kNumClasses; ++k) {
    f.pmf[static_cast<std::size_t>(k)] = probs[k];
  }
  return f;
}

MlpLossGrad mlp_loss_grad(const MlpParams& p, const OrdinalData& batch) {
  check_shapes(p);
  validate_dataset(batch);
  if (batch.x.cols() != p.arch.input_dim) {
    throw ValidationError("batch has " + std::to_string(batch.x.cols()) +
                          " covariates, network expects " +
                          std::to_string(p.arch.input_dim));
  }
  if (batch.n_classes != p.arch.output_dim) {
    throw ValidationError("batch class count does not match the network");
  }
  const Eigen::Index n = batch.x.rows();
  const std::size_t n_layers = p.weights.size();

  // Forward pass over the whole batch; activations are kept per layer.
  std::vector<Eigen::MatrixXd> acts;  // acts[0] = inputs, row per case
  acts.reserve(n_layers + 1);
  acts.push_back(batch.x);
  for (std::size_t l = 0; l + 1 < n_layers; ++l) {
    Eigen::MatrixXd z =
        (acts[l] * p.weights[l].transpose()).rowwise() +
        p.biases[l].transpose();
    acts.push_back((1.0 / (1.0 + (-z.array()).exp())).matrix());
  }
  Eigen::MatrixXd logits =
      (acts[n_layers - 1] * p.weights[n_layers - 1].transpose()).rowwise() +
      p.biases[n_layers - 1].transpose();
  const Eigen::MatrixXd probs = softmax_rows(logits);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int yi = batch.y[static_cast<std::size_t>(i)] - 1;
    loss -= std::log(std::max(probs(i, yi), kProbFloor));
  }
  loss /= static_cast<double>(n);

  // Backward pass: delta starts as (probs - onehot)/n at the output.
  MlpLossGrad out;
  out.loss = loss;
  out.grad.weights.resize(n_layers);
  out.grad.biases.resize(n_layers);
  Eigen::MatrixXd delta = probs;
  for (Eigen::Index i = 0; i < n; ++i) {
    delta(i, batch.y[static_cast<std::size_t>(i)] - 1) -= 1.0;
  }
  delta /= static_cast<double>(n);
  for (std::size_t l = n_layers; l-- > 0;) {
    out.grad.weights[l] = delta.transpose() * acts[l];
    out.grad.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      const Eigen::MatrixXd back = delta * p.weights[l];
      // Logistic derivative expressed through the stored activation.
      delta = (back.array() * acts[l].array() * (1.0 - acts[l].array()))
                  .matrix();
    }
  }
  return out;
}

MlpTrainResult train_mlp(const OrdinalData& data, const MlpArchitecture& arch,
                         const MlpTrainConfig& cfg) {
  validate_dataset(data);
  if (cfg.max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
  if (!(cfg.learning_rate > 0)) {
    throw ValidationError("learning_rate must be positive");
  }
  MlpTrainResult result;
  result.params = mlp_init(arch, cfg.seed, cfg.init_scale);
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.max_epochs) + 1);
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    MlpLossGrad lg = mlp_loss_grad(result.params, data);
    if (!std::isfinite(lg.loss)) {
      throw FitError("training diverged at epoch " + std::to_string(epoch));
    }
    result.loss_trace.push_back(lg.loss);
    for (std::size_t l = 0; l < result.params.weights.size(); ++l) {
      result.params.weights[l] -= cfg.learning_rate * lg.grad.weights[l];
      result.params.biases[l] -= cfg.learning_rate * lg.grad.biases[l];
    }
  }
  const MlpLossGrad final_lg = mlp_loss_grad(result.params, data);
  if (!std::isfinite(final_lg.loss)) {
    throw FitError("training diverged at epoch " +
                   std::to_string(cfg.max_epochs));
  }
  result.loss_trace.push_back(final_lg.loss);
  return result;
}

nlohmann::json mlp_params_to_json(const MlpParams& p) {
  nlohmann::json j;
  j["format"] = "mlp-params/1";
  j["input_dim"] = p.arch.input_dim;
  j["hidden"] = p.arch.hidden;
  j["output_dim"] = p.arch.output_dim;
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    nlohmann::json layer;
    std::vector<double> w(static_cast<std::size_t>(p.weights[l].size()));
    // Row-major flattening, row per output unit.
    std::size_t pos = 0;
    for (Eigen::Index r = 0; r < p.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights[l].cols(); ++c) {
        w[pos++] = p.weights[l](r, c);
      }
    }
    layer["weights"] = w;
    layer["bias"] = std::vector<double>(
        p.biases[l].data(), p.biases[l].data() + p.biases[l].size());
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  return j;
}

MlpParams mlp_params_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "mlp-params/1") {
    throw ValidationError("unsupported parameter format");
  }
  MlpParams p;
  p.arch.input_dim = j.at("input_dim").get<int>();
  p.arch.hidden = j.at("hidden").get<std::vector<int>>();
  p.arch.output_dim = j.at("output_dim").get<int>();
  validate_architecture(p.arch);
  const std::vector<int> dims = layer_dims(p.arch);
  const auto& layers = j.at("layers");
  if (layers.size() + 1 != dims.size()) {
    throw ValidationError("layer count does not match the architecture");
  }
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto w = layers[l].at("weights").get<std::vector<double>>();
    const auto b = layers[l].at("bias").get<std::vector<double>>();
    const auto rows = static_cast<std::size_t>(dims[l + 1]);
    const auto cols = static_cast<std::size_t>(dims[l]);
    if (w.size() != rows * cols || b.size() != rows) {
      throw ValidationError("parameter document is inconsistent");
    }
    Eigen::MatrixXd wm(dims[l + 1], dims[l]);
    std::size_t pos = 0;
    for (Eigen::Index r = 0; r < wm.rows(); ++r) {
      for (Eigen::Index c = 0; c < wm.cols(); ++c) wm(r, c) = w[pos++];
    }
    p.weights.push_back(std::move(wm));
    p.biases.push_back(Eigen::Map<const Eigen::VectorXd>(
        b.data(), static_cast<Eigen::Index>(b.size())));
  }
  check_shapes(p);
  return p;
}

}  // namespace viscal
