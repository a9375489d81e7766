#pragma once

#include <cstdint>
#include <json.hpp>
#include <vector>

#include "viscal/dataset.hpp"
#include "viscal/distribution.hpp"
#include "viscal/features.hpp"

namespace viscal {

// Feedforward classifier: logistic hidden layers, a normalized-exponential
// output layer over the visibility classes.
struct MlpArchitecture {
  int input_dim = 9;
  std::vector<int> hidden = {25, 25};
  int output_dim = kNumClasses;
};

struct MlpParams {
  MlpArchitecture arch;
  std::vector<Eigen::MatrixXd> weights;  // layer l maps dim l to dim l+1
  std::vector<Eigen::VectorXd> biases;
};

struct MlpTrainConfig {
  int max_epochs = 200;
  double learning_rate = 0.2;
  std::uint64_t seed = 0;
  double init_scale = 0.5;  // weights and biases start uniform in +-init_scale
};

void validate_architecture(const MlpArchitecture& arch);

// Seeded uniform initialization; the fill order (weights row by row, then the
// bias, layer by layer) is part of the determinism contract.
MlpParams mlp_init(const MlpArchitecture& arch, std::uint64_t seed,
                   double init_scale);

Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& x);

// Full-scale wrapper; requires output_dim == 84.
PredictiveDistribution mlp_predict(const MlpParams& p, const FeatureVector& x);

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

struct MlpLossGrad {
  double loss;  // mean cross-entropy over the batch
  MlpGradients grad;
};

MlpLossGrad mlp_loss_grad(const MlpParams& p, const OrdinalData& batch);

struct MlpTrainResult {
  MlpParams params;
  // loss_trace[0] is the loss at initialization, one entry per epoch after.
  std::vector<double> loss_trace;
};

// Full-batch gradient descent at a fixed rate; throws FitError naming the
// epoch if the loss leaves the real line.
MlpTrainResult train_mlp(const OrdinalData& data, const MlpArchitecture& arch,
                         const MlpTrainConfig& cfg);

nlohmann::json mlp_params_to_json(const MlpParams& p);
MlpParams mlp_params_from_json(const nlohmann::json& j);

}  // namespace viscal
