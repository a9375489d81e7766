#pragma once

#include <json.hpp>
#include <vector>

#include "viscal/dataset.hpp"
#include "viscal/distribution.hpp"
#include "viscal/features.hpp"

namespace viscal {

// Proportional-odds model: P(Y <= y_k | x) = logistic(threshold_k + x.beta)
// for k below the top class, which always has cumulative probability one.
struct PolrParams {
  int n_classes = kNumClasses;
  std::vector<double> thresholds;    // n_classes - 1, strictly increasing
  std::vector<double> coefficients;  // per covariate; masked-out entries are 0
  std::vector<bool> active_mask;     // false once excluded by the sign rule
};

struct PolrFitConfig {
  // Covariate indices whose fitted coefficients must come out non-negative;
  // while any of them is negative, the most negative one is dropped from the
  // model and the rest is refit.
  std::vector<int> constrained_nonnegative;
  int max_iter = 5000;
  // Convergence is measured on the per-case mean likelihood, so the
  // tolerance means the same thing at every training-set size.
  double grad_tol = 1e-5;
  double armijo_c = 1e-4;
  double init_threshold_gap = 1e-4;
};

std::vector<double> polr_cdf(const PolrParams& p, const std::vector<double>& x);
std::vector<double> polr_pmf(const PolrParams& p, const std::vector<double>& x);

// Full-scale wrapper; requires n_classes == 84.
PredictiveDistribution polr_predict(const PolrParams& p, const FeatureVector& x);

// Optimization runs in coordinates where threshold order holds by
// construction: (t_1, log(t_2 - t_1), ..., log(t_{K-1} - t_{K-2}), then the
// active coefficients in ascending covariate order).
std::vector<double> polr_pack(const PolrParams& p);
PolrParams polr_unpack(const std::vector<double>& theta, int n_classes,
                       int n_covariates, const std::vector<bool>& active_mask);

struct PolrNllGrad {
  double nll;                 // total negative log-likelihood
  std::vector<double> grad;   // in the packed coordinates
};
PolrNllGrad polr_nll_grad(const PolrParams& p, const OrdinalData& data);

// Hessian of the total negative log-likelihood in the packed coordinates;
// the optimizer runs damped Newton steps on it.
Eigen::MatrixXd polr_nll_hessian(const PolrParams& p, const OrdinalData& data);

struct PolrFitResult {
  PolrParams params;
  double nll = 0.0;            // total, at the returned parameters
  double grad_inf_norm = 0.0;  // mean-likelihood scale
  int n_iterations = 0;        // summed over all refits
  int n_refits = 0;            // covariate exclusions performed
  // Optimum of the all-covariates model, reusable as a warm start for the
  // next fit on an overlapping window.
  std::vector<double> theta_full;
};

PolrFitResult fit_polr(const OrdinalData& data, const PolrFitConfig& cfg,
                       const std::vector<double>* warm_theta = nullptr);

nlohmann::json polr_params_to_json(const PolrParams& p);
PolrParams polr_params_from_json(const nlohmann::json& j);

}  // namespace viscal
