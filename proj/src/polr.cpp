#include "viscal/polr.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "viscal/errors.hpp"

namespace viscal {

void validate_dataset(const OrdinalData& data) {
  const auto n = static_cast<std::size_t>(data.x.rows());
  if (n == 0) throw ValidationError("dataset is empty");
  if (data.y.size() != n) {
    throw ValidationError("label count does not match the design matrix");
  }
  if (data.n_classes < 2) throw ValidationError("need at least 2 classes");
  for (const int label : data.y) {
    if (label < 1 || label > data.n_classes) {
      throw ValidationError("label " + std::to_string(label) +
                            " outside 1.." + std::to_string(data.n_classes));
    }
  }
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(sigmoid(z)) without underflow at any z.
double log_sigmoid(double z) {
  if (z >= 0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

std::vector<double> thresholds_from_theta(const double* theta, int K) {
  std::vector<double> alpha(static_cast<std::size_t>(K - 1));
  alpha[0] = theta[0];
  for (int k = 1; k < K - 1; ++k) {
    alpha[static_cast<std::size_t>(k)] =
        alpha[static_cast<std::size_t>(k - 1)] + std::exp(theta[k]);
  }
  return alpha;
}

// Negative log-likelihood and gradient in the packed coordinates, for the
// reduced design matrix of active covariates only. `scale` is 1 for totals
// and 1/n for the per-case mean the optimizer runs on.
struct NllWork {
  double nll;
  Eigen::VectorXd grad;
};

// When hess is non-null it receives the (K-1+m)x(K-1+m) Hessian in the same
// packed coordinates, assembled from the tridiagonal threshold block, the
// threshold-covariate cross block, and the covariate block, then pushed
// through the cumulative-gap map.
NllWork nll_grad_packed(const Eigen::VectorXd& theta,
                        const Eigen::MatrixXd& x_active,
                        const std::vector<int>& y, int K, double scale,
                        Eigen::MatrixXd* hess = nullptr) {
  const int n = static_cast<int>(x_active.rows());
  const int m_act = static_cast<int>(x_active.cols());
  const std::vector<double> alpha = thresholds_from_theta(theta.data(), K);
  const Eigen::VectorXd beta = theta.tail(m_act);
  const Eigen::VectorXd xb = m_act > 0
                                 ? Eigen::VectorXd(x_active * beta)
                                 : Eigen::VectorXd::Zero(n);

  double nll = 0.0;
  Eigen::VectorXd g_alpha = Eigen::VectorXd::Zero(K - 1);
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(n);

  const int T = K - 1;
  Eigen::VectorXd dia, off, wgt;
  Eigen::MatrixXd cross;
  if (hess != nullptr) {
    dia = Eigen::VectorXd::Zero(T);
    off = Eigen::VectorXd::Zero(T - 1);
    wgt = Eigen::VectorXd::Zero(n);
    cross = Eigen::MatrixXd::Zero(T, m_act);
  }

  for (int i = 0; i < n; ++i) {
    const int yi = y[static_cast<std::size_t>(i)] - 1;  // 0-based class
    const double s = xb[i];
    // Everything runs in log space so the objective stays exact (and honestly
    // infinite at zero probability) instead of flattening out at a floor the
    // gradient knows nothing about.
    double lp;
    // Second derivatives of -log p with respect to the two linear
    // predictors bounding the observed class.
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    if (yi == 0) {
      const double b = alpha[0] + s;
      lp = log_sigmoid(b);
      const double hb = sigmoid(-b);  // sigmoid'(b) / sigmoid(b), exactly
      g_alpha[0] += -hb;
      coef[i] = -hb;
      sbb = hb * (1.0 - hb);
    } else if (yi == K - 1) {
      const double a = alpha[static_cast<std::size_t>(K - 2)] + s;
      lp = log_sigmoid(-a);
      const double ga = sigmoid(a);  // sigmoid'(a) / (1 - sigmoid(a))
      g_alpha[K - 2] += ga;
      coef[i] = ga;
      saa = ga * (1.0 - ga);
    } else {
      const double a = alpha[static_cast<std::size_t>(yi - 1)] + s;
      const double b = alpha[static_cast<std::size_t>(yi)] + s;
      // p = sigmoid(b) * sigmoid(-a) * (1 - exp(a-b)); every factor is
      // positive because b > a, and the gradient ratios sigmoid'(a)/p and
      // sigmoid'(b)/p reduce to bounded sigmoid quotients over the last
      // factor.
      const double denom = -std::expm1(a - b);
      lp = log_sigmoid(b) + log_sigmoid(-a) + std::log(denom);
      const double ga = std::exp(log_sigmoid(a) - log_sigmoid(b)) / denom;
      const double hb = std::exp(log_sigmoid(-b) - log_sigmoid(-a)) / denom;
      g_alpha[yi] += -hb;
      g_alpha[yi - 1] += ga;
      coef[i] = ga - hb;
      const double sma = sigmoid(-a);
      const double sb = sigmoid(b);
      saa = ga * (2.0 * sma - 1.0) + ga * ga;
      sbb = hb * hb - hb * (1.0 - 2.0 * sb);
      sab = -ga * hb;
    }
    nll -= lp;

    if (hess != nullptr) {
      if (yi >= 1) {
        dia[yi - 1] += saa;
        if (m_act > 0) cross.row(yi - 1) += (saa + sab) * x_active.row(i);
      }
      if (yi <= K - 2) {
        dia[yi] += sbb;
        if (m_act > 0) cross.row(yi) += (sbb + sab) * x_active.row(i);
      }
      if (yi >= 1 && yi <= K - 2) off[yi - 1] += sab;
      wgt[i] = saa + 2.0 * sab + sbb;
    }
  }

  Eigen::VectorXd grad(theta.size());
  // Chain rule through the cumulative-gap construction: the first coordinate
  // moves every threshold, gap j moves thresholds j+1 and later.
  double suffix = 0.0;
  for (int k = K - 2; k >= 1; --k) {
    suffix += g_alpha[k];
    grad[k] = std::exp(theta[k]) * suffix;
  }
  grad[0] = suffix + g_alpha[0];
  if (m_act > 0) grad.tail(m_act) = x_active.transpose() * coef;

  if (hess != nullptr) {
    Eigen::VectorXd eth(T);
    eth[0] = 1.0;  // the first coordinate is a threshold, not a log gap
    for (int j = 1; j < T; ++j) eth[j] = std::exp(theta[j]);
    const auto row_sum = [&](int r) {
      double v = dia[r];
      if (r >= 1) v += off[r - 1];
      if (r <= T - 2) v += off[r];
      return v;
    };
    // b = tridiagonal threshold block times the Jacobian of the gap map;
    // column j only involves threshold columns j and later.
    Eigen::MatrixXd b(T, T);
    for (int r = 0; r < T; ++r) b(r, 0) = row_sum(r);
    for (int j = 1; j < T; ++j) {
      for (int r = 0; r < T; ++r) {
        double v;
        if (r < j - 1) {
          v = 0.0;
        } else if (r == j - 1) {
          v = off[j - 1];
        } else if (r == j) {
          v = dia[j] + (j <= T - 2 ? off[j] : 0.0);
        } else {
          v = row_sum(r);
        }
        b(r, j) = eth[j] * v;
      }
    }
    Eigen::MatrixXd& h = *hess;
    h.setZero(T + m_act, T + m_act);
    // Left-multiplying by the transposed Jacobian is a suffix sum scaled by
    // the gap derivative, exactly like the gradient chain rule above.
    for (int j = 0; j < T; ++j) {
      double suf = 0.0;
      for (int i = T - 1; i >= 1; --i) {
        suf += b(i, j);
        h(i, j) = eth[i] * suf;
      }
      h(0, j) = suf + b(0, j);
    }
    for (int c = 0; c < m_act; ++c) {
      double suf = 0.0;
      for (int i = T - 1; i >= 1; --i) {
        suf += cross(i, c);
        h(i, T + c) = eth[i] * suf;
      }
      h(0, T + c) = suf + cross(0, c);
      for (int i = 0; i < T; ++i) h(T + c, i) = h(i, T + c);
    }
    if (m_act > 0) {
      h.bottomRightCorner(m_act, m_act) =
          x_active.transpose() * wgt.asDiagonal() * x_active;
    }
    // Curvature of the gap map itself: diagonal in the gap coordinates and
    // equal to the gradient there.
    double gsuf = 0.0;
    for (int k = T - 1; k >= 1; --k) {
      gsuf += g_alpha[k];
      h(k, k) += eth[k] * gsuf;
    }
    h *= scale;
  }

  grad *= scale;
  return {nll * scale, grad};
}

struct NewtonOutcome {
  Eigen::VectorXd x;
  double f = 0.0;
  double grad_inf = 0.0;
  int iterations = 0;
  bool converged = false;
};

using Objective =
    std::function<NllWork(const Eigen::VectorXd&, Eigen::MatrixXd*)>;

// Damped Newton descent with backtracking. The exact Hessian keeps the very
// ill-conditioned gap coordinates moving (their curvature vanishes together
// with their gradient as unobserved-class thresholds drift outward), where
// first-order methods stall far from the tolerance.
// Log-gap coordinates are kept inside a box where exp() of them, and
// products of two such exponentials, stay finite; beyond it the packed
// gradient would turn into inf * 0 = NaN on wild interim Newton steps.
// Optima always sit far inside (the outward gradient pull dies off as the
// sigmoids saturate), so the clamp never binds at convergence. The first
// threshold and the coefficients are never exponentiated and stay free.
constexpr double kLogGapBox = 300.0;

void clamp_log_gaps(Eigen::VectorXd& x, int n_threshold_coords) {
  for (int j = 1; j < n_threshold_coords; ++j) {
    x[j] = std::clamp(x[j], -kLogGapBox, kLogGapBox);
  }
}

NewtonOutcome newton_minimize(const Objective& objective, Eigen::VectorXd x,
                              int n_threshold_coords,
                              const PolrFitConfig& cfg) {
  clamp_log_gaps(x, n_threshold_coords);
  Eigen::MatrixXd hess;
  NllWork cur = objective(x, &hess);
  NewtonOutcome out;
  double lambda = 0.0;

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    const double gnorm = cur.grad.lpNorm<Eigen::Infinity>();
    if (gnorm <= cfg.grad_tol) {
      out.converged = true;
      break;
    }

    // Levenberg-style damping: escalate until the solve gives a finite
    // descent direction.
    Eigen::VectorXd d;
    bool have_direction = false;
    double lam = lambda;
    for (int attempt = 0; attempt < 40 && !have_direction; ++attempt) {
      Eigen::MatrixXd damped = hess;
      if (lam > 0.0) damped.diagonal().array() += lam;
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() == Eigen::Success) {
        d = ldlt.solve(-cur.grad);
        if (d.allFinite() && cur.grad.dot(d) < 0.0) {
          have_direction = true;
          break;
        }
      }
      if (lam > 1e12) break;
      lam = lam == 0.0 ? 1e-8 : lam * 10.0;
    }
    if (!have_direction) {
      d = -cur.grad;
      lam = lambda;
    }
    lambda = lam;

    const double gd = cur.grad.dot(d);
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + t * d;
      clamp_log_gaps(x_new, n_threshold_coords);
      if (x_new == x) break;  // numerically a no-op, cannot make progress
      const NllWork trial = objective(x_new, nullptr);
      if (std::isfinite(trial.nll) &&
          trial.nll <= cur.nll + cfg.armijo_c * t * gd) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    ++out.iterations;
    if (!accepted) {
      if (lambda < 1e12) {
        // Retry the same iterate with a heavier damping of the model.
        lambda = lambda == 0.0 ? 1e-4 : lambda * 100.0;
        continue;
      }
      break;
    }

    x = std::move(x_new);
    cur = objective(x, &hess);
    lambda *= 0.25;
    if (lambda < 1e-10) lambda = 0.0;
  }

  out.x = std::move(x);
  out.f = cur.nll;
  out.grad_inf = cur.grad.lpNorm<Eigen::Infinity>();
  if (out.grad_inf <= cfg.grad_tol) out.converged = true;
  return out;
}

// Threshold start values from cumulative class frequencies, on the logit
// scale with a 1/(2n) continuity correction so empty tails stay finite.
std::vector<double> empirical_logit_thresholds(const std::vector<int>& y,
                                               int K, double min_gap) {
  const double n = static_cast<double>(y.size());
  std::vector<double> counts(static_cast<std::size_t>(K), 0.0);
  for (const int label : y) ++counts[static_cast<std::size_t>(label - 1)];
  std::vector<double> alpha(static_cast<std::size_t>(K - 1));
  double cum = 0.0;
  for (int k = 0; k < K - 1; ++k) {
    cum += counts[static_cast<std::size_t>(k)];
    const double q =
        std::clamp(cum / n, 1.0 / (2.0 * n), 1.0 - 1.0 / (2.0 * n));
    alpha[static_cast<std::size_t>(k)] =
        std::clamp(std::log(q / (1.0 - q)), -15.0, 15.0);
  }
  for (int k = 1; k < K - 1; ++k) {
    auto& cur_a = alpha[static_cast<std::size_t>(k)];
    const double prev = alpha[static_cast<std::size_t>(k - 1)];
    if (cur_a < prev + min_gap) cur_a = prev + min_gap;
  }
  return alpha;
}

Eigen::MatrixXd active_columns(const Eigen::MatrixXd& x,
                               const std::vector<bool>& mask) {
  std::size_t m_act = 0;
  for (const bool b : mask) m_act += b ? 1 : 0;
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(m_act));
  Eigen::Index col = 0;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j]) out.col(col++) = x.col(static_cast<Eigen::Index>(j));
  }
  return out;
}

void check_covariate_dim(const PolrParams& p, std::size_t dim) {
  if (p.thresholds.size() + 1 != static_cast<std::size_t>(p.n_classes)) {
    throw ValidationError("threshold count does not match the class count");
  }
  if (p.coefficients.size() != dim) {
    throw ValidationError("feature vector has " + std::to_string(dim) +
                          " components, model expects " +
                          std::to_string(p.coefficients.size()));
  }
}

}  // namespace

std::vector<double> polr_cdf(const PolrParams& p,
                             const std::vector<double>& x) {
  check_covariate_dim(p, x.size());
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += p.coefficients[j] * x[j];
  std::vector<double> cdf(static_cast<std::size_t>(p.n_classes));
  for (int k = 0; k < p.n_classes - 1; ++k) {
    cdf[static_cast<std::size_t>(k)] =
        sigmoid(p.thresholds[static_cast<std::size_t>(k)] + s);
  }
  cdf[static_cast<std::size_t>(p.n_classes - 1)] = 1.0;
  return cdf;
}

std::vector<double> polr_pmf(const PolrParams& p,
                             const std::vector<double>& x) {
  check_covariate_dim(p, x.size());
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += p.coefficients[j] * x[j];
  const int K = p.n_classes;
  std::vector<double> pmf(static_cast<std::size_t>(K));
  pmf[0] = sigmoid(p.thresholds[0] + s);
  for (int k = 1; k < K - 1; ++k) {
    const double a = p.thresholds[static_cast<std::size_t>(k - 1)] + s;
    const double b = p.thresholds[static_cast<std::size_t>(k)] + s;
    pmf[static_cast<std::size_t>(k)] =
        sigmoid(b) * sigmoid(-a) * (-std::expm1(a - b));
  }
  pmf[static_cast<std::size_t>(K - 1)] =
      sigmoid(-(p.thresholds[static_cast<std::size_t>(K - 2)] + s));
  return pmf;
}

PredictiveDistribution polr_predict(const PolrParams& p,
                                    const FeatureVector& x) {
  if (p.n_classes != kNumClasses) {
    throw ValidationError("model covers " + std::to_string(p.n_classes) +
                          " classes, expected the full reporting scale");
  }
  const std::vector<double> pmf = polr_pmf(p, x);
  PredictiveDistribution f;
  std::copy(pmf.begin(), pmf.end(), f.pmf.begin());
  return f;
}

std::vector<double> polr_pack(const PolrParams& p) {
  std::vector<double> theta;
  theta.reserve(p.thresholds.size() + p.coefficients.size());
  theta.push_back(p.thresholds[0]);
  for (std::size_t k = 1; k < p.thresholds.size(); ++k) {
    const double gap = p.thresholds[k] - p.thresholds[k - 1];
    if (!(gap > 0)) {
      throw ValidationError("thresholds must be strictly increasing");
    }
    theta.push_back(std::log(gap));
  }
  for (std::size_t j = 0; j < p.coefficients.size(); ++j) {
    if (p.active_mask[j]) theta.push_back(p.coefficients[j]);
  }
  return theta;
}

PolrParams polr_unpack(const std::vector<double>& theta, int n_classes,
                       int n_covariates, const std::vector<bool>& active_mask) {
  PolrParams p;
  p.n_classes = n_classes;
  p.thresholds = thresholds_from_theta(theta.data(), n_classes);
  p.coefficients.assign(static_cast<std::size_t>(n_covariates), 0.0);
  p.active_mask = active_mask;
  std::size_t pos = static_cast<std::size_t>(n_classes - 1);
  for (int j = 0; j < n_covariates; ++j) {
    if (active_mask[static_cast<std::size_t>(j)]) {
      p.coefficients[static_cast<std::size_t>(j)] = theta[pos++];
    }
  }
  if (pos != theta.size()) {
    throw ValidationError("packed parameter length does not match the mask");
  }
  return p;
}

PolrNllGrad polr_nll_grad(const PolrParams& p, const OrdinalData& data) {
  validate_dataset(data);
  if (static_cast<std::size_t>(data.x.cols()) != p.coefficients.size()) {
    throw ValidationError("covariate count mismatch between data and model");
  }
  if (data.n_classes != p.n_classes) {
    throw ValidationError("class count mismatch between data and model");
  }
  const std::vector<double> theta_v = polr_pack(p);
  const Eigen::VectorXd theta =
      Eigen::Map<const Eigen::VectorXd>(theta_v.data(),
                                        static_cast<Eigen::Index>(theta_v.size()));
  const Eigen::MatrixXd x_act = active_columns(data.x, p.active_mask);
  const NllWork w = nll_grad_packed(theta, x_act, data.y, data.n_classes, 1.0);
  return {w.nll, std::vector<double>(w.grad.data(), w.grad.data() + w.grad.size())};
}

Eigen::MatrixXd polr_nll_hessian(const PolrParams& p, const OrdinalData& data) {
  validate_dataset(data);
  if (static_cast<std::size_t>(data.x.cols()) != p.coefficients.size()) {
    throw ValidationError("covariate count mismatch between data and model");
  }
  if (data.n_classes != p.n_classes) {
    throw ValidationError("class count mismatch between data and model");
  }
  const std::vector<double> theta_v = polr_pack(p);
  const Eigen::VectorXd theta =
      Eigen::Map<const Eigen::VectorXd>(theta_v.data(),
                                        static_cast<Eigen::Index>(theta_v.size()));
  const Eigen::MatrixXd x_act = active_columns(data.x, p.active_mask);
  Eigen::MatrixXd hess;
  nll_grad_packed(theta, x_act, data.y, data.n_classes, 1.0, &hess);
  return hess;
}

PolrFitResult fit_polr(const OrdinalData& data, const PolrFitConfig& cfg,
                       const std::vector<double>* warm_theta) {
  validate_dataset(data);
  const int K = data.n_classes;
  const int M = static_cast<int>(data.x.cols());
  const int n = static_cast<int>(data.x.rows());
  {
    const int first = data.y.front();
    bool two_classes = false;
    for (const int label : data.y) {
      if (label != first) {
        two_classes = true;
        break;
      }
    }
    if (!two_classes) {
      throw ValidationError("all observations fall in one class; "
                            "the model is not identifiable");
    }
  }
  for (const int j : cfg.constrained_nonnegative) {
    if (j < 0 || j >= M) {
      throw ValidationError("constrained covariate index " +
                            std::to_string(j) + " outside 0.." +
                            std::to_string(M - 1));
    }
  }

  const double scale = 1.0 / static_cast<double>(n);
  std::vector<bool> mask(static_cast<std::size_t>(M), true);

  // Start from the previous optimum when its dimension matches, otherwise
  // from empirical cumulative logits with zero coefficients.
  Eigen::VectorXd theta(K - 1 + M);
  if (warm_theta != nullptr &&
      static_cast<int>(warm_theta->size()) == K - 1 + M) {
    theta = Eigen::Map<const Eigen::VectorXd>(
        warm_theta->data(), static_cast<Eigen::Index>(warm_theta->size()));
  } else {
    const std::vector<double> alpha =
        empirical_logit_thresholds(data.y, K, cfg.init_threshold_gap);
    theta[0] = alpha[0];
    for (int k = 1; k < K - 1; ++k) {
      theta[k] = std::log(alpha[static_cast<std::size_t>(k)] -
                          alpha[static_cast<std::size_t>(k - 1)]);
    }
    theta.tail(M).setZero();
  }

  PolrFitResult result;
  Eigen::MatrixXd x_act = data.x;

  while (true) {
    const Objective objective = [&](const Eigen::VectorXd& th,
                                    Eigen::MatrixXd* hess) {
      return nll_grad_packed(th, x_act, data.y, K, scale, hess);
    };
    if (!std::isfinite(objective(theta, nullptr).nll)) {
      // A warm start (or the survivor of a covariate exclusion) can sit in a
      // zero-probability region; restart from the data-driven thresholds.
      const std::vector<double> alpha =
          empirical_logit_thresholds(data.y, K, cfg.init_threshold_gap);
      theta[0] = alpha[0];
      for (int k = 1; k < K - 1; ++k) {
        theta[k] = std::log(alpha[static_cast<std::size_t>(k)] -
                            alpha[static_cast<std::size_t>(k - 1)]);
      }
      theta.tail(theta.size() - (K - 1)).setZero();
    }
    NewtonOutcome opt = newton_minimize(objective, theta, K - 1, cfg);
    result.n_iterations += opt.iterations;
    result.grad_inf_norm = opt.grad_inf;
    if (!opt.converged) {
      throw FitError("optimizer stopped after " +
                     std::to_string(result.n_iterations) +
                     " iterations with gradient norm " +
                     std::to_string(opt.grad_inf));
    }
    theta = std::move(opt.x);
    if (result.theta_full.empty()) {
      result.theta_full.assign(theta.data(), theta.data() + theta.size());
    }

    PolrParams params = polr_unpack(
        std::vector<double>(theta.data(), theta.data() + theta.size()), K, M,
        mask);

    // Most negative constrained coefficient, if any, leaves the model.
    int worst = -1;
    double worst_value = 0.0;
    for (const int j : cfg.constrained_nonnegative) {
      const auto ju = static_cast<std::size_t>(j);
      if (mask[ju] && params.coefficients[ju] < worst_value) {
        worst_value = params.coefficients[ju];
        worst = j;
      }
    }
    if (worst < 0) {
      result.params = std::move(params);
      result.nll = opt.f / scale;
      return result;
    }

    // Drop the coordinate from both the mask and the packed vector, keeping
    // the rest of the optimum as the warm start for the refit.
    std::size_t packed_pos = static_cast<std::size_t>(K - 1);
    for (int j = 0; j < worst; ++j) {
      if (mask[static_cast<std::size_t>(j)]) ++packed_pos;
    }
    Eigen::VectorXd reduced(theta.size() - 1);
    reduced.head(static_cast<Eigen::Index>(packed_pos)) =
        theta.head(static_cast<Eigen::Index>(packed_pos));
    reduced.tail(reduced.size() - static_cast<Eigen::Index>(packed_pos)) =
        theta.tail(theta.size() - static_cast<Eigen::Index>(packed_pos) - 1);
    theta = std::move(reduced);
    mask[static_cast<std::size_t>(worst)] = false;
    x_act = active_columns(data.x, mask);
    ++result.n_refits;
  }
}

nlohmann::json polr_params_to_json(const PolrParams& p) {
  nlohmann::json j;
  j["format"] = "polr-params/1";
  j["n_classes"] = p.n_classes;
  j["thresholds"] = p.thresholds;
  j["coefficients"] = p.coefficients;
  j["active_mask"] = std::vector<int>(p.active_mask.begin(),
                                      p.active_mask.end());
  return j;
}

PolrParams polr_params_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "polr-params/1") {
    throw ValidationError("unsupported parameter format");
  }
  PolrParams p;
  p.n_classes = j.at("n_classes").get<int>();
  p.thresholds = j.at("thresholds").get<std::vector<double>>();
  p.coefficients = j.at("coefficients").get<std::vector<double>>();
  const auto mask = j.at("active_mask").get<std::vector<int>>();
  p.active_mask.assign(mask.size(), true);
  for (std::size_t i = 0; i < mask.size(); ++i) p.active_mask[i] = mask[i] != 0;
  if (p.thresholds.size() + 1 != static_cast<std::size_t>(p.n_classes) ||
      p.coefficients.size() != p.active_mask.size()) {
    throw ValidationError("parameter document is inconsistent");
  }
  return p;
}

}  // namespace viscal
