#include "viscal/viscal.h"

#include <cstring>
#include <exception>
#include <string>

#include <json.hpp>

#include "viscal/csv.hpp"
#include "viscal/errors.hpp"
#include "viscal/pipeline.hpp"
#include "viscal/training.hpp"

struct viscal_session {
  std::string last_error;
};

struct viscal_model {
  viscal::FittedModel fitted;
  int input_dim = 0;
};

namespace {

int run_stage(const char* name, viscal_session* s, const char* config_path,
              const char* overrides_json) {
  if (s == nullptr) return VISCAL_E_VALIDATION;
  s->last_error.clear();
  if (config_path == nullptr) {
    s->last_error = "config_path must not be NULL";
    return VISCAL_E_VALIDATION;
  }
  try {
    viscal::Overrides ov;
    if (overrides_json != nullptr && *overrides_json != '\0') {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(overrides_json);
      } catch (const nlohmann::json::parse_error& e) {
        s->last_error = std::string("overrides are not valid JSON: ") +
                        e.what();
        return VISCAL_E_VALIDATION;
      }
      ov = viscal::overrides_from_json(j);
    }
    return viscal::dispatch_command(name, config_path, ov, &s->last_error);
  } catch (const std::exception& e) {
    s->last_error = e.what();
    return VISCAL_E_VALIDATION;
  } catch (...) {
    s->last_error = "unknown error";
    return VISCAL_E_VALIDATION;
  }
}

int model_input_dim(const viscal::FittedModel& m) {
  if (m.kind == viscal::ModelKind::mlp) return m.mlp.arch.input_dim;
  return static_cast<int>(m.polr.coefficients.size());
}

}  // namespace

extern "C" {

const char* viscal_version(void) { return "1.0.0"; }

viscal_session* viscal_session_create(void) {
  try {
    return new viscal_session();
  } catch (...) {
    return nullptr;
  }
}

void viscal_session_destroy(viscal_session* s) { delete s; }

const char* viscal_last_error(const viscal_session* s) {
  if (s == nullptr) return "";
  return s->last_error.c_str();
}

int viscal_simulate(viscal_session* s, const char* config_path,
                    const char* overrides_json) {
  return run_stage("simulate", s, config_path, overrides_json);
}

int viscal_train(viscal_session* s, const char* config_path,
                 const char* overrides_json) {
  return run_stage("train", s, config_path, overrides_json);
}

int viscal_predict(viscal_session* s, const char* config_path,
                   const char* overrides_json) {
  return run_stage("predict", s, config_path, overrides_json);
}

int viscal_verify(viscal_session* s, const char* config_path,
                  const char* overrides_json) {
  return run_stage("verify", s, config_path, overrides_json);
}

int viscal_report(viscal_session* s, const char* config_path,
                  const char* overrides_json) {
  return run_stage("report", s, config_path, overrides_json);
}

viscal_model* viscal_model_load(viscal_session* s, const char* path) {
  if (s == nullptr) return nullptr;
  s->last_error.clear();
  if (path == nullptr) {
    s->last_error = "path must not be NULL";
    return nullptr;
  }
  try {
    const std::string text = viscal::read_file(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      s->last_error = std::string("parameter file is not valid JSON: ") +
                      e.what();
      return nullptr;
    }
    auto* m = new viscal_model();
    m->fitted = viscal::fitted_model_from_json(j);
    m->input_dim = model_input_dim(m->fitted);
    return m;
  } catch (const std::exception& e) {
    s->last_error = e.what();
    return nullptr;
  } catch (...) {
    s->last_error = "unknown error";
    return nullptr;
  }
}

void viscal_model_destroy(viscal_model* m) { delete m; }

int viscal_model_input_dim(const viscal_model* m) {
  if (m == nullptr) return -1;
  return m->input_dim;
}

int viscal_model_pmf(viscal_session* s, const viscal_model* m,
                     const double* features, size_t n, double* out84) {
  if (s == nullptr) return VISCAL_E_VALIDATION;
  s->last_error.clear();
  if (m == nullptr || features == nullptr || out84 == nullptr) {
    s->last_error = "model, features, and out84 must not be NULL";
    return VISCAL_E_VALIDATION;
  }
  if (static_cast<int>(n) != m->input_dim) {
    s->last_error = "feature vector length does not match the model";
    return VISCAL_E_VALIDATION;
  }
  try {
    const viscal::FeatureVector x(features, features + n);
    const viscal::PredictiveDistribution d = viscal::predict_with(m->fitted, x);
    std::memcpy(out84, d.pmf.data(), sizeof(double) * d.pmf.size());
    return VISCAL_OK;
  } catch (const viscal::ValidationError& e) {
    s->last_error = e.what();
    return VISCAL_E_VALIDATION;
  } catch (const std::exception& e) {
    s->last_error = e.what();
    return VISCAL_E_VALIDATION;
  } catch (...) {
    s->last_error = "unknown error";
    return VISCAL_E_VALIDATION;
  }
}

}  // extern "C"
