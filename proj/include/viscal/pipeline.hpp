#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "viscal/simulate.hpp"
#include "viscal/training.hpp"
#include "viscal/verification.hpp"

namespace viscal {

struct VerifyConfig {
  std::string reference = "raw";  // "raw" or "climatology"
  int n_boot = 2000;
  double mean_block_len = 0.0;  // <= 0 selects ceil(n^(1/3))
  int pit_bins = 10;
  double interval_level = 0.9;
  double ci_level = 0.95;
  double logs_pi = 0.01;
};

// Command-line overrides; every field beats the config file when set.
struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> model;
  std::optional<std::string> scheme;
};

// Strict parse: only the keys out, seed, jobs, model, scheme are accepted.
Overrides overrides_from_json(const nlohmann::json& j);

// One run configuration document, loaded from JSON. The sim, experiment, and
// verify blocks stay unparsed until a command needs them, so a config only
// has to carry the blocks its commands use.
struct RunConfig {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  int jobs = 0;  // 0 means all available cores
  nlohmann::json raw;
  Overrides overrides;
};

RunConfig load_run_config(const std::filesystem::path& config_path,
                          const Overrides& overrides);

SimConfig sim_config_of(const RunConfig& cfg);
ExperimentConfig experiment_config_of(const RunConfig& cfg);
VerifyConfig verify_config_of(const RunConfig& cfg);

// Subcommands. Each returns a process exit code: 0 success, 1 validation
// failure, 2 partial fit or prediction failures, 3 I/O failure. Failures of
// individual fit tasks do not abort a run; they are recorded and reflected
// in the exit code. A message is stored through `message` when nonzero.
int cmd_simulate(const RunConfig& cfg, std::string* message = nullptr);
int cmd_train(const RunConfig& cfg, std::string* message = nullptr);
int cmd_predict(const RunConfig& cfg, std::string* message = nullptr);
int cmd_verify(const RunConfig& cfg, std::string* message = nullptr);
int cmd_report(const RunConfig& cfg, std::string* message = nullptr);

// Loads the config, runs one subcommand by name, and translates every
// exception into the exit-code scheme above.
int dispatch_command(const std::string& name,
                     const std::filesystem::path& config_path,
                     const Overrides& overrides,
                     std::string* message = nullptr);

std::vector<ScoredCase> to_scored_cases(const std::vector<ResultRow>& rows);

}  // namespace viscal
