#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "viscal/viscal.h"

namespace {

struct CliOptions {
  std::string command;
  std::string config;
  std::string out;
  std::string model;
  std::string scheme;
  std::uint64_t seed = 0;
  int jobs = 0;
  bool has_out = false;
  bool has_seed = false;
  bool has_jobs = false;
  bool has_model = false;
  bool has_scheme = false;
};

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config, "Run configuration JSON file")
      ->required();
  cmd->add_option("--out", opt.out, "Override the output directory");
  cmd->add_option("--seed", opt.seed, "Override the master seed");
  cmd->add_option("--jobs", opt.jobs,
                  "Worker threads; 0 uses all available cores");
  cmd->add_option("--model", opt.model, "Override the model (polr or mlp)");
  cmd->add_option("--scheme", opt.scheme,
                  "Override the training scheme (local, semi_local, regional)");
}

std::string overrides_of(const CLI::App& cmd, const CliOptions& opt) {
  nlohmann::json j = nlohmann::json::object();
  if (cmd.count("--out") > 0) j["out"] = opt.out;
  if (cmd.count("--seed") > 0) j["seed"] = opt.seed;
  if (cmd.count("--jobs") > 0) j["jobs"] = opt.jobs;
  if (cmd.count("--model") > 0) j["model"] = opt.model;
  if (cmd.count("--scheme") > 0) j["scheme"] = opt.scheme;
  return j.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Visibility forecast calibration: simulate, train, predict, verify, "
      "and report on the 84-value reporting scale"};
  app.require_subcommand(1);

  CliOptions opt;
  const char* names[] = {"simulate", "train", "predict", "verify", "report"};
  const char* briefs[] = {
      "Generate a synthetic forecast/observation dataset",
      "Fit models over rolling training windows",
      "Write predictive distributions for the verification period",
      "Score predictions and write the report tables",
      "Write per-lead skill curve tables from an existing report"};
  for (std::size_t i = 0; i < 5; ++i) {
    CLI::App* cmd = app.add_subcommand(names[i], briefs[i]);
    add_common_flags(cmd, opt);
    cmd->callback([&opt, cmd, name = names[i]]() {
      opt.command = name;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const CLI::App* cmd = app.get_subcommands().front();
  const std::string overrides = overrides_of(*cmd, opt);

  viscal_session* session = viscal_session_create();
  if (session == nullptr) {
    std::cerr << "error: cannot create session" << std::endl;
    return 1;
  }
  int status = VISCAL_E_VALIDATION;
  if (opt.command == "simulate") {
    status = viscal_simulate(session, opt.config.c_str(), overrides.c_str());
  } else if (opt.command == "train") {
    status = viscal_train(session, opt.config.c_str(), overrides.c_str());
  } else if (opt.command == "predict") {
    status = viscal_predict(session, opt.config.c_str(), overrides.c_str());
  } else if (opt.command == "verify") {
    status = viscal_verify(session, opt.config.c_str(), overrides.c_str());
  } else if (opt.command == "report") {
    status = viscal_report(session, opt.config.c_str(), overrides.c_str());
  }
  if (status != VISCAL_OK) {
    const char* msg = viscal_last_error(session);
    if (msg != nullptr && *msg != '\0') {
      std::cerr << opt.command << ": " << msg << std::endl;
    } else {
      std::cerr << opt.command << ": failed with status " << status
                << std::endl;
    }
  }
  viscal_session_destroy(session);
  return status;
}
