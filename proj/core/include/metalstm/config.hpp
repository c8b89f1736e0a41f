#pragma once

// Declarative run configuration (JSON). Unknown keys are rejected and the
// echo always materializes every default, so an echo reproduces the run.

#include <stdexcept>
#include <string>
#include <vector>

#include "metalstm/datagen.hpp"
#include "metalstm/metaopt.hpp"
#include "metalstm/model.hpp"

namespace metalstm {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OutputConfig {
  std::string checkpoint = "checkpoint.bin";
  std::string loss_log = "loss.log";

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  ModelShape model;
  std::vector<std::size_t> fc_sizes{128, 256};
  GenConfig generator;  // generator.n_in mirrors model.n_in
  TrainConfig training;
  OutputConfig output;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string dump_run_config(const RunConfig& config);

/// Canonical JSON for the generator settings alone (suite headers).
std::string dump_gen_config(const GenConfig& config);
GenConfig parse_gen_config(const std::string& json_text);

}  // namespace metalstm
