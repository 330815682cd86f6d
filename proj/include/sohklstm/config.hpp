#pragma once

#include <cstdint>
#include <string>

#include "sohklstm/model.hpp"

namespace sohklstm {

/// Flat run configuration. File keys and CLI flags share these names; flags
/// win over file values. Unknown keys are rejected.
struct RunConfig {
  std::string model = "klstm";  // lstm or klstm
  int hidden_size = 32;
  int window = 8;
  int degree = 3;
  int grid_inner = 8;
  int grid_outer = 8;
  int channels = 1;
  double lr = 0.001;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 10;      // early stop; 0 disables
  double lr_factor = 0.5;
  int lr_patience = 5;    // 0 disables LR reduction
  double min_lr = 1e-5;
  std::uint64_t seed = 42;
  double nominal_capacity = 0.0;  // 0: take it from the CSV header
  double grad_clip = 0.0;         // global gradient-norm clip; 0 disables
  std::string data;               // input CSV
  std::string out;                // primary output artifact path
};

/// Set one key from its string form. Throws ConfigError on unknown keys or
/// unparsable values.
void config_set(RunConfig& cfg, const std::string& key, const std::string& value);

/// `key = value` lines, '#' comments, blank lines ignored.
RunConfig load_config(const std::string& path);

/// Range-checks every field. Throws ConfigError naming the offending key.
void validate(const RunConfig& cfg);

ModelShape shape_from(const RunConfig& cfg);

}  // namespace sohklstm
