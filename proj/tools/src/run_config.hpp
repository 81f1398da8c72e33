#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ivcert/experiment.hpp"

namespace ivcert::cli {

using nlohmann::json;

/// Bad flags or config file contents (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fully resolved settings of one training run.
struct RunConfig {
  DataOptions data;
  RunSetup run;
};

/// Values given on the command line; unset fields keep the config-file or
/// dataset defaults.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> dataset;
  std::optional<std::string> data_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> data_seed;
  std::optional<double> eps;
  std::optional<double> eps_test;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> epochs;
  std::vector<std::size_t> hidden;
  std::optional<double> pretrain_target;
  std::optional<std::string> selection;
};

/// Reads a JSON object from disk; ConfigError on failure.
json read_json_file(const std::string& path);

/// Dataset defaults <- config file keys <- flags. Keys listed in `ignore`
/// are skipped (e.g. the sweep grid living in the same file).
RunConfig resolve(const Overrides& flags, const json& file = json::object(),
                  const std::vector<std::string>& ignore = {});

/// Round-trips through resolve(): the same object can be fed back via --config.
json to_json(const RunConfig& config);

}  // namespace ivcert::cli
