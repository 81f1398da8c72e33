#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace ivcert::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,  // IO, parse and other runtime failures
  kExitConfig = 2,   // bad flags or config
  kExitDiverged = 3, // training diverged without producing a model
  kExitOracle = 4,   // an oracle check failed
};

int cmd_gen_data(const Overrides& flags, const std::string& out);

int cmd_fetch_mnist(const Overrides& flags, const std::string& from_dir);

int cmd_train(const Overrides& flags, const std::string& out);

struct SweepOptions {
  std::vector<double> eps;
  std::vector<double> lr;
  std::vector<std::size_t> batch;
  std::vector<std::size_t> width;
  std::vector<double> pretrain;
  std::optional<std::size_t> seeds;
  unsigned jobs = 0;  // 0: hardware concurrency
  std::string out;
};

int cmd_sweep(const Overrides& flags, SweepOptions options);

struct CertifyOptions {
  std::string checkpoint;
  std::string split = "test";
  std::string data_csv;
  std::string out;
};

int cmd_certify(const Overrides& flags, const CertifyOptions& options);

struct OracleOptions {
  std::string run_dir;
  std::string checkpoint;
  std::string trace;
  std::size_t samples = 20;
  std::uint64_t seed = 0;
  double rel_slack = 1e-7;
  std::optional<std::size_t> corrupt_step;
  bool probe = true;
  bool finite_diff = true;
  std::string out;
};

int cmd_oracle(const Overrides& flags, const OracleOptions& options);

}  // namespace ivcert::cli
