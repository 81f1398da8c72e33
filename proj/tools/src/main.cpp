#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "ivcert/error.hpp"

using namespace ivcert::cli;

namespace {

// Flags shared by every command that resolves a run configuration.
void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option_function<std::string>("--config", [&o](const std::string& v) { o.config_path = v; },
                                        "JSON config file (see README for the schema)");
  cmd->add_option_function<std::string>("--dataset", [&o](const std::string& v) { o.dataset = v; },
                                        "two-moons or mnist17");
  cmd->add_option_function<std::string>("--data-dir", [&o](const std::string& v) { o.data_dir = v; },
                                        "dataset cache (default $IVCERT_DATA_DIR or ~/.cache/ivcert)");
  cmd->add_option_function<std::uint64_t>("--data-seed", [&o](const std::uint64_t& v) { o.data_seed = v; },
                                          "seed of dataset synthesis and splitting");
  cmd->add_option_function<std::uint64_t>("--seed", [&o](const std::uint64_t& v) { o.seed = v; },
                                          "training seed (initialization and batch order)");
  cmd->add_option_function<double>("--eps", [&o](const double& v) { o.eps = v; },
                                    "training perturbation radius; also sets --eps-test unless given");
  cmd->add_option_function<double>("--eps-test", [&o](const double& v) { o.eps_test = v; },
                                    "test-time perturbation radius");
  cmd->add_option_function<double>("--lr", [&o](const double& v) { o.lr = v; }, "learning rate");
  cmd->add_option_function<std::size_t>("--batch-size", [&o](const std::size_t& v) { o.batch_size = v; },
                                        "batch size");
  cmd->add_option_function<std::size_t>("--epochs", [&o](const std::size_t& v) { o.epochs = v; },
                                        "number of epochs");
  cmd->add_option("--hidden", o.hidden, "hidden layer widths, e.g. 20 or 32,32")->delimiter(',');
  cmd->add_option_function<double>("--pretrain-target", [&o](const double& v) { o.pretrain_target = v; },
                                    "pretrain on 100 clean samples up to this validation accuracy");
  cmd->add_option_function<std::string>("--selection", [&o](const std::string& v) { o.selection = v; },
                                        "model selection: best_validation or last");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified training and verification of MLPs with interval arithmetic"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ivcert 0.1.0");

  Overrides flags;
  std::string out;
  std::function<int()> run;

  auto* gen = app.add_subcommand("gen-data", "Generate or validate a dataset and print its summary");
  add_run_flags(gen, flags);
  gen->add_option("--out", out, "CSV output directory (Two-Moons)");
  gen->callback([&] { run = [&] { return cmd_gen_data(flags, out); }; });

  std::string from_dir;
  auto* fetch = app.add_subcommand("fetch-mnist", "Install and validate MNIST IDX files in the cache");
  fetch->add_option_function<std::string>("--data-dir", [&](const std::string& v) { flags.data_dir = v; },
                                          "dataset cache directory");
  fetch->add_option("--from-dir", from_dir, "directory holding the four uncompressed IDX files");
  fetch->callback([&] { run = [&] { return cmd_fetch_mnist(flags, from_dir); }; });

  auto* train = app.add_subcommand("train", "Certified training run; writes checkpoint, trace and metrics");
  add_run_flags(train, flags);
  train->add_option("--out", out, "output directory")->default_val("ivcert-run");
  train->callback([&] { run = [&] { return cmd_train(flags, out); }; });

  SweepOptions sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "Grid x seeds of training runs, aggregated to CSV");
  add_run_flags(sweep, flags);
  sweep->add_option("--eps-grid", sweep_opts.eps, "eps values (eps = eps-test)")->delimiter(',');
  sweep->add_option("--lr-grid", sweep_opts.lr, "learning rates")->delimiter(',');
  sweep->add_option("--batch-grid", sweep_opts.batch, "batch sizes")->delimiter(',');
  sweep->add_option("--width-grid", sweep_opts.width, "hidden layer widths")->delimiter(',');
  sweep->add_option("--pretrain-grid", sweep_opts.pretrain, "pretrain target accuracies")->delimiter(',');
  sweep->add_option_function<std::size_t>("--seeds", [&](const std::size_t& v) { sweep_opts.seeds = v; },
                                          "runs per grid cell (default 10), seeds seed..seed+n-1");
  sweep->add_option("--jobs", sweep_opts.jobs, "worker threads (default: all cores)");
  sweep->add_option("--out", sweep_opts.out, "output directory")->default_val("ivcert-sweep");
  sweep->callback([&] { run = [&] { return cmd_sweep(flags, sweep_opts); }; });

  CertifyOptions cert_opts;
  auto* certify = app.add_subcommand("certify", "Certify a dataset split against a checkpoint");
  certify->add_option("--checkpoint", cert_opts.checkpoint, "checkpoint.json")->required();
  certify->add_option_function<std::string>("--dataset", [&](const std::string& v) { flags.dataset = v; },
                                            "override the checkpoint's dataset");
  certify->add_option_function<std::string>("--data-dir", [&](const std::string& v) { flags.data_dir = v; },
                                            "dataset cache directory");
  certify->add_option_function<std::uint64_t>("--data-seed", [&](const std::uint64_t& v) { flags.data_seed = v; },
                                              "override the recorded data seed");
  certify->add_option_function<double>("--eps-test", [&](const double& v) { flags.eps_test = v; },
                                       "test-time radius (default: the checkpoint's)");
  certify->add_option_function<double>("--eps", [&](const double& v) { flags.eps = v; }, "alias of --eps-test");
  certify->add_option("--split", cert_opts.split, "train, validation or test")->default_val("test");
  certify->add_option("--data-csv", cert_opts.data_csv, "certify this CSV instead of a split");
  certify->add_option("--out", cert_opts.out, "write certificates.csv and certify.json here");
  certify->callback([&] { run = [&] { return cmd_certify(flags, cert_opts); }; });

  OracleOptions oracle_opts;
  auto* oracle = app.add_subcommand("oracle", "Replay a run against sampled concrete trainings");
  add_run_flags(oracle, flags);
  oracle->add_option("--run", oracle_opts.run_dir, "directory written by 'train'");
  oracle->add_option("--checkpoint", oracle_opts.checkpoint, "checkpoint.json");
  oracle->add_option("--trace", oracle_opts.trace, "trace.json");
  oracle->add_option("--samples", oracle_opts.samples, "sampled perturbed datasets")->default_val(20);
  oracle->add_option("--oracle-seed", oracle_opts.seed, "seed of the sampled perturbations");
  oracle->add_option("--rel-slack", oracle_opts.rel_slack, "relative containment slack")->default_val(1e-7);
  oracle->add_option_function<std::size_t>("--corrupt-step",
                                           [&](const std::size_t& v) { oracle_opts.corrupt_step = v; },
                                           "fault injection: corrupt the interval run after this step");
  oracle->add_flag("!--no-probe", oracle_opts.probe, "skip perturbed test-point prediction checks");
  oracle->add_flag("!--no-finite-diff", oracle_opts.finite_diff, "skip the gradient check");
  oracle->add_option("--out", oracle_opts.out, "write oracle.json here");
  oracle->callback([&] { run = [&] { return cmd_oracle(flags, oracle_opts); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    return run();
  } catch (const ConfigError& e) {
    std::cerr << "ivcert: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ivcert::DivergenceError& e) {
    std::cerr << "ivcert: diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "ivcert: error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
