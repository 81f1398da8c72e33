#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ivcert/certifier.hpp"
#include "ivcert/data.hpp"
#include "ivcert/model.hpp"
#include "ivcert/trainer.hpp"

namespace ivcert {

enum class DatasetKind { kTwoMoons, kMnist17 };

std::string_view to_string(DatasetKind kind);
/// Accepts "two-moons" / "mnist17".
DatasetKind dataset_from_string(std::string_view name);

/// $IVCERT_DATA_DIR, else ~/.cache/ivcert.
std::filesystem::path default_data_dir();

struct DataOptions {
  DatasetKind kind = DatasetKind::kTwoMoons;
  /// Seeds dataset synthesis and the train/validation split; kept separate
  /// from the training seed so repeated runs share one dataset.
  std::uint64_t seed = 0;
  double noise_std = 0.1;
  std::filesystem::path data_dir = default_data_dir();
};

/// Two-Moons: 1400 samples split 1000/200/200.
/// MNIST 1/7: the training file filtered to {1, 7} with 2000 held out for
/// validation, and the filtered test file as the test split. Expects
/// <data_dir>/mnist/{train,t10k}-{images-idx3,labels-idx1}-ubyte.
DatasetSplits load_dataset(const DataOptions& options);

/// Per-dataset defaults: lr 0.01 / eps 1e-3 for Two-Moons,
/// lr 0.05 / eps 1e-4 for MNIST 1/7; batch 100, 100 epochs, BCE head,
/// best-validation model selection after every step.
TrainConfig default_train_config(DatasetKind kind);
double default_eps(DatasetKind kind);

struct RunSetup {
  TrainConfig config;
  double train_eps = 1e-3;
  double test_eps = 1e-3;
  /// When set, concrete pretraining on `pretrain_subset` clean samples stops
  /// once validation accuracy reaches this value.
  std::optional<double> pretrain_target;
  std::size_t pretrain_subset = 100;
  PretrainConfig pretrain;
};

enum class RunStatus { kOk, kDiverged };
std::string_view to_string(RunStatus status);

struct RunResult {
  RunStatus status = RunStatus::kOk;
  std::string message;
  PointModel initial;
  /// Certified test accuracy of the starting point (after pretraining, if
  /// any) at test_eps; the baseline certified training should improve on.
  double start_certified_accuracy = 0.0;
  double pretrain_validation_accuracy = 0.0;
  std::optional<IntervalModel> model;
  TrainTrace trace;
  std::size_t selected_step = 0;
  double clean_test_accuracy = 0.0;       // center model, unperturbed inputs
  double validation_certified_accuracy = 0.0;
  double test_certified_accuracy = 0.0;   // 0 when no model was selected
  std::optional<CertificationResult> test_certificates;
  double seconds = 0.0;
};

/// init (seeded by config.seed) -> optional pretraining -> lift ->
/// train_selected -> certification of validation and test splits.
/// Divergence is reported through the status, not thrown; a diverged run
/// keeps the best candidate selected before it diverged, if any.
RunResult run_experiment(const DatasetSplits& data, const RunSetup& setup);

}  // namespace ivcert
