#include "ivcert/experiment.hpp"

#include <chrono>
#include <cstdlib>

#include "ivcert/concrete.hpp"
#include "ivcert/error.hpp"
#include "ivcert/rng.hpp"

namespace ivcert {

std::string_view to_string(DatasetKind kind) {
  return kind == DatasetKind::kTwoMoons ? "two-moons" : "mnist17";
}

DatasetKind dataset_from_string(std::string_view name) {
  if (name == "two-moons" || name == "two_moons" || name == "twomoons") return DatasetKind::kTwoMoons;
  if (name == "mnist17" || name == "mnist-17" || name == "mnist_1_7") return DatasetKind::kMnist17;
  throw ParseError("unknown dataset '" + std::string(name) + "' (expected two-moons or mnist17)");
}

std::filesystem::path default_data_dir() {
  if (const char* dir = std::getenv("IVCERT_DATA_DIR"); dir && *dir) return dir;
  if (const char* home = std::getenv("HOME"); home && *home) {
    return std::filesystem::path(home) / ".cache" / "ivcert";
  }
  return std::filesystem::path(".cache") / "ivcert";
}

DatasetSplits load_dataset(const DataOptions& options) {
  if (options.kind == DatasetKind::kTwoMoons) {
    const Dataset all = gen_two_moons(1400, options.noise_std, options.seed);
    DatasetSplits s = split(all, {1000, 200, 200}, Rng::derive(options.seed, 0x5b11));
    for (Dataset* d : {&s.train, &s.validation, &s.test}) d->provenance = "two-moons";
    return s;
  }
  const auto dir = options.data_dir / "mnist";
  const int keep[] = {1, 7};
  const Dataset train_all = filter_classes(
      load_mnist_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte"), keep);
  const Dataset test = filter_classes(
      load_mnist_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"), keep);
  const std::size_t val = 2000;
  if (train_all.size() <= val) throw DomainError("mnist17: training file has too few 1/7 samples");
  DatasetSplits s = split(train_all, {train_all.size() - val, val, 0}, Rng::derive(options.seed, 0x5b11));
  s.test = test;
  s.test.split = SplitTag::kTest;
  for (Dataset* d : {&s.train, &s.validation, &s.test}) d->provenance = "mnist17";
  return s;
}

TrainConfig default_train_config(DatasetKind kind) {
  TrainConfig c;
  c.learning_rate = kind == DatasetKind::kTwoMoons ? 0.01 : 0.05;
  c.batch_size = 100;
  c.max_epochs = 100;
  c.loss = LossKind::kBinaryCrossEntropy;
  c.selection = ModelSelection::kBestValidation;
  c.selection_interval = 1;
  return c;
}

double default_eps(DatasetKind kind) { return kind == DatasetKind::kTwoMoons ? 1e-3 : 1e-4; }

std::string_view to_string(RunStatus status) {
  return status == RunStatus::kOk ? "ok" : "diverged";
}

RunResult run_experiment(const DatasetSplits& data, const RunSetup& setup) {
  setup.config.validate();
  const auto start = std::chrono::steady_clock::now();
  const Architecture arch =
      make_architecture(setup.config, data.train.num_features, data.train.num_classes());

  RunResult result;
  result.initial = init_point_model(arch, Rng::derive(setup.config.seed, 0x1417));
  if (setup.pretrain_target) {
    const PretrainResult pre =
        pretrain_concrete(result.initial, data.train, data.validation, setup.pretrain_subset,
                          *setup.pretrain_target, setup.pretrain, setup.config.seed);
    result.initial = pre.model;
    result.pretrain_validation_accuracy = pre.accuracy;
  } else if (!data.validation.empty()) {
    result.pretrain_validation_accuracy = concrete_accuracy(result.initial, data.validation);
  }
  result.start_certified_accuracy =
      certified_accuracy(lift_to_interval(result.initial), data.test, setup.test_eps).certified_accuracy;

  SelectedTraining trained = train_selected(
      result.initial, {data.train, setup.train_eps, setup.test_eps}, data.validation, setup.config);
  result.trace = std::move(trained.trace);
  result.model = std::move(trained.model);
  result.selected_step = trained.selected_step;
  if (trained.diverged) {
    result.status = RunStatus::kDiverged;
    result.message = trained.divergence;
  }

  if (result.model) {
    result.clean_test_accuracy = concrete_accuracy(extract_center(*result.model), data.test);
    result.validation_certified_accuracy = trained.validation_accuracy;
    result.test_certificates = certified_accuracy(*result.model, data.test, setup.test_eps);
    result.test_certified_accuracy = result.test_certificates->certified_accuracy;
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace ivcert
