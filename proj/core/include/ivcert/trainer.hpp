#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ivcert/data.hpp"
#include "ivcert/interval_tensor.hpp"
#include "ivcert/model.hpp"

namespace ivcert {

/// A concrete dataset together with the l-infinity perturbation radii the
/// adversary may apply to training features (train_eps) and test inputs
/// (test_eps). Labels are never perturbed.
struct PerturbedDataset {
  Dataset data;
  double train_eps = 0.0;
  double test_eps = 0.0;

  void validate() const;
};

/// Which interval model a run returns: the final one, or the checkpoint
/// with the highest certified validation accuracy (at test_eps).
enum class ModelSelection { kLast, kBestValidation };

std::string_view to_string(ModelSelection selection);
ModelSelection selection_from_string(std::string_view name);

struct TrainConfig {
  double learning_rate = 0.01;
  /// lr_t = learning_rate / (1 + lr_decay * t); 0 keeps the rate constant.
  double lr_decay = 0.0;
  std::size_t batch_size = 100;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden_sizes{20};
  ActivationKind activation = ActivationKind::kRelu;
  LossKind loss = LossKind::kBinaryCrossEntropy;
  bool shuffle = true;
  /// Abort when the mean-loss upper bound exceeds this value.
  double divergence_ceiling = 1e3;
  ModelSelection selection = ModelSelection::kBestValidation;
  /// Steps between validation checks; 0 checks once per epoch.
  std::size_t selection_interval = 1;

  void validate() const;
  double learning_rate_at(std::size_t step) const;
};

Architecture make_architecture(const TrainConfig& config, std::size_t input_size,
                               std::size_t num_classes);

/// Per-epoch seeded permutations cut into batches; one entry per SGD step.
std::vector<std::vector<std::size_t>> make_schedule(std::size_t num_samples,
                                                    const TrainConfig& config);

struct StepRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  Interval loss;  // mean of per-sample loss bounds over the batch
  double max_radius = 0.0;
  std::vector<double> layer_radius;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// Everything needed to replay a certified run: the initial point model,
/// the exact batch schedule and per-step diagnostics.
struct TrainTrace {
  PointModel initial;
  std::vector<std::vector<std::size_t>> schedule;
  std::vector<StepRecord> steps;

  /// Number of steps where the max parameter radius decreased.
  std::size_t radius_decreases() const;
};

/// Inflated features of the given rows (labels stay exact).
IntervalTensor inflate_batch(const Dataset& ds, std::span<const std::size_t> rows, double eps);

/// One interval SGD step: forward, loss, backward and the interval update
/// Theta <- Theta - lr * grad. Throws DivergenceError on non-finite values.
StepRecord sgd_step(IntervalModel& model, const IntervalTensor& batch_x,
                    std::span<const int> batch_y, double lr);

struct TrainResult {
  IntervalModel model;
  TrainTrace trace;
};

/// Called after every step with (step index, record, model).
using StepObserver = std::function<void(std::size_t, const StepRecord&, const IntervalModel&)>;

/// Certified training from `initial` (usually lift_to_interval of a point model).
/// Deterministic given the config. Throws DivergenceError when the loss bound
/// exceeds the ceiling or values become non-finite.
TrainResult train_certified(const PointModel& initial, const PerturbedDataset& dataset,
                            const TrainConfig& config, const StepObserver& observer = {});

struct SelectedTraining {
  /// Empty when the run diverged before any candidate was evaluated (or,
  /// with kLast, whenever it diverged).
  std::optional<IntervalModel> model;
  TrainTrace trace;  // every completed step, also when diverged
  /// Number of SGD updates applied to the returned model.
  std::size_t selected_step = 0;
  double validation_accuracy = 0.0;
  bool diverged = false;
  std::string divergence;
};

/// train_certified plus model selection. Candidates are the models after
/// each selection_interval steps (and after the last step); the initial
/// model is never a candidate. Divergence stops training instead of
/// throwing; with kBestValidation the best candidate so far is kept.
/// Selection only looks at clean validation data, which the adversary does
/// not control, so the returned model is still a sound over-approximation.
SelectedTraining train_selected(const PointModel& initial, const PerturbedDataset& dataset,
                                const Dataset& validation, const TrainConfig& config,
                                const StepObserver& observer = {});

struct PretrainConfig {
  double learning_rate = 0.5;
  std::size_t batch_size = 10;
  std::size_t max_epochs = 100;
};

struct PretrainResult {
  PointModel model;
  double accuracy = 0.0;
  bool reached_target = false;
  std::size_t steps = 0;
};

/// Plain SGD on the first `subset_size` training samples, stopping as soon
/// as accuracy on `validation` reaches `target_accuracy`. If the target is
/// never reached, the best model seen is returned and flagged.
PretrainResult pretrain_concrete(const PointModel& initial, const Dataset& train,
                                 const Dataset& validation, std::size_t subset_size,
                                 double target_accuracy, const PretrainConfig& config,
                                 std::uint64_t seed);

/// Concrete SGD with the same initialization and schedule as train_certified.
PointModel train_concrete(const PointModel& initial, const Dataset& train, const TrainConfig& config);

}  // namespace ivcert
